"""System definition, validation, and channel decomposition.

This layer owns the drift/diffusion pair (A, Q) of the linear SDE

    dX_t = A X_t dt + sqrt(Q) dB_t,

restricted to the commuting "magnetic-field" class: A real normal with
spectrum in the open left half plane, Q symmetric positive definite, and
AQ = QA.  Under these assumptions A, A', Q, M = A + A', N = A - A' form a
commuting family, A is unitarily diagonalizable with eigenvalues
a_k = alpha_k + i beta_k (alpha_k < 0), and every analytic object computed
downstream (Cramer functions, kernel spectra, finite-horizon MGFs) is a
function of the channel data (alpha_k, beta_k) and the orthonormal channel
vectors U_k with A U_k = a_k U_k.

The decomposition is computed through the symmetric/skew split: eigenspaces
of the symmetric part M are extracted first, then the restriction of the
skew part N to each eigenspace is block-diagonalized by a real Schur
factorization.  This guarantees exactly paired conjugate channels and
orthonormal channel vectors, which a general nonsymmetric eigensolver does
not.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DataError,
    DimensionError,
    DomainError,
    NumericError,
    ReversibilityError,
)

__all__ = [
    "SystemSpec",
    "Spectrum",
    "DerivedMatrices",
    "CheckResult",
    "ValidationReport",
    "validate_system",
    "spectral_decompose",
    "derived_matrices",
    "reduce_to_identity_noise",
    "magnetic_example",
    "mean_epr",
]


def _as_square_matrix(value, name: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{name} is not a numeric matrix: {exc}") from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN/Inf entries")
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class SystemSpec:
    """Immutable system definition.

    Parameters
    ----------
    A : array_like, shape (d, d)
        Drift matrix.  Expected real normal with all eigenvalue real parts
        negative (checked by :func:`validate_system`, not at construction).
    Q : array_like, shape (d, d), optional
        Diffusion matrix, symmetric positive definite and commuting with A.
        Defaults to the identity.
    tol_validate : float
        Relative (Frobenius-scaled) tolerance for the matrix-identity checks
        of :func:`validate_system`.
    """

    A: np.ndarray
    Q: Optional[np.ndarray] = None
    tol_validate: float = 1e-10
    dim: int = dataclasses.field(init=False)

    def __post_init__(self) -> None:
        A = _as_square_matrix(self.A, "A")
        d = A.shape[0]
        if self.Q is None:
            Q = np.eye(d)
        else:
            Q = _as_square_matrix(self.Q, "Q")
            if Q.shape != (d, d):
                raise DimensionError(
                    f"Q has shape {Q.shape}, expected {(d, d)} to match A"
                )
        if not (self.tol_validate >= 0):
            raise DomainError("tol_validate must be nonnegative")
        A.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "dim", d)


@dataclasses.dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs (alpha_k, beta_k) of the drift, conjugate pairs adjacent.

    ``pairs[k] = (alpha_k, beta_k)`` with a_k = alpha_k + i beta_k an
    eigenvalue of A; both members of a conjugate pair are stored (+beta
    before -beta) and real eigenvalues carry beta = 0.  ``channel_vectors``,
    when present, holds the matching orthonormal complex eigenvectors.
    """

    pairs: tuple[tuple[float, float], ...]
    channel_vectors: Optional[tuple[np.ndarray, ...]] = None

    @property
    def dim(self) -> int:
        return len(self.pairs)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p[0] for p in self.pairs])

    @property
    def betas(self) -> np.ndarray:
        return np.array([p[1] for p in self.pairs])

    @property
    def has_rotation(self) -> bool:
        """Whether any channel carries a nonzero imaginary part."""
        return any(b != 0.0 for _, b in self.pairs)


@dataclasses.dataclass(frozen=True, eq=False)
class DerivedMatrices:
    """Symmetric/skew split and stationary-law data.

    M = A + A' (symmetric negative definite), N = A - A' (skew),
    Gamma = -Q M^{-1} (stationary covariance, solving the Lyapunov identity
    A Gamma + Gamma A' + Q = 0), and ``log_norm`` the log normalization
    constant of the stationary Gaussian density.
    """

    M: np.ndarray
    N: np.ndarray
    Gamma: np.ndarray
    log_norm: float


@dataclasses.dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    threshold: float
    severity: str = "error"


@dataclasses.dataclass(frozen=True, eq=False)
class ValidationReport:
    """Named residual checks with an overall verdict.

    ``passed`` ignores warning-severity entries (the reversible-drift check);
    ``strict_passed`` requires every entry to pass.
    """

    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.severity == "error")

    @property
    def strict_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failing(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "strict_passed": self.strict_passed,
            "checks": [dataclasses.asdict(c) for c in self.checks],
        }


def _sym_sqrt(Q: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root of (the symmetric part of) Q."""
    w, V = np.linalg.eigh((Q + Q.T) / 2.0)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def validate_system(spec: SystemSpec) -> ValidationReport:
    """Check the structural assumptions on (A, Q) and report residuals.

    One entry per assumption (normality of A, symmetry and positive
    definiteness of Q, AQ = QA, spectral stability, non-symmetry of A)
    plus commuting-family spot checks for the pairs (N, Q), (M, Q^{1/2})
    and (A, M).  Failures are reported, never thrown; the reversible case
    (A symmetric) is a warning rather than an error because only the
    large-deviation objects are undefined there.
    """
    A, Q, tol = spec.A, spec.Q, spec.tol_validate
    norm_A = np.linalg.norm(A)
    norm_Q = np.linalg.norm(Q)
    M = A + A.T
    N = A - A.T
    sqrt_Q = _sym_sqrt(Q)

    def comm(F: np.ndarray, G: np.ndarray) -> float:
        return float(np.linalg.norm(F @ G - G @ F))

    checks = []
    checks.append(
        CheckResult(
            "normality",
            (res := comm(A, A.T)) <= (thr := tol * max(1.0, norm_A**2)),
            res,
            thr,
        )
    )
    res = float(np.linalg.norm(Q - Q.T))
    thr = tol * max(1.0, norm_Q)
    checks.append(CheckResult("q_symmetric", res <= thr, res, thr))
    min_eig = float(np.linalg.eigvalsh((Q + Q.T) / 2.0)[0])
    checks.append(CheckResult("q_spd", min_eig > 0.0, min_eig, 0.0))
    res = comm(A, Q)
    thr = tol * max(1.0, norm_A * norm_Q)
    checks.append(CheckResult("aq_commute", res <= thr, res, thr))
    max_real = float(np.max(np.real(np.linalg.eigvals(A))))
    checks.append(CheckResult("stability", max_real < 0.0, max_real, 0.0))
    res = float(np.linalg.norm(N))
    thr = tol * max(1.0, norm_A)
    checks.append(
        CheckResult("not_symmetric", res > thr, res, thr, severity="warning")
    )
    for name, F, G in (
        ("commute_n_q", N, Q),
        ("commute_m_sqrtq", M, sqrt_Q),
        ("commute_a_m", A, M),
    ):
        res = comm(F, G)
        thr = tol * max(1.0, np.linalg.norm(F) * np.linalg.norm(G))
        checks.append(CheckResult(name, res <= thr, res, thr))
    return ValidationReport(tuple(checks))


def _cluster_by_gap(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group indices of a sorted 1-D array into runs separated by > tol."""
    groups = []
    start = 0
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > tol:
            groups.append(np.arange(start, i))
            start = i
    groups.append(np.arange(start, len(values)))
    return groups


def spectral_decompose(
    spec: SystemSpec,
    *,
    with_vectors: bool = True,
    allow_reversible: bool = False,
) -> Spectrum:
    """Exact conjugate-paired eigendecomposition of the normal drift.

    Works through the commuting symmetric/skew split rather than a general
    eigensolver: the eigenspaces of M = A + A' are computed by a symmetric
    eigensolve, the restriction of N = A - A' to each eigenspace is reduced
    to 2x2 rotation blocks by a real Schur factorization, and each block
    yields a conjugate channel pair

        U = (u + i v) / sqrt(2),   A U = (alpha + i beta) U.

    Channels are sorted by (alpha ascending, |beta| descending, beta
    descending), which keeps conjugate pairs adjacent with +beta first and
    makes the output deterministic.

    Parameters
    ----------
    spec : SystemSpec
    with_vectors : bool
        Also return the channel vectors and verify the reconstruction
        ``A = sum_k a_k U_k U_k*`` to relative tolerance 1e-10.
    allow_reversible : bool
        Permit an all-real spectrum (symmetric A).  By default that raises
        :class:`ReversibilityError`, since every downstream large-deviation
        object degenerates.
    """
    A = spec.A
    d = spec.dim
    scale = 1.0 + float(np.linalg.norm(A))
    M = A + A.T
    N = A - A.T
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolve failed for M={M!r}") from exc

    beta_tol = 1e-12 * scale
    cluster_tol = 1e-11 * (1.0 + float(np.max(np.abs(w))))
    channels: list[tuple[float, float, np.ndarray]] = []
    for idx in _cluster_by_gap(w, cluster_tol):
        alpha = float(np.mean(w[idx])) / 2.0
        Vg = V[:, idx]
        S = Vg.T @ N @ Vg
        S = (S - S.T) / 2.0
        g = len(idx)
        if g == 1:
            channels.append((alpha, 0.0, Vg[:, 0].astype(complex)))
            continue
        try:
            T_, Z = scipy.linalg.schur(S, output="real")
        except scipy.linalg.LinAlgError as exc:  # pragma: no cover
            raise NumericError(f"Schur factorization failed for S={S!r}") from exc
        i = 0
        while i < g:
            if i + 1 < g and abs(T_[i + 1, i]) > beta_tol:
                b = float(T_[i, i + 1] - T_[i + 1, i]) / 2.0
                u = Vg @ Z[:, i]
                v = Vg @ Z[:, i + 1]
                U = (u + 1j * v) / math.sqrt(2.0)
                # N u = -b v, N v = b u  =>  N U = i b U, so beta = b / 2.
                channels.append((alpha, b / 2.0, U))
                channels.append((alpha, -b / 2.0, np.conj(U)))
                i += 2
            else:
                channels.append((alpha, 0.0, (Vg @ Z[:, i]).astype(complex)))
                i += 1

    channels.sort(key=lambda c: (c[0], -abs(c[1]), -c[1]))
    if not allow_reversible and all(abs(b) <= beta_tol for _, b, _ in channels):
        raise ReversibilityError(
            "drift is symmetric within tolerance; no rotation channels "
            "(pass allow_reversible=True to decompose anyway)"
        )

    pairs = tuple((a, b) for a, b, _ in channels)
    vectors: Optional[tuple[np.ndarray, ...]] = None
    if with_vectors:
        vecs = []
        for _, _, U in channels:
            U = U.copy()
            U.setflags(write=False)
            vecs.append(U)
        vectors = tuple(vecs)
        recon = sum(
            (a + 1j * b) * np.outer(U, np.conj(U))
            for (a, b), U in zip(pairs, vectors)
        )
        if np.linalg.norm(recon - A) > 1e-10 * scale:
            raise NumericError(
                "channel reconstruction residual exceeds tolerance "
                f"({np.linalg.norm(recon - A):.3e}); is A normal?"
            )
    return Spectrum(pairs=pairs, channel_vectors=vectors)


def derived_matrices(spec: SystemSpec) -> DerivedMatrices:
    """M/N split, stationary covariance Gamma = -Q M^{-1}, and the log
    normalization constant of the stationary Gaussian density."""
    A, Q = spec.A, spec.Q
    M = A + A.T
    N = A - A.T
    try:
        Gamma = np.linalg.solve(M, -Q)  # = -M^{-1} Q = -Q M^{-1} (commuting)
    except np.linalg.LinAlgError as exc:
        raise NumericError("symmetric part M is singular") from exc
    Gamma = (Gamma + Gamma.T) / 2.0
    sign, logdet = np.linalg.slogdet(Gamma)
    if sign <= 0:
        raise NumericError("stationary covariance is not positive definite")
    log_norm = -0.5 * spec.dim * math.log(2.0 * math.pi) - 0.5 * logdet
    for arr in (M, N, Gamma):
        arr.setflags(write=False)
    return DerivedMatrices(M=M, N=N, Gamma=Gamma, log_norm=log_norm)


def reduce_to_identity_noise(spec: SystemSpec) -> SystemSpec:
    """Same drift, Q replaced by the identity.

    The EPR path functional of (A, Q) has the same law as that of (A, Id)
    in this commuting class, and every Cramer/rate computation downstream
    consumes only the Spectrum of A; this reduction makes the Q-invariance
    explicit.
    """
    return SystemSpec(A=spec.A, Q=None, tol_validate=spec.tol_validate)


def magnetic_example(theta: float, extended: bool = False) -> SystemSpec:
    """Charged particle in a constant magnetic field at angle theta.

    The planar system (``extended=False``)

        A = -[[cos t, -sin t], [sin t, cos t]],   Q = cos(t) * I_2,

    and its three-dimensional extension (``extended=True``) appending a
    decoupled reversible coordinate with drift -cos(t) and Q = cos(t) * I_3.
    Channels: alpha = -cos(t), beta = +/- sin(t) (plus one beta = 0 channel
    in the extended case).

    theta must lie in (-pi/2, pi/2) so that cos(t) > 0.
    """
    if not (-math.pi / 2 < theta < math.pi / 2):
        raise DomainError("theta must lie in the open interval (-pi/2, pi/2)")
    c, s = math.cos(theta), math.sin(theta)
    A2 = np.array([[-c, s], [-s, -c]])
    if not extended:
        return SystemSpec(A=A2, Q=c * np.eye(2))
    A3 = np.zeros((3, 3))
    A3[:2, :2] = A2
    A3[2, 2] = -c
    return SystemSpec(A=A3, Q=c * np.eye(3))


def mean_epr(spectrum: Spectrum) -> float:
    """Almost-sure long-run limit of the entropy production rate,
    sum_k beta_k^2 / |alpha_k|."""
    alphas = spectrum.alphas
    betas = spectrum.betas
    return float(np.sum(betas**2 / np.abs(alphas)))
