"""Quadratic-functional expansion: offset, linear coefficients, conditional MGF."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epr_ldp.chaos import (
    MgfQuery,
    chaos_terms,
    conditional_mgf,
    cramer_finite_T,
    g_coefficients,
    s0,
)
from epr_ldp.cramer import cramer
from epr_ldp.errors import DimensionError, DomainError
from epr_ldp.model import SystemSpec, magnetic_example, spectral_decompose
from epr_ldp.spectral import eigenfunction_norm_sq, kernel_spectrum, trace_closed_form

X0 = np.array([1.0, 0.0])


def s0_quadrature(spec, x, T, n=400_000):
    """Independent oracle: mean of the accumulated squared rotation signal.

    Mean-start part plus the noise part folded to a single integral,
        int_0^T |N e^{Au} x|^2 du + int_0^T (T-r) tr(N'N e^{Ar} e^{A'r}) dr,
    both evaluated by eigen-action and the trapezoid rule.
    """
    A = spec.A
    N = A - A.T
    mu, V = np.linalg.eig(A)
    W = np.linalg.inv(V)
    u = np.linspace(0.0, T, n + 1)
    exp_mu = np.exp(np.outer(u, mu))
    drift_x = ((exp_mu * (W @ x)) @ V.T).real
    mean_part = float(np.trapezoid(np.sum((drift_x @ N.T) ** 2, axis=1), u))
    E = np.einsum("ik,nk,kj->nij", V, exp_mu, W).real
    C = N.T @ N
    noise_integrand = (T - u) * np.einsum("ij,njk,nik->n", C, E, E)
    return mean_part + float(np.trapezoid(noise_integrand, u))


class TestOffset:
    def test_magnetic_pinned_value(self, pi4_spec):
        assert s0(X0, pi4_spec, 1.0) == pytest.approx(2.385055172910989, rel=1e-12)

    def test_matches_quadrature(self, pi4_spec):
        assert s0(X0, pi4_spec, 1.0) == pytest.approx(
            s0_quadrature(pi4_spec, X0, 1.0), rel=1e-8
        )

    def test_matches_quadrature_generic_angle_and_start(self):
        spec = magnetic_example(math.pi / 3)
        x = np.array([0.4, -1.1])
        assert s0(x, spec, 2.0) == pytest.approx(
            s0_quadrature(spec, x, 2.0), rel=1e-8
        )

    def test_zero_start_reduces_to_half_trace(self, pi4_spec):
        for T in (1.0, 3.0):
            assert s0(np.zeros(2), pi4_spec, T) == pytest.approx(
                trace_closed_form(pi4_spec, T) / 2.0, rel=1e-12
            )

    def test_reversible_system_is_zero(self):
        assert s0(np.ones(2), SystemSpec(np.diag([-1.0, -2.0])), 1.0) == 0.0

    def test_dimension_mismatch(self, pi4_spec):
        with pytest.raises(DimensionError):
            s0(np.ones(3), pi4_spec, 1.0)


class TestLinearCoefficients:
    def test_projection_oracle(self, pi4_spec):
        T = 1.0
        sp = spectral_decompose(pi4_spec)
        ks = kernel_spectrum(spectral_decompose(pi4_spec, with_vectors=False), T)
        g = g_coefficients(X0, pi4_spec, 0.0, T)
        (alpha, beta), U = sp.pairs[0], sp.channel_vectors[0]
        overlap = abs(np.vdot(U, X0))
        u = np.linspace(0.0, T, 400_001)
        G = (
            (4.0 * beta**2 / alpha)
            * overlap
            * np.exp(-alpha * u)
            * (np.exp(2.0 * alpha * u) - math.exp(2.0 * alpha * T))
        )
        for i in (0, 1, 2, 5, 10, 19):
            e = ks.channel_entries(0)[i]
            phi = np.sin(e.omega * u + e.phase) / math.sqrt(
                eigenfunction_norm_sq(e.omega, e.phase, T)
            )
            proj = float(np.trapezoid(G * phi, u))
            assert g[i] == pytest.approx(proj, rel=1e-8)

    def test_tilt_leaves_coefficients_unchanged(self, pi4_spec):
        g0 = g_coefficients(X0, pi4_spec, 0.0, 1.0)
        g1 = g_coefficients(X0, pi4_spec, 0.35, 1.0)
        assert np.array_equal(g0, g1)

    def test_zero_start_zero_coefficients(self, pi4_spec):
        assert np.all(g_coefficients(np.zeros(2), pi4_spec, 0.0, 1.0) == 0.0)

    def test_terms_bundle_consistent(self, pi4_spec):
        terms = chaos_terms(X0, pi4_spec, 0.0, 1.0, j_max=50)
        assert terms.g_coeffs.shape == (len(terms.spectrum_ref.entries),)
        assert terms.s0 == pytest.approx(s0(X0, pi4_spec, 1.0), rel=1e-14)

    def test_conjugate_channels_match(self, pi4_spec):
        g = g_coefficients(X0, pi4_spec, 0.0, 1.0, j_max=32)
        assert np.allclose(np.abs(g[:32]), np.abs(g[32:]), rtol=1e-12)


class TestConditionalMgf:
    def q(self, theta, lam=0.0, T=1.0, j_max=200, x=X0):
        return MgfQuery(x=x, theta=theta, lam=lam, T=T, j_max=j_max)

    def test_query_validation(self):
        with pytest.raises(DomainError):
            MgfQuery(x=X0, theta=0.1, T=0.0)
        with pytest.raises(DomainError):
            MgfQuery(x=X0, theta=0.1, j_max=0)

    def test_theta_zero_is_one(self, pi4_spec):
        assert conditional_mgf(self.q(0.0), pi4_spec) == 1.0

    def test_reversible_is_one(self):
        spec = SystemSpec(np.diag([-1.0, -2.0]))
        assert conditional_mgf(MgfQuery(x=np.ones(2), theta=0.4), spec) == 1.0

    def test_pinned_value(self, pi4_spec):
        assert conditional_mgf(self.q(-0.5), pi4_spec) == pytest.approx(
            0.3759036777966844, rel=1e-10
        )

    def test_diverges_at_top_eigenvalue(self, pi4_spec, pi4_spectrum):
        gamma1 = kernel_spectrum(pi4_spectrum, 1.0).gamma_max
        assert conditional_mgf(self.q(1.0 / gamma1), pi4_spec) == math.inf
        assert conditional_mgf(self.q(1.0 / gamma1 + 0.1), pi4_spec) == math.inf
        assert math.isfinite(conditional_mgf(self.q(0.99 / gamma1), pi4_spec))

    def test_monotone_in_theta(self, pi4_spec):
        thetas = [-2.0, -0.5, 0.0, 0.5, 0.9]
        values = [conditional_mgf(self.q(t), pi4_spec) for t in thetas]
        assert all(v2 > v1 for v1, v2 in zip(values, values[1:]))
        assert values[2] == 1.0

    def test_truncation_stable(self, pi4_spec, pi4_spectrum):
        gamma1 = kernel_spectrum(pi4_spectrum, 1.0).gamma_max
        theta = 0.9 / gamma1
        v100 = conditional_mgf(self.q(theta, j_max=100), pi4_spec)
        v400 = conditional_mgf(self.q(theta, j_max=400), pi4_spec)
        assert v100 == pytest.approx(v400, rel=1e-6)

    def test_log_derivatives_match_moments(self, pi4_spec, pi4_spectrum):
        # d/dtheta log MGF at 0 is the mean; the second derivative is the
        # variance sum over the expansion, including the tail-free parts.
        ks = kernel_spectrum(pi4_spectrum, 1.0)
        g = g_coefficients(X0, pi4_spec, 0.0, 1.0)
        h = 1e-4

        def logm(theta):
            return math.log(conditional_mgf(self.q(theta), pi4_spec))

        fd1 = (logm(h) - logm(-h)) / (2.0 * h)
        fd2 = (logm(h) - 2.0 * logm(0.0) + logm(-h)) / h**2
        assert fd1 == pytest.approx(s0(X0, pi4_spec, 1.0), rel=1e-6)
        variance = float(np.sum(ks.gammas**2) / 2.0 + np.sum(g**2))
        assert fd2 == pytest.approx(variance, rel=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(
        theta=st.floats(-3.0, 0.8),
        lam=st.floats(-1.5, 0.5),
    )
    def test_property_tilt_invariant(self, pi4_spec, theta, lam):
        base = conditional_mgf(self.q(theta, lam=0.0), pi4_spec)
        tilted = conditional_mgf(self.q(theta, lam=lam), pi4_spec)
        assert tilted == pytest.approx(base, rel=1e-12)


class TestFiniteHorizon:
    def test_zero_tilt_is_zero(self, pi4_spec):
        for T in (1.0, 10.0):
            assert cramer_finite_T(0.0, pi4_spec, T) == 0.0

    def test_reversible_is_zero(self):
        assert cramer_finite_T(0.2, SystemSpec(np.diag([-1.0, -2.0])), 5.0) == 0.0

    def test_converges_to_limit(self, pi4_spec, pi4_spectrum):
        limit = cramer(0.1, pi4_spectrum)
        errs = [abs(cramer_finite_T(0.1, pi4_spec, T) - limit) for T in (5.0, 10.0, 20.0)]
        assert errs[0] <= 1.0
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= 5.0 / 20.0

    def test_pinned_medium_horizon(self, pi4_spec):
        assert cramer_finite_T(0.1, pi4_spec, 5.0) == pytest.approx(0.17378965, abs=1e-6)

    def test_large_tilt_diverges_for_long_horizons(self, pi4_spec):
        assert math.isfinite(cramer_finite_T(0.3, pi4_spec, 3.0))
        assert cramer_finite_T(0.3, pi4_spec, 10.0) == math.inf

    def test_rejects_bad_horizon(self, pi4_spec):
        with pytest.raises(DomainError):
            cramer_finite_T(0.1, pi4_spec, 0.0)
