import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from critlab.besov import BesovIndex, besov_norm
from critlab.models import (
    DensityGuardError,
    DirectorGuardError,
    FlowState,
    ModelParams,
    NonFiniteError,
    StrichartzExponents,
    acoustic_block,
    acoustic_pair,
    acoustic_propagate,
    compute_limit_diagnostics,
    dilate,
    director_drift,
    gradient_part_from_pair,
    pressure_coeffs,
    renormalize_director,
    rescale_state,
    rhs_compressible,
    rhs_incompressible,
)
from critlab.spectral import Grid, SpectralField, dealias, divergence, leray_decompose, random_field


def _masked(grid, values):
    return dealias(SpectralField.from_physical(grid, values)).coeffs


def _block_matrix(k, eps, nu):
    return np.array([[0.0, -k / eps], [k / eps, -nu * k * k]])


class TestParams:
    def test_defaults(self):
        p = ModelParams()
        assert p.nu == 2.0 and p.nu_lower == 1.0

    @pytest.mark.parametrize(
        "kw",
        [dict(mu=0.0), dict(lam=-2.5), dict(xi=-1.0), dict(theta=0.0), dict(eps=0.0),
         dict(eps=1.5), dict(pressure="ideal"), dict(gamma=1.0)],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ModelParams(**kw)

    def test_negative_lambda_allowed_when_nu_positive(self):
        p = ModelParams(mu=1.0, lam=-1.5)
        assert p.nu == pytest.approx(0.5) and p.nu_lower == pytest.approx(0.5)

    def test_pressure_unit_derivative(self):
        for p in (ModelParams(), ModelParams(gamma=1.4), ModelParams(pressure="linear")):
            assert float(p.dpressure(1.0)) == pytest.approx(1.0)

    def test_k_vanishes_for_gamma_two(self):
        b = np.linspace(-0.5, 2, 11)
        assert np.all(ModelParams(gamma=2.0).K(b) == 0)
        assert np.all(ModelParams(gamma=2.0, eps=0.1).k_eps(b) == 0)

    def test_k_closed_forms(self):
        b = np.linspace(-0.5, 2, 11)
        np.testing.assert_allclose(ModelParams(gamma=1.4).K(b), 1 - (1 + b) ** -0.6, rtol=1e-13)
        np.testing.assert_allclose(ModelParams(pressure="linear").K(b), 1 - 1 / (1 + b), rtol=1e-13)
        np.testing.assert_allclose(ModelParams().I(b), b / (1 + b), rtol=1e-14)

    @pytest.mark.parametrize("pressure,gamma", [("gamma", 1.4), ("gamma", 3.0), ("linear", 2.0)])
    def test_k_eps_consistent(self, pressure, gamma):
        p = ModelParams(eps=0.01, pressure=pressure, gamma=gamma)
        b = np.linspace(-1, 1, 9)
        np.testing.assert_allclose(p.k_eps(b), p.K(0.01 * b) / 0.01, rtol=1e-10, atol=1e-14)

    def test_k_derivative_at_zero(self):
        h = 1e-6
        p = ModelParams(gamma=1.4)
        assert (p.K(h) - p.K(-h)) / (2 * h) == pytest.approx(0.6, rel=1e-8)


class TestState:
    def test_rest(self, grid2):
        s = FlowState.rest(grid2)
        np.testing.assert_array_equal(s.d_hat, [0.0, 1.0])
        assert director_drift(s.d) < 1e-15
        assert np.abs(s.director_perturbation().coeffs).max() == 0

    def test_shape_validation(self, grid2):
        s = FlowState.rest(grid2)
        with pytest.raises(ValueError):
            s.replace(u=SpectralField.zeros(grid2, 1))
        with pytest.raises(ValueError):
            FlowState.rest(grid2, d_hat=[1.0, 1.0])


class TestAcousticBlock:
    # values of exp(t A) from an independent fourth-order Runge-Kutta run (10^4 steps)
    RK4_FROZEN = {(1.0, 1.0, 3.0, 1.0): (0.7866456, -0.27260894, 0.27260894, -0.03118121)}

    @pytest.mark.parametrize(
        "k,eps,nu,t",
        [(1.0, 1.0, 3.0, 1.0), (2.0, 0.5, 0.1, 0.3), (5.0, 0.125, 1.0, 2.0), (7.0, 2**-6, 0.2, 0.05),
         (0.5, 1.0, 40.0, 3.0), (3.0, 0.01, 0.0, 1.7)],
    )
    def test_matches_matrix_exponential(self, k, eps, nu, t):
        got = np.array([float(e[0]) for e in acoustic_block(np.array([k]), eps, nu, t)])
        ref = expm(t * _block_matrix(k, eps, nu)).ravel()
        np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-12)

    def test_frozen_rk4(self):
        for key, ref in self.RK4_FROZEN.items():
            got = [float(e[0]) for e in acoustic_block(np.array([key[0]]), *key[1:])]
            np.testing.assert_allclose(got, ref, atol=5e-8)

    def test_critical_damping_closed_form(self):
        # nu k^2 / 2 = k / eps gives exp(-t) [[1 + t, -t], [t, 1 - t]] at k = eps = 1, nu = 2
        t = 1.3
        got = [float(e[0]) for e in acoustic_block(np.array([1.0]), 1.0, 2.0, t)]
        np.testing.assert_allclose(got, np.exp(-t) * np.array([1 + t, -t, t, 1 - t]), rtol=1e-12)

    def test_zero_mode_is_identity(self):
        e = acoustic_block(np.array([0.0]), 0.1, 1.0, 5.0)
        np.testing.assert_array_equal([float(x[0]) for x in e], [1.0, 0.0, 0.0, 1.0])

    def test_no_overflow_for_stiff_modes(self):
        k = np.array([1e3, 1e4])
        e = acoustic_block(k, 1.0, 100.0, 1e3)
        assert all(np.all(np.isfinite(x)) for x in e)
        assert all(np.all(np.abs(x) <= 1.0) for x in e)

    def test_inviscid_is_rotation(self):
        k = np.linspace(0, 10, 21)
        e11, e12, e21, e22 = acoustic_block(k, 0.3, 0.0, 0.7)
        np.testing.assert_allclose(e11**2 + e21**2, 1.0, atol=1e-14)
        np.testing.assert_allclose(e11 * e22 - e12 * e21, 1.0, atol=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(
        k=st.floats(0.1, 20), eps=st.floats(0.01, 1), nu=st.floats(0.0, 5),
        s=st.floats(0.0, 1.0), t=st.floats(0.0, 1.0),
    )
    def test_semigroup(self, k, eps, nu, s, t):
        kk = np.array([k])
        def mat(tau):
            e = acoustic_block(kk, eps, nu, tau)
            return np.array([[e[0][0], e[1][0]], [e[2][0], e[3][0]]])
        np.testing.assert_allclose(mat(s + t), mat(s) @ mat(t), atol=1e-11)


class TestAcousticPropagate:
    def test_forced_single_mode_matches_ode(self):
        g = Grid(1, 16, 2 * np.pi)
        x = g.coords[0]
        b0 = SpectralField.from_physical(g, np.cos(2 * x)[np.newaxis])
        v0 = SpectralField.from_physical(g, 0.5 * np.cos(2 * x)[np.newaxis])
        shape = np.cos(2 * x)[np.newaxis]

        def forcing(s):
            return (SpectralField.from_physical(g, np.sin(3 * s) * shape),
                    SpectralField.from_physical(g, np.exp(-s) * shape))

        eps, nu, T = 0.5, 0.3, 1.2
        b, v = acoustic_propagate(b0, v0, eps, nu, T, forcing, n_quad=800)
        A = _block_matrix(2.0, eps, nu)
        sol = solve_ivp(lambda s, y: A @ y + [np.sin(3 * s), np.exp(-s)], (0, T), [1.0, 0.5],
                        rtol=1e-12, atol=1e-14)
        got = [2 * b.coeffs[0, 2].real, 2 * v.coeffs[0, 2].real]
        np.testing.assert_allclose(got, sol.y[:, -1], atol=1e-6)

    def test_pair_roundtrip(self, grid2, rng):
        u = random_field(grid2, rng, 2, 8.0)
        _, q = leray_decompose(u)
        back = gradient_part_from_pair(acoustic_pair(u))
        np.testing.assert_allclose(back.coeffs, q.coeffs, atol=1e-15)


def _director(grid, phase):
    return np.stack([np.sin(phase), np.cos(phase)])


class TestTendencies:
    def test_rest_has_no_tendency(self, grid2):
        s = FlowState.rest(grid2)
        for part in rhs_compressible(s, ModelParams(gamma=1.4, eps=0.3)):
            assert np.abs(part.coeffs).max() == 0

    def test_director_forcing_closed_form(self, grid2):
        x, y = grid2.coords
        phase = 0.3 * np.cos(x)
        dphase = -0.3 * np.sin(x)
        d = SpectralField.from_physical(grid2, _director(grid2, phase))
        s = FlowState.rest(grid2).replace(d=d)
        theta = 0.7
        _, _, dd = rhs_compressible(s, ModelParams(theta=theta))
        # u = 0: only theta |grad d|^2 d survives, with |grad d|^2 = phase'^2
        expected = theta * dphase**2 * _director(grid2, phase)
        np.testing.assert_allclose(dd.coeffs, _masked(grid2, expected), atol=2e-4)

    def test_director_advection_closed_form(self, grid2):
        x, _ = grid2.coords
        phase = 0.2 * np.sin(2 * x)
        d = SpectralField.from_physical(grid2, _director(grid2, phase))
        u = SpectralField.constant(grid2, [1.0, 0.0])
        s = FlowState.rest(grid2).replace(d=d, u=u)
        _, _, dd = rhs_compressible(s, ModelParams(theta=1e-12))
        dphase = 0.4 * np.cos(2 * x)
        expected = -dphase * np.stack([np.cos(phase), -np.sin(phase)])
        np.testing.assert_allclose(dd.coeffs, _masked(grid2, expected), atol=1e-6)

    def test_pressure_forcing_closed_form(self, grid2):
        x, _ = grid2.coords
        eps = 0.25
        b = SpectralField.from_physical(grid2, (0.5 * np.cos(x))[np.newaxis])
        s = FlowState.rest(grid2).replace(b=b)
        _, du, _ = rhs_compressible(s, ModelParams(pressure="linear", eps=eps))
        bp = 0.5 * np.cos(x)
        expected = np.stack([bp / (1 + eps * bp) * (-0.5 * np.sin(x)), 0 * x])
        np.testing.assert_allclose(du.coeffs, _masked(grid2, expected), atol=1e-14)

    def test_shear_flow_is_steady(self, grid2):
        _, y = grid2.coords
        u = SpectralField.from_physical(grid2, np.stack([np.sin(y), 0 * y]))
        s = FlowState.rest(grid2).replace(u=u)
        du, dd = rhs_incompressible(s, ModelParams())
        assert np.abs(du.coeffs).max() < 1e-14 and np.abs(dd.coeffs).max() < 1e-14

    def test_incompressible_output_is_solenoidal(self, grid2, rng):
        u, _ = leray_decompose(random_field(grid2, rng, 2, 6.0) * 0.3)
        g = random_field(grid2, rng, 2, 6.0) * 0.1
        dphys = np.array([0.0, 1.0])[:, None, None] + g.to_physical()
        dphys /= np.linalg.norm(dphys, axis=0)
        s = FlowState.rest(grid2).replace(u=u, d=SpectralField.from_physical(grid2, dphys))
        du, _ = rhs_incompressible(s, ModelParams())
        assert np.abs(divergence(du).coeffs).max() < 1e-12

    def test_projected_compressible_matches_incompressible(self, grid2, rng):
        u, _ = leray_decompose(random_field(grid2, rng, 2, 6.0) * 0.3)
        g = random_field(grid2, rng, 2, 6.0) * 0.1
        dphys = np.array([0.0, 1.0])[:, None, None] + g.to_physical()
        dphys /= np.linalg.norm(dphys, axis=0)
        s = FlowState.rest(grid2).replace(u=u, d=SpectralField.from_physical(grid2, dphys))
        p = ModelParams(gamma=1.4, eps=0.2)
        _, du_c, dd_c = rhs_compressible(s, p)
        du_i, dd_i = rhs_incompressible(s, p)
        pdu, _ = leray_decompose(du_c)
        np.testing.assert_allclose(pdu.coeffs, du_i.coeffs, atol=1e-13)
        np.testing.assert_allclose(dd_c.coeffs, dd_i.coeffs, atol=1e-15)

    def test_incompressible_warns_on_divergent_input(self, grid2):
        x, _ = grid2.coords
        u = SpectralField.from_physical(grid2, np.stack([np.sin(x), 0 * x]))
        with pytest.warns(UserWarning):
            rhs_incompressible(FlowState.rest(grid2).replace(u=u), ModelParams())


class TestGuards:
    def test_density_guard(self, grid2):
        x, _ = grid2.coords
        b = SpectralField.from_physical(grid2, (-4.0 * np.cos(x) ** 2)[np.newaxis])
        s = FlowState.rest(grid2).replace(b=b)
        with pytest.raises(DensityGuardError):
            rhs_compressible(s, ModelParams(eps=0.5))
        with pytest.raises(DensityGuardError):
            pressure_coeffs(b, ModelParams(eps=0.5))

    def test_nonfinite_guard(self, grid2):
        s = FlowState.rest(grid2)
        bad = s.u.coeffs.copy()
        bad[0, 1, 0] = np.nan
        with pytest.raises(NonFiniteError):
            rhs_compressible(s.replace(u=SpectralField(grid2, bad)), ModelParams())

    def test_director_guard(self, grid2):
        x, _ = grid2.coords
        d = SpectralField.from_physical(grid2, np.stack([0 * x, 0.2 + 0 * x]))
        with pytest.raises(DirectorGuardError):
            renormalize_director(d)

    def test_renormalize_restores_unit_length(self, grid2):
        x, _ = grid2.coords
        d = SpectralField.from_physical(grid2, np.stack([0.1 * np.sin(x), 1.05 + 0 * x]))
        assert director_drift(renormalize_director(d)) < 1e-6


class TestDiagnostics:
    def test_limit_diagnostics(self, grid2, rng):
        s = FlowState.rest(grid2)
        u = random_field(grid2, rng, 2, 6.0)
        comp = s.replace(u=u, t=0.5)
        pu, qu = leray_decompose(u)
        inc = s.replace(u=pu, t=0.5)
        w, dbar, q, b = compute_limit_diagnostics(comp, inc)
        assert np.abs(w.coeffs).max() == 0 and np.abs(dbar.coeffs).max() == 0
        np.testing.assert_array_equal(q.coeffs, qu.coeffs)

    def test_time_mismatch(self, grid2):
        s = FlowState.rest(grid2)
        with pytest.raises(ValueError):
            compute_limit_diagnostics(s, s.replace(t=1.0))


class TestScaling:
    def test_rescale_keeps_critical_norms(self, grid2, rng):
        s = FlowState.rest(grid2)
        g = random_field(grid2, rng, 2, 6.0) * 0.1
        st0 = s.replace(b=random_field(grid2, rng, 1, 6.0), u=random_field(grid2, rng, 2, 6.0),
                        d=s.d + g, t=0.3)
        p = ModelParams(eps=0.25)
        r = rescale_state(st0, p)
        assert r.t == pytest.approx(0.3 * 16)
        assert r.grid.box_length == pytest.approx(4 * grid2.box_length)
        for a, b, s_ in ((st0.b, r.b, 0.0), (st0.u, r.u, 0.0), (g, r.director_perturbation(), 1.0)):
            assert besov_norm(b, BesovIndex(s_)) == pytest.approx(besov_norm(a, BesovIndex(s_)), rel=1e-12)

    def test_rescale_needs_dyadic_eps(self, grid2):
        with pytest.raises(ValueError):
            rescale_state(FlowState.rest(grid2), ModelParams(eps=0.3))

    def test_dilate(self, grid2):
        x, y = grid2.coords
        f = SpectralField.from_physical(grid2, np.cos(x + 2 * y)[np.newaxis])
        d = dilate(f, 2)
        np.testing.assert_allclose(d.to_physical()[0], np.cos(2 * x + 4 * y), atol=1e-13)
        with pytest.raises(ValueError):
            dilate(f, 3)
        with pytest.raises(ValueError):
            dilate(f, 8)


class TestStrichartzExponents:
    @pytest.mark.parametrize(
        "dim,p,r,ok",
        [(2, 6, 4, False), (3, 4, 2, False), (3, 6, 3, True), (3, np.inf, 4, True),
         (3, np.inf, 2, False), (2, np.inf, 4, True), (2, 1.5, 8, False)],
    )
    def test_admissibility(self, dim, p, r, ok):
        assert StrichartzExponents(dim, 0.0, p, r).admissible is ok

    def test_regularity(self):
        ex = StrichartzExponents(2, 0.5, 6.0, 4.0)
        assert ex.solution_regularity == pytest.approx(0.5 + 2 * (1 / 6 - 0.5) + 0.25)
        assert ex.p_bar_dual == 2.0 and ex.r_bar_dual == 1.0

    def test_validate(self):
        with pytest.raises(ValueError):
            StrichartzExponents(2, 0.0, 6.0, 4.0).validate()
        assert StrichartzExponents(3, 0.0, 6.0, 3.0).validate().admissible
