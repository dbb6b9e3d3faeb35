import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critlab.besov import (
    BesovIndex,
    Trajectory,
    besov_norm,
    chemin_lerner,
    hybrid_norm,
    initial_quantity,
    shell_norms,
    solution_norm,
    time_besov,
    time_norm,
)
from critlab.littlewood_paley import build_partition
from critlab.models import FlowState
from critlab.spectral import Grid, SpectralField, random_field

ROOT2PI = np.sqrt(2) * np.pi  # L^2 norm of a unit cosine on the 2 pi torus


@pytest.fixture(scope="module")
def two_modes():
    # cos(x + y) lives in shell 0 only, cos(3x) in shell 1 only
    g = Grid(2, 32, 2 * np.pi)
    x, y = g.coords
    a = SpectralField.from_physical(g, np.cos(x + y)[np.newaxis])
    b = SpectralField.from_physical(g, np.cos(3 * x)[np.newaxis])
    return g, a, b


class TestIndex:
    @pytest.mark.parametrize("p,r", [(0.5, 1), (2, 0.5)])
    def test_rejects_exponents_below_one(self, p, r):
        with pytest.raises(ValueError):
            BesovIndex(0.0, p, r)


class TestStaticNorms:
    @pytest.mark.parametrize("s", [-1.0, 0.0, 0.5, 2.0])
    def test_l1_sum(self, two_modes, s):
        _, a, b = two_modes
        assert besov_norm(a + b, BesovIndex(s)) == pytest.approx(ROOT2PI * (1 + 2**s), rel=1e-12)

    @pytest.mark.parametrize("s", [-1.0, 1.0])
    def test_l2_and_sup_sums(self, two_modes, s):
        _, a, b = two_modes
        f = a + b
        assert besov_norm(f, BesovIndex(s, 2, 2)) == pytest.approx(ROOT2PI * np.sqrt(1 + 4**s), rel=1e-12)
        assert besov_norm(f, BesovIndex(s, 2, np.inf)) == pytest.approx(ROOT2PI * max(1, 2**s), rel=1e-12)

    def test_other_lebesgue(self, two_modes):
        _, _, b = two_modes
        assert besov_norm(b, BesovIndex(1.0, np.inf)) == pytest.approx(2.0, rel=1e-12)
        assert besov_norm(b, BesovIndex(0.0, 4.0)) == pytest.approx((1.5 * np.pi**2) ** 0.25, rel=1e-12)

    def test_shell_norms_p2_matches_physical(self, rng):
        g = Grid(2, 32, 2 * np.pi)
        f = random_field(g, rng, 2, 10.0)
        fast = shell_norms(f, 2.0)
        part = build_partition(g)
        slow = []
        for j in part.shells:
            blk = f.with_coeffs(f.coeffs * part.phi(int(j))).to_physical()
            slow.append(np.sqrt(g.cell_volume * np.sum(blk**2)))
        np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("r,expected", [(np.inf, 2.0), (1.0, 5.0), (2.0, 3.0)])
    def test_hybrid_weights(self, two_modes, r, expected):
        # weight 2^{js} max(nu, 2^-j)^{1-2/r} with s = 1, nu = 0.3
        _, a, b = two_modes
        assert hybrid_norm(a + b, 1.0, r, 0.3) == pytest.approx(expected * ROOT2PI, rel=1e-12)

    def test_hybrid_needs_positive_nu(self, two_modes):
        with pytest.raises(ValueError):
            hybrid_norm(two_modes[1], 1.0, 1.0, 0.0)


class TestTimeNorms:
    def test_time_norm_trapezoid(self):
        t = np.linspace(0, 1, 101)
        v = np.stack([t, 2 * t], axis=1)
        np.testing.assert_allclose(time_norm(t, v, 1.0), [0.5, 1.0], rtol=1e-12)
        np.testing.assert_allclose(time_norm(t, v, np.inf), [1.0, 2.0])
        np.testing.assert_allclose(time_norm(t, v, 2.0), [1 / np.sqrt(3), 2 / np.sqrt(3)], rtol=1e-4)

    def test_chemin_lerner_versus_plain(self, two_modes):
        # a(t) = t, c(t) = 1 - t on [0, 1]; piecewise linear so trapezoid is exact
        _, a, b = two_modes
        t = np.linspace(0, 1, 21)
        traj = Trajectory(list(t), [a * (1 - ti) + b * (ti / 2.0) for ti in t])
        idx = BesovIndex(1.0, 2, np.inf)
        # per shell: int (1 - t) = 1/2 and 2 * int t/2 = 1/2
        assert chemin_lerner(traj, 1.0, idx) == pytest.approx(0.5 * ROOT2PI, rel=1e-12)
        # per time: max(1 - t, t), integral 3/4
        assert time_besov(traj, 1.0, idx) == pytest.approx(0.75 * ROOT2PI, rel=1e-12)

    def test_exponential_decay(self, two_modes):
        _, _, b = two_modes
        t = np.linspace(0, 2, 2001)
        traj = Trajectory(list(t), [b * np.exp(-ti) for ti in t])
        got = chemin_lerner(traj, 1.0, BesovIndex(0.5))
        assert got == pytest.approx(2**0.5 * ROOT2PI * (1 - np.exp(-2)), rel=1e-6)
        assert chemin_lerner(traj, np.inf, BesovIndex(0.5)) == pytest.approx(2**0.5 * ROOT2PI, rel=1e-12)

    def test_needs_two_snapshots(self, two_modes):
        with pytest.raises(ValueError):
            chemin_lerner(Trajectory([0.0], [two_modes[1]]), 1.0, BesovIndex(0))


class TestTrajectory:
    def test_append_and_map(self, two_modes):
        _, a, _ = two_modes
        tr = Trajectory([0.0], [a])
        tr.append(0.5, a * 2)
        assert len(tr) == 2 and tr.horizon == 0.5 and tr.ok
        doubled = tr.map(lambda f: f * 2)
        assert doubled.snapshots[1].coeffs[0, 1, 1] == pytest.approx(2.0)

    def test_times_must_increase(self, two_modes):
        _, a, _ = two_modes
        tr = Trajectory([0.0], [a])
        with pytest.raises(ValueError):
            tr.append(0.0, a)


class TestSolutionNorm:
    def test_rest_state_is_zero(self):
        g = Grid(2, 16, 2 * np.pi)
        st0 = FlowState.rest(g)
        traj = Trajectory([0.0, 1.0], [st0, st0.replace(t=1.0)])
        assert solution_norm(traj, 1.0, 2.0, 1.0, 1.0) == 0.0
        assert initial_quantity(st0, 1.0, 2.0) == 0.0

    def test_sup_part_dominates_initial_quantity(self, rng):
        g = Grid(2, 16, 2 * np.pi)
        st0 = FlowState.rest(g)
        u = random_field(g, rng, 2, 5.0) * 0.1
        b = random_field(g, rng, 1, 5.0) * 0.1
        state = st0.replace(u=u, b=b)
        traj = Trajectory([0.0, 0.5], [state, state.replace(t=0.5)])
        assert solution_norm(traj, 1.0, 2.0, 1.0, 1.0) >= initial_quantity(state, 1.0, 2.0)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    s=st.floats(-2, 3),
    p=st.sampled_from([1.0, 2.0, 4.0, np.inf]),
    lam=st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3),
)
def test_besov_norm_homogeneous_and_subadditive(seed, s, p, lam):
    g = Grid(2, 16, 2 * np.pi)
    rng = np.random.default_rng(seed)
    f = random_field(g, rng, 1, 6.0)
    h = random_field(g, rng, 1, 6.0)
    idx = BesovIndex(s, p)
    nf, nh = besov_norm(f, idx), besov_norm(h, idx)
    assert besov_norm(f * lam, idx) == pytest.approx(abs(lam) * nf, rel=1e-10)
    assert besov_norm(f + h, idx) <= (nf + nh) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.floats(-1, 2))
def test_lr_sums_are_ordered(seed, s):
    g = Grid(2, 16, 2 * np.pi)
    f = random_field(g, np.random.default_rng(seed), 1, 6.0)
    n1 = besov_norm(f, BesovIndex(s, 2, 1))
    n2 = besov_norm(f, BesovIndex(s, 2, 2))
    ninf = besov_norm(f, BesovIndex(s, 2, np.inf))
    assert ninf <= n2 * (1 + 1e-12) <= n1 * (1 + 1e-12) ** 2
