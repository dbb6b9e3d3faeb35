import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from critlab.spectral import (
    Grid,
    SpectralField,
    Symbol,
    apply_symbol,
    concat,
    dealias,
    divergence,
    gradient,
    leray_decompose,
    lp_norm,
    product,
    random_field,
)


def _field(grid, fn):
    x = grid.coords
    return SpectralField.from_physical(grid, np.asarray(fn(*x))[np.newaxis])


class TestGrid:
    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            Grid(2, 31, 1.0)
        with pytest.raises(ValueError):
            Grid(4, 8, 1.0)
        with pytest.raises(ValueError):
            Grid(2, 16, -1.0)

    def test_wavenumbers(self):
        g = Grid(1, 8, 4 * np.pi)
        np.testing.assert_allclose(g.k1d, [0, 0.5, 1, 1.5, -2, -1.5, -1, -0.5])

    def test_fft_axes_are_trailing(self):
        g = Grid(2, 8, 1.0)
        assert g.axes == (-2, -1)

    @pytest.mark.parametrize("n", [8, 16, 32])
    def test_dealias_mask_excludes_nyquist_and_is_symmetric(self, n):
        g = Grid(2, n, 2 * np.pi)
        m = g.dealias_mask
        assert not np.any(m & g.nyquist)
        flipped = m[np.ix_(*[(-np.arange(n)) % n] * 2)]
        assert np.array_equal(m, flipped)
        assert np.all(np.abs(g.kvec[:, m]) <= n / 3 + 1e-12)

    def test_volume(self, grid2):
        assert grid2.volume == pytest.approx((2 * np.pi) ** 2)
        assert grid2.cell_volume * grid2.n**2 == pytest.approx(grid2.volume)


class TestFields:
    def test_roundtrip(self, grid2, rng):
        v = rng.standard_normal((2,) + grid2.shape)
        f = SpectralField.from_physical(grid2, v)
        np.testing.assert_allclose(f.to_physical(), v, atol=1e-13)

    def test_coefficients_are_series_coefficients(self, grid2):
        f = _field(grid2, lambda x, y: 3.0 + np.cos(2 * x))
        assert f.coeffs[0, 0, 0] == pytest.approx(3.0)
        assert f.coeffs[0, 2, 0] == pytest.approx(0.5)
        assert f.mean()[0] == pytest.approx(3.0)

    def test_gradient_of_trig(self, grid2):
        f = _field(grid2, lambda x, y: np.sin(3 * x) * np.cos(2 * y))
        g = gradient(f).to_physical()
        x, y = grid2.coords
        np.testing.assert_allclose(g[0], 3 * np.cos(3 * x) * np.cos(2 * y), atol=1e-12)
        np.testing.assert_allclose(g[1], -2 * np.sin(3 * x) * np.sin(2 * y), atol=1e-12)

    def test_laplacian_symbol(self, grid2):
        f = _field(grid2, lambda x, y: np.cos(x + 2 * y))
        lap = apply_symbol(f, Symbol.laplacian()).to_physical()[0]
        np.testing.assert_allclose(lap, -5 * f.to_physical()[0], atol=1e-12)

    def test_arithmetic_checks_grid(self, grid2):
        other = SpectralField.zeros(Grid(2, 16, 2 * np.pi))
        with pytest.raises(ValueError):
            SpectralField.zeros(grid2) + other

    def test_concat_and_component(self, grid2, rng):
        a = random_field(grid2, rng, 1, 6.0)
        b = random_field(grid2, rng, 2, 6.0)
        c = concat(a, b)
        assert c.components == 3
        np.testing.assert_array_equal(c.component(2).coeffs[0], b.coeffs[1])

    def test_lp_norms_of_cosine(self, grid2):
        f = _field(grid2, lambda x, y: np.cos(3 * x))
        assert lp_norm(f, 2) == pytest.approx(np.sqrt(2) * np.pi, rel=1e-12)
        assert lp_norm(f, np.inf) == pytest.approx(1.0, rel=1e-12)
        assert lp_norm(f, 4) == pytest.approx((1.5 * np.pi**2) ** 0.25, rel=1e-12)

    def test_product_is_dealiased(self, grid2):
        f = _field(grid2, lambda x, y: np.cos(10 * x))
        p = product(f, f)
        assert np.all(p.coeffs[:, ~grid2.dealias_mask] == 0)
        assert p.coeffs[0, 0, 0] == pytest.approx(0.5)


class TestLeray:
    def test_projector_properties(self, grid3, rng):
        u = random_field(grid3, rng, 3, 6.0)
        p, q = leray_decompose(u)
        np.testing.assert_allclose((p + q).coeffs, u.coeffs, atol=1e-14)
        pp, pq = leray_decompose(p)
        qp, qq = leray_decompose(q)
        np.testing.assert_allclose(pp.coeffs, p.coeffs, atol=1e-15)
        np.testing.assert_allclose(qq.coeffs, q.coeffs, atol=1e-15)
        assert np.abs(pq.coeffs).max() < 1e-15
        assert np.abs(qp.coeffs).max() < 1e-15
        assert np.abs(divergence(p).coeffs).max() < 1e-13

    def test_orthogonal(self, grid2, rng):
        u = random_field(grid2, rng, 2, 8.0)
        p, q = leray_decompose(u)
        inner = np.sum(p.coeffs * np.conj(q.coeffs))
        assert abs(inner) < 1e-14 * np.sum(np.abs(u.coeffs) ** 2)

    def test_gradient_field_is_pure_q(self, grid2, rng):
        phi = random_field(grid2, rng, 1, 8.0)
        p, q = leray_decompose(gradient(phi))
        assert np.abs(p.coeffs).max() < 1e-13


class TestRandomField:
    def test_real_and_dealiased(self, grid2, rng):
        f = random_field(grid2, rng, 2, 10.0)
        assert np.all(f.coeffs[:, ~grid2.dealias_mask] == 0)
        assert f.coeffs[0, 0, 0] == 0
        back = SpectralField.from_physical(grid2, f.to_physical())
        np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-15)

    def test_seeded(self, grid2):
        a = random_field(grid2, np.random.default_rng(7), 1, 5.0)
        b = random_field(grid2, np.random.default_rng(7), 1, 5.0)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    def test_kmax_respected(self, grid2, rng):
        f = random_field(grid2, rng, 1, 3.0)
        assert np.all(f.coeffs[0][grid2.kabs > 3.0 + 1e-12] == 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_leray_is_linear_idempotent(seed, a, b):
    g = Grid(2, 16, 2 * np.pi)
    rng = np.random.default_rng(seed)
    u = random_field(g, rng, 2, 5.0)
    v = random_field(g, rng, 2, 5.0)
    lhs, _ = leray_decompose(u * a + v * b)
    pu, _ = leray_decompose(u)
    pv, _ = leray_decompose(v)
    np.testing.assert_allclose(lhs.coeffs, (pu * a + pv * b).coeffs, atol=1e-13)
    ppu, _ = leray_decompose(pu)
    np.testing.assert_allclose(ppu.coeffs, pu.coeffs, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_parseval(seed):
    g = Grid(2, 16, 3.0)
    f = random_field(g, np.random.default_rng(seed), 1, 12.0)
    phys = g.cell_volume * np.sum(f.to_physical() ** 2)
    spec = g.volume * np.sum(np.abs(f.coeffs) ** 2)
    assert phys == pytest.approx(spec, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_dealias_is_idempotent(seed):
    g = Grid(2, 16, 2 * np.pi)
    v = np.random.default_rng(seed).standard_normal((1,) + g.shape)
    once = dealias(SpectralField.from_physical(g, v))
    np.testing.assert_array_equal(dealias(once).coeffs, once.coeffs)
