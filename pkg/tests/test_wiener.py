import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from dlss.tolerances import IDENTITY_TOL, LINF_SLACK, REALNESS_TOL
from dlss.wiener import (
    AnalyticHorizonError,
    GridSizeError,
    Lattice,
    LatticeMismatchError,
    ModeOutOfRangeError,
    NonHermitianError,
    SpectralField,
    analytic_norm,
    convolve,
    derivative,
    from_grid,
    linf_norm,
    load_checkpoint,
    make_field,
    mode_list,
    save_checkpoint,
    to_grid,
    wiener_norm,
    wiener_norms,
)

COS_X = make_field(Lattice(1, 4), [(1, 0.5)])


def fields(d=None, N_max=None, norm_max=1.0):
    """Hypothesis strategy for random zero-mean real fields."""

    @st.composite
    def build(draw):
        dd = draw(st.sampled_from([1, 2, 3])) if d is None else d
        top = N_max or {1: 8, 2: 4, 3: 2}[dd]
        N = draw(st.integers(1, top))
        K0 = draw(st.integers(1, N))
        norm = draw(st.floats(1e-6, norm_max))
        seed = draw(st.integers(0, 2**32 - 1))
        return random_field(Lattice(dd, N), K0, norm, np.random.default_rng(seed))

    return build()


class TestLattice:
    @pytest.mark.parametrize("d,N", [(1, 3), (2, 2), (3, 1)])
    def test_mode_set_is_the_cube(self, d, N):
        lat = Lattice(d, N)
        modes = mode_list(lat)
        assert len(modes) == (2 * N + 1) ** d == lat.size
        assert set(modes) == set(itertools.product(range(-N, N + 1), repeat=d))

    @pytest.mark.parametrize("bad", [dict(d=4, N=2), dict(d=1, N=0), dict(d=1, N=2, oversample=0)])
    def test_rejects_bad_shapes(self, bad):
        with pytest.raises(ValueError):
            Lattice(**bad)

    def test_index_out_of_range(self):
        with pytest.raises(ModeOutOfRangeError):
            Lattice(1, 2).index(3)
        assert 2 in Lattice(1, 2) and 3 not in Lattice(1, 2)


class TestMakeField:
    def test_single_cosine(self):
        assert COS_X[1] == 0.5 and COS_X[-1] == 0.5
        x = 2 * np.pi * np.arange(36) / 36
        np.testing.assert_allclose(to_grid(COS_X), np.cos(x), atol=1e-15)

    def test_empty_is_zero(self):
        u = make_field(Lattice(1, 4), [])
        assert wiener_norm(u) == 0.0

    def test_imaginary_amplitude_in_2d(self):
        lat = Lattice(2, 2)
        u = make_field(lat, [((1, 0), 0.25j)])
        assert u[(1, 0)] == 0.25j and u[(-1, 0)] == -0.25j
        G = lat.grid_size
        x1 = 2 * np.pi * np.arange(G) / G
        expected = -0.5 * np.sin(x1)[:, None] * np.ones(G)[None, :]
        np.testing.assert_allclose(to_grid(u), expected, atol=1e-15)

    def test_zero_mode_cleared(self):
        u = make_field(Lattice(1, 2), [(0, 0.3)])
        assert u.mean == 0.0

    def test_field_is_immutable(self):
        with pytest.raises(ValueError):
            COS_X.coeffs[0] = 1.0
        with pytest.raises(AttributeError):
            COS_X.lattice = Lattice(1, 2)

    def test_non_finite_rejected(self):
        c = np.zeros(3, dtype=complex)
        c[0] = np.nan
        with pytest.raises(ValueError):
            SpectralField(Lattice(1, 1), c)

    def test_lattice_mismatch(self):
        with pytest.raises(LatticeMismatchError):
            COS_X + make_field(Lattice(1, 3), [(1, 0.5)])


class TestNorms:
    def test_examples(self):
        assert wiener_norm(COS_X, 0) == pytest.approx(1.0)
        assert wiener_norm(COS_X, 4) == pytest.approx(1.0)
        cos2 = make_field(Lattice(1, 4), [(2, 0.5)])
        assert wiener_norm(cos2, 4) == pytest.approx(16.0)

    def test_negative_index_rejected(self):
        with pytest.raises(ValueError):
            wiener_norm(COS_X, -1)

    @settings(max_examples=100, deadline=None)
    @given(fields())
    def test_interpolation(self, u):
        n = wiener_norms(u)
        s = n.as_tuple()
        assert all(v >= 0 for v in s)
        for j, r in [(1, 4), (2, 4), (3, 4), (1, 3), (2, 3)]:
            bound = s[0] ** (1 - j / r) * s[r] ** (j / r)
            assert s[j] <= bound * (1 + IDENTITY_TOL)

    @settings(max_examples=100, deadline=None)
    @given(fields())
    def test_zero_mean_norm_ordering(self, u):
        # every active mode has |k| >= 1
        n = wiener_norms(u)
        assert n.s0 <= n.s1 * (1 + IDENTITY_TOL) and n.s0 <= n.s4 * (1 + IDENTITY_TOL)


class TestDerivative:
    def test_cosine(self):
        du = derivative(COS_X, 1)
        assert du[1] == pytest.approx(0.5j) and du[-1] == pytest.approx(-0.5j)

    def test_zero(self):
        assert wiener_norm(derivative(SpectralField.zeros(Lattice(2, 2)), 2)) == 0.0

    def test_axis_is_one_based(self):
        with pytest.raises(ValueError):
            derivative(COS_X, 0)

    @settings(max_examples=100, deadline=None)
    @given(fields())
    def test_bounded_by_higher_norm(self, u):
        n = wiener_norms(u)
        for i in range(1, u.lattice.d + 1):
            d1 = derivative(u, i)
            assert wiener_norm(d1) <= n.s1 + IDENTITY_TOL
            d2 = derivative(d1, i)
            assert wiener_norm(d2) <= n.s2 + IDENTITY_TOL
            assert wiener_norm(derivative(d2, i)) <= n.s3 + IDENTITY_TOL


class TestConvolve:
    def test_cosine_square(self):
        p = convolve(COS_X, COS_X)
        assert p[0] == pytest.approx(0.5)
        assert p[2] == pytest.approx(0.25) and p[-2] == pytest.approx(0.25)
        assert wiener_norm(p) == pytest.approx(1.0)

    def test_times_zero(self):
        assert wiener_norm(convolve(COS_X, SpectralField.zeros(COS_X.lattice))) == 0.0

    def test_matches_pointwise_product_when_resolved(self):
        lat = Lattice(1, 6)
        f = make_field(lat, [(1, 0.3), (2, 0.1j)])
        g = make_field(lat, [(3, 0.2)])
        G = 64
        expected = from_grid(to_grid(f, G) * to_grid(g, G), lat)
        np.testing.assert_allclose(convolve(f, g).coeffs, expected.coeffs, atol=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_algebra_property(self, data):
        f = data.draw(fields(d=1))
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        g = random_field(f.lattice, f.lattice.N, data.draw(st.floats(1e-6, 1.0)), rng)
        assert wiener_norm(convolve(f, g)) <= wiener_norm(f) * wiener_norm(g) + IDENTITY_TOL

    @settings(max_examples=50, deadline=None)
    @given(st.data())
    def test_weighted_product_bound(self, data):
        f = data.draw(fields(d=2))
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        g = random_field(f.lattice, 1, 0.3, rng)
        sigma, t = data.draw(st.floats(0, 2)), data.draw(st.floats(0, 3))
        lhs = analytic_norm(convolve(f, g), sigma, t)
        assert lhs <= analytic_norm(f, sigma, t) * analytic_norm(g, sigma, t) * (1 + IDENTITY_TOL)


class TestGrid:
    @settings(max_examples=100, deadline=None)
    @given(fields())
    def test_round_trip(self, u):
        back = from_grid(to_grid(u), u.lattice)
        np.testing.assert_allclose(back.coeffs, u.coeffs, rtol=0, atol=IDENTITY_TOL)

    @settings(max_examples=50, deadline=None)
    @given(fields())
    def test_samples_are_real(self, u):
        lat = u.lattice
        full = np.zeros((lat.grid_size,) * lat.d, dtype=complex)
        idx = np.arange(-lat.N, lat.N + 1) % lat.grid_size
        full[np.ix_(*([idx] * lat.d))] = u.coeffs
        vals = np.fft.ifftn(full) * full.size
        assert np.max(np.abs(vals.imag)) <= REALNESS_TOL * (1 + wiener_norm(u))

    def test_non_hermitian_rejected(self):
        c = np.zeros(5, dtype=complex)
        c[3] = 0.5  # k = +1 without its mirror
        with pytest.raises(NonHermitianError):
            to_grid(SpectralField(Lattice(1, 2), c))

    def test_from_grid_validates(self):
        lat = Lattice(2, 3)
        with pytest.raises(GridSizeError):
            from_grid(np.zeros(12), lat)
        with pytest.raises(GridSizeError):
            from_grid(np.zeros((12, 10)), lat)
        with pytest.raises(GridSizeError):
            from_grid(np.zeros((5, 5)), lat)

    def test_linf_examples(self):
        assert linf_norm(COS_X) == pytest.approx(1.0)
        assert linf_norm(SpectralField.zeros(Lattice(3, 1))) == 0.0

    @settings(max_examples=100, deadline=None)
    @given(fields())
    def test_linf_below_wiener(self, u):
        assert linf_norm(u) <= wiener_norm(u) + LINF_SLACK


class TestAnalyticNorm:
    def test_examples(self):
        assert analytic_norm(COS_X, 0.7, 0.0) == wiener_norm(COS_X)
        assert analytic_norm(SpectralField.zeros(Lattice(1, 3)), 1.0, 1.0) == 0.0
        assert analytic_norm(COS_X, 0.5, 2.0) == pytest.approx(math.e)

    def test_overflow_refused(self):
        with pytest.raises(AnalyticHorizonError):
            analytic_norm(COS_X, 100.0, 10.0)

    def test_tiny_coefficients_do_not_underflow(self):
        u = make_field(Lattice(1, 4), [(4, 1e-300)])
        assert analytic_norm(u, 1.0, 100.0) == pytest.approx(2e-300 * math.exp(400))


class TestCheckpoint:
    @settings(max_examples=30, deadline=None)
    @given(u=fields(), t=st.floats(0, 100))
    def test_round_trip_is_exact(self, tmp_path_factory, u, t):
        path = tmp_path_factory.mktemp("ck") / "state.txt"
        save_checkpoint(path, u, t)
        v, t2 = load_checkpoint(path)
        assert t2 == t
        assert v.lattice == u.lattice
        assert np.array_equal(v.coeffs, u.coeffs)

    def test_missing_modes_are_zero(self, tmp_path):
        path = tmp_path / "sparse.txt"
        path.write_text("# 1 3 4 0.5\n1 0.25 0\n-1 0.25 0\n")
        u, t = load_checkpoint(path)
        assert t == 0.5 and u[1] == 0.25 and u[2] == 0.0

    def test_non_hermitian_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# 1 3 4 0\n1 0.25 0\n-1 0.2 0\n")
        with pytest.raises(NonHermitianError):
            load_checkpoint(path)

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 0.25 0\n")
        with pytest.raises(ValueError):
            load_checkpoint(path)
