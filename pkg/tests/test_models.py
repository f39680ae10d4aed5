import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from dlss.models import (
    DegenerateModelError,
    EvalMode,
    GridTooLargeError,
    ModelParams,
    NearVacuumError,
    SeriesDomainError,
    derived_params,
    full_rhs,
    linear_symbol,
    nonlinear_rhs,
    rhs_rational,
    rhs_taylor,
    taylor_terms,
)
from dlss.wiener import Lattice, SpectralField, convolve_full, derivative, make_field, project, wiener_norm

EPS = np.finfo(float).eps
MULTI1 = ModelParams.multid(1)
REDUCED = ModelParams.extended(0.0, 0.25, 8.0 / 3.0)
EXT = ModelParams.extended(0.5, 0.25, 8.0 / 3.0)
MODES = [EvalMode.taylor(16), EvalMode.rational()]


def direct_rhs(u: SpectralField, params: ModelParams, M: int) -> SpectralField:
    """``sum_ij d_i d_j (u_i u_j S1)`` (or the extended flux form) by exact convolutions.

    Independent of the grid path: every product is formed by direct
    summation on a growing lattice and ``P_N`` is applied once at the end.
    """
    d = u.lattice.d
    S = SpectralField(u.lattice, np.zeros(u.lattice.shape), copy=False)
    power = None
    for n in range(M + 1):
        if n == 0:
            c = np.zeros(u.lattice.shape, dtype=complex)
            c[(u.lattice.N,) * d] = 1.0
            power = SpectralField(u.lattice, c, copy=False)
        else:
            power = convolve_full(power, -1.0 * u)
        if power.lattice.N > S.lattice.N:
            S = project(S, power.lattice.N)
        S = S + power
    grads = [derivative(u, i) for i in range(1, d + 1)]

    if params.kind == "multid":
        total = None
        for i in range(d):
            for j in range(d):
                flux = convolve_full(convolve_full(grads[i], grads[j]), S)
                term = derivative(derivative(flux, i + 1), j + 1)
                total = term if total is None else total + project(term, total.lattice.N)
        return project(total, u.lattice.N)
    flux = convolve_full(convolve_full(grads[0], grads[0]), S)
    out = params.nu * derivative(derivative(flux, 1), 1) - params.gamma * derivative(flux, 1)
    return project(out, u.lattice.N)


class TestParams:
    def test_derived_examples(self):
        assert derived_params(0, 0.25, 8 / 3) == pytest.approx((0.0, 1.0))
        assert derived_params(1, 1 / 8, 1) == pytest.approx((1 / 8, 7 / 32))

    def test_degenerate(self):
        with pytest.raises(DegenerateModelError):
            derived_params(1, 0.25, 0)
        with pytest.raises(DegenerateModelError):
            ModelParams.extended(1, 0.0, 1.0)

    def test_multid_dimension(self):
        with pytest.raises(ValueError):
            ModelParams.multid(4)

    def test_eval_mode(self):
        with pytest.raises(ValueError):
            EvalMode.taylor(0)
        with pytest.raises(ValueError):
            EvalMode("pade")

    def test_symbol_examples(self):
        assert linear_symbol(ModelParams.multid(2), (1, 1)) == pytest.approx(-4)
        assert linear_symbol(REDUCED, 1) == pytest.approx(-1)
        assert linear_symbol(EXT, 0) == 0
        assert linear_symbol(ModelParams.multid(3), (0, 0, 0)) == 0

    def test_symbol_dispersion(self):
        # gamma = 1/8: imaginary part -(4 gamma / 3) k^3
        assert linear_symbol(EXT, 2) == pytest.approx(complex(-16, -(4 / 24) * 8))

    @given(st.integers(-50, 50), st.floats(-1, 1), st.floats(0.01, 0.25), st.floats(0.1, 5))
    def test_linear_stability(self, k, mu, Gamma, eps):
        assert linear_symbol(ModelParams.extended(mu, Gamma, eps), k).real <= 0


class TestNonlinear:
    @pytest.mark.parametrize("mode", MODES)
    @pytest.mark.parametrize("params", [MULTI1, ModelParams.multid(2), EXT])
    def test_zero_field(self, params, mode):
        u = SpectralField.zeros(Lattice(params.d, 4))
        assert wiener_norm(nonlinear_rhs(u, params, mode)) == 0.0

    @pytest.mark.parametrize("mode", MODES)
    def test_quadratic_coefficient(self, mode):
        # u = e cos x: leading term d_xx(u_x^2) = 2 e^2 cos 2x
        e = 1e-3
        u = make_field(Lattice(1, 8), [(1, e / 2)])
        r = nonlinear_rhs(u, MULTI1, mode)
        assert r[2] == pytest.approx(e**2, rel=10 * e)
        assert r[-2] == pytest.approx(e**2, rel=10 * e)

    @pytest.mark.parametrize("mode", MODES)
    def test_tiny_amplitude_is_second_order(self, mode):
        e = 1e-6
        u = make_field(Lattice(1, 8), [(1, e / 2)])
        assert wiener_norm(nonlinear_rhs(u, MULTI1, mode)) / e**2 == pytest.approx(2.0, rel=1e-4)

    @pytest.mark.parametrize("mode", MODES)
    def test_quadratic_scaling(self, rand_field, mode):
        u = rand_field(Lattice(1, 8), 3, 1.0, np.random.default_rng(3))
        ratios = [wiener_norm(nonlinear_rhs(e * u, MULTI1, mode)) / e**2 for e in (1e-2, 5e-3, 2.5e-3)]
        d1, d2 = abs(ratios[0] - ratios[1]), abs(ratios[1] - ratios[2])
        # ratio -> limit with an O(e) correction, so successive gaps halve
        assert d2 == pytest.approx(d1 / 2, rel=0.05)

    @pytest.mark.parametrize("params", [MULTI1, ModelParams.multid(2), ModelParams.multid(3), EXT])
    @pytest.mark.parametrize("M", [1, 3])
    def test_taylor_matches_direct_convolution(self, rand_field, params, M):
        N = 3 if params.d < 3 else 2
        u = rand_field(Lattice(params.d, N), N, 0.2, np.random.default_rng(11))
        got = rhs_taylor(u, params, M)
        want = direct_rhs(u, params, M).zero_mean()
        assert wiener_norm(got - want) <= 1e-14 * max(1.0, wiener_norm(want))

    def test_terms_sum_to_rhs(self, rand_field):
        u = rand_field(Lattice(1, 6), 3, 0.1, np.random.default_rng(5))
        t = taylor_terms(u, EXT, 16)
        assert set(t) == {"I1", "I2", "I3", "I4", "I5"}
        total = EXT.nu * (t["I1"] + t["I2"] + t["I3"]) + EXT.gamma * (t["I4"] + t["I5"])
        assert wiener_norm(total.zero_mean() - rhs_taylor(u, EXT, 16)) < 1e-15

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
    def test_unzeroed_term_sum_has_zero_mean(self, seed, d):
        u = random_field(Lattice(d, 4), 2, 0.15, np.random.default_rng(seed))
        t = taylor_terms(u, ModelParams.multid(d), 8)
        assert abs((t["I1"] + t["I2"] + t["I3"]).mean) <= 1e-12

    @pytest.mark.parametrize("mode", MODES)
    @pytest.mark.parametrize("params", [MULTI1, ModelParams.multid(2), EXT])
    def test_full_rhs_mean_zero(self, rand_field, params, mode):
        u = rand_field(Lattice(params.d, 5), 3, 0.1, np.random.default_rng(8))
        assert abs(full_rhs(u, params, mode).mean) <= 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 0.3), st.sampled_from(MODES))
    def test_reduction_identity(self, seed, norm, mode):
        u = random_field(Lattice(1, 8), 4, norm, np.random.default_rng(seed))
        a = nonlinear_rhs(u, REDUCED, mode)
        b = nonlinear_rhs(u, MULTI1, mode)
        assert wiener_norm(a - b) <= 1e-10

    @pytest.mark.parametrize("mode", MODES)
    def test_even_data_stays_even(self, mode):
        lat = Lattice(1, 8)
        u = make_field(lat, [(1, 0.04), (2, -0.03), (3, 0.01)])
        r = nonlinear_rhs(u, MULTI1, mode)
        tol = 1e-15 * wiener_norm(r)
        assert np.max(np.abs(r.coeffs.imag)) <= tol
        np.testing.assert_allclose(r.coeffs, np.flip(r.coeffs), rtol=0, atol=tol)

    def test_mode_consistency_ladder(self, rand_field):
        u = rand_field(Lattice(1, 8), 3, 0.1, np.random.default_rng(21))
        ref = rhs_rational(u, MULTI1)
        z, s4 = wiener_norm(u, 0), wiener_norm(u, 4)
        floor = 64 * EPS * wiener_norm(ref)
        ratios = []
        for M in (4, 8, 16, 30):
            diff = wiener_norm(rhs_taylor(u, MULTI1, M) - ref)
            tail = z ** (M + 1) / (1 - z) * s4
            if diff > floor:
                ratios.append(diff / tail)
            else:
                assert tail < 1e-12  # reached roundoff only once the tail is negligible
        assert len(ratios) >= 2
        C = max(ratios)
        assert C < 10.0

    def test_rational_agrees_with_high_order_taylor(self, rand_field):
        for seed in range(5):
            u = rand_field(Lattice(1, 8), 8, 0.05, np.random.default_rng(seed))
            ref = rhs_rational(u, MULTI1)
            diff = wiener_norm(rhs_taylor(u, MULTI1, 30) - ref)
            assert diff <= 1e-8 * wiener_norm(ref)

    def test_series_domain(self):
        u = make_field(Lattice(1, 4), [(1, 0.5), (2, 0.01)])
        with pytest.raises(SeriesDomainError):
            rhs_taylor(u, MULTI1)

    def test_near_vacuum(self):
        u = make_field(Lattice(1, 4), [(1, 0.5)])  # min(1 + cos x) = 0
        with pytest.raises(NearVacuumError):
            rhs_rational(u, MULTI1)

    def test_grid_too_large(self):
        u = SpectralField.zeros(Lattice(3, 16))
        with pytest.raises(GridTooLargeError):
            rhs_taylor(u + make_field(u.lattice, [((1, 0, 0), 0.01)]), ModelParams.multid(3), 16)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            rhs_taylor(SpectralField.zeros(Lattice(2, 3)), MULTI1)
