import numpy as np
import pytest

from stabkit import (kelvin_voigt_branch, predicted_kelvin_voigt,
                     predicted_tip, predicted_viscous, tip_branch,
                     tip_branch_secondary, tip_characteristic, viscous_branch)
from stabkit.branches import (KELVIN_VOIGT_BRANCH_LIMIT, TIP_BRANCH_LIMIT,
                              VISCOUS_BRANCH_LIMIT)


def quartic_value_viscous(beta, nu):
    return (beta**2 + nu**2 + 1 + beta) * (beta**2 + nu**2 + 2 + 4 * beta) - 4 * beta**2


def quartic_value_kv(beta, nu):
    return ((beta**2 + nu**2 + 1 + beta * nu**2)
            * (beta**2 + nu**2 + 2 + 4 * beta * nu**2) - 4 * beta**2 * nu**4)


class TestViscousBranch:
    def test_roots_satisfy_determinant(self):
        for p in viscous_branch([1, 4, 20, 50]):
            nu = p.index * np.pi
            assert abs(quartic_value_viscous(p.beta, nu)) <= 1e-5 * nu**4

    def test_first_mode_value(self):
        # prediction at k=1: -2/(125 pi^2) + i (pi + 3/(5 pi))
        p = viscous_branch([1])[0]
        assert p.prediction == pytest.approx(complex(-2 / (125 * np.pi**2),
                                                     np.pi + 3 / (5 * np.pi)))
        assert p.prediction.real == pytest.approx(-0.0016211, abs=1e-7)
        assert p.prediction.imag == pytest.approx(3.3325786, abs=1e-7)
        # the asymptote is O(1/k^2) accurate on Re: about 12% off at k = 1
        gap = abs(p.beta.real - p.prediction.real) / abs(p.beta.real)
        assert gap < 0.15

    def test_relative_accuracy_grows_with_k(self):
        pts = viscous_branch([2, 5, 10])
        gaps = [abs(p.beta.real - p.prediction.real) / abs(p.beta.real) for p in pts]
        assert gaps[0] <= 0.05
        assert gaps[2] < gaps[1] < gaps[0]

    def test_limit_constant(self):
        pts = viscous_branch(range(5, 51))
        scaled = np.array([p.beta.real * (p.index * np.pi) ** 2 for p in pts])
        lim = VISCOUS_BRANCH_LIMIT
        assert abs(scaled[-1] - lim) <= 0.05 * abs(lim)
        assert np.all(np.diff(scaled[5:]) < 0)  # monotone toward the limit

    def test_slow_branch_selected(self):
        # the other conjugate pair sits near Re = -5/2
        for p in viscous_branch([3, 12]):
            assert -0.1 < p.beta.real < 0
            assert p.beta.imag > 0


class TestKelvinVoigtBranch:
    def test_roots_satisfy_determinant(self):
        for p in kelvin_voigt_branch([1, 4, 20, 50]):
            nu = p.index * np.pi
            assert abs(quartic_value_kv(p.beta, nu)) <= 1e-4 * nu**8

    def test_first_mode_prediction(self):
        p = kelvin_voigt_branch([1])[0]
        assert p.prediction.real == pytest.approx(-2 / (125 * np.pi**4))
        assert p.prediction.imag == pytest.approx(np.pi + 3 / (5 * np.pi))

    def test_accuracy_at_second_mode(self):
        p = kelvin_voigt_branch([2])[0]
        assert abs(p.beta.real - p.prediction.real) <= 0.05 * abs(p.beta.real)

    def test_limit_constant(self):
        pts = kelvin_voigt_branch(range(5, 51))
        scaled = np.array([p.beta.real * (p.index * np.pi) ** 4 for p in pts])
        lim = KELVIN_VOIGT_BRANCH_LIMIT
        assert abs(scaled[-1] - lim) <= 0.05 * abs(lim)


class TestTipBranch:
    def test_residuals_and_half_plane(self):
        pts = tip_branch(range(3, 41))
        assert all(p.residual <= 1e-10 for p in pts)
        assert all(p.beta.real < 0 for p in pts)

    def test_asymptote_agreement(self):
        # Im error against the expansion decays like n^-3
        pts = tip_branch(range(3, 41))
        for p in pts:
            assert abs(p.beta.imag - p.prediction.imag) <= 1e-3 / p.index
        assert abs(pts[-1].beta.real * 40**2 - TIP_BRANCH_LIMIT) <= 0.05 * abs(TIP_BRANCH_LIMIT)

    def test_prediction_formula(self):
        y0 = 1.5 * np.pi
        assert predicted_tip(1) == pytest.approx(complex(-1 / (32 * y0**2),
                                                         y0 + 1 / (4 * y0)))

    def test_seeds_off_cosh_zeros(self):
        # cosh vanishes at i (n + 1/2) pi; the seeds are offset by 1/(4 y0)
        for n in (1, 5, 40):
            seed = predicted_tip(n)
            dist = abs(seed.imag - (n + 0.5) * np.pi)
            assert dist > 1e-3
            assert abs(np.cosh(complex(0, seed.imag))) > 1e-3

    def test_newton_ratio_matches_direct_evaluation(self):
        # f and df share the exponential rescaling, so the Newton ratio f/df
        # must agree with the ratio of a plain unscaled evaluation
        def direct(beta):
            b1 = np.sqrt(beta**2 + 1 + 0j)
            return ((b1 / beta) * np.cosh(b1) * (np.sinh(beta) + np.cosh(beta))
                    + np.cosh(beta) * np.sinh(b1))

        rng = np.random.default_rng(0)
        for _ in range(10):
            beta = complex(rng.uniform(-0.5, 0.5), rng.uniform(2.0, 40.0))
            f, df, _ = tip_characteristic(beta)
            h = 1e-6
            fd = (direct(beta + h) - direct(beta - h)) / (2 * h)
            assert f / df == pytest.approx(direct(beta) / fd, rel=1e-5)

    def test_scaled_evaluation_never_overflows(self):
        for beta in (complex(800.0, 3.0), complex(-900.0, 50.0), complex(0.0, 1e4)):
            f, df, scale = tip_characteristic(beta)
            assert np.isfinite(f.real) and np.isfinite(f.imag)
            assert np.isfinite(scale)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            tip_characteristic(0.0)

    def test_monotone_branch_for_exponent_fit(self):
        from stabkit import optimality_exponent

        pts = tip_branch(range(3, 41))
        theta = optimality_exponent([p.beta for p in pts])
        assert theta == pytest.approx(0.5, abs=0.01)

    def test_secondary_family_stays_damped(self):
        # the other root family keeps Re near -ln(3)/2 instead of
        # approaching the imaginary axis
        pts = tip_branch_secondary(range(1, 41))
        assert all(p.beta.real < 0 for p in pts)
        assert all(p.residual <= 1e-10 for p in pts)
        assert pts[-1].beta.real == pytest.approx(-0.5 * np.log(3.0), abs=1e-3)
        # distinct from the slow family: bounded away from the axis
        assert all(p.beta.real < -0.5 for p in pts)


class TestPredictions:
    def test_viscous_im_equals_kv_im(self):
        # the two families share the frequency correction nu + 3/(5 nu)
        assert predicted_viscous(7).imag == pytest.approx(predicted_kelvin_voigt(7).imag)

    def test_invalid_indices(self):
        with pytest.raises(ValueError):
            viscous_branch([0])
        with pytest.raises(ValueError):
            tip_branch([0])
