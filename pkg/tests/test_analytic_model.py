"""Analytic model: equations, polynomial identities and root selection."""

import math

import numpy as np
import pytest

from src.analytic_model import (
    LOG_SPACE_MIN_BUFFER,
    REJECT_NON_POSITIVE,
    REJECT_NONPHYSICAL_RATE,
    ROOT_EPSILON,
    ModelSolution,
    ModelVariant,
    RealPolynomial,
    ScenarioParams,
    base_cubic_coeffs,
    blocking_probability,
    compare_variants,
    downlink_rate,
    eq13_residual,
    exact_search_limit,
    extra_service,
    loss_from_ratio,
    new_model_polynomial,
    old_model_polynomial,
    padhye_rate,
    predicted_jain_index,
    predicted_station_rates,
    solve_model,
    utilization,
)
from src.errors import (
    DegenerateScenarioError,
    NonPhysicalRatioError,
    NoPhysicalRootError,
    NumericRangeError,
    ScenarioError,
)
from src.poly_solver import bracket_bisect, polyval, scan_polynomial_roots

def scenario(buffer_size: int, up: int = 1, down: int = 1, window: int = 42) -> ScenarioParams:
    return ScenarioParams(up, down, buffer_size, window)


class TestScenarioParams:

    def test_defaults(self) -> None:
        p = ScenarioParams(1, 1, 20)
        assert p.max_window == 42
        assert p.rtt == 0.1

    @pytest.mark.parametrize("kwargs", [
        dict(up_stations=0, down_stations=0, buffer_size=10),
        dict(up_stations=-1, down_stations=1, buffer_size=10),
        dict(up_stations=1, down_stations=1, buffer_size=0),
        dict(up_stations=1, down_stations=1, buffer_size=10, max_window=0),
        dict(up_stations=1, down_stations=1, buffer_size=10, rtt=0.0),
        dict(up_stations=1.5, down_stations=1, buffer_size=10),
        dict(up_stations=True, down_stations=1, buffer_size=10),
    ])
    def test_invalid(self, kwargs) -> None:
        with pytest.raises(ScenarioError):
            ScenarioParams(**kwargs)

    def test_numpy_integers_accepted(self) -> None:
        p = ScenarioParams(np.int64(2), np.int64(1), np.int64(30))
        assert isinstance(p.up_stations, int) and p.up_stations == 2

    def test_with_buffer(self) -> None:
        assert scenario(10).with_buffer(99).buffer_size == 99


class TestQueueingEquations:

    @pytest.mark.parametrize("p,expected", [
        (scenario(42), 0.0),
        (scenario(84, down=2), 15.75),
        (scenario(100, up=2), 12.0),
        (scenario(10), 0.0),
    ])
    def test_extra_service(self, p, expected) -> None:
        assert extra_service(p) == pytest.approx(expected)

    def test_extra_service_continuous_at_uw(self) -> None:
        assert extra_service(scenario(42)) == 0.0
        assert extra_service(scenario(43)) == pytest.approx(0.75)

    @pytest.mark.parametrize("bad", [ScenarioParams(0, 1, 10), ScenarioParams(1, 0, 10)])
    def test_extra_service_needs_both_directions(self, bad) -> None:
        with pytest.raises(DegenerateScenarioError):
            extra_service(bad)

    @pytest.mark.parametrize("up,ratio,expected", [(1, 1e-12, 1.0), (2, 0.5, 3.0), (1, 1.0, 2.0)])
    def test_utilization(self, up, ratio, expected) -> None:
        assert utilization(up, ratio) == pytest.approx(expected)

    @pytest.mark.parametrize("up,ratio", [(1, 0.0), (1, -1.0), (0, 1.0)])
    def test_utilization_rejects(self, up, ratio) -> None:
        with pytest.raises(ScenarioError):
            utilization(up, ratio)

    @pytest.mark.parametrize("rho,buffer_size,expected", [
        (1.0, 9, 0.1),
        (2.0, 1, 2.0 / 3.0),
        (0.5, 2, 0.125 / 0.875),
    ])
    def test_blocking_probability(self, rho, buffer_size, expected) -> None:
        assert blocking_probability(rho, buffer_size) == pytest.approx(expected, rel=1e-12)

    def test_blocking_probability_limit_at_one(self) -> None:
        for b in range(1, 101):
            assert abs(blocking_probability(1.0, b) - 1.0 / (b + 1)) <= 1e-12

    @pytest.mark.parametrize("b", [1, 5, 20, 100])
    def test_blocking_probability_continuous_at_one(self, b) -> None:
        for rho in (1.0 - 1e-8, 1.0 + 1e-8):
            assert abs(blocking_probability(rho, b) - 1.0 / (b + 1)) < 1e-6

    def test_blocking_probability_increasing_in_rho(self) -> None:
        rhos = np.linspace(0.05, 5.0, 300)
        for b in (1, 10, 84):
            values = [blocking_probability(float(r), b) for r in rhos]
            assert all(x < y for x, y in zip(values, values[1:]))
            assert all(0.0 < v < 1.0 for v in values)

    def test_blocking_probability_vanishes_for_large_buffers(self) -> None:
        assert blocking_probability(0.9, 2000) < 1e-80
        assert blocking_probability(3.0, 5000) == pytest.approx(2.0 / 3.0)

    def test_blocking_probability_rejects(self) -> None:
        with pytest.raises(ScenarioError):
            blocking_probability(0.0, 5)


class TestRates:

    def test_padhye_rate(self) -> None:
        assert padhye_rate(0.375, 1.0) == pytest.approx(2.0)
        assert padhye_rate(0.375, 0.5) == pytest.approx(4.0)

    @pytest.mark.parametrize("pr", [1.5, 0.0, -0.1])
    def test_padhye_rejects_probability(self, pr) -> None:
        with pytest.raises(ScenarioError):
            padhye_rate(pr, 1.0)

    @pytest.mark.parametrize("pr,extra,rtt,expected", [
        (0.375, 0.0, 1.0, 2.0),
        (0.375, 3.0, 1.0, 5.0),
        (0.375, 3.0, 0.5, 10.0),
    ])
    def test_downlink_rate(self, pr, extra, rtt, expected) -> None:
        assert downlink_rate(pr, extra, rtt) == pytest.approx(expected)

    def test_loss_from_ratio(self) -> None:
        p = scenario(20)
        assert loss_from_ratio(p, 0.0, 1.0 / 42.0) == pytest.approx(1.5)
        assert loss_from_ratio(p, 28.5, 0.75) == pytest.approx(1.0 / 6.0)

    def test_loss_from_ratio_zero_downlink_rate(self) -> None:
        with pytest.raises(NonPhysicalRatioError):
            loss_from_ratio(scenario(20), 21.0, 0.5)

    def test_loss_from_ratio_negative_downlink_rate(self) -> None:
        with pytest.raises(NonPhysicalRatioError):
            loss_from_ratio(scenario(20), 28.5, 0.5)


class TestPolynomials:

    @pytest.mark.parametrize("p,extra,expected", [
        (scenario(20), 0.0, (3, 3, 0, -3528)),
        (scenario(20, up=2), 0.0, (6, 6, -14112, -28224)),
        (scenario(20), 28.5, (3, -1621.5, 4788, -3528)),
    ])
    def test_base_cubic_coeffs(self, p, extra, expected) -> None:
        assert base_cubic_coeffs(p, extra) == pytest.approx(expected, abs=1e-9)

    def test_new_model_polynomial_b20(self) -> None:
        poly = new_model_polynomial(scenario(20))
        assert poly.degree == 3
        assert poly.coeffs == pytest.approx((63, 63, -10584, -81144))

    def test_new_model_polynomial_b84(self) -> None:
        poly = new_model_polynomial(scenario(84))
        assert poly.coeffs == pytest.approx((-1729.5, -157843.5, 444528, -306936))

    def test_old_model_polynomial_b20(self) -> None:
        poly = old_model_polynomial(scenario(20))
        assert poly.degree == 4
        assert poly.coeffs == (0.0, 63.0, 60.0, -3528.0, -70560.0)

    def test_old_model_constant_term_cancels(self) -> None:
        assert old_model_polynomial(scenario(10, down=2)).coeffs[0] == 0.0

    def test_real_polynomial_normalises(self) -> None:
        poly = RealPolynomial((1.0, 2.0, 0.0, 0.0))
        assert poly.coeffs == (1.0, 2.0)
        assert poly.degree == 1
        assert poly(3.0) == 7.0
        assert poly.derivative().coeffs == (2.0,)

    def test_old_model_large_u_and_b_stays_finite(self) -> None:
        poly = old_model_polynomial(scenario(LOG_SPACE_MIN_BUFFER + 300, up=50))
        assert all(math.isfinite(c) for c in poly.coeffs)


# ---------------------------------------------------------------------------
# Algebraic identities over random parameter tuples
# ---------------------------------------------------------------------------


def _random_tuples(seed: int, count: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        up = int(rng.integers(1, 6))
        down = int(rng.integers(1, 6))
        window = int(rng.choice([8, 42]))
        buffer_size = int(rng.integers(1, 121))
        yield ScenarioParams(up, down, buffer_size, window), float(rng.uniform(1e-3, 2.0))


class TestIdentities:

    @pytest.mark.parametrize("extra", [0.0, 3.0, 15.75])
    def test_residual_matches_queueing_form(self, extra) -> None:
        # P(R) == 2S^2 (1 - rho) + 3D^2 rho with S = UwR - DE, rho = U(1 + R)
        for p, ratio in _random_tuples(11 + int(extra * 4), 1000):
            U, D, w = p.up_stations, p.down_stations, p.max_window
            base = base_cubic_coeffs(p, extra)
            rho = U * (1.0 + ratio)
            s = U * w * ratio - D * extra
            expected = 2 * s * s * (1.0 - rho) + 3 * D * D * rho
            scale = sum(abs(c) * max(ratio, 1.0) ** k for k, c in enumerate(base))
            assert abs(polyval(base, ratio) - expected) <= 1e-9 * scale

    def test_new_polynomial_is_derivative_combination(self) -> None:
        # B·P(R) + (1 + R)·P'(R), coefficient by coefficient
        for p, _ in _random_tuples(3, 1000):
            c0, c1, c2, c3 = base_cubic_coeffs(p, extra_service(p))
            B = p.buffer_size
            expected = (
                B * c0 + c1,
                B * c1 + 2 * c2 + c1,
                B * c2 + 3 * c3 + 2 * c2,
                B * c3 + 3 * c3,
            )
            scale = max(abs(x) for x in expected)
            assert new_model_polynomial(p).coeffs == pytest.approx(expected, rel=1e-12, abs=1e-12 * scale)

    def test_old_polynomial_matches_extended_base_form(self) -> None:
        # Written out in the x (= U), y (= D) notation of the extended base model.
        for p, _ in _random_tuples(5, 1000):
            x, y, w, B = p.up_stations, p.down_stations, p.max_window, p.buffer_size
            E = extra_service(p)
            r4 = -2 * x**3 * w**2 * B
            r3 = B * (2 * x**2 * w**2 - 2 * x**3 * w**2 + 4 * x**2 * w * y * E) - 2 * x**3 * w**2
            r2 = (B * (4 * x**2 * w * y * E - 2 * x * y**2 * E**2 + 3 * x * y**2 - 4 * x * w * y * E)
                  + (2 * x**2 * w**2 - 2 * x**3 * w**2 + 4 * x**2 * w * y * E))
            r1 = (B * (3 * x * y**2 - 2 * x * y**2 * E**2 + 2 * y**2 * E**2)
                  + (4 * x**2 * w * y * E - 2 * x * y**2 * E**2 + 3 * x * y**2 - 4 * x * w * y * E))
            r0 = (3 * x * y**2 - 2 * x * y**2 * E**2 + 2 * y**2 * E**2) - 3 * y**2 / x**B
            expected = (r0, r1, r2, r3, r4)
            scale = max(abs(v) for v in expected)
            assert old_model_polynomial(p).coeffs == pytest.approx(expected, rel=1e-9, abs=1e-9 * scale)

    def test_old_polynomial_is_product_form(self) -> None:
        # (1 + B R)·P(R) - 3D²/U^B evaluated at random points
        for p, ratio in _random_tuples(9, 1000):
            base = base_cubic_coeffs(p, extra_service(p))
            expected = (1 + p.buffer_size * ratio) * polyval(base, ratio) - 3 * p.down_stations**2 / p.up_stations**p.buffer_size
            got = old_model_polynomial(p)(ratio)
            scale = (1 + p.buffer_size * ratio) * sum(abs(c) * ratio**k for k, c in enumerate(base)) + 3 * p.down_stations**2
            assert abs(got - expected) <= 1e-9 * scale


class TestResidual:

    @pytest.mark.parametrize("b", [1, 20, 84, 300])
    def test_degenerate_root_at_zero(self, b) -> None:
        for window in (8, 42):
            assert abs(eq13_residual(ScenarioParams(1, 1, b, window), 0.0)) <= 1e-12
            assert abs(eq13_residual(ScenarioParams(1, 3, min(b, window), window), 0.0)) <= 1e-12

    def test_old_polynomial_vanishes_at_zero(self) -> None:
        assert old_model_polynomial(scenario(20))(0.0) == 0.0

    def test_log_space_matches_direct_form(self) -> None:
        p = scenario(LOG_SPACE_MIN_BUFFER + 1)
        direct = (1.0 + 0.3) ** p.buffer_size * polyval(base_cubic_coeffs(p, extra_service(p)), 0.3) - 3.0
        assert eq13_residual(p, 0.3) == pytest.approx(direct, rel=1e-10)

    def test_overflow_raises(self) -> None:
        with pytest.raises(NumericRangeError):
            eq13_residual(scenario(5000), 2.0)

    def test_rejects_negative_ratio(self) -> None:
        with pytest.raises(ScenarioError):
            eq13_residual(scenario(20), -0.1)


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------


class TestSolveModel:

    def test_new_cubic_b20_matches_oracle(self) -> None:
        p = scenario(20)
        solution = solve_model(p, "new_cubic")
        coeffs = new_model_polynomial(p).coeffs
        oracle = bracket_bisect(lambda r: polyval(coeffs, r), 1e-6, 1.0, 1e-14)
        assert solution.ratio_down_up == pytest.approx(oracle, abs=1e-9)
        assert solution.ratio_up_down == pytest.approx(1.0 / oracle, abs=1e-6)
        assert solution.ratio_up_down == pytest.approx(15.4, abs=0.1)

    def test_new_cubic_b84_near_parity(self) -> None:
        solution = solve_model(scenario(84), ModelVariant.NEW_CUBIC)
        assert 0.9 <= solution.ratio_up_down <= 1.6
        assert solution.ratio_down_up == pytest.approx(0.7778, abs=1e-3)
        assert solution.extra_service == pytest.approx(31.5)

    def test_b84_rejects_nonphysical_roots(self) -> None:
        solution = solve_model(scenario(84), "new")
        reasons = {c.rejection for c in solution.candidates}
        assert REJECT_NONPHYSICAL_RATE in reasons
        assert sum(c.accepted for c in solution.candidates) == 1

    def test_solution_invariants(self) -> None:
        for b in (5, 20, 42, 60, 84, 120, 200, 400):
            for variant in ModelVariant:
                p = scenario(b, up=1, down=2)
                try:
                    s = solve_model(p, variant)
                except (NoPhysicalRootError, NumericRangeError):
                    continue
                assert s.ratio_down_up > ROOT_EPSILON
                assert s.rho == 1 * (1.0 + s.ratio_down_up)
                surplus = p.up_stations * p.max_window * s.ratio_down_up - p.down_stations * s.extra_service
                assert surplus > 0
                assert s.pr_raw == pytest.approx(3 * p.down_stations**2 / (2 * surplus**2), rel=1e-12)
                assert s.loss_prob == min(s.pr_raw, 1.0)
                assert s.pr_clamped == (s.pr_raw > 1.0)
                assert s.ratio_up_down == pytest.approx(1.0 / s.ratio_down_up)

    def test_old_quartic_discards_zero_root(self) -> None:
        solution = solve_model(scenario(20), "old_quartic")
        assert solution.ratio_down_up == pytest.approx(0.0846, abs=1e-3)
        zero = [c for c in solution.candidates if abs(c.value) < 1e-12]
        assert zero and zero[0].rejection == REJECT_NON_POSITIVE

    def test_exact_matches_direct_bisection(self) -> None:
        p = scenario(20)
        solution = solve_model(p, "exact")
        oracle = bracket_bisect(lambda r: eq13_residual(p, r), 0.05, 0.2, 1e-13)
        assert solution.ratio_down_up == pytest.approx(oracle, abs=1e-9)
        assert abs(solution.residual_eq13) < 1e-6

    def test_exact_search_limit(self) -> None:
        assert exact_search_limit(scenario(20)) == 2.0
        assert exact_search_limit(scenario(84)) == pytest.approx(2 * 31.5 / 42 + 2)

    @pytest.mark.parametrize("variant", list(ModelVariant))
    def test_never_returns_degenerate_root(self, variant) -> None:
        for b in (1, 2, 5, 10, 20, 41, 42, 43, 84, 168):
            try:
                s = solve_model(ScenarioParams(1, 1, b), variant)
            except NoPhysicalRootError as exc:
                assert all(c.rejection for c in exc.candidates)
                continue
            except NumericRangeError:
                continue
            assert s.ratio_down_up > ROOT_EPSILON

    def test_degenerate_scenario(self) -> None:
        with pytest.raises(DegenerateScenarioError):
            solve_model(ScenarioParams(0, 1, 20))

    def test_unknown_variant(self) -> None:
        with pytest.raises(ScenarioError):
            solve_model(scenario(20), "quintic")

    def test_new_cubic_agrees_with_scan(self) -> None:
        p = scenario(100, up=2, down=2)
        solution = solve_model(p, "new")
        oracle = scan_polynomial_roots(new_model_polynomial(p).coeffs, 0.0, 5.0, grid=10_001)
        assert any(abs(r - solution.ratio_down_up) < 1e-8 for r in oracle.roots)

    def test_compare_variants(self) -> None:
        results = compare_variants(scenario(84))
        assert set(results) == set(ModelVariant)
        assert all(isinstance(v, (ModelSolution, NoPhysicalRootError, NumericRangeError)) for v in results.values())
        assert isinstance(results[ModelVariant.NEW_CUBIC], ModelSolution)

    def test_deterministic(self) -> None:
        p = scenario(60, up=2, down=1)
        assert solve_model(p, "exact") == solve_model(p, "exact")


class TestPredictions:

    def test_station_rates(self) -> None:
        p = ScenarioParams(1, 1, 84, rtt=0.2)
        s = solve_model(p)
        up, down = predicted_station_rates(p, s)
        assert up == pytest.approx(42 / 0.2)
        assert down == pytest.approx(s.ratio_down_up * 42 / 0.2)
        assert s.uplink_rate == pytest.approx(up)
        assert s.downlink_rate == pytest.approx(down)

    def test_jain_is_rtt_free_and_bounded(self) -> None:
        for rtt in (0.05, 0.1, 1.0):
            p = ScenarioParams(1, 1, 20, rtt=rtt)
            jain = predicted_jain_index(p, solve_model(p))
            assert 0.5 <= jain <= 1.0
            assert jain == pytest.approx(predicted_jain_index(scenario(20), solve_model(scenario(20))))

    def test_jain_near_one_at_parity(self) -> None:
        p = scenario(84)
        assert predicted_jain_index(p, solve_model(p)) > 0.95
