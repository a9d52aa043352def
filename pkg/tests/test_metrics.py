import math

import numpy as np
import pytest

from src.errors import MetricError
from src.metrics import (
    INFINITE_RATIO,
    is_infinite_marker,
    is_undefined_marker,
    jain_index,
    throughput_ratio,
)


class TestJainIndex:

    @pytest.mark.parametrize("values,expected", [
        ([5.0, 5.0], 1.0),
        ([1.0, 0.0], 0.5),
        ([4.0, 1.0], 25.0 / 34.0),
        ([3.0], 1.0),
        ([1.0, 0.0, 0.0, 0.0], 0.25),
    ])
    def test_known_values(self, values, expected) -> None:
        assert jain_index(values) == pytest.approx(expected, rel=1e-12)

    def test_scale_free(self) -> None:
        values = [3.0, 7.5, 0.25]
        assert jain_index([v * 1e-200 for v in values]) == pytest.approx(jain_index(values), rel=1e-12)
        assert jain_index([v * 1e200 for v in values]) == pytest.approx(jain_index(values), rel=1e-12)

    def test_bounds_on_random_vectors(self) -> None:
        rng = np.random.default_rng(3)
        for _ in range(500):
            n = int(rng.integers(1, 12))
            values = rng.uniform(0.0, 1000.0, n)
            j = jain_index(values)
            assert 1.0 / n - 1e-12 <= j <= 1.0

    def test_accepts_numpy_arrays(self) -> None:
        assert jain_index(np.array([2.0, 2.0, 2.0])) == 1.0

    @pytest.mark.parametrize("values", [
        [],
        [0.0, 0.0],
        [1.0, -0.5],
        [1.0, math.nan],
        [1.0, math.inf],
    ])
    def test_rejects(self, values) -> None:
        with pytest.raises(MetricError):
            jain_index(values)


class TestThroughputRatio:

    def test_plain(self) -> None:
        assert throughput_ratio(30.0, 10.0) == 3.0

    def test_zero_downlink(self) -> None:
        ratio = throughput_ratio(12.0, 0.0)
        assert ratio == INFINITE_RATIO
        assert is_infinite_marker(ratio)

    def test_both_zero_is_undefined(self) -> None:
        ratio = throughput_ratio(0.0, 0.0)
        assert math.isnan(ratio)
        assert is_undefined_marker(ratio)
        assert not is_infinite_marker(ratio)

    def test_zero_uplink(self) -> None:
        assert throughput_ratio(0.0, 4.0) == 0.0

    @pytest.mark.parametrize("up,down", [(-1.0, 1.0), (1.0, -1.0), (math.nan, 1.0)])
    def test_rejects(self, up, down) -> None:
        with pytest.raises(MetricError):
            throughput_ratio(up, down)

    def test_markers_ignore_none(self) -> None:
        assert not is_infinite_marker(None)
        assert not is_undefined_marker(None)
