import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shadowguard.optimizer import (
    WbpConfig,
    haar_average_purity,
    page_entropy_asymptotic,
    page_entropy_exact,
    wbp_check,
)


def test_page_asymptotic_value():
    assert page_entropy_asymptotic(2, 10) == pytest.approx(2 * math.log(2) - 2 ** -7, abs=1e-15)
    assert page_entropy_asymptotic(2, 10) == pytest.approx(1.378479, abs=1e-5)
    assert page_entropy_asymptotic(1, 60) == pytest.approx(math.log(2), abs=1e-15)
    with pytest.raises(ValueError):
        page_entropy_asymptotic(3, 5)


def test_page_exact_against_direct_sum():
    for d_a, d in [(4, 1024), (2, 64), (8, 64), (16, 256)]:
        m = min(d_a, d // d_a)
        big = d // m
        direct = sum(1.0 / j for j in range(big + 1, d + 1)) - (m - 1) / (2 * big)
        assert page_entropy_exact(d_a, d) == pytest.approx(direct, rel=1e-12)


def test_page_exact_close_to_asymptotic():
    assert abs(page_entropy_exact(4, 1024) - page_entropy_asymptotic(2, 10)) < 5e-3
    assert page_entropy_exact(1, 16) == pytest.approx(0.0, abs=1e-12)


def test_page_exact_is_symmetric_under_complement():
    assert page_entropy_exact(4, 64) == pytest.approx(page_entropy_exact(16, 64), rel=1e-14)


def test_haar_average_purity():
    assert haar_average_purity(2, 2) == pytest.approx(0.8)
    assert haar_average_purity(1, 7) == 1.0
    assert haar_average_purity(4, 16) == pytest.approx(20 / 65)


def test_wbp_examples():
    full = WbpConfig.build(1.0, (0, 1), 10)
    assert not wbp_check(0.0, full)
    assert wbp_check(page_entropy_asymptotic(2, 10), full)
    half = WbpConfig.build(0.5, (0, 1), 10)
    assert half.threshold == pytest.approx(0.68924, abs=1e-5)
    assert wbp_check(0.70, half)
    with pytest.raises(ValueError):
        wbp_check(-0.1, full)
    with pytest.raises(ValueError):
        WbpConfig.build(0.0, (0, 1), 10)


@given(st.floats(min_value=1e-3, max_value=1.0), st.integers(1, 3), st.integers(6, 14))
def test_threshold_formula(alpha, k, n):
    cfg = WbpConfig.build(alpha, tuple(range(k)), n)
    assert cfg.threshold == alpha * (k * math.log(2) - 2.0 ** -(n - 2 * k + 1))
    assert wbp_check(cfg.threshold, cfg)
    assert not wbp_check(np.nextafter(cfg.threshold, 0.0), cfg)
