import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasicontract.bounds import (
    PermanenceQuery,
    bound_closed_form,
    bound_recurrence,
    bound_series,
    permanence_index,
    ultimate_bound,
    uniform_iterate_bound,
)
from quasicontract.constraint import ContractionParams as P

P51 = P(0.5, 1.0)


class TestClosedForm:
    def test_zeroth(self):
        assert bound_closed_form(0, 4, P51) == 4.0

    def test_second(self):
        # recurrence by hand: 4 -> 3 -> 2.5
        assert bound_closed_form(2, 4, P51) == pytest.approx(2.5, rel=1e-15)

    def test_limit(self):
        assert bound_closed_form(60, 4, P51) == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("K", [0.0, 1.0, 1.5])
    def test_K_outside_open_unit(self, K):
        with pytest.raises(ValueError):
            bound_closed_form(1, 1.0, P(K, 1.0))

    def test_negative_index(self):
        with pytest.raises(ValueError):
            bound_closed_form(-1, 1.0, P51)


class TestRecurrence:
    def test_one_step(self):
        assert bound_recurrence(1, 4, P51) == 3.0

    def test_empty(self):
        assert bound_recurrence(0, 7, P(0.3, 0.9)) == 7.0

    def test_fixed_point(self):
        assert bound_recurrence(2, 2, P51) == 2.0

    def test_series(self):
        tr = bound_series(3, 4, P51)
        assert tr.values[0] == 4 and tr.values[1] == 3


@settings(max_examples=300)
@given(st.floats(0, 1e3), st.floats(1e-6, 1 - 1e-6), st.floats(0, 1e2), st.integers(0, 200))
def test_closed_form_matches_recurrence(d0, K, M, j):
    p = P(K, M)
    a, b = bound_closed_form(j, d0, p), bound_recurrence(j, d0, p)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@settings(max_examples=300)
@given(st.floats(0, 1e3), st.floats(1e-3, 0.999), st.floats(1e-3, 1e2), st.integers(0, 150))
def test_error_contracts_by_one_minus_K(d0, K, M, j):
    p = P(K, M)
    lim = M / K
    e0 = bound_closed_form(j, d0, p) - lim
    e1 = bound_closed_form(j + 1, d0, p) - lim
    assert abs(e1) == pytest.approx((1 - K) * abs(e0), rel=1e-9, abs=1e-12 * (lim + d0))


def test_monotone_direction():
    above = [bound_recurrence(j, 5, P51) for j in range(10)]
    below = [bound_recurrence(j, 1, P51) for j in range(10)]
    assert all(a > b for a, b in zip(above, above[1:]))
    assert all(a < b for a, b in zip(below, below[1:]))


class TestUltimateAndUniform:
    def test_ultimate(self):
        assert ultimate_bound(P51) == 2.0
        assert ultimate_bound(P(0.25, 1.0)) == 4.0
        assert ultimate_bound(P(0.5, 0.0)) == 0.0

    def test_ultimate_K_zero(self):
        with pytest.raises(ValueError):
            ultimate_bound(P(0.0, 1.0))

    def test_uniform(self):
        assert uniform_iterate_bound(4, P51) == 6.0
        assert uniform_iterate_bound(0, P51) == 2.0
        assert uniform_iterate_bound(10, P(0.1, 2.0)) == pytest.approx(30.0)

    def test_uniform_K_zero(self):
        with pytest.raises(ValueError):
            uniform_iterate_bound(1.0, P(0.0, 1.0))

    @given(st.floats(0, 100), st.floats(0.01, 0.99), st.floats(0, 10), st.integers(0, 300))
    def test_uniform_dominates(self, R, K, M, j):
        p = P(K, M)
        for d0 in (0.0, R / 2, R):
            assert bound_closed_form(j, d0, p) <= uniform_iterate_bound(R, p) * (1 + 1e-12)


class TestPermanence:
    def test_scan_example(self):
        # B_2 = 2.5 > 2.25, B_3 = 2.25 <= 2.25
        assert permanence_index(PermanenceQuery(4.0, 0.25, P51)) == 3

    def test_start_below_threshold(self):
        assert permanence_index(PermanenceQuery(1.0, 0.25, P51)) == 0

    def test_generous_epsilon(self):
        assert permanence_index(PermanenceQuery(4.0, 10.0, P51)) == 0

    @pytest.mark.parametrize("eps", [0.0, -1.0])
    def test_bad_epsilon(self, eps):
        with pytest.raises(ValueError):
            PermanenceQuery(4.0, eps, P51)

    def test_bad_K(self):
        with pytest.raises(ValueError):
            PermanenceQuery(4.0, 0.1, P(1.0, 1.0))

    def test_cap(self):
        with pytest.raises(ValueError, match="cap"):
            permanence_index(PermanenceQuery(1e6, 1e-12, P(1e-6, 1e-6)))

    @settings(max_examples=300)
    @given(st.floats(0, 1e3), st.floats(1e-4, 0.5), st.floats(0.01, 0.99), st.floats(0, 10))
    def test_minimal(self, R, eps, K, M):
        p = P(K, M)
        j0 = permanence_index(PermanenceQuery(R, eps, p))
        target = M / K + eps
        if j0 > 0:
            assert bound_closed_form(j0 - 1, R, p) > target
        for j in range(j0, j0 + 101):
            assert bound_closed_form(j, R, p) <= target


def test_log_formula_agrees_away_from_ties():
    rng = np.random.default_rng(3)
    for _ in range(200):
        K, M = rng.uniform(0.05, 0.95), rng.uniform(0.1, 3)
        R = M / K * rng.uniform(1.5, 20)
        eps = rng.uniform(0.01, 1)
        x = math.log(eps / (R - M / K)) / math.log(1 - K)
        if abs(x - round(x)) < 1e-6:
            continue
        assert permanence_index(PermanenceQuery(R, eps, P(K, M))) == max(0, math.ceil(x))
