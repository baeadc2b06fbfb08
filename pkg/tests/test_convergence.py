import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfq.convergence import convergence_study
from wfq.errors import ValidationError

EPS = [0.1, 0.05, 0.025, 0.0125]


@settings(max_examples=40, deadline=None)
@given(order=st.floats(0.5, 4.0), c=st.floats(1e-3, 1e3))
def test_recovers_power_law_order(order, c):
    res = convergence_study(EPS, [c * e**order for e in EPS])
    assert res.order == pytest.approx(order, abs=1e-9)
    np.testing.assert_allclose(res.pair_orders, order, atol=1e-9)
    assert res.reliable and not res.exact


def test_zero_metric_is_exact():
    res = convergence_study(EPS, [0.0, 1e-16, 0.0, 3e-15])
    assert res.exact and res.order_label() == "exact"
    assert res.to_dict()["order"] == "exact"


def test_non_monotone_flagged():
    res = convergence_study(EPS, [1.0, 0.5, 0.6, 0.1])
    assert not res.reliable


def test_input_order_is_irrelevant():
    a = convergence_study(EPS, [e**2 for e in EPS])
    b = convergence_study(EPS[::-1], [e**2 for e in EPS[::-1]])
    assert a.order == b.order


@pytest.mark.parametrize("eps", [[0.1, 0.05], [0.1, 0.05, 0.02]])
def test_rejects_short_or_irregular_sweeps(eps):
    with pytest.raises(ValidationError):
        convergence_study(eps, [1.0] * len(eps))
