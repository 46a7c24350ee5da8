import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenebm.errors import UsageError
from scenebm.schedules import AnnealSchedule, temperature


def test_exponential_start_at_t0():
    assert temperature(AnnealSchedule("emc", 4.0, 0.9), 0) == 4.0


def test_exponential_step_two():
    assert temperature(AnnealSchedule("emc", 4.0, 0.9), 2) == pytest.approx(3.24)


def test_linear_multiplicative():
    assert temperature(AnnealSchedule("li-mc", 4.0, 1.0), 3) == pytest.approx(1.0)


def test_logarithmic_multiplicative():
    sched = AnnealSchedule("log-mc", 4.0, 2.0)
    assert temperature(sched, 5) == pytest.approx(4.0 / (1 + 2.0 * math.log(6.0)))


def test_constant():
    sched = AnnealSchedule("constant", 2.5)
    assert [temperature(sched, i) for i in (0, 10, 500)] == [2.5, 2.5, 2.5]


@pytest.mark.parametrize("kind,a", [
    ("emc", 0.75), ("emc", 0.95), ("li-mc", 0.0), ("li-mc", -1.0),
    ("log-mc", 1.0), ("log-mc", 0.5),
])
def test_invalid_coefficients_rejected(kind, a):
    with pytest.raises(UsageError):
        AnnealSchedule(kind, 4.0, a)


def test_invalid_t0_and_kind():
    with pytest.raises(UsageError):
        AnnealSchedule("constant", 0.0)
    with pytest.raises(UsageError):
        AnnealSchedule("quadratic", 4.0, 0.5)
    with pytest.raises(UsageError):
        temperature(AnnealSchedule("constant", 1.0), -1)


@settings(deadline=None, max_examples=60)
@given(
    t0=st.floats(0.1, 10.0),
    a_emc=st.floats(0.8, 0.9),
    a_li=st.floats(0.01, 5.0),
    a_log=st.floats(1.001, 5.0),
)
def test_monotone_non_increasing(t0, a_emc, a_li, a_log):
    for sched in (
        AnnealSchedule("emc", t0, a_emc),
        AnnealSchedule("li-mc", t0, a_li),
        AnnealSchedule("log-mc", t0, a_log),
        AnnealSchedule("constant", t0),
    ):
        seq = [temperature(sched, i) for i in range(40)]
        assert all(x >= y for x, y in zip(seq, seq[1:]))


def test_json_round_trip():
    sched = AnnealSchedule("emc", 4.0, 0.85)
    assert AnnealSchedule.from_json(sched.to_json()) == sched
