from __future__ import annotations

from fractions import Fraction

import pytest

from satorbits import (
    AgentState,
    GainParams,
    NsModel,
    fixture_path,
    make_partition,
    parse_graph,
)

REFERENCE_X0 = ["21", "16.02", "16.02", "15", "20", "21.5", "18"]
REFERENCE_V0 = ["-5.5", "5.5", "5.5", "5.5", "-5.5", "-5.5", "-5.5"]


@pytest.fixture(scope="session")
def graph7():
    return parse_graph(fixture_path("graph7.txt").read_text())


@pytest.fixture(scope="session")
def partition7(graph7):
    return make_partition(graph7, 0)


@pytest.fixture(scope="session")
def gains_di():
    return GainParams(Fraction("0.4"), Fraction("0.42"))


@pytest.fixture(scope="session")
def gains_ns():
    return GainParams(Fraction("-0.5"), Fraction(2))


@pytest.fixture(scope="session")
def ns_model():
    return NsModel(Fraction("0.5"))


@pytest.fixture(scope="session")
def reference_init_di():
    return tuple(
        AgentState(Fraction(x), Fraction(v)) for x, v in zip(REFERENCE_X0, REFERENCE_V0)
    )
