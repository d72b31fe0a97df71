"""Trajectory verification: recurrence, input patterns, closed forms, period.

Pattern checks operate on the raw (unsaturated) inputs: the synthesis
arguments bound u_i(k) itself, and sat(u) = +-1 alone would be a strictly
weaker check.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .dynamics import (
    AgentState,
    GainParams,
    NsModel,
    Trajectory,
    control_inputs,
    inverse_step_di,
    inverse_step_ns,
    saturate,
    simulate,
)
from .graphs import Partition, WeightedGraph
from .scalars import FLOAT_TOL, Scalar, is_exact
from .synthesis import OrbitPlan, PatternSpec


@dataclass(frozen=True)
class PatternReport:
    ok: bool
    #: (step, agent, raw input) for every failed inequality
    violations: tuple[tuple[int, int, Scalar], ...]

    @property
    def first_violation(self) -> Optional[tuple[int, int, Scalar]]:
        return self.violations[0] if self.violations else None


def _states_equal(
    a: Sequence[AgentState], b: Sequence[AgentState], tol: float
) -> bool:
    for sa, sb in zip(a, b):
        exact = is_exact(sa.x) and is_exact(sb.x) and is_exact(sa.v) and is_exact(sb.v)
        if exact:
            if sa.x != sb.x or sa.v != sb.v:
                return False
        elif abs(sa.x - sb.x) > tol or abs(sa.v - sb.v) > tol:
            return False
    return True


def _trajectory_is_exact(t: Trajectory) -> bool:
    return all(is_exact(s.x) and is_exact(s.v) for s in t.states[0])


def backward_states(
    t: Trajectory,
    g: WeightedGraph,
    gains: GainParams,
    T: int,
    tol: float = FLOAT_TOL,
) -> list[AgentState]:
    """Invert one period, extending the input sequence T-periodically.

    Starting from states[0], each backward step applies the exact inverse of
    the one-step map with the saturated input recorded one period later, then
    confirms the controller at the reconstructed state reproduces that input.
    Returns the state at time -T.
    """
    if t.steps < T:
        raise ValueError(f"trajectory covers {t.steps} steps, need {T}")
    ns = None if t.model == "di" else NsModel(t.a)
    current = list(t.states[0])
    for back in range(1, T + 1):
        sat = t.sat_u[T - back]
        if ns is None:
            current = [inverse_step_di(s, u) for s, u in zip(current, sat)]
        else:
            current = [inverse_step_ns(s, u, ns) for s, u in zip(current, sat)]
        recomputed = [saturate(u) for u in control_inputs(g, gains, current)]
        for i, (u_used, u_new) in enumerate(zip(sat, recomputed)):
            if is_exact(u_used) and is_exact(u_new):
                consistent = u_used == u_new
            else:
                consistent = abs(u_used - u_new) <= tol
            if not consistent:
                raise ValueError(
                    f"backward extension inconsistent at time {-back}, agent "
                    f"{i + 1}: input {u_new} vs recorded {u_used}"
                )
    return current


def check_periodicity(
    t: Trajectory,
    T: int,
    graph: WeightedGraph | None = None,
    gains: GainParams | None = None,
    tol: float = FLOAT_TOL,
) -> bool:
    """states[T] == states[0]; in exact mode, also one inverted period.

    The backward check (two-sided periodicity) runs when `graph` and `gains`
    are supplied and the trajectory is exact.
    """
    if t.steps < T:
        raise ValueError(f"trajectory covers {t.steps} steps, need {T}")
    if not _states_equal(t.states[T], t.states[0], tol):
        return False
    if graph is not None and gains is not None and _trajectory_is_exact(t):
        before = backward_states(t, graph, gains, T, tol)
        if not _states_equal(before, t.states[0], tol):
            return False
    return True


def check_pattern(
    t: Trajectory, p: Partition, pattern: PatternSpec, tol: float = 0.0
) -> PatternReport:
    """Verify raw u_i(k) >= 1 / <= -1 per class and phase over one period."""
    T = pattern.period
    if t.steps < T:
        raise ValueError(f"trajectory covers {t.steps} steps, need {T}")
    violations: list[tuple[int, int, Scalar]] = []
    for k in range(T):
        for i in range(t.n):
            u = t.raw_u[k][i]
            sign = pattern.sign_at(k, i in p.s_even)
            ok = u >= 1 - tol if sign > 0 else u <= -1 + tol
            if not ok:
                violations.append((k, i, u))
    return PatternReport(not violations, tuple(violations))


def closed_form_di(
    x0: Scalar, v0: Scalar, cls: str, m: int, k: int
) -> AgentState:
    """Piecewise closed form of the saturated double-integrator orbit.

    cls "even" drives with +1 for m steps then -1; "odd" is mirrored.
    """
    if cls not in ("even", "odd"):
        raise ValueError(f"class must be 'even' or 'odd', got {cls!r}")
    if not 0 <= k <= 2 * m:
        raise ValueError(f"step {k} outside [0, {2 * m}]")
    sign = 1 if cls == "even" else -1
    if k <= m:
        x = x0 + k * v0 + sign * Fraction(k * (k - 1), 2)
        v = v0 + sign * k
        return AgentState(x, v)
    xm = x0 + m * v0 + sign * Fraction(m * (m - 1), 2)
    vm = v0 + sign * m
    d = k - m
    x = xm + d * vm - sign * Fraction(d * (d - 1), 2)
    v = vm - sign * d
    return AgentState(x, v)


def oracle_check_di(t: Trajectory, plan: OrbitPlan, tol: float = FLOAT_TOL) -> bool:
    """Every recorded state matches the closed form (independent of the stepper)."""
    m = plan.half_period
    if t.steps < 2 * m:
        raise ValueError(f"trajectory covers {t.steps} steps, need {2 * m}")
    for i in range(t.n):
        cls = "even" if i in plan.partition.s_even else "odd"
        x0, v0 = plan.init[i].x, plan.init[i].v
        for k in range(2 * m + 1):
            expected = closed_form_di(x0, v0, cls, m, k)
            if not _states_equal([t.states[k][i]], [expected], tol):
                return False
    return True


def minimal_period(
    g: WeightedGraph,
    gains: GainParams,
    init: Sequence[AgentState],
    T_max: int,
    ns: NsModel | None = None,
    tol: float = FLOAT_TOL,
) -> Optional[int]:
    """Smallest t in [1, T_max] with state(t) == state(0), by enumeration."""
    if T_max < 1:
        raise ValueError("T_max must be >= 1")
    t = simulate(g, gains, init, T_max, ns=ns)
    for period in range(1, T_max + 1):
        if _states_equal(t.states[period], t.states[0], tol):
            return period
    return None


def verification_report(
    g: WeightedGraph,
    plan: OrbitPlan,
    t: Trajectory,
    tol: float = FLOAT_TOL,
) -> dict:
    """Run every applicable check and collect a machine-readable summary."""
    report: dict = {"model": plan.model, "period": plan.period}
    report["periodicity"] = check_periodicity(
        t, plan.period, graph=g, gains=plan.gains, tol=tol
    )
    pattern = check_pattern(t, plan.partition, plan.pattern)
    report["pattern"] = pattern.ok
    if pattern.first_violation is not None:
        k, agent, value = pattern.first_violation
        report["pattern_first_violation"] = {
            "step": k,
            "agent": agent + 1,
            "raw_input": str(value),
        }
    if plan.model == "di":
        report["closed_form"] = oracle_check_di(t, plan, tol)
    ns = None if plan.model == "di" else NsModel(plan.a)
    found = minimal_period(g, plan.gains, t.states[0], 2 * plan.period, ns=ns, tol=tol)
    report["minimal_period"] = found
    report["ok"] = bool(
        report["periodicity"]
        and report["pattern"]
        and report.get("closed_form", True)
        and found is not None
        and plan.period % found == 0
    )
    return report
