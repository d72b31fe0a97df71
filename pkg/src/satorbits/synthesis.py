"""Constructive synthesis of periodic orbits for both agent models.

Double integrator: gate 0 < alpha < beta < 3/2 alpha, half-period m from the
worst cross edge, velocities +-m/2 by parity class, and initial positions
from a difference-constraint system (intra-edge equalities plus one interval
per cross edge), solved by Bellman-Ford with a slack-centering post-pass.

Neutrally stable: gate |alpha| <= sgn(a)(beta - a/a_bar), fixed period 4,
closed-form initial states +-(1/(2a), -1/(2a)) by class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .dynamics import AgentState, GainParams, NsModel
from .graphs import Partition, WeightedGraph, make_partition
from .scalars import Scalar


class GainConditionError(ValueError):
    """Feedback gains fail the synthesis gate."""


class InfeasibleConstraintsError(ValueError):
    """The position difference-constraint system has no solution.

    `cycle` is a certificate: a closed chain of agents whose constraint
    bounds sum to a contradiction.
    """

    def __init__(self, message: str, cycle: list[int]):
        super().__init__(message)
        self.cycle = cycle


@dataclass(frozen=True)
class IntervalConstraint:
    """Bounds on x_i(0) - x_j(0) across one cross edge (i even, j odd)."""

    i: int
    j: int
    lower: Scalar
    upper: Scalar


@dataclass(frozen=True)
class PatternSpec:
    """Expected sign of the raw input per phase for the even class.

    phases: (length, sign) pairs; the odd class mirrors each sign.  Phase
    lengths sum to the period.
    """

    phases: tuple[tuple[int, int], ...]

    @property
    def period(self) -> int:
        return sum(length for length, _ in self.phases)

    def sign_at(self, k: int, even: bool) -> int:
        offset = 0
        for length, sign in self.phases:
            if k < offset + length:
                return sign if even else -sign
            offset += length
        raise ValueError(f"step {k} outside period {self.period}")


def di_pattern(m: int) -> PatternSpec:
    return PatternSpec(((m, 1), (m, -1)))


def ns_pattern() -> PatternSpec:
    return PatternSpec(((2, 1), (2, -1)))


@dataclass(frozen=True)
class OrbitPlan:
    model: str  # "di" or "ns"
    a: Optional[Scalar]
    gains: GainParams
    partition: Partition
    half_period: int
    period: int
    init: tuple[AgentState, ...]
    pattern: PatternSpec


# ---------------------------------------------------------------------------
# double integrator


def check_gains_di(gains: GainParams) -> bool:
    """Gate 0 < alpha < beta < (3/2) alpha, all strict."""
    return 0 < gains.alpha < gains.beta < Fraction(3, 2) * gains.alpha


def min_half_period(gains: GainParams, a_bar: Scalar) -> int:
    """Smallest admissible half-period for the worst cross edge.

    m >= (4(alpha-beta) + 2/a_bar) / (3 alpha - 2 beta), floored at 3 so the
    (m-2) terms in the interval bounds stay positive.
    """
    if not check_gains_di(gains):
        raise GainConditionError(f"gains ({gains.alpha}, {gains.beta}) fail the gate")
    if a_bar <= 0:
        raise ValueError("a_bar must be positive")
    bound = (4 * (gains.alpha - gains.beta) + 2 / a_bar) / (3 * gains.alpha - 2 * gains.beta)
    return max(3, math.ceil(bound))


def velocity_init(m: int, p: Partition) -> list[Scalar]:
    """v_i(0) = -m/2 on the even class, +m/2 on the odd class."""
    if m < 1:
        raise ValueError("half-period must be >= 1")
    half = Fraction(m, 2)
    return [-half if i in p.s_even else half for i in range(len(p.dist))]


def _interval_bounds(w: Scalar, gains: GainParams, m: int) -> tuple[Scalar, Scalar]:
    lower = (1 / w + (gains.beta - gains.alpha) * (m - 2)) / gains.alpha
    upper = (
        2 * gains.alpha * (m - 1) - gains.beta * (m - 2) - 1 / w
    ) / gains.alpha
    return lower, upper


def position_constraints(
    g: WeightedGraph, p: Partition, gains: GainParams, m: int
) -> tuple[list[tuple[int, int]], list[IntervalConstraint]]:
    """Intra-edge equalities and one interval per cross edge for x(0)."""
    if m <= 2:
        raise ValueError("half-period must exceed 2")
    equalities = [(i, j) for i, j, _ in p.intra_edges]
    intervals = []
    for i, j, w in p.cross_edges:
        lower, upper = _interval_bounds(w, gains, m)
        intervals.append(IntervalConstraint(i, j, lower, upper))
    return equalities, intervals


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[ri] = rj


def solve_positions(
    n: int,
    equalities: Sequence[tuple[int, int]],
    intervals: Sequence[IntervalConstraint],
    base: Scalar = Fraction(0),
    anchor: int | None = None,
    center_sweeps: int = 32,
) -> list[Scalar]:
    """Solve x_i - x_j in [lower, upper] plus equalities.

    Equality classes are contracted, each interval becomes two difference
    constraints, and feasibility is decided by Bellman-Ford relaxation from a
    virtual source.  A feasible point is then re-centered toward interval
    midpoints by coordinate sweeps, and finally shifted so the anchor agent
    (or, by default, the minimum position) sits at `base`.
    """
    uf = _UnionFind(n)
    for i, j in equalities:
        uf.union(i, j)
    reps = sorted({uf.find(i) for i in range(n)})
    index = {r: k for k, r in enumerate(reps)}
    nv = len(reps)

    # constraints as (u, v, lower, upper): x_u - x_v in [lower, upper]
    cons: list[tuple[int, int, Scalar, Scalar]] = []
    for c in intervals:
        if c.lower > c.upper:
            raise InfeasibleConstraintsError(
                f"empty interval [{c.lower}, {c.upper}] on edge "
                f"({c.i + 1}, {c.j + 1})",
                [c.i, c.j],
            )
        u, v = index[uf.find(c.i)], index[uf.find(c.j)]
        if u == v:
            if not (c.lower <= 0 <= c.upper):
                raise InfeasibleConstraintsError(
                    f"equality chain forces x_{c.i + 1} = x_{c.j + 1} but the "
                    f"edge interval [{c.lower}, {c.upper}] excludes 0",
                    [c.i, c.j],
                )
            continue
        cons.append((u, v, c.lower, c.upper))

    # Bellman-Ford on edges (tail, head, weight): x_head <= x_tail + weight
    edges: list[tuple[int, int, Scalar]] = []
    for u, v, lower, upper in cons:
        edges.append((v, u, upper))  # x_u - x_v <= upper
        edges.append((u, v, -lower))  # x_v - x_u <= -lower
    dist: list[Scalar] = [Fraction(0)] * nv
    pred: list[int] = [-1] * nv
    for _ in range(nv):
        changed = False
        for tail, head, w in edges:
            if dist[tail] + w < dist[head]:
                dist[head] = dist[tail] + w
                pred[head] = tail
                changed = True
        if not changed:
            break
    else:
        # still relaxing after nv rounds: extract a negative cycle
        for tail, head, w in edges:
            if dist[tail] + w < dist[head]:
                dist[head] = dist[tail] + w
                pred[head] = tail
                node = head
                for _ in range(nv):
                    node = pred[node]
                cycle = [node]
                cur = pred[node]
                while cur != node:
                    cycle.append(cur)
                    cur = pred[cur]
                cycle_agents = [reps[k] for k in reversed(cycle)]
                raise InfeasibleConstraintsError(
                    "contradictory constraint cycle through agents "
                    + ", ".join(str(a + 1) for a in cycle_agents),
                    cycle_agents,
                )

    x = dist
    # slack-centering: move each variable to the midpoint of its local range
    incident: list[list[tuple[int, int, Scalar, Scalar]]] = [[] for _ in range(nv)]
    for u, v, lower, upper in cons:
        incident[u].append((u, v, lower, upper))
        incident[v].append((u, v, lower, upper))
    for _ in range(center_sweeps):
        moved = False
        for k in range(nv):
            if not incident[k]:
                continue
            lo = hi = None
            for u, v, lower, upper in incident[k]:
                if k == u:
                    cand_lo, cand_hi = x[v] + lower, x[v] + upper
                else:
                    cand_lo, cand_hi = x[u] - upper, x[u] - lower
                lo = cand_lo if lo is None else max(lo, cand_lo)
                hi = cand_hi if hi is None else min(hi, cand_hi)
            mid = (lo + hi) / 2
            if mid != x[k]:
                x[k] = mid
                moved = True
        if not moved:
            break

    if anchor is not None:
        shift = base - x[index[uf.find(anchor)]]
    else:
        shift = base - min(x)
    return [x[index[uf.find(i)]] + shift for i in range(n)]


def _m_admissible_per_edge(
    p: Partition, gains: GainParams, m: int
) -> tuple[bool, Optional[tuple[int, int]]]:
    """Check the per-edge interval nonemptiness condition for this m."""
    for i, j, w in p.cross_edges:
        lower, upper = _interval_bounds(w, gains, m)
        if lower > upper:
            return False, (i, j)
    return True, None


def synthesize_di(
    g: WeightedGraph,
    gains: GainParams,
    m_override: int | None = None,
    root: int = 0,
    base: Scalar = Fraction(0),
    anchor: int | None = None,
    max_doublings: int = 10,
) -> OrbitPlan:
    """Build a verified period-2m orbit plan for the double-integrator network."""
    if not check_gains_di(gains):
        raise GainConditionError(
            f"gains (alpha={gains.alpha}, beta={gains.beta}) violate "
            "0 < alpha < beta < 3/2 alpha"
        )
    p = make_partition(g, root)
    m_min = min_half_period(gains, p.a_bar)
    if m_override is not None:
        if m_override <= 2:
            raise ValueError("half-period override must exceed 2")
        ok, edge = _m_admissible_per_edge(p, gains, m_override)
        if not ok:
            raise ValueError(
                f"half-period {m_override} leaves an empty interval on edge "
                f"({edge[0] + 1}, {edge[1] + 1}); minimum is {m_min}"
            )
        m = m_override
    else:
        m = m_min

    # Joint feasibility: after contraction the constraint graph is bipartite
    # (constraints always join an even rep to an odd rep) and every interval
    # is centered at m/2, so nonempty per-edge intervals admit the uniform
    # solution x_even = m/2, x_odd = 0.  The doubling retry below is a safety
    # net; it is skipped when the caller pinned m explicitly.
    last_error: InfeasibleConstraintsError | None = None
    attempt_m = m
    attempts = 1 if m_override is not None else max_doublings + 1
    for _ in range(attempts):
        equalities, intervals = position_constraints(g, p, gains, attempt_m)
        try:
            x0 = solve_positions(g.n, equalities, intervals, base=base, anchor=anchor)
        except InfeasibleConstraintsError as exc:
            last_error = exc
            attempt_m *= 2
            continue
        m = attempt_m
        break
    else:
        raise last_error

    v0 = velocity_init(m, p)
    init = tuple(AgentState(x0[i], v0[i]) for i in range(g.n))
    return OrbitPlan(
        model="di",
        a=None,
        gains=gains,
        partition=p,
        half_period=m,
        period=2 * m,
        init=init,
        pattern=di_pattern(m),
    )


# ---------------------------------------------------------------------------
# neutrally stable


def _sgn(value: Scalar) -> int:
    return (value > 0) - (value < 0)


def check_gains_ns(model: NsModel, gains: GainParams, a_bar: Scalar) -> bool:
    """Gate |alpha| <= sgn(a) (beta - a/a_bar)."""
    if a_bar <= 0:
        raise ValueError("a_bar must be positive")
    return abs(gains.alpha) <= _sgn(model.a) * (gains.beta - model.a / a_bar)


def init_states_ns(model: NsModel, p: Partition) -> list[AgentState]:
    """(1/(2a), -1/(2a)) on the even class, negated on the odd class."""
    even = AgentState(1 / (2 * model.a), -1 / (2 * model.a))
    return [even if i in p.s_even else -even for i in range(len(p.dist))]


def key_inequalities_ns(
    g: WeightedGraph, p: Partition, model: NsModel, gains: GainParams
) -> list[tuple[tuple[int, int], bool, bool]]:
    """Per cross edge: a_ij(alpha-beta)/a <= -1 and a_ij(-alpha-beta)/a <= -1."""
    out = []
    for i, j, w in p.cross_edges:
        first = w * (gains.alpha - gains.beta) / model.a <= -1
        second = w * (-gains.alpha - gains.beta) / model.a <= -1
        out.append(((i, j), first, second))
    return out


def synthesize_ns(
    g: WeightedGraph, model: NsModel, gains: GainParams, root: int = 0
) -> OrbitPlan:
    """Build the fixed period-4 orbit plan for the neutrally stable network."""
    p = make_partition(g, root)
    if not check_gains_ns(model, gains, p.a_bar):
        raise GainConditionError(
            f"gains (alpha={gains.alpha}, beta={gains.beta}) violate "
            f"|alpha| <= sgn(a)(beta - a/a_bar) with a={model.a}, a_bar={p.a_bar}"
        )
    checks = key_inequalities_ns(g, p, model, gains)
    bad = [edge for edge, first, second in checks if not (first and second)]
    if bad:
        raise GainConditionError(f"cross-edge key inequalities fail on {bad}")
    init = tuple(init_states_ns(model, p))
    return OrbitPlan(
        model="ns",
        a=model.a,
        gains=gains,
        partition=p,
        half_period=2,
        period=4,
        init=init,
        pattern=ns_pattern(),
    )
