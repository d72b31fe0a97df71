"""Agent models, saturation, the relative-state controller, and simulation.

Two agent models share the scalar saturated input channel:

* double integrator:    x' = x + v,  v' = v + sat(u)
* neutrally stable:     x' = v,      v' = -x + 2a v + sat(u),  -1 < a < 1, a != 0

The controller is diffusive: each agent feeds back weighted sums of
neighbor-relative positions and velocities, so it vanishes at consensus.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .graphs import WeightedGraph
from .scalars import FLOAT_TOL, Scalar, is_exact

#: bit-length cap on exact numerators/denominators before a run is aborted
MAX_EXACT_BITS = 1 << 20


class SimulationOverflowError(RuntimeError):
    """Exact-mode state grew beyond the resource cap."""


class NormalizationError(ValueError):
    """Pair cannot be brought to the canonical neutrally stable form."""


@dataclass(frozen=True)
class AgentState:
    x: Scalar
    v: Scalar

    def __neg__(self) -> "AgentState":
        return AgentState(-self.x, -self.v)


@dataclass(frozen=True)
class GainParams:
    alpha: Scalar
    beta: Scalar


@dataclass(frozen=True)
class NsModel:
    """Rotation parameter a with A = [[0,1],[-1,2a]], B = [0,1]^T."""

    a: Scalar

    def __post_init__(self) -> None:
        if not (-1 < self.a < 1) or self.a == 0:
            raise ValueError(f"rotation parameter must be in (-1,1)\\{{0}}, got {self.a}")


@dataclass(frozen=True)
class Trajectory:
    """States over steps+1 ticks plus raw and saturated inputs per step."""

    model: str  # "di" or "ns"
    a: Optional[Scalar]
    states: tuple[tuple[AgentState, ...], ...]
    raw_u: tuple[tuple[Scalar, ...], ...]
    sat_u: tuple[tuple[Scalar, ...], ...]

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    @property
    def n(self) -> int:
        return len(self.states[0])


def saturate(u: Scalar) -> Scalar:
    """sgn(u) * min(1, |u|)."""
    one = 1 if is_exact(u) else 1.0
    if u > one:
        return one
    if u < -one:
        return -one
    return u


def control_inputs(
    g: WeightedGraph, gains: GainParams, states: Sequence[AgentState]
) -> list[Scalar]:
    """u_i = alpha * sum a_ij (x_j - x_i) + beta * sum a_ij (v_j - v_i)."""
    if len(states) != g.n:
        raise ValueError(f"expected {g.n} agent states, got {len(states)}")
    out: list[Scalar] = []
    for i in range(g.n):
        acc_x = 0
        acc_v = 0
        for j in g.neighbors(i):
            w = g.weights[i][j]
            acc_x = acc_x + w * (states[j].x - states[i].x)
            acc_v = acc_v + w * (states[j].v - states[i].v)
        out.append(gains.alpha * acc_x + gains.beta * acc_v)
    return out


def step_di(s: AgentState, u_sat: Scalar) -> AgentState:
    return AgentState(s.x + s.v, s.v + u_sat)


def step_ns(s: AgentState, u_sat: Scalar, m: NsModel) -> AgentState:
    return AgentState(s.v, -s.x + 2 * m.a * s.v + u_sat)


def inverse_step_di(s: AgentState, u_sat: Scalar) -> AgentState:
    """Exact inverse of step_di given the applied saturated input."""
    v = s.v - u_sat
    return AgentState(s.x - v, v)


def inverse_step_ns(s: AgentState, u_sat: Scalar, m: NsModel) -> AgentState:
    v_prev = s.x
    return AgentState(2 * m.a * v_prev + u_sat - s.v, v_prev)


def _check_magnitude(value: Scalar) -> None:
    if isinstance(value, Fraction):
        if (
            value.numerator.bit_length() > MAX_EXACT_BITS
            or value.denominator.bit_length() > MAX_EXACT_BITS
        ):
            raise SimulationOverflowError(
                "exact state exceeded the resource cap "
                f"({MAX_EXACT_BITS} bits); rerun in float mode or fewer steps"
            )


def simulate(
    g: WeightedGraph,
    gains: GainParams,
    init: Sequence[AgentState],
    steps: int,
    ns: NsModel | None = None,
) -> Trajectory:
    """Roll the closed-loop network forward, recording raw and saturated inputs."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    states = [tuple(init)]
    raw_hist: list[tuple[Scalar, ...]] = []
    sat_hist: list[tuple[Scalar, ...]] = []
    current = tuple(init)
    for _ in range(steps):
        raw = control_inputs(g, gains, current)
        sat = [saturate(u) for u in raw]
        if ns is None:
            nxt = tuple(step_di(s, u) for s, u in zip(current, sat))
        else:
            nxt = tuple(step_ns(s, u, ns) for s, u in zip(current, sat))
        for s in nxt:
            _check_magnitude(s.x)
            _check_magnitude(s.v)
        raw_hist.append(tuple(raw))
        sat_hist.append(tuple(sat))
        states.append(nxt)
        current = nxt
    return Trajectory(
        model="di" if ns is None else "ns",
        a=None if ns is None else ns.a,
        states=tuple(states),
        raw_u=tuple(raw_hist),
        sat_u=tuple(sat_hist),
    )


def normalize_ns(
    A0: np.ndarray, B0: np.ndarray, tol: float = FLOAT_TOL
) -> tuple[NsModel, np.ndarray]:
    """Bring a controllable planar pair to the canonical form ([[0,1],[-1,2a]], [0,1]^T).

    Requires complex-conjugate eigenvalues on the unit circle, excluding
    +-1 and +-j.  Returns (model, T) with T^-1 A0 T and T^-1 B0 in canonical
    form; T is built from the controllability matrix, which pins the sign so
    that T^-1 B0 = [0,1]^T exactly.
    """
    A0 = np.asarray(A0, dtype=float)
    B0 = np.asarray(B0, dtype=float).reshape(2)
    if A0.shape != (2, 2):
        raise NormalizationError("system matrix must be 2x2")
    ctrb = np.column_stack([B0, A0 @ B0])
    scale = max(np.abs(ctrb).max(), 1.0)
    if abs(np.linalg.det(ctrb)) <= tol * scale**2:
        raise NormalizationError("pair is not controllable")
    det = float(np.linalg.det(A0))
    trace = float(np.trace(A0))
    if abs(det - 1.0) > 1e-6:
        raise NormalizationError(f"eigenvalues off the unit circle (det={det:.6g})")
    if abs(trace) >= 2.0 - 1e-6:
        raise NormalizationError(f"real eigenvalues at +-1 excluded (trace={trace:.6g})")
    if abs(trace) <= 1e-6:
        raise NormalizationError("eigenvalues at +-j excluded (trace ~ 0)")
    a = trace / 2.0
    # canonical controllability matrix of ([[0,1],[-1,2a]], [0,1]^T)
    ctrb_c = np.array([[0.0, 1.0], [1.0, 2.0 * a]])
    T = ctrb @ np.linalg.inv(ctrb_c)
    return NsModel(a), T
