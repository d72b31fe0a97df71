"""Command-line surface: partition, synthesize, simulate, verify.

Exit codes: 0 success, 1 usage or I/O error, 2 gain gate failure,
3 infeasible position system, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .dynamics import AgentState, GainParams, NsModel, Trajectory, simulate
from .graphs import (
    GraphFormatError,
    NotConnectedError,
    WeightedGraph,
    make_partition,
    parse_graph,
)
from .scalars import Scalar, format_scalar, parse_scalar
from .synthesis import (
    GainConditionError,
    InfeasibleConstraintsError,
    OrbitPlan,
    di_pattern,
    ns_pattern,
    position_constraints,
    synthesize_di,
    synthesize_ns,
)
from .verify import verification_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_GATE = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    model: str = "di"
    a: Optional[Scalar] = None
    alpha: Optional[Scalar] = None
    beta: Optional[Scalar] = None
    root: int = 1  # 1-based
    m_override: Optional[int] = None
    steps: Optional[int] = None
    base_position: Scalar = Fraction(0)
    anchor: Optional[int] = None  # 1-based
    mode: str = "exact"
    init_override: Optional[list[tuple[Scalar, Scalar]]] = None

    def validate(self) -> None:
        if self.model not in ("di", "ns"):
            raise CliError(f"unknown model {self.model!r}")
        if self.mode not in ("exact", "float"):
            raise CliError(f"unknown mode {self.mode!r}")
        if self.model == "ns":
            if self.a is None:
                raise CliError("model=ns requires the rotation parameter a")
        if self.alpha is None or self.beta is None:
            raise CliError("alpha and beta are required")


def _parse_init_list(text: str, mode: str) -> list[tuple[Scalar, Scalar]]:
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 2:
            raise CliError(f"bad init pair {chunk!r} (want 'x,v')")
        pairs.append((parse_scalar(parts[0], mode), parse_scalar(parts[1], mode)))
    return pairs


def load_config(path: str, mode_hint: str = "exact") -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    raw: dict[str, str] = {}
    if getattr(args, "config", None):
        raw = load_config(args.config)
    # flags win over config file entries
    for key in (
        "model",
        "a",
        "alpha",
        "beta",
        "root",
        "m",
        "steps",
        "base",
        "anchor",
        "mode",
        "init",
    ):
        flag = getattr(args, key, None)
        if flag is not None:
            raw[key] = str(flag)
    cfg.model = raw.get("model", cfg.model)
    cfg.mode = raw.get("mode", cfg.mode)
    try:
        if "a" in raw:
            cfg.a = parse_scalar(raw["a"], cfg.mode)
        if "alpha" in raw:
            cfg.alpha = parse_scalar(raw["alpha"], cfg.mode)
        if "beta" in raw:
            cfg.beta = parse_scalar(raw["beta"], cfg.mode)
        if "root" in raw:
            cfg.root = int(raw["root"])
        if "m" in raw:
            cfg.m_override = int(raw["m"])
        if "steps" in raw:
            cfg.steps = int(raw["steps"])
        if "base" in raw:
            cfg.base_position = parse_scalar(raw["base"], cfg.mode)
        if "anchor" in raw:
            cfg.anchor = int(raw["anchor"])
        if "init" in raw:
            cfg.init_override = _parse_init_list(raw["init"], cfg.mode)
    except ValueError as exc:
        raise CliError(f"bad config value: {exc}") from exc
    return cfg


def _load_graph(path: str, mode: str) -> WeightedGraph:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read graph {path}: {exc}") from exc
    try:
        return parse_graph(text, mode)
    except GraphFormatError as exc:
        raise CliError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# plan files


def plan_to_text(plan: OrbitPlan) -> str:
    lines = [
        f"model={plan.model}",
        f"alpha={format_scalar(plan.gains.alpha)}",
        f"beta={format_scalar(plan.gains.beta)}",
        f"root={plan.partition.root + 1}",
        f"m={plan.half_period}",
        f"T={plan.period}",
    ]
    if plan.model == "ns":
        lines.append(f"a={format_scalar(plan.a)}")
    for i, s in enumerate(plan.init):
        lines.append(f"agent {i + 1}: x={format_scalar(s.x)}, v={format_scalar(s.v)}")
    return "\n".join(lines) + "\n"


def plan_from_text(text: str, g: WeightedGraph, mode: str = "exact") -> OrbitPlan:
    meta: dict[str, str] = {}
    init: dict[int, AgentState] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("agent "):
            head, _, rest = line.partition(":")
            idx = int(head.split()[1])
            fields = dict(
                part.strip().split("=") for part in rest.split(",") if "=" in part
            )
            init[idx - 1] = AgentState(
                parse_scalar(fields["x"], mode), parse_scalar(fields["v"], mode)
            )
        elif "=" in line:
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
        else:
            raise CliError(f"plan line {lineno}: cannot parse {line!r}")
    try:
        model = meta["model"]
        gains = GainParams(parse_scalar(meta["alpha"], mode), parse_scalar(meta["beta"], mode))
        root = int(meta.get("root", "1")) - 1
        m = int(meta["m"])
        period = int(meta["T"])
    except KeyError as exc:
        raise CliError(f"plan file missing field {exc}") from exc
    a = parse_scalar(meta["a"], mode) if "a" in meta else None
    if sorted(init) != list(range(g.n)):
        raise CliError(f"plan does not cover all {g.n} agents")
    partition = make_partition(g, root)
    pattern = di_pattern(m) if model == "di" else ns_pattern()
    return OrbitPlan(
        model=model,
        a=a,
        gains=gains,
        partition=partition,
        half_period=m,
        period=period,
        init=tuple(init[i] for i in range(g.n)),
        pattern=pattern,
    )


# ---------------------------------------------------------------------------
# CSV trajectories

CSV_HEADER = "k,agent,x,v,u_raw,u_sat"


def trajectory_to_csv(t: Trajectory) -> str:
    lines = [CSV_HEADER]
    for k, row in enumerate(t.states):
        for i, s in enumerate(row):
            if k < t.steps:
                u_raw = format_scalar(t.raw_u[k][i])
                u_sat = format_scalar(t.sat_u[k][i])
            else:
                u_raw = u_sat = ""
            lines.append(
                f"{k},{i + 1},{format_scalar(s.x)},{format_scalar(s.v)},{u_raw},{u_sat}"
            )
    return "\n".join(lines) + "\n"


def trajectory_from_csv(text: str, model: str, a: Optional[Scalar], mode: str) -> Trajectory:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0].strip() != CSV_HEADER:
        raise CliError(f"CSV must start with header {CSV_HEADER!r}")
    states: dict[int, dict[int, AgentState]] = {}
    raw_u: dict[int, dict[int, Scalar]] = {}
    sat_u: dict[int, dict[int, Scalar]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 6:
            raise CliError(f"CSV line {lineno}: expected 6 fields")
        try:
            k, agent = int(parts[0]), int(parts[1]) - 1
            s = AgentState(parse_scalar(parts[2], mode), parse_scalar(parts[3], mode))
        except ValueError as exc:
            raise CliError(f"CSV line {lineno}: {exc}") from exc
        states.setdefault(k, {})[agent] = s
        if parts[4].strip():
            raw_u.setdefault(k, {})[agent] = parse_scalar(parts[4], mode)
            sat_u.setdefault(k, {})[agent] = parse_scalar(parts[5], mode)
    if not states:
        raise CliError("CSV contains no rows")
    ticks = sorted(states)
    n = len(states[ticks[0]])
    if ticks != list(range(len(ticks))):
        raise CliError("CSV steps are not contiguous from 0")
    steps = len(ticks) - 1

    def row(src: dict[int, dict[int, Scalar]], k: int) -> tuple:
        if sorted(src.get(k, {})) != list(range(n)):
            raise CliError(f"CSV step {k}: missing agents")
        return tuple(src[k][i] for i in range(n))

    return Trajectory(
        model=model,
        a=a,
        states=tuple(
            tuple(states[k][i] for i in range(n)) for k in ticks
        ),
        raw_u=tuple(row(raw_u, k) for k in range(steps)),
        sat_u=tuple(row(sat_u, k) for k in range(steps)),
    )


def _write_output(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def _fmt_set(agents) -> str:
    return "{" + ",".join(str(i + 1) for i in sorted(agents)) + "}"


def cmd_partition(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph, args.mode or "exact")
    root = (args.root or 1) - 1
    if not 0 <= root < g.n:
        raise CliError(f"root {root + 1} out of range 1..{g.n}")
    try:
        p = make_partition(g, root)
    except NotConnectedError as exc:
        raise CliError(str(exc)) from exc
    print(f"S_e = {_fmt_set(p.s_even)}")
    print(f"S_o = {_fmt_set(p.s_odd)}")
    print("distances:", " ".join(f"{i + 1}:{d}" for i, d in enumerate(p.dist)))
    print(
        "cross edges:",
        " ".join(f"({i + 1},{j + 1})w={format_scalar(w)}" for i, j, w in p.cross_edges),
    )
    print(
        "intra edges:",
        " ".join(f"({i + 1},{j + 1})w={format_scalar(w)}" for i, j, w in p.intra_edges)
        or "none",
    )
    print(f"a_bar = {format_scalar(p.a_bar)}")
    return EXIT_OK


def _synthesize(g: WeightedGraph, cfg: RunConfig) -> OrbitPlan:
    gains = GainParams(cfg.alpha, cfg.beta)
    try:
        if cfg.model == "di":
            return synthesize_di(
                g,
                gains,
                m_override=cfg.m_override,
                root=cfg.root - 1,
                base=cfg.base_position,
                anchor=None if cfg.anchor is None else cfg.anchor - 1,
            )
        return synthesize_ns(g, NsModel(cfg.a), gains, root=cfg.root - 1)
    except GainConditionError as exc:
        raise CliError(f"gain gate failed: {exc}", EXIT_GATE) from exc
    except InfeasibleConstraintsError as exc:
        raise CliError(f"infeasible position system: {exc}", EXIT_INFEASIBLE) from exc
    except NotConnectedError as exc:
        raise CliError(str(exc)) from exc


def cmd_synthesize(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    cfg.validate()
    g = _load_graph(args.graph, cfg.mode)
    plan = _synthesize(g, cfg)
    if plan.model == "di":
        _, intervals = position_constraints(
            g, plan.partition, plan.gains, plan.half_period
        )
        print(f"# m={plan.half_period} T={plan.period}", file=sys.stderr)
        for c in intervals:
            print(
                f"# {format_scalar(c.lower)} <= x_{c.i + 1}(0)-x_{c.j + 1}(0) "
                f"<= {format_scalar(c.upper)}",
                file=sys.stderr,
            )
    _write_output(plan_to_text(plan), args.output)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    g = _load_graph(args.graph, cfg.mode)
    if args.plan:
        try:
            plan = plan_from_text(Path(args.plan).read_text(), g, cfg.mode)
        except OSError as exc:
            raise CliError(f"cannot read plan {args.plan}: {exc}") from exc
        init = plan.init
        model, a, gains = plan.model, plan.a, plan.gains
        default_steps = 2 * plan.period
    else:
        cfg.validate()
        if cfg.init_override is None:
            raise CliError("simulate needs --plan or an init override")
        if len(cfg.init_override) != g.n:
            raise CliError(
                f"init override has {len(cfg.init_override)} agents, graph has {g.n}"
            )
        init = tuple(AgentState(x, v) for x, v in cfg.init_override)
        model, a, gains = cfg.model, cfg.a, GainParams(cfg.alpha, cfg.beta)
        default_steps = cfg.steps or 0
    steps = cfg.steps if cfg.steps is not None else default_steps
    ns = None if model == "di" else NsModel(a)
    t = simulate(g, gains, init, steps, ns=ns)
    _write_output(trajectory_to_csv(t), args.output)
    return EXIT_OK


def _trajectory_consistent(
    t: Trajectory, g: WeightedGraph, gains: GainParams, tol: float
) -> Optional[dict]:
    """Recompute the trajectory from its own first state; report first mismatch."""
    ns = None if t.model == "di" else NsModel(t.a)
    resim = simulate(g, gains, t.states[0], t.steps, ns=ns)
    from .verify import _states_equal  # shared equality helper

    for k in range(t.steps + 1):
        if not _states_equal(resim.states[k], t.states[k], tol):
            for i in range(t.n):
                if not _states_equal([resim.states[k][i]], [t.states[k][i]], tol):
                    return {"step": k, "agent": i + 1}
    return None


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    g = _load_graph(args.graph, cfg.mode)
    try:
        plan = plan_from_text(Path(args.plan).read_text(), g, cfg.mode)
    except OSError as exc:
        raise CliError(f"cannot read plan {args.plan}: {exc}") from exc
    report: dict = {}
    if args.csv:
        try:
            t = trajectory_from_csv(
                Path(args.csv).read_text(), plan.model, plan.a, cfg.mode
            )
        except OSError as exc:
            raise CliError(f"cannot read trajectory {args.csv}: {exc}") from exc
        mismatch = _trajectory_consistent(t, g, plan.gains, 1e-9)
        report["consistency"] = mismatch is None
        if mismatch is not None:
            report["consistency_first_mismatch"] = mismatch
        if t.steps < plan.period:
            raise CliError(
                f"trajectory covers {t.steps} steps, need {plan.period}"
            )
    else:
        ns = None if plan.model == "di" else NsModel(plan.a)
        t = simulate(g, plan.gains, plan.init, 2 * plan.period, ns=ns)
        report["consistency"] = True
    report.update(verification_report(g, plan, t))
    report["ok"] = report["ok"] and report["consistency"]
    print(json.dumps(report, indent=2, default=str))
    return EXIT_OK if report["ok"] else EXIT_VERIFY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satorbits",
        description="Synthesize, simulate, and verify periodic orbits of "
        "saturated multi-agent networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config: bool = True) -> None:
        p.add_argument("graph", help="edge-list graph file")
        p.add_argument("--mode", choices=["exact", "float"], default=None)
        p.add_argument("--root", type=int, default=None, help="root agent (1-based)")
        if config:
            p.add_argument("--config", help="key=value run configuration file")
            p.add_argument("--model", choices=["di", "ns"], default=None)
            p.add_argument("--a", default=None, help="rotation parameter (ns model)")
            p.add_argument("--alpha", default=None)
            p.add_argument("--beta", default=None)

    p = sub.add_parser("partition", help="print the even/odd distance partition")
    common(p, config=False)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("synthesize", help="construct a periodic orbit plan")
    common(p)
    p.add_argument("--m", type=int, default=None, help="half-period override (di)")
    p.add_argument("--base", default=None, help="anchored base position")
    p.add_argument("--anchor", type=int, default=None, help="anchored agent (1-based)")
    p.add_argument("-o", "--output", default=None, help="plan file (default stdout)")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="roll a plan or init forward, emit CSV")
    common(p)
    p.add_argument("--plan", default=None, help="plan file from 'synthesize'")
    p.add_argument("--init", default=None, help="init override 'x1,v1; x2,v2; ...'")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("-o", "--output", default=None, help="CSV file (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check periodicity, pattern, and closed forms")
    common(p)
    p.add_argument("--plan", required=True, help="plan file from 'synthesize'")
    p.add_argument("--csv", default=None, help="trajectory CSV to check instead of resimulating")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
