"""Tier comparison reports and solution serialization.

Every tier's solution is compared with the exact-tier solution of the
same network.  Quantities are reported in MW and $/MW (p.u. values times
or divided by the system base).
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dispatch import DispatchSolution, LimitSource, assemble, ldf_allocation, relax_oversatisfaction, solve_dispatch
from .injections import HalfLine
from .line_functions import ApproxTier
from .network import Network
from .nlp import SolverOptions

CSV_SCHEMA_VERSION = 1
DISPATCH_EPSILON = 1e-6  # p.u.; entries above this count as dispatched

CSV_COLUMNS = (
    "schema_version",
    "case",
    "label",
    "tier",
    "allocation",
    "status",
    "objective",
    "cost_delta_vs_exact",
    "total_dispatch_mw",
    "dispatched_count",
    "l1_dispatch_delta_mw",
    "linf_dispatch_delta_mw",
    "lmp_mean",
    "lmp_min",
    "lmp_max",
    "max_normalized_lmp_delta",
    "max_abs_dtheta",
    "binding_windows",
    "iterations",
    "wall_time",
)


@dataclass(frozen=True)
class TierSpec:
    """One row of a comparison: a tier plus an optional LDF slack bus."""

    tier: ApproxTier
    ldf_slack: int | None = None

    @property
    def label(self) -> str:
        return self.tier.value if self.ldf_slack is None else f"{self.tier.value}_ldf"


@dataclass
class TierRow:
    label: str
    tier: str
    allocation: str
    status: str
    objective: float
    cost_delta_vs_exact: float
    total_dispatch_mw: float
    dispatched_count: int
    l1_dispatch_delta_mw: float
    linf_dispatch_delta_mw: float
    lmp_mean: float
    lmp_min: float
    lmp_max: float
    max_normalized_lmp_delta: float
    max_abs_dtheta: float
    binding_windows: int
    iterations: int
    wall_time: float


@dataclass
class ComparisonReport:
    case: str
    base_mva: float
    rows: list[TierRow] = field(default_factory=list)
    dispatch_epsilon: float = DISPATCH_EPSILON

    def row(self, label: str) -> TierRow:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            rec = {"schema_version": CSV_SCHEMA_VERSION, "case": self.case, **asdict(r)}
            writer.writerow({k: _csv_value(rec[k]) for k in CSV_COLUMNS})
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "schema_version": CSV_SCHEMA_VERSION,
            "case": self.case,
            "base_mva": self.base_mva,
            "dispatch_epsilon": self.dispatch_epsilon,
            "rows": [asdict(r) for r in self.rows],
        }
        return json.dumps(doc, indent=2, default=_json_default)

    def to_table(self) -> str:
        headers = ["tier", "C(P^)-C(P)", "1'P MW", "|P|_0", "|dP|_1", "|dP|_inf", "mean lmp", "min lmp",
                   "max lmp", "max dlmp", "|dth|_inf", "time s"]
        body = []
        for r in self.rows:
            body.append([
                r.label,
                f"{r.cost_delta_vs_exact:.4g}",
                f"{r.total_dispatch_mw:.2f}",
                str(r.dispatched_count),
                f"{r.l1_dispatch_delta_mw:.4g}",
                f"{r.linf_dispatch_delta_mw:.4g}",
                f"{r.lmp_mean:.4g}",
                f"{r.lmp_min:.4g}",
                f"{r.lmp_max:.4g}",
                f"{r.max_normalized_lmp_delta:.3g}",
                f"{r.max_abs_dtheta:.4f}",
                f"{r.wall_time:.3f}",
            ])
        return format_table(headers, body, title=f"{self.case} (base {self.base_mva:g} MVA)")


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def format_table(headers: list[str], rows: list[list[str]], title: str | None = None) -> str:
    widths = [max(len(h), *(len(r[k]) for r in rows)) if rows else len(h) for k, h in enumerate(headers)]
    line = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
    out = [title] if title else []
    out += [line, "-" * len(line)]
    out += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(out)


def true_cost(network: Network, P: np.ndarray) -> float:
    """Generation cost of a per-generator dispatch, independent of tier."""
    return float(sum(g.cost.value(float(p)) for g, p in zip(network.generators, P)))


def tier_row(label: str, sol: DispatchSolution, exact: DispatchSolution, eps: float = DISPATCH_EPSILON,
             wall_time: float | None = None) -> TierRow:
    net = sol.problem.network
    base = net.base_mva
    P_chk = sol.P_bus
    P_hat = exact.P_bus
    lam_chk = sol.lmp_per_mw
    lam_hat = exact.lmp_per_mw
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(lam_hat != 0, np.abs(lam_hat - lam_chk) / np.abs(lam_hat), np.nan)
    rel_max = float(np.nanmax(rel)) if np.any(np.isfinite(rel)) else math.nan
    alloc = sol.problem.model.allocation
    return TierRow(
        label=label,
        tier=sol.problem.tier.value,
        allocation="half_line" if isinstance(alloc, HalfLine) else "ldf",
        status=sol.status,
        objective=sol.objective,
        cost_delta_vs_exact=true_cost(net, exact.P) - true_cost(net, sol.P),
        total_dispatch_mw=float(P_chk.sum() * base),
        dispatched_count=int(np.sum(P_chk > eps)),
        l1_dispatch_delta_mw=float(np.abs(P_chk - P_hat).sum() * base),
        linf_dispatch_delta_mw=float(np.abs(P_chk - P_hat).max(initial=0.0) * base),
        lmp_mean=float(lam_chk.mean()),
        lmp_min=float(lam_chk.min()),
        lmp_max=float(lam_chk.max()),
        max_normalized_lmp_delta=rel_max,
        max_abs_dtheta=float(np.abs(sol.dtheta).max(initial=0.0)),
        binding_windows=len(sol.binding),
        iterations=sol.iterations,
        wall_time=sol.wall_time if wall_time is None else wall_time,
    )


def _solve_spec(network: Network, spec: TierSpec, limits, reference, relaxed, options, repeat):
    alloc = HalfLine() if spec.ldf_slack is None else ldf_allocation(network, spec.ldf_slack)
    problem = assemble(network, spec.tier, limits, reference, alloc)
    if relaxed:
        problem = relax_oversatisfaction(problem)
    times = []
    sol = None
    for _ in range(max(1, repeat)):
        sol = solve_dispatch(problem, options=options)
        times.append(sol.wall_time)
    return sol, statistics.fmean(times)


def compare_tiers(
    network: Network,
    specs: "list[TierSpec | ApproxTier | str]",
    *,
    limits: "LimitSource | str" = LimitSource.CURRENT,
    reference: int | None = None,
    relaxed: bool = False,
    options: SolverOptions | None = None,
    repeat: int = 1,
    jobs: int = 1,
    dispatch_epsilon: float = DISPATCH_EPSILON,
) -> ComparisonReport:
    """Solve every tier and report it against the exact tier.

    The exact tier is always solved (it is the comparison baseline) and
    appears as the first row.  Solves run on ``jobs`` worker threads; wall
    times are averaged over ``repeat`` solves.
    """
    specs = [s if isinstance(s, TierSpec) else TierSpec(ApproxTier.parse(s)) for s in specs]
    baseline = TierSpec(ApproxTier.EXACT)
    ordered = [baseline] + [s for s in specs if s != baseline]
    run = lambda s: _solve_spec(network, s, limits, reference, relaxed, options, repeat)  # noqa: E731
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, ordered))
    else:
        results = [run(s) for s in ordered]
    exact = results[0][0]
    report = ComparisonReport(network.name, network.base_mva, dispatch_epsilon=dispatch_epsilon)
    for spec, (sol, wall) in zip(ordered, results):
        report.rows.append(tier_row(spec.label, sol, exact, dispatch_epsilon, wall))
    return report


def solution_to_dict(sol: DispatchSolution) -> dict:
    net = sol.problem.network
    base = net.base_mva
    return {
        "case": net.name,
        "tier": sol.problem.tier.value,
        "reference_bus": sol.problem.reference,
        "relaxed": sol.problem.relaxed,
        "status": sol.status,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "wall_time": sol.wall_time,
        "kkt_residuals": {k: float(v) for k, v in sol.kkt_residuals.items()},
        "losses_mw": sol.losses * base,
        "degenerate": sol.degenerate,
        "generators": [
            {"bus": g.bus, "p_pu": float(p), "p_mw": float(p * base)} for g, p in zip(net.generators, sol.P)
        ],
        "buses": [
            {"id": b.id, "theta": float(th), "lmp_per_pu": float(lam), "lmp_per_mw": float(lam / base)}
            for b, th, lam in zip(net.buses, sol.theta, sol.lmp)
        ],
        "lines": [
            {"from": ln.from_bus, "to": ln.to_bus, "dtheta": float(d), "window_dual": float(y)}
            for ln, d, y in zip(net.lines, sol.dtheta, sol.window_duals)
        ],
        "binding": [{"line": k, "end": end, "source": src} for k, end, src in sol.binding],
    }


def solution_table(sol: DispatchSolution) -> str:
    net = sol.problem.network
    base = net.base_mva
    lines = [
        f"case {net.name or '?'}  tier {sol.problem.tier.value}  status {sol.status}  "
        f"iterations {sol.iterations}  time {sol.wall_time:.3f} s",
        f"objective {sol.objective:.6f} $/h   losses {sol.losses * base:.4f} MW",
        "",
    ]
    gen_rows = [[str(g.bus), f"{p:.7f}", f"{p * base:.4f}"] for g, p in zip(net.generators, sol.P)]
    lines.append(format_table(["gen bus", "P p.u.", "P MW"], gen_rows))
    lines.append("")
    bus_rows = [[str(b.id), f"{th:.6f}", f"{lam:.4f}", f"{lam / base:.6f}"] for b, th, lam in zip(net.buses, sol.theta, sol.lmp)]
    lines.append(format_table(["bus", "theta rad", "lmp $/p.u.", "lmp $/MW"], bus_rows))
    if sol.binding:
        lines.append("")
        lines.append("binding windows: " + ", ".join(f"line {k} {end} ({src})" for k, end, src in sol.binding))
    if sol.degenerate:
        lines.append("note: degenerate active set; LMPs may not be unique")
    return "\n".join(lines)


def solution_csv(sol: DispatchSolution) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["schema_version", "kind", "id", "value_pu", "value_mw"])
    base = sol.problem.network.base_mva
    for g, p in zip(sol.problem.network.generators, sol.P):
        writer.writerow([CSV_SCHEMA_VERSION, "dispatch", g.bus, repr(float(p)), repr(float(p * base))])
    for b, lam in zip(sol.problem.network.buses, sol.lmp):
        writer.writerow([CSV_SCHEMA_VERSION, "lmp", b.id, repr(float(lam)), repr(float(lam / base))])
    return buf.getvalue()
