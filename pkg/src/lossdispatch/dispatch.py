"""Economic dispatch with marginal losses.

The problem is posed over generator outputs ``P`` and reduced bus angles
``theta_dot`` (the reference bus angle is fixed to zero)::

    min  sum_g C_g(P_g)
    s.t. T(A_dot theta_dot) - C_g P + D = 0        (one row per bus)
         lower_l <= (A_dot theta_dot)_l <= upper_l  (one row per line)
         p_min <= P <= p_max

The balance rows use the multiplier convention ``L = f + lambda.c`` so the
multiplier of bus k's row is directly its locational marginal price, the
sensitivity of the optimal cost to demand at k.  Piecewise-linear costs
are handled with one epigraph variable per generator.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .injections import LDF, Allocation, HalfLine, InjectionModel
from .line_functions import ApproxTier, LineFunctionSet, Side
from .line_limits import AngleWindow, feasibility_window, line_window, mva_rating_to_current_limit
from .network import (
    Network,
    NetworkError,
    PiecewiseLinearCost,
    QuadraticCost,
    build_incidence,
    expand_angles,
    reduce_angles,
)
from .nlp import NlpResult, NlpSpec, SolverError, SolverOptions, solve_nlp

log = logging.getLogger(__name__)

ACTIVE_TOL = 1e-6


class InfeasibleProblem(NetworkError):
    """The problem is infeasible by a cheap necessary check."""


class LimitSource(str, enum.Enum):
    CURRENT = "current"  # MVA rating read as a current magnitude limit
    FLOW = "flow"  # MVA rating read as a mid-line real power limit
    NONE = "none"


@dataclass(frozen=True)
class CurrentConstraint:
    """Explicit nonlinear squared-current limit on one line end."""

    line: int
    side: Side
    limit: float


@dataclass(frozen=True)
class DispatchProblem:
    network: Network
    model: InjectionModel
    windows: tuple[AngleWindow, ...]
    reference: int
    relaxed: bool = False
    current_constraints: tuple[CurrentConstraint, ...] = ()
    demand: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.demand is None:
            object.__setattr__(self, "demand", self.network.demand())

    @property
    def tier(self) -> ApproxTier:
        return self.model.functions.tier

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def m(self) -> int:
        return self.network.m

    @property
    def n_gen(self) -> int:
        return len(self.network.generators)

    @property
    def pwl_generators(self) -> list[int]:
        return [k for k, g in enumerate(self.network.generators) if isinstance(g.cost, PiecewiseLinearCost)]

    @property
    def n_vars(self) -> int:
        return self.n_gen + (self.n - 1) + len(self.pwl_generators)

    @property
    def n_balance(self) -> int:
        return self.n

    def with_demand(self, demand: Sequence[float]) -> "DispatchProblem":
        return dataclasses.replace(self, demand=np.asarray(demand, dtype=float).copy())

    def generator_bus_matrix(self) -> sp.csr_matrix:
        """n x n_gen map from generator outputs to nodal injections."""
        rows = [self.network.bus_index(g.bus) for g in self.network.generators]
        return sp.csr_matrix((np.ones(self.n_gen), (rows, np.arange(self.n_gen))), shape=(self.n, self.n_gen))


@dataclass
class DispatchSolution:
    problem: DispatchProblem
    P: np.ndarray  # per generator, p.u.
    theta_dot: np.ndarray
    lmp: np.ndarray  # $/p.u. per bus
    generator_duals: np.ndarray  # z_lower - z_upper per generator
    window_duals: np.ndarray  # per line; > 0 when the upper end binds
    objective: float
    kkt_residuals: dict[str, float]
    status: str
    iterations: int
    wall_time: float
    binding: list[tuple[int, str, str]] = field(default_factory=list)  # (line, end, source)
    degenerate: bool = False
    nlp: NlpResult | None = None

    @property
    def theta(self) -> np.ndarray:
        return expand_angles(self.theta_dot, self.problem.model.incidence.reference_index)

    @property
    def dtheta(self) -> np.ndarray:
        return self.problem.model.incidence.A_dot @ self.theta_dot

    @property
    def P_bus(self) -> np.ndarray:
        return self.problem.generator_bus_matrix() @ self.P

    @property
    def lmp_per_mw(self) -> np.ndarray:
        return self.lmp / self.problem.network.base_mva

    @property
    def losses(self) -> float:
        return float(self.problem.model.functions.loss(self.dtheta).sum())

    @property
    def congested(self) -> bool:
        return bool(self.binding)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _line_windows(network: Network, fs: LineFunctionSet, limits: LimitSource, use_rating_windows: bool) -> list[AngleWindow]:
    windows = []
    for k, ln in enumerate(network.lines):
        fk = fs.line(k)
        current = flow = None
        if ln.rating is not None and use_rating_windows:
            if limits is LimitSource.CURRENT:
                current = (
                    mva_rating_to_current_limit(ln.rating, network.base_mva, fk.v_from),
                    mva_rating_to_current_limit(ln.rating, network.base_mva, fk.v_to),
                )
            elif limits is LimitSource.FLOW:
                flow = ln.rating / network.base_mva
        bounds = None
        if ln.angle_min is not None or ln.angle_max is not None:
            bounds = (ln.angle_min, ln.angle_max)
        windows.append(line_window(fk, current_sq_limit=current, flow_limit=flow, angle_bounds=bounds, clip=True))
    return windows


def assemble(
    network: Network,
    tier: "ApproxTier | str" = ApproxTier.EXACT,
    limits: "LimitSource | str" = LimitSource.CURRENT,
    reference: int | None = None,
    allocation: Allocation = HalfLine(),
    explicit_current: bool = False,
) -> DispatchProblem:
    """Build the dispatch problem for ``network`` at approximation ``tier``.

    With ``explicit_current`` the MVA ratings are kept as nonlinear
    squared-current constraints instead of being converted to angle
    windows (only meaningful with ``limits="current"``).
    """
    if not network.generators:
        raise InfeasibleProblem("network has no generators")
    limits = LimitSource(limits)
    incidence = build_incidence(network, reference)
    fs = LineFunctionSet.for_network(network, tier)
    model = InjectionModel(incidence, fs, allocation)
    capacity = sum(g.p_max for g in network.generators)
    if capacity < network.demand().sum():
        raise InfeasibleProblem(f"total capacity {capacity} below total demand {network.demand().sum()}")

    explicit = explicit_current and limits is LimitSource.CURRENT
    windows = _line_windows(network, fs, limits, use_rating_windows=not explicit)
    constraints = []
    if explicit:
        for k, ln in enumerate(network.lines):
            if ln.rating is None:
                continue
            fk = fs.line(k)
            for side, v in ((Side.FROM, fk.v_from), (Side.TO, fk.v_to)):
                constraints.append(CurrentConstraint(k, side, mva_rating_to_current_limit(ln.rating, network.base_mva, v)))
    return DispatchProblem(network, model, tuple(windows), incidence.reference, current_constraints=tuple(constraints))


def relax_oversatisfaction(problem: DispatchProblem) -> DispatchProblem:
    """Allow delivered power to exceed demand: ``T - P + D <= 0``."""
    return dataclasses.replace(problem, relaxed=True)


class _Layout:
    """Index bookkeeping for the NLP variable and row vectors."""

    def __init__(self, problem: DispatchProblem):
        self.ng = problem.n_gen
        self.na = problem.n - 1
        self.pwl = problem.pwl_generators
        self.nt = len(self.pwl)
        self.p = slice(0, self.ng)
        self.a = slice(self.ng, self.ng + self.na)
        self.t = slice(self.ng + self.na, self.ng + self.na + self.nt)
        self.segments = [problem.network.generators[k].cost.segments() for k in self.pwl]
        self.n_seg = sum(len(s) for s in self.segments)
        n, m = problem.n, problem.m
        self.bal = slice(0, n)
        self.win = slice(n, n + m)
        nc = len(problem.current_constraints)
        self.cur = slice(n + m, n + m + nc)
        self.epi = slice(n + m + nc, n + m + nc + self.n_seg)
        self.rows = n + m + nc + self.n_seg


def _build_nlp(problem: DispatchProblem) -> tuple[NlpSpec, _Layout]:
    lay = _Layout(problem)
    net = problem.network
    model = problem.model
    fs = model.functions
    A_dot = model.incidence.A_dot.tocsr()
    Cg = problem.generator_bus_matrix()
    gens = net.generators
    quad = [k for k, g in enumerate(gens) if isinstance(g.cost, QuadraticCost)]
    c2 = np.zeros(lay.ng)
    c1 = np.zeros(lay.ng)
    c0 = 0.0
    for k in quad:
        c2[k], c1[k] = gens[k].cost.c2, gens[k].cost.c1
        c0 += gens[k].cost.c0
    cur = problem.current_constraints
    cur_lines = np.array([cc.line for cc in cur], dtype=int)
    cur_from = np.array([cc.side is Side.FROM for cc in cur], dtype=bool)
    # epigraph rows: slope * P_g + intercept - t <= 0
    epi_gen, epi_t, epi_slope, epi_icpt = [], [], [], []
    for j, (k, segs) in enumerate(zip(lay.pwl, lay.segments)):
        for s, icpt in segs:
            epi_gen.append(k)
            epi_t.append(j)
            epi_slope.append(s)
            epi_icpt.append(icpt)
    epi_gen = np.array(epi_gen, dtype=int)
    epi_t = np.array(epi_t, dtype=int)
    epi_slope = np.array(epi_slope)
    epi_icpt = np.array(epi_icpt)
    demand = np.asarray(problem.demand, dtype=float)

    def split(x):
        return x[lay.p], x[lay.a], x[lay.t]

    def objective(x):
        P, _, t = split(x)
        return float(c2 @ (P * P) + c1 @ P + c0 + t.sum())

    def gradient(x):
        P, _, _ = split(x)
        g = np.zeros_like(x)
        g[lay.p] = 2.0 * c2 * P + c1
        g[lay.t] = 1.0
        return g

    def cur_values(dth, fn):
        out = np.empty(len(cur))
        for side, mask in ((Side.FROM, cur_from), (Side.TO, ~cur_from)):
            if mask.any():
                lines = cur_lines[mask]
                out[mask] = getattr(fs, fn)(dth, side)[lines]
        return out

    def constraints(x):
        P, th, t = split(x)
        dth = A_dot @ th
        c = np.empty(lay.rows)
        c[lay.bal] = model.injections(dth) - Cg @ P
        c[lay.win] = dth
        if cur:
            c[lay.cur] = cur_values(dth, "current_sq")
        if lay.n_seg:
            c[lay.epi] = epi_slope * P[epi_gen] + epi_icpt - t[epi_t]
        return c

    def jacobian(x):
        _, th, _ = split(x)
        dth = A_dot @ th
        blocks = [[-Cg, model.jacobian(dth) @ A_dot, None]]
        blocks.append([None, A_dot, None])
        if cur:
            d1 = cur_values(dth, "current_sq_d1")
            rows = sp.csr_matrix((d1, (np.arange(len(cur)), cur_lines)), shape=(len(cur), problem.m))
            blocks.append([None, rows @ A_dot, None])
        if lay.n_seg:
            rows = np.arange(lay.n_seg)
            blocks.append([
                sp.csr_matrix((epi_slope, (rows, epi_gen)), shape=(lay.n_seg, lay.ng)),
                None,
                sp.csr_matrix((-np.ones(lay.n_seg), (rows, epi_t)), shape=(lay.n_seg, lay.nt)),
            ])
        widths = [lay.ng, lay.na, lay.nt]
        # bmat wants a known shape in every block column
        for row in blocks:
            h = next(b.shape[0] for b in row if b is not None)
            for col, b in enumerate(row):
                if b is None:
                    row[col] = sp.csr_matrix((h, widths[col]))
        return sp.bmat(blocks, format="csr")

    def hessian(x, obj_factor, y):
        _, th, _ = split(x)
        dth = A_dot @ th
        curv = model.weighted_curvature(dth, y[lay.bal])
        if cur:
            d2 = cur_values(dth, "current_sq_d2")
            curv = curv + np.bincount(cur_lines, weights=y[lay.cur] * d2, minlength=problem.m)
        Hth = (A_dot.T @ sp.diags(curv) @ A_dot).tocsr()
        Hp = sp.diags(obj_factor * 2.0 * c2)
        return sp.block_diag([Hp, Hth, sp.csr_matrix((lay.nt, lay.nt))], format="csr")

    x_lower = np.concatenate([[g.p_min for g in gens], np.full(lay.na + lay.nt, -np.inf)])
    x_upper = np.concatenate([[g.p_max for g in gens], np.full(lay.na + lay.nt, np.inf)])
    lo = np.empty(lay.rows)
    hi = np.empty(lay.rows)
    hi[lay.bal] = -demand
    lo[lay.bal] = -np.inf if problem.relaxed else -demand
    lo[lay.win] = [w.lower for w in problem.windows]
    hi[lay.win] = [w.upper for w in problem.windows]
    lo[lay.cur] = -np.inf
    hi[lay.cur] = [cc.limit for cc in cur]
    lo[lay.epi] = -np.inf
    hi[lay.epi] = 0.0
    spec = NlpSpec(lay.ng + lay.na + lay.nt, objective, gradient, constraints, jacobian, hessian, x_lower, x_upper, lo, hi)
    return spec, lay


def initial_point(problem: DispatchProblem) -> np.ndarray:
    """Angles zero; total demand shared across generators in proportion to capacity."""
    lay = _Layout(problem)
    gens = problem.network.generators
    pmin = np.array([g.p_min for g in gens])
    pmax = np.array([g.p_max for g in gens])
    total = float(np.sum(problem.demand))
    cap = np.maximum(pmax, 0.0)
    share = total * cap / cap.sum() if cap.sum() > 0 else np.full(len(gens), total / len(gens))
    x = np.zeros(problem.n_vars)
    x[lay.p] = np.clip(share, pmin, pmax)
    for j, k in enumerate(lay.pwl):
        x[lay.t.start + j] = gens[k].cost.value(x[k]) + 1.0
    return x


def _lossless_warm_start(problem: DispatchProblem, options: SolverOptions | None) -> np.ndarray:
    dc = LineFunctionSet.for_network(problem.network, ApproxTier.DC)
    dc = dataclasses.replace(dc, g=np.zeros_like(dc.g))
    model = dataclasses.replace(problem.model, functions=dc)
    windows = tuple(w.intersect(feasibility_window(dc.line(k))) for k, w in enumerate(problem.windows))
    warm = dataclasses.replace(problem, model=model, windows=windows, current_constraints=(), relaxed=False)
    try:
        sol = solve_dispatch(warm, init=None, options=options)
    except SolverError:
        log.info("lossless warm start failed; using the default initial point")
        return initial_point(problem)
    return _solution_vector(problem, sol)


def _solution_vector(problem: DispatchProblem, sol: DispatchSolution) -> np.ndarray:
    lay = _Layout(problem)
    x = initial_point(problem)
    x[lay.p] = sol.P
    x[lay.a] = reduce_angles(sol.theta, problem.model.incidence.reference_index)
    for j, k in enumerate(lay.pwl):
        x[lay.t.start + j] = problem.network.generators[k].cost.value(sol.P[k])
    return x


def solve_dispatch(
    problem: DispatchProblem,
    init: "np.ndarray | DispatchSolution | str | None" = None,
    options: SolverOptions | None = None,
) -> DispatchSolution:
    """Solve ``problem``.

    ``init`` may be a full NLP start vector, a previous solution, the string
    ``"dc"`` for a lossless DC warm start, or ``None`` for the default
    initial point.  Solver failures propagate as :class:`SolverError`.
    """
    start = time.perf_counter()
    spec, lay = _build_nlp(problem)
    if init is None:
        x0 = initial_point(problem)
    elif isinstance(init, str):
        if init != "dc":
            raise ValueError(f"unknown warm start {init!r}")
        x0 = _lossless_warm_start(problem, options)
    elif isinstance(init, DispatchSolution):
        x0 = _solution_vector(problem, init)
    else:
        x0 = np.asarray(init, dtype=float)
    res = solve_nlp(spec, x0, options)
    sol = _extract(problem, lay, res)
    sol.wall_time = time.perf_counter() - start
    return sol


def _extract(problem: DispatchProblem, lay: _Layout, res: NlpResult) -> DispatchSolution:
    P = res.x[lay.p].copy()
    th = res.x[lay.a].copy()
    y = res.y
    lmp = y[lay.bal].copy()
    gen_duals = res.z_lower[lay.p] - res.z_upper[lay.p]
    win_duals = y[lay.win].copy()
    dth = problem.model.incidence.A_dot @ th

    scale = max(1.0, np.abs(lmp).max(initial=0.0))
    dual_tol = ACTIVE_TOL * scale
    binding = []
    weak = 0
    n_active = 0
    for k, w in enumerate(problem.windows):
        for end, bound, src, sign in (("lower", w.lower, w.lower_source, -1.0), ("upper", w.upper, w.upper_source, 1.0)):
            if abs(dth[k] - bound) <= ACTIVE_TOL * max(1.0, abs(bound)):
                n_active += 1
                if sign * win_duals[k] > dual_tol:
                    binding.append((k, end, src))
                else:
                    weak += 1
    for j, cc in enumerate(problem.current_constraints):
        val = res.constraint_values[lay.cur.start + j]
        if abs(val - cc.limit) <= ACTIVE_TOL * max(1.0, cc.limit):
            n_active += 1
            if y[lay.cur.start + j] > dual_tol:
                binding.append((cc.line, cc.side.value, "current_explicit"))
            else:
                weak += 1
    gens = problem.network.generators
    for k, g in enumerate(gens):
        for bound in (g.p_min, g.p_max):
            if abs(P[k] - bound) <= ACTIVE_TOL * max(1.0, abs(bound)):
                n_active += 1
                if abs(gen_duals[k]) <= dual_tol:
                    weak += 1
    epi = res.constraint_values[lay.epi]
    y_epi = y[lay.epi]
    for val, dual in zip(epi, y_epi):
        if abs(val) <= ACTIVE_TOL * scale:
            n_active += 1
            if dual <= dual_tol:
                weak += 1
    if problem.relaxed:
        bal = res.constraint_values[lay.bal] + problem.demand
        for val, dual in zip(bal, lmp):
            if abs(val) <= ACTIVE_TOL:
                n_active += 1
                if dual <= dual_tol:
                    weak += 1
    else:
        n_active += problem.n
    degenerate = weak > 0 or n_active > problem.n_vars
    return DispatchSolution(
        problem=problem,
        P=P,
        theta_dot=th,
        lmp=lmp,
        generator_duals=gen_duals,
        window_duals=win_duals,
        objective=res.objective,
        kkt_residuals=dict(res.raw_residuals),
        status=res.status,
        iterations=res.iterations,
        wall_time=res.wall_time,
        binding=binding,
        degenerate=degenerate,
        nlp=res,
    )


def lmp_check(
    problem: DispatchProblem,
    solution: DispatchSolution,
    bus: int,
    h: float = 1e-3,
    options: SolverOptions | None = None,
) -> float:
    """Central finite-difference estimate of d C* / d D_bus."""
    k = problem.network.bus_index(bus)
    costs = []
    for sign in (1.0, -1.0):
        demand = np.array(problem.demand, dtype=float)
        demand[k] += sign * h
        perturbed = problem.with_demand(demand)
        costs.append(solve_dispatch(perturbed, init=solution, options=options).objective)
    return (costs[0] - costs[1]) / (2.0 * h)


@dataclass
class InvarianceReport:
    reference_a: int
    reference_b: int
    objective_a: float
    objective_b: float
    dispatch_gap: float  # max |P - P'| over generators, p.u.
    objective_gap: float
    mapped_angle_gap: float  # max |A_dot theta_dot - A_ddot theta_ddot|
    mapped_residual: float  # constraint violation of the mapped point in problem b
    tol: float

    @property
    def passed(self) -> bool:
        return (
            self.dispatch_gap <= self.tol
            and self.objective_gap <= self.tol * max(1.0, abs(self.objective_a))
            and self.mapped_angle_gap <= self.tol
            and self.mapped_residual <= self.tol
        )


def verify_reference_invariance(
    network: Network,
    tier: "ApproxTier | str",
    ref_a: int,
    ref_b: int,
    *,
    limits: "LimitSource | str" = LimitSource.CURRENT,
    relaxed: bool = False,
    tol: float = 1e-6,
    options: SolverOptions | None = None,
) -> InvarianceReport:
    """Solve with two reference buses and compare, and map the first
    solution's angles into the second problem's coordinates."""
    probs = [assemble(network, tier, limits, ref) for ref in (ref_a, ref_b)]
    if relaxed:
        probs = [relax_oversatisfaction(p) for p in probs]
    sol_a, sol_b = (solve_dispatch(p, options=options) for p in probs)
    pb = probs[1]
    theta_b = reduce_angles(sol_a.theta, pb.model.incidence.reference_index)
    angle_gap = float(np.abs(pb.model.incidence.A_dot @ theta_b - sol_a.dtheta).max(initial=0.0))
    spec, lay = _build_nlp(pb)
    x = _solution_vector(pb, sol_a)
    x[lay.a] = theta_b
    c = spec.constraints(x)
    viol = np.maximum(spec.c_lower - c, 0.0) + np.maximum(c - spec.c_upper, 0.0)
    return InvarianceReport(
        reference_a=ref_a,
        reference_b=ref_b,
        objective_a=sol_a.objective,
        objective_b=sol_b.objective,
        dispatch_gap=float(np.abs(sol_a.P - sol_b.P).max(initial=0.0)),
        objective_gap=abs(sol_a.objective - sol_b.objective),
        mapped_angle_gap=angle_gap,
        mapped_residual=float(viol.max(initial=0.0)),
        tol=tol,
    )


def ldf_allocation(network: Network, slack: int | None = None) -> LDF:
    """All losses to ``slack`` (default: the network's slack bus)."""
    bus = slack if slack is not None else network.slack_bus
    if bus is None:
        bus = network.buses[0].id
    return LDF.at_bus(network, bus)


__all__ = [
    "CurrentConstraint",
    "DispatchProblem",
    "DispatchSolution",
    "InfeasibleProblem",
    "InvarianceReport",
    "LimitSource",
    "assemble",
    "initial_point",
    "ldf_allocation",
    "lmp_check",
    "relax_oversatisfaction",
    "solve_dispatch",
    "verify_reference_invariance",
]
