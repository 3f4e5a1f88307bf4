"""Invariant and derivative checks on a network's line functions and dispatch.

Each check returns a :class:`CheckResult`; the suite never raises on a
failed property, only on unusable input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dispatch import assemble, lmp_check, solve_dispatch, verify_reference_invariance
from .injections import HalfLine, InjectionModel, LDF
from .line_functions import ApproxTier, LineFunctionSet, Side
from .network import Network, build_incidence
from .nlp import SolverError, SolverOptions

FD_STEP = 1e-6


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    waived: bool = False

    def line(self) -> str:
        tag = "WAIVED" if self.waived else ("PASS" if self.passed else "FAIL")
        return f"[{tag}] {self.name}: {self.detail}"


def relative_error(analytic, numeric) -> np.ndarray:
    """``|a - n| / max(1, |n|)``: relative for large values, absolute near zero."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    return np.abs(a - n) / np.maximum(1.0, np.abs(n))


def central_difference(fn, x, h: float = FD_STEP):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def sample_in_domain(fs: LineFunctionSet, rng: np.random.Generator, size: int, shrink: float = 0.98) -> np.ndarray:
    """Angle differences drawn inside each line's loss/current domains."""
    psi = np.broadcast_to(fs.psi, (len(fs),))
    phi = np.broadcast_to(fs.phi, (len(fs),))
    lo = np.maximum(-np.pi / 2 + psi, -np.pi / 2 - phi + psi)
    hi = np.minimum(np.pi / 2 + psi, np.pi / 2 - phi + psi)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) * shrink
    u = rng.uniform(-1.0, 1.0, size=(size, len(fs)))
    return mid + half * u


def fnd_identity_error(fs: LineFunctionSet, dtheta, d) -> float:
    """Largest relative violation of the two half-loss identities."""
    loss = fs.loss(dtheta)
    f_d = fs.series_flow(dtheta, d)
    f_1 = fs.series_flow(dtheta, 1.0)
    f_0 = fs.series_flow(dtheta, 0.0)
    e1 = np.abs(f_1 - (f_d + (1.0 - d) * loss))
    e2 = np.abs(-f_0 - (-f_d + d * loss))
    scale = np.maximum.reduce([np.abs(f_1), np.abs(f_0), np.abs(f_d), np.abs(loss), np.ones_like(loss)])
    return float(np.max(np.maximum(e1, e2) / scale))


def check_fnd(network: Network, rng, samples: int = 200) -> CheckResult:
    fs = LineFunctionSet.for_network(network, ApproxTier.EXACT)
    dth = sample_in_domain(fs, rng, samples)
    d = rng.uniform(0.0, 1.0, size=dth.shape)
    err = max(fnd_identity_error(fs, dth[k], d[k]) for k in range(samples))
    return CheckResult("fnd_identity", err <= 1e-12, f"max relative error {err:.2e}")


def check_symmetry(network: Network, tier, rng, samples: int = 200) -> CheckResult:
    fs = LineFunctionSet.for_network(network, tier)
    u = rng.uniform(0.0, np.pi / 2, size=(samples, len(fs)))
    worst = 0.0
    psi = fs.psi
    for side in (Side.FROM, Side.TO):
        c = fs.current_center(side)
        a, b = fs.current_sq(c + u, side), fs.current_sq(c - u, side)
        worst = max(worst, float(np.max(relative_error(a, b))))
    a, b = fs.loss(psi + u), fs.loss(psi - u)
    worst = max(worst, float(np.max(relative_error(a, b))))
    return CheckResult("symmetry", worst <= 1e-12, f"max relative asymmetry {worst:.2e}")


def check_convexity(network: Network, tier, rng, samples: int = 200) -> list[CheckResult]:
    fs = LineFunctionSet.for_network(network, tier)
    dth = sample_in_domain(fs, rng, samples)
    d2 = fs.loss_d2(dth)
    lossless = np.asarray(fs.g) == 0
    strict = d2[:, ~lossless] > 0
    out = [CheckResult("loss_convexity", bool(np.all(strict)), f"{int(np.sum(~strict))} non-positive curvature samples")]
    if np.any(lossless):
        out.append(CheckResult(
            "loss_strict_convexity_r0",
            True,
            f"{int(lossless.sum())} lossless lines; strict convexity not required",
            waived=True,
        ))
    f1 = fs.flow_d1(dth)
    sign_ok = np.all((f1 > 0) | (fs.flow_amplitude == 0), axis=0) | np.all(f1 < 0, axis=0)
    out.append(CheckResult("flow_monotonicity", bool(np.all(sign_ok)), f"{int(np.sum(~sign_ok))} lines change slope sign"))
    return out


def check_derivatives(network: Network, tier, rng, samples: int = 100, tol: float = 1e-6,
                      jacobian_samples: int = 20) -> CheckResult:
    fs = LineFunctionSet.for_network(network, tier)
    dth = sample_in_domain(fs, rng, samples)
    pairs = [
        (fs.loss, fs.loss_d1),
        (fs.loss_d1, fs.loss_d2),
        (fs.midline_flow, fs.flow_d1),
        (fs.flow_d1, fs.flow_d2),
    ]
    for side in (Side.FROM, Side.TO):
        pairs.append((lambda x, s=side: fs.current_sq(x, s), lambda x, s=side: fs.current_sq_d1(x, s)))
        pairs.append((lambda x, s=side: fs.current_sq_d1(x, s), lambda x, s=side: fs.current_sq_d2(x, s)))
    worst = 0.0
    for fn, deriv in pairs:
        worst = max(worst, float(np.max(relative_error(deriv(dth), central_difference(fn, dth)))))
    model = InjectionModel(build_incidence(network), fs)
    batch = dth[: min(samples, jacobian_samples)]
    J = np.stack([model.jacobian(row).toarray() for row in batch])
    for j in range(network.m):
        e = np.zeros(network.m)
        e[j] = FD_STEP
        fd = (model.injections(batch + e) - model.injections(batch - e)) / (2 * FD_STEP)
        worst = max(worst, float(np.max(relative_error(J[:, :, j], fd))))
    return CheckResult("derivatives", worst <= tol, f"max relative error {worst:.2e}")


def check_total_balance(network: Network, tier, rng, samples: int = 50) -> CheckResult:
    fs = LineFunctionSet.for_network(network, tier)
    inc = build_incidence(network)
    eta = rng.dirichlet(np.ones(network.n))
    worst = 0.0
    for alloc in (HalfLine(), LDF(eta / eta.sum())):
        model = InjectionModel(inc, fs, alloc)
        for dth in sample_in_domain(fs, rng, samples):
            total = model.injections(dth).sum()
            losses = fs.loss(dth).sum()
            worst = max(worst, abs(total - losses) / max(1.0, abs(losses)))
    return CheckResult("total_balance", worst <= 1e-12, f"max relative error {worst:.2e}")


def check_reference_invariance(network: Network, tier, options: SolverOptions | None = None) -> CheckResult:
    first = network.slack_bus if network.slack_bus is not None else network.buses[0].id
    other = next(b.id for b in reversed(network.buses) if b.id != first) if network.n > 1 else first
    try:
        rep = verify_reference_invariance(network, tier, first, other, options=options)
    except SolverError as exc:
        return CheckResult("reference_invariance", False, f"solver failed: {exc}")
    return CheckResult(
        "reference_invariance",
        rep.passed,
        f"refs {first}/{other}: |dP|_inf {rep.dispatch_gap:.2e}, |dC| {rep.objective_gap:.2e}, mapped residual {rep.mapped_residual:.2e}",
    )


def check_lmp_duality(network: Network, tier, buses: int = 3, h: float = 1e-3, tol: float = 1e-3,
                      options: SolverOptions | None = None) -> CheckResult:
    try:
        problem = assemble(network, tier)
        sol = solve_dispatch(problem, options=options)
    except SolverError as exc:
        return CheckResult("lmp_duality", False, f"solver failed: {exc}")
    if sol.degenerate:
        return CheckResult("lmp_duality", True, "degenerate active set; finite-difference check skipped", waived=True)
    worst = 0.0
    picks = [b.id for b in network.buses][:: max(1, network.n // buses)][:buses]
    for bus in picks:
        fd = lmp_check(problem, sol, bus, h, options)
        lam = sol.lmp[network.bus_index(bus)]
        worst = max(worst, abs(fd - lam) / max(abs(lam), 1e-12))
    return CheckResult("lmp_duality", worst <= tol, f"max relative gap {worst:.2e} on buses {picks}")


def run_all(network: Network, tier: "ApproxTier | str" = ApproxTier.EXACT, seed: int = 0,
            options: SolverOptions | None = None, solve: bool = True) -> list[CheckResult]:
    tier = ApproxTier.parse(tier)
    rng = np.random.default_rng(seed)
    results = [check_fnd(network, rng), check_symmetry(network, tier, rng)]
    results += check_convexity(network, tier, rng)
    results += [check_derivatives(network, tier, rng), check_total_balance(network, tier, rng)]
    if solve:
        results += [check_reference_invariance(network, tier, options), check_lmp_duality(network, tier, options=options)]
    return results

