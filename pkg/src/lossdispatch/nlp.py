"""Primal-dual interior-point method for smooth nonlinear programs.

Solves::

    min f(x)  s.t.  c_lower <= c(x) <= c_upper,  x_lower <= x <= x_upper

with caller-supplied gradient, constraint Jacobian and Hessian of the
Lagrangian.  Range rows are turned into equalities ``c(x) - s = 0`` with a
bounded slack ``s``; bounds are handled by a log barrier with a monotone
(Fiacco-McCormick) barrier schedule.  Newton steps come from the symmetric
indefinite KKT system with inertia-correcting regularization, globalized
by a fraction-to-boundary rule and backtracking on an l1 merit function.

Multipliers follow the convention ``L = f + y.c``, so a binding upper
range bound has ``y >= 0`` and a binding lower one ``y <= 0``.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Raised when the solver stops without a KKT point; ``result`` holds the last iterate."""

    def __init__(self, message: str, result: "NlpResult | None" = None):
        super().__init__(message)
        self.result = result


class MaxIterations(SolverError):
    pass


class NumericalFailure(SolverError):
    pass


class SingularKkt(NumericalFailure):
    pass


@dataclass
class NlpSpec:
    n: int
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    constraints: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], sp.spmatrix]
    # hessian(x, obj_factor, y) -> obj_factor * grad^2 f + sum_i y_i grad^2 c_i
    hessian: Callable[[np.ndarray, float, np.ndarray], sp.spmatrix]
    x_lower: np.ndarray
    x_upper: np.ndarray
    c_lower: np.ndarray
    c_upper: np.ndarray

    def __post_init__(self) -> None:
        for name in ("x_lower", "x_upper", "c_lower", "c_upper"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(-1))
        if self.x_lower.shape != (self.n,) or self.x_upper.shape != (self.n,):
            raise ValueError("variable bounds must have length n")
        if self.c_lower.shape != self.c_upper.shape:
            raise ValueError("constraint bounds differ in length")
        if np.any(self.x_lower > self.x_upper) or np.any(self.c_lower > self.c_upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def m(self) -> int:
        return self.c_lower.size


@dataclass(frozen=True)
class SolverOptions:
    tol_kkt: float = 1e-8
    max_iter: int = 200
    mu_init: float = 0.1
    mu_reduction: float = 0.2
    fraction_to_boundary: float = 0.995
    regularization_floor: float = 1e-20
    bound_push: float = 1e-2
    scale: bool = True
    # "auto" picks dense LDL^T below dense_threshold unknowns, sparse LU above
    linear_solver: str = "auto"
    dense_threshold: int = 1500
    log_path: str | None = None

    def __post_init__(self) -> None:
        positives = (self.tol_kkt, self.max_iter, self.mu_init, self.mu_reduction,
                     self.fraction_to_boundary, self.regularization_floor, self.bound_push)
        if any(v <= 0 for v in positives):
            raise ValueError("solver options must be positive")
        if not self.mu_reduction < 1 or not self.fraction_to_boundary < 1:
            raise ValueError("mu_reduction and fraction_to_boundary must be < 1")
        if self.linear_solver not in ("auto", "dense", "sparse"):
            raise ValueError("linear_solver must be auto, dense or sparse")


@dataclass
class NlpResult:
    x: np.ndarray
    y: np.ndarray
    z_lower: np.ndarray
    z_upper: np.ndarray
    objective: float
    status: str
    iterations: int
    wall_time: float
    kkt_residuals: dict[str, float]
    raw_residuals: dict[str, float]
    constraint_values: np.ndarray
    objective_scale: float = 1.0
    row_scale: np.ndarray | None = None
    regularizations: int = 0
    log: list[dict[str, float]] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


LOG_FIELDS = ("iter", "mu", "objective", "dual_inf", "primal_inf", "compl", "alpha_primal", "alpha_dual", "delta_w", "ls_trials")


def write_iteration_log(result: NlpResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_FIELDS)
        writer.writeheader()
        for row in result.log:
            writer.writerow({k: row[k] for k in LOG_FIELDS})


class _KktFactor:
    """Factorization of the KKT matrix with its inertia."""

    def __init__(self, K: sp.spmatrix, dense: bool, delta_c: float = 0.0):
        self.dim = K.shape[0]
        self.dense = dense
        self.reliable = True
        if dense:
            Kd = K.toarray()
            lu, ipiv, info = sla.lapack.dsytrf(Kd, lower=1)
            if info < 0:
                raise NumericalFailure(f"dsytrf argument error {info}")
            self._lu, self._ipiv = lu, ipiv
            tiny = 1e-14 * np.abs(Kd).max(initial=1.0)
            if delta_c > 0:
                # pivots of the -delta_c block can be far below the relative floor
                tiny = min(tiny, 0.5 * delta_c)
            self.pos, self.neg, self.zero = self._dense_inertia(lu, ipiv, tiny)
        else:
            Kc = sp.csc_matrix(K)
            try:
                self._lu = spla.splu(Kc, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                     options=dict(SymmetricMode=True))
            except RuntimeError:  # exactly singular
                self.pos, self.neg, self.zero = 0, 0, self.dim
                self._lu = None
                return
            d = self._lu.U.diagonal()
            # pivots of the -delta_c block are legitimately tiny; only exact zeros count
            self.zero = int(np.sum((d == 0) | ~np.isfinite(d)))
            self.pos = int(np.sum(d > 0))
            self.neg = int(np.sum(d < 0))
            # off-diagonal pivoting breaks the Sylvester argument
            self.reliable = bool(np.array_equal(self._lu.perm_r, self._lu.perm_c))

    @staticmethod
    def _dense_inertia(lu, ipiv, tiny):
        n = lu.shape[0]
        pos = neg = zero = 0
        k = 0
        while k < n:
            if ipiv[k] > 0 or k == n - 1:
                d = lu[k, k]
                eigs = (d,)
                k += 1
            else:
                block = np.array([[lu[k, k], lu[k + 1, k]], [lu[k + 1, k], lu[k + 1, k + 1]]])
                eigs = tuple(np.linalg.eigvalsh(block))
                k += 2
            for e in eigs:
                if abs(e) <= tiny:
                    zero += 1
                elif e > 0:
                    pos += 1
                else:
                    neg += 1
        return pos, neg, zero

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.dense:
            sol, info = sla.lapack.dsytrs(self._lu, self._ipiv, rhs, lower=1)
            if info != 0:
                raise NumericalFailure(f"dsytrs failed with info {info}")
            return sol
        return self._lu.solve(rhs)


def _as_csr(mat, shape) -> sp.csr_matrix:
    if sp.issparse(mat):
        out = mat.tocsr()
    else:
        out = sp.csr_matrix(np.asarray(mat, dtype=float).reshape(shape))
    if out.shape != shape:
        raise ValueError(f"callback returned shape {out.shape}, expected {shape}")
    return out


def solve_nlp(spec: NlpSpec, x0, options: SolverOptions | None = None) -> NlpResult:
    """Run the interior-point method from ``x0``.

    Returns the result on convergence; raises :class:`MaxIterations` or a
    :class:`NumericalFailure` subclass otherwise, with the final iterate
    attached as ``exc.result``.
    """
    opts = options or SolverOptions()
    start = time.perf_counter()
    n, m = spec.n, spec.m
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({n},)")

    eq = spec.c_lower == spec.c_upper
    ineq_rows = np.flatnonzero(~eq)
    n_s = ineq_rows.size
    nw = n + n_s

    # slack selector: column k of the slack block belongs to row ineq_rows[k]
    S = sp.csr_matrix((np.ones(n_s), (ineq_rows, np.arange(n_s))), shape=(m, n_s))

    lw = np.concatenate([spec.x_lower, spec.c_lower[ineq_rows]])
    uw = np.concatenate([spec.x_upper, spec.c_upper[ineq_rows]])
    fixed = lw == uw
    if np.any(fixed):
        relax = 1e-8 * np.maximum(1.0, np.abs(lw[fixed]))
        lw = lw.copy()
        uw = uw.copy()
        lw[fixed] -= relax
        uw[fixed] += relax
    has_l = np.isfinite(lw)
    has_u = np.isfinite(uw)
    il = np.flatnonzero(has_l)
    iu = np.flatnonzero(has_u)

    def push(v):
        v = v.copy()
        k1 = opts.bound_push
        width = uw - lw
        pl = np.where(has_l & has_u, np.minimum(k1 * np.maximum(1.0, np.abs(lw)), k1 * width), k1 * np.maximum(1.0, np.abs(lw)))
        pu = np.where(has_l & has_u, np.minimum(k1 * np.maximum(1.0, np.abs(uw)), k1 * width), k1 * np.maximum(1.0, np.abs(uw)))
        with np.errstate(invalid="ignore"):
            lo = np.where(has_l, lw + pl, -np.inf)
            hi = np.where(has_u, uw - pu, np.inf)
            mid = 0.5 * (lw + uw)
        both = has_l & has_u & (lo > hi)
        v = np.clip(v, lo, hi)
        v[both] = mid[both]
        return v

    x = push(np.concatenate([x0, np.zeros(n_s)]))[:n]
    c0 = np.asarray(spec.constraints(x), dtype=float)
    w = push(np.concatenate([x, c0[ineq_rows]]))

    # gradient-based scaling of objective and constraint rows at the start point
    if opts.scale:
        g0 = np.asarray(spec.gradient(w[:n]), dtype=float)
        gmax = np.abs(g0).max(initial=0.0)
        sf = min(1.0, 100.0 / gmax) if gmax > 0 else 1.0
        J0 = _as_csr(spec.jacobian(w[:n]), (m, n))
        row_max = np.zeros(m)
        if m:
            row_max = abs(J0).max(axis=1).toarray().ravel()
        sc = np.where(row_max > 100.0, 100.0 / np.where(row_max > 0, row_max, 1.0), 1.0)
    else:
        sf, sc = 1.0, np.ones(m)

    def evaluate(wv):
        xv = wv[:n]
        f = float(spec.objective(xv))
        g = np.asarray(spec.gradient(xv), dtype=float)
        c = np.asarray(spec.constraints(xv), dtype=float)
        if not (np.isfinite(f) and np.all(np.isfinite(g)) and np.all(np.isfinite(c))):
            raise NumericalFailure("non-finite function value")
        target = c.copy()
        target[eq] = c[eq] - spec.c_lower[eq]
        target[ineq_rows] = c[ineq_rows] - wv[n:]
        h = sc * target
        return f, g, c, h

    def jac_w(xv):
        J = _as_csr(spec.jacobian(xv), (m, n))
        return sp.diags(sc) @ sp.hstack([J, -S], format="csr")

    def barrier_terms(wv, mu):
        sl = wv[il] - lw[il]
        su = uw[iu] - wv[iu]
        return sl, su, -mu * (np.log(sl).sum() + np.log(su).sum())

    y = np.zeros(m)
    zl = np.zeros(nw)
    zu = np.zeros(nw)
    zl[il] = 1.0
    zu[iu] = 1.0
    mu = opts.mu_init
    mu_min = opts.tol_kkt / 10.0
    # (1 - tau) floor for fraction-to-boundary
    kappa_eps = 10.0
    kappa_sigma = 1e10
    s_max = 100.0
    nu = 1.0
    delta_w_last = 0.0
    regularizations = 0
    dense = opts.linear_solver == "dense" or (opts.linear_solver == "auto" and nw + m <= opts.dense_threshold)
    history: list[dict[str, float]] = []

    f, g, c, h = evaluate(w)
    status = "max_iterations"
    it = 0

    def errors(mu_val, g, J, h, wv):
        sl = wv[il] - lw[il]
        su = uw[iu] - wv[iu]
        grad_w = np.concatenate([sf * g, np.zeros(n_s)])
        rd = grad_w + J.T @ y - zl + zu
        nz = len(il) + len(iu)
        zsum = np.abs(zl).sum() + np.abs(zu).sum()
        s_d = max(s_max, (np.abs(y).sum() + zsum) / max(1, m + nz)) / s_max
        s_c = max(s_max, zsum / max(1, nz)) / s_max
        comp = 0.0
        if len(il):
            comp = max(comp, np.abs(sl * zl[il] - mu_val).max())
        if len(iu):
            comp = max(comp, np.abs(su * zu[iu] - mu_val).max())
        dual = np.abs(rd).max(initial=0.0) / s_d
        primal = np.abs(h).max(initial=0.0)
        return max(dual, primal, comp / s_c), dual, primal, comp / s_c

    def finish(status_str):
        xv = w[:n]
        y_orig = sc * y / sf
        zl_o = zl[:n] / sf
        zu_o = zu[:n] / sf
        J = _as_csr(spec.jacobian(xv), (m, n))
        g_raw = np.asarray(spec.gradient(xv), dtype=float)
        stat = g_raw + J.T @ y_orig - zl_o + zu_o
        c_raw = np.asarray(spec.constraints(xv), dtype=float)
        viol = np.maximum(spec.c_lower - c_raw, 0.0) + np.maximum(c_raw - spec.c_upper, 0.0)
        compl = 0.0
        for z, dist in ((zl_o, xv - spec.x_lower), (zu_o, spec.x_upper - xv)):
            mask = np.isfinite(dist)
            if mask.any():
                compl = max(compl, np.abs(z[mask] * dist[mask]).max())
        e_all, e_d, e_p, e_c = errors(0.0, g, jac_w(xv), h, w)
        res = NlpResult(
            x=xv.copy(),
            y=y_orig,
            z_lower=zl_o,
            z_upper=zu_o,
            objective=float(spec.objective(xv)),
            status=status_str,
            iterations=it,
            wall_time=time.perf_counter() - start,
            kkt_residuals={"stationarity": e_d, "primal": e_p, "complementarity": e_c},
            raw_residuals={
                "stationarity": float(np.abs(stat).max(initial=0.0)),
                "primal": float(viol.max(initial=0.0)),
                "complementarity": float(compl),
            },
            constraint_values=c_raw,
            objective_scale=sf,
            row_scale=sc,
            regularizations=regularizations,
            log=history,
        )
        if opts.log_path:
            write_iteration_log(res, opts.log_path)
        return res

    for it in range(opts.max_iter + 1):
        J = jac_w(w[:n])
        e0, e_d, e_p, e_c = errors(0.0, g, J, h, w)
        row = {"iter": it, "mu": mu, "objective": f, "dual_inf": e_d, "primal_inf": e_p, "compl": e_c}
        if e0 <= opts.tol_kkt:
            row.update(alpha_primal=0.0, alpha_dual=0.0, delta_w=0.0, ls_trials=0)
            history.append(row)
            status = "converged"
            break
        if it == opts.max_iter:
            row.update(alpha_primal=0.0, alpha_dual=0.0, delta_w=0.0, ls_trials=0)
            history.append(row)
            break
        while mu > mu_min and errors(mu, g, J, h, w)[0] <= kappa_eps * mu:
            mu = max(mu_min, opts.mu_reduction * mu)

        sl, su, _ = barrier_terms(w, mu)
        sigma = np.zeros(nw)
        sigma[il] += zl[il] / sl
        sigma[iu] += zu[iu] / su
        Hx = _as_csr(spec.hessian(w[:n], sf, sc * y), (n, n))
        W = sp.block_diag([Hx, sp.csr_matrix((n_s, n_s))], format="csr") if n_s else Hx
        grad_phi = np.concatenate([sf * g, np.zeros(n_s)])
        grad_phi[il] -= mu / sl
        grad_phi[iu] += mu / su
        rhs = -np.concatenate([grad_phi + J.T @ y, h])

        def factor(dw, dc):
            top = W + sp.diags(sigma + dw)
            if m == 0:
                return _KktFactor(top.tocsc(), dense)
            K = sp.bmat([[top, J.T], [J, -dc * sp.eye(m)]], format="csc")
            return _KktFactor(K, dense, dc)

        # the sparse path runs quasi-definite: diagonal pivots need delta_c > 0
        delta_c = 0.0 if dense else 1e-8 * mu**0.25
        delta_w = 0.0
        fac = factor(0.0, delta_c)
        if fac.zero or not fac.reliable:
            delta_c = 1e-8 * mu**0.25
            fac = factor(0.0, delta_c)

        def inertia_ok(fk):
            return fk.reliable and fk.zero == 0 and fk.pos == nw and fk.neg == m

        if not inertia_ok(fac):
            regularizations += 1
            delta_w = 1e-4 if delta_w_last == 0 else max(opts.regularization_floor, delta_w_last / 3.0)
            growth = 100.0 if delta_w_last == 0 else 8.0
            while True:
                fac = factor(delta_w, delta_c)
                if (fac.zero or not fac.reliable) and delta_c == 0.0:
                    delta_c = 1e-8 * mu**0.25
                    continue
                if inertia_ok(fac):
                    break
                delta_w *= growth
                if delta_w > 1e40:
                    status = "singular_kkt"
                    raise SingularKkt("could not correct KKT inertia", finish(status))
            delta_w_last = delta_w
            log.debug("iter %d: inertia correction delta_w=%.3g", it, delta_w)

        sol = fac.solve(rhs)
        if not np.all(np.isfinite(sol)):
            raise NumericalFailure("non-finite Newton step", finish("numerical_failure"))
        dw_, dy = sol[:nw], sol[nw:]
        dzl = np.zeros(nw)
        dzu = np.zeros(nw)
        dzl[il] = mu / sl - zl[il] - (zl[il] / sl) * dw_[il]
        dzu[iu] = mu / su - zu[iu] + (zu[iu] / su) * dw_[iu]

        tau = max(opts.fraction_to_boundary, 1.0 - mu)

        def max_step(vals, dirs):
            neg = dirs < 0
            if not np.any(neg):
                return 1.0
            return float(min(1.0, np.min(-tau * vals[neg] / dirs[neg])))

        alpha_p = min(max_step(sl, dw_[il]), max_step(su, -dw_[iu]))
        alpha_d = min(max_step(zl[il], dzl[il]), max_step(zu[iu], dzu[iu]))

        # l1 merit penalty update
        h1 = np.abs(h).sum()
        curv = float(dw_ @ ((W + sp.diags(sigma)) @ dw_))
        lin = float(grad_phi @ dw_)
        if h1 > 0:
            need = (lin + 0.5 * max(curv, 0.0)) / (0.9 * h1)
            nu = max(nu, need + 1e-6, np.abs(y + dy).max(initial=0.0) + 1e-6)
        d_merit = lin - nu * h1

        def merit(wv, f_v, h_v):
            _, _, bar = barrier_terms(wv, mu)
            return sf * f_v + bar + nu * np.abs(h_v).sum()

        phi0 = merit(w, f, h)
        alpha = alpha_p
        trials = 0
        accepted = False
        while trials < 40:
            trials += 1
            w_try = w + alpha * dw_
            try:
                f_t, g_t, c_t, h_t = evaluate(w_try)
                phi_t = merit(w_try, f_t, h_t)
            except NumericalFailure:
                phi_t = math.inf
            if np.isfinite(phi_t) and phi_t <= phi0 + 1e-4 * alpha * min(d_merit, 0.0) + 1e3 * np.finfo(float).eps * abs(phi0):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # take the shortest tried step rather than stall; counted in the log
            log.debug("iter %d: line search failed, taking alpha=%.3g", it, alpha)
            w_try = w + alpha * dw_
            f_t, g_t, c_t, h_t = evaluate(w_try)

        w = w_try
        f, g, c, h = f_t, g_t, c_t, h_t
        y = y + alpha * dy
        zl = zl + alpha_d * dzl
        zu = zu + alpha_d * dzu
        sl_new = w[il] - lw[il]
        su_new = uw[iu] - w[iu]
        zl[il] = np.clip(zl[il], mu / (kappa_sigma * sl_new), kappa_sigma * mu / sl_new)
        zu[iu] = np.clip(zu[iu], mu / (kappa_sigma * su_new), kappa_sigma * mu / su_new)
        row.update(alpha_primal=alpha, alpha_dual=alpha_d, delta_w=delta_w, ls_trials=trials)
        history.append(row)

    result = finish(status)
    if status != "converged":
        raise MaxIterations(f"no convergence in {opts.max_iter} iterations", result)
    return result
