import math

import numpy as np
import pytest

from conftest import two_bus
from lossdispatch.dispatch import (
    InfeasibleProblem,
    assemble,
    initial_point,
    ldf_allocation,
    lmp_check,
    relax_oversatisfaction,
    solve_dispatch,
    verify_reference_invariance,
)
from lossdispatch.network import Bus, Generator, Line, Network, PiecewiseLinearCost, QuadraticCost
from lossdispatch.report import true_cost
from oracles import triangle_bruteforce, two_bus_kkt

KKT = {k: float(v) for k, v in two_bus_kkt.solve().items()}
TIERS = ["exact", "taylor", "nominal", "dc"]


class TestTwoBus:
    def test_dc_oracle(self):
        sol = solve_dispatch(assemble(two_bus(), "dc"))
        fs = sol.problem.model.functions
        assert sol.converged
        assert sol.P[0] == pytest.approx(KKT["p1"], abs=1e-9)
        assert fs.midline_flow(sol.dtheta)[0] == pytest.approx(KKT["flow"], abs=1e-9)
        assert sol.losses == pytest.approx(KKT["loss"], abs=1e-9)
        assert sol.lmp == pytest.approx([KKT["lmp1"], KKT["lmp2"]], abs=1e-7)
        assert sol.binding == [] and not sol.degenerate

    def test_lossless(self):
        sol = solve_dispatch(assemble(two_bus(r=0.0), "dc"))
        assert sol.P[0] == pytest.approx(1.0, abs=1e-9)
        assert sol.lmp == pytest.approx([10.0, 10.0], abs=1e-7)

    def test_dimensions(self):
        p = assemble(two_bus(), "dc")
        assert p.n_vars == 2 and p.n_balance == 2 and len(p.windows) == 1

    @pytest.mark.parametrize("tier", TIERS)
    def test_every_tier_converges(self, tier):
        sol = solve_dispatch(assemble(two_bus(), tier))
        assert sol.converged and max(sol.kkt_residuals.values()) <= 1e-7

    def test_lmp_check(self):
        p = assemble(two_bus(), "dc")
        sol = solve_dispatch(p)
        assert lmp_check(p, sol, 2) == pytest.approx(KKT["lmp2"], rel=1e-6)
        lossless = assemble(two_bus(r=0.0), "dc")
        assert lmp_check(lossless, solve_dispatch(lossless), 2) == pytest.approx(10.0, rel=1e-9)

    def test_ldf_all_loss_at_generator_bus(self):
        net = two_bus()
        sol = solve_dispatch(assemble(net, "dc", allocation=ldf_allocation(net, 1)))
        # all loss lands at bus 1, so the flow is exactly the demand
        assert sol.P[0] == pytest.approx(1.01, abs=1e-9)

    def test_relaxed_matches(self):
        a = solve_dispatch(assemble(two_bus(), "dc"))
        b = solve_dispatch(relax_oversatisfaction(assemble(two_bus(), "dc")))
        assert b.problem.relaxed
        assert b.P == pytest.approx(a.P, abs=1e-6)

    def test_warm_start(self):
        cold = solve_dispatch(assemble(two_bus(), "exact"))
        warm = solve_dispatch(assemble(two_bus(), "exact"), init="dc")
        assert warm.P == pytest.approx(cold.P, abs=1e-9)
        again = solve_dispatch(assemble(two_bus(), "exact"), init=cold)
        assert again.iterations <= cold.iterations

    def test_linear_pwl_cost_equivalent(self):
        net = two_bus()
        pwl = Network(net.buses, net.lines, [Generator(1, 0, 10, PiecewiseLinearCost(((0, 0), (10, 100))))], slack_bus=1)
        a = solve_dispatch(assemble(net, "dc"))
        b = solve_dispatch(assemble(pwl, "dc"))
        assert b.P == pytest.approx(a.P, abs=1e-8)
        assert b.objective == pytest.approx(a.objective, abs=1e-7)
        assert b.lmp == pytest.approx(a.lmp, abs=1e-6)

    def test_pwl_kink(self):
        # the cheap segment ends at 0.6 p.u.; the second generator is pricier than the kink
        cost = PiecewiseLinearCost(((0, 0), (0.6, 6), (2, 34)))
        net = Network([Bus(1), Bus(2, demand=1.0)], [Line(1, 2, 0.0, 0.1)],
                      [Generator(1, 0, 2, cost), Generator(2, 0, 2, QuadraticCost(c1=15))], slack_bus=1)
        sol = solve_dispatch(assemble(net, "dc"))
        assert sol.P == pytest.approx([0.6, 0.4], abs=1e-7)
        assert sol.lmp == pytest.approx([15.0, 15.0], abs=1e-6)


def test_capacity_check():
    with pytest.raises(InfeasibleProblem):
        assemble(two_bus(demand=20.0), "dc")
    net = two_bus()
    with pytest.raises(InfeasibleProblem):
        assemble(Network(net.buses, net.lines, []), "dc")


def test_initial_point_respects_bounds(case30):
    p = assemble(case30, "dc")
    x0 = initial_point(p)
    lo = np.array([g.p_min for g in case30.generators])
    hi = np.array([g.p_max for g in case30.generators])
    assert np.all((lo <= x0[: len(lo)]) & (x0[: len(lo)] <= hi))


class TestTriangle:
    def test_windows_inside_domain(self, case3):
        p = assemble(case3, "exact")
        assert all(-math.pi / 2 <= w.lower and w.upper <= math.pi / 2 for w in p.windows)
        rated = p.windows[1]
        assert -math.pi / 2 < rated.lower and rated.upper < math.pi / 2

    @pytest.mark.parametrize("tier", ["exact", "dc"])
    def test_brute_force(self, case3, tier):
        cost, (p1, p2, th2, th3) = triangle_bruteforce.solve(tier)
        sol = solve_dispatch(assemble(case3, tier))
        assert sol.P == pytest.approx([p1, p2], abs=1e-6)
        assert sol.objective == pytest.approx(cost, rel=1e-8)
        assert sol.theta[1:] == pytest.approx([th2, th3], abs=1e-6)

    def test_congestion(self, case3):
        sol = solve_dispatch(assemble(case3, "exact"))
        assert sol.binding == [(1, "upper", "current_ij")]
        assert sol.window_duals[1] > 0
        assert len(set(np.round(sol.lmp, 6))) == 3
        # generator buses are interior, so their LMP is their marginal cost
        for k, g in enumerate(case3.generators):
            assert sol.lmp[case3.bus_index(g.bus)] == pytest.approx(g.cost.d1(sol.P[k]), rel=1e-8)

    @pytest.mark.parametrize("tier", ["exact", "dc"])
    def test_explicit_current_equivalence(self, case3, tier):
        window = solve_dispatch(assemble(case3, tier))
        explicit_problem = assemble(case3, tier, explicit_current=True)
        assert explicit_problem.current_constraints
        explicit = solve_dispatch(explicit_problem)
        assert explicit.P == pytest.approx(window.P, abs=1e-6)
        assert explicit.binding and explicit.binding[0][2] == "current_explicit"

    def test_flow_limits(self, case3):
        sol = solve_dispatch(assemble(case3, "dc", limits="flow"))
        fs = sol.problem.model.functions
        assert abs(fs.midline_flow(sol.dtheta)[1]) == pytest.approx(1.0, rel=1e-7)
        assert sol.binding[0][2] == "flow"

    def test_no_limits(self, case3):
        sol = solve_dispatch(assemble(case3, "exact", limits="none"))
        assert sol.binding == []

    def test_explicit_angle_bound(self, case3):
        lines = list(case3.lines)
        lines[2] = Line(2, 3, 0.01, 0.1, angle_max=0.09)
        net = Network(case3.buses, lines, case3.generators, case3.base_mva, case3.slack_bus)
        sol = solve_dispatch(assemble(net, "exact", limits="none"))
        assert sol.dtheta[2] == pytest.approx(0.09, abs=1e-8)
        assert (2, "upper", "explicit") in sol.binding

    def test_lmp_duality(self, case3):
        p = assemble(case3, "exact")
        sol = solve_dispatch(p)
        for bus in (1, 2, 3):
            fd = lmp_check(p, sol, bus)
            assert fd == pytest.approx(sol.lmp[case3.bus_index(bus)], rel=1e-3)


@pytest.mark.parametrize("fixture,refs", [("case2", (1, 2)), ("case3", (1, 3)), ("case30", (1, 30))])
@pytest.mark.parametrize("tier", TIERS)
def test_reference_invariance(request, fixture, refs, tier):
    net = request.getfixturevalue(fixture)
    rep = verify_reference_invariance(net, tier, *refs)
    assert rep.passed, rep
    assert rep.objective_gap <= 1e-8 * max(1, rep.objective_a)


@pytest.mark.parametrize("fixture", ["case3", "case30"])
def test_relaxation_agrees_when_prices_positive(request, fixture):
    net = request.getfixturevalue(fixture)
    for tier in ("exact", "dc"):
        a = solve_dispatch(assemble(net, tier))
        assert np.all(a.lmp > 0)
        b = solve_dispatch(relax_oversatisfaction(assemble(net, tier)))
        assert b.P == pytest.approx(a.P, abs=1e-6)


def test_relaxed_convex_multistart(case3):
    p = relax_oversatisfaction(assemble(case3, "nominal"))
    rng = np.random.default_rng(1)
    objs = []
    for _ in range(5):
        x0 = initial_point(p)
        x0[:2] = rng.uniform(0, 3, 2)
        x0[2:] = rng.uniform(-0.2, 0.2, 2)
        objs.append(solve_dispatch(p, init=x0).objective)
    assert max(objs) - min(objs) <= 1e-6


@pytest.mark.parametrize("fixture", ["case3", "case30"])
def test_tier_cost_close_to_exact(request, fixture):
    net = request.getfixturevalue(fixture)
    exact = solve_dispatch(assemble(net, "exact"))
    c_exact = true_cost(net, exact.P)
    for tier in ("taylor", "nominal", "dc"):
        sol = solve_dispatch(assemble(net, tier))
        assert abs(true_cost(net, sol.P) - c_exact) / c_exact <= 0.05


def test_generators_sharing_a_bus():
    net = Network([Bus(1), Bus(2, demand=1.0)], [Line(1, 2, 0.01, 0.1)],
                  [Generator(1, 0, 2, QuadraticCost(1.0, 10)), Generator(1, 0, 2, QuadraticCost(1.0, 10))], slack_bus=1)
    sol = solve_dispatch(assemble(net, "dc"))
    assert sol.P[0] == pytest.approx(sol.P[1], abs=1e-8)
    assert sol.P_bus[0] == pytest.approx(KKT["p1"], abs=1e-8)


def test_deterministic(case30):
    a = solve_dispatch(assemble(case30, "exact"))
    b = solve_dispatch(assemble(case30, "exact"))
    assert a.P.tobytes() == b.P.tobytes() and a.lmp.tobytes() == b.lmp.tobytes()
    assert a.iterations == b.iterations


def test_threaded_compare_matches_serial(case30):
    from lossdispatch.report import compare_tiers

    serial = compare_tiers(case30, ["dc", "nominal"], jobs=1)
    threaded = compare_tiers(case30, ["dc", "nominal"], jobs=3)
    for r1, r2 in zip(serial.rows, threaded.rows):
        assert (r1.objective, r1.l1_dispatch_delta_mw) == (r2.objective, r2.l1_dispatch_delta_mw)
