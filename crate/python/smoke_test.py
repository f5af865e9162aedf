"""Smoke test for the Python extension.

Build and install first:

    pip install --no-build-isolation -e crates/python
    python3 python/smoke_test.py
"""

import math

import midpoint_vi as mv


def close(a, b, tol):
    return abs(a - b) <= tol


def check_grid_and_calculus():
    g = mv.TimeGrid(0.0, 1.0, 4)
    assert g.h == 0.25 and g.n == 4
    assert g.nodes("T_half") == [0.125, 0.375, 0.625, 0.875]
    assert len(g.nodes("T_circ")) == 9

    kind, ext = mv.extend(g, "T", [0.0, 1.0, 4.0, 9.0, 16.0])
    assert kind == "T_circ"
    assert ext[1] == 0.5 and ext[3] == 2.5

    kind, d = mv.delta_plus(g, "T", [t * t for t in g.nodes()])
    assert kind == "T_plus"
    for t, v in zip(g.nodes("T_plus"), d):
        assert close(v, 2 * t + g.h, 1e-14)

    # mid-point rule integrates t on [0, 1] exactly
    [area] = mv.integral(g, "T_half", g.nodes("T_half"), 0, 4)
    assert close(area, 0.5, 1e-15)
    _, anti = mv.antiderivative(g, "T_half", [1.0] * 4)
    assert anti == [0.0, 0.25, 0.5, 0.75, 1.0]

    try:
        mv.extend(g, "T_bogus", [0.0] * 5)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown node kind accepted")


def check_simulation():
    pend = mv.Problem("pendulum")
    assert pend.potential([0.0]) == -1.0 and pend.potential_grad([0.0]) == [0.0]

    run = mv.simulate(mv.Problem("harmonic"), h=0.01, n=1000, q0=[1.0], p0=[0.0])
    assert run.complete and len(run) == 1001
    # the quadratic invariant q² + p² is conserved by the mid-point scheme
    for q, p in zip(run.q, run.p):
        assert close(q[0] ** 2 + p[0] ** 2, 1.0, 1e-9)
    assert close(run.q[-1][0], math.cos(10.0), 1e-3)

    lag = mv.simulate(mv.Problem("harmonic"), scheme="midpoint_lagrangian", h=0.01, n=1000, q0=[1.0], p0=[0.0])
    for a, b in zip(run.q, lag.q):
        assert close(a[0], b[0], 1e-10)

    back = mv.Trajectory.from_csv(run.to_csv())
    assert back.q == run.q and back.scheme == "midpoint_hamiltonian"

    free = mv.simulate(mv.Problem("free_particle"), scheme="order1", h=0.5, n=8, q0=[0.0, 1.0], p0=[1.0, -2.0])
    assert close(free.q[-1][0], 4.0, 1e-12) and close(free.q[-1][1], -7.0, 1e-12)

    try:
        mv.simulate(pend, scheme="rk4")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown scheme accepted")

    bad = mv.simulate(pend, scheme="midpoint_lagrangian", h=3.0, n=20, q0=[3.0], q1=[-3.0], max_iter=1, method="fixed_point")
    assert not bad.complete and bad.failure


def check_discrete_mechanics():
    pend = mv.Problem("pendulum")
    g = mv.TimeGrid(0.0, 1.0, 10)
    run = mv.simulate(pend, h=g.h, n=g.n, q0=[0.5], p0=[0.1])
    q = [row[0] for row in run.q]
    p = [row[0] for row in run.p]
    kind, r = mv.el_residual(pend, g, q)
    assert kind == "T_half_minus" and max(map(abs, r)) < 1e-9
    mom = mv.discrete_momentum(pend, g, q)
    assert max(abs(a - b) for a, b in zip(mom, p)) < 1e-10
    assert mv.hamiltonian_residual(pend, g, q, p) < 1e-9
    assert math.isfinite(mv.action(pend, g, q)) and math.isfinite(mv.action_h(pend, g, q, p))


def check_studies():
    table = mv.converge(mv.Problem("harmonic"), scheme="order1")
    assert len(table["rows"]) == 4 and abs(table["slope"] - 1.0) < 0.15
    assert mv.converge(mv.Problem("free_particle"), p0=[1.0])["slope"] is None

    report = mv.verify(seed=3, sizes=[2, 5, 9], instances=10)
    assert report["seed"] == 3 and report["all_passed"], report
    assert {c["name"] for c in report["checks"]} >= {"integration_by_parts", "time_reversal"}


if __name__ == "__main__":
    for check in (check_grid_and_calculus, check_simulation, check_discrete_mechanics, check_studies):
        check()
        print(f"ok  {check.__name__}")
    print("smoke test passed")
