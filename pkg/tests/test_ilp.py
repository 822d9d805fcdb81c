import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from energyplace.ilp import build_ilp, solve_ilp
from energyplace.metrics import Objective
from energyplace.solver import solve_exact, validate_placement

from conftest import small_instance
from test_solver import line_graph


@st.composite
def instances(draw):
    return small_instance(draw, st, max_devices=4, max_functions=3, max_instances=2)


def test_line_graph_agrees_with_branch_and_bound():
    g = line_graph()
    for obj in Objective:
        exact, ilp = solve_exact(g, obj), solve_ilp(g, obj)
        assert ilp.feasible
        assert ilp.objective_value == pytest.approx(exact.objective_value, abs=1e-9)
        assert all(validate_placement(g, ilp).values())


def test_realized_solution_satisfies_every_row():
    g = line_graph()
    exact = solve_exact(g, "overall")
    model = build_ilp(g, "overall")
    z = model.vector(g, exact.placement)
    assert all(model.check(z).values())
    assert model.c @ z == pytest.approx(exact.objective_value)


def test_deadline_row_binds():
    g = line_graph()
    exact = solve_exact(g, "overall")
    model = build_ilp(g, "overall", deadline_ms=exact.evaluation.completion_ms - 1e-3)
    assert not model.check(model.vector(g, exact.placement))["deadline"]
    assert not solve_ilp(g, "overall", deadline_ms=0.0).feasible


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(instances())
def test_ilp_matches_branch_and_bound(g):
    for obj in Objective:
        exact, ilp = solve_exact(g, obj), solve_ilp(g, obj)
        assert ilp.status is exact.status
        if exact.feasible:
            assert ilp.objective_value == pytest.approx(exact.objective_value, abs=1e-6)
            assert all(validate_placement(g, ilp).values())
