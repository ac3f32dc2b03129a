import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sramflip import DegenerateAxisError, Equilibria, StatePoint, embed, find_equilibria, make_axis, project

finite = st.floats(-1.0, 1.0, allow_nan=False)


def _eq(stable0, saddle):
    dx, dy = saddle[0] - stable0[0], saddle[1] - stable0[1]
    d = math.hypot(dx, dy)
    return Equilibria(StatePoint(*stable0), StatePoint(*saddle), StatePoint(0.2, 0.0),
                      (dx / d if d else 0.0, dy / d if d else 0.0), d)


@pytest.fixture
def axis():
    return make_axis(_eq((0.0, 0.2), (0.03, 0.17)), 0.2)


def test_axis_from_given_points(axis):
    assert axis.delta_vv == pytest.approx(0.0424264068711928, rel=1e-14)
    assert axis.unit[0] == pytest.approx(1 / math.sqrt(2), rel=1e-14)
    assert axis.unit[1] == pytest.approx(-1 / math.sqrt(2), rel=1e-14)


def test_symmetric_cell_axis(default_params):
    # exact up to the 1e-14*vdd root tolerance
    ax = make_axis(find_equilibria(default_params), default_params.vdd)
    assert ax.unit[0] == pytest.approx(1 / math.sqrt(2), abs=1e-13)
    assert ax.unit[1] == pytest.approx(-1 / math.sqrt(2), abs=1e-13)


def test_degenerate_axis():
    eq = Equilibria(StatePoint(0.1, 0.1), StatePoint(0.1, 0.1), StatePoint(0.2, 0.0), (0.0, 0.0), 0.0)
    with pytest.raises(DegenerateAxisError):
        make_axis(eq, 0.2)


def test_origin_and_saddle(axis):
    assert project(axis.origin, axis) == 0.0
    assert project((0.03, 0.17), axis) == pytest.approx(axis.delta_vv, rel=1e-14)
    assert embed(0.0, axis) == axis.origin
    s = embed(axis.delta_vv, axis)
    assert s.v2 == pytest.approx(0.03, abs=1e-15) and s.v1 == pytest.approx(0.17, abs=1e-15)


@given(t=finite)
def test_orthogonal_displacement_projects_to_zero(t):
    ax = make_axis(_eq((0.0, 0.2), (0.03, 0.17)), 0.2)
    n2, n1 = ax.normal
    assert project((ax.origin.v2 + t * n2, ax.origin.v1 + t * n1), ax) == pytest.approx(0.0, abs=1e-15)


def test_round_trip_random(axis):
    x = np.random.default_rng(0).uniform(-0.2, 0.2, 100)
    assert np.allclose(project(embed(x, axis), axis), x, rtol=0, atol=1e-15)


@given(a2=finite, a1=finite, b2=finite, b1=finite)
def test_projection_is_one_lipschitz(a2, a1, b2, b1):
    ax = make_axis(_eq((0.01, 0.19), (0.07, 0.12)), 0.2)
    lhs = abs(project((a2, a1), ax) - project((b2, b1), ax))
    assert lhs <= math.hypot(a2 - b2, a1 - b1) * (1 + 1e-12) + 1e-15


def test_projected_noise_has_unit_intensity(axis):
    # independent unit noises on both nodes project to variance a^2 + b^2 = 1
    z = np.random.default_rng(1).standard_normal((2, 200_000))
    proj = axis.unit[0] * z[0] + axis.unit[1] * z[1]
    assert axis.unit[0] ** 2 + axis.unit[1] ** 2 == pytest.approx(1.0, abs=1e-12)
    assert proj.var() == pytest.approx(1.0, abs=0.01)
