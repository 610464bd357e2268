import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hodeinfer.models import (
    get_model,
    make_glucose,
    make_harmonic_oscillator,
    make_linear_null,
    make_van_der_pol,
)

ALL = [make_van_der_pol(), make_harmonic_oscillator(), make_glucose(),
       make_linear_null(1), make_linear_null(3, [0.0, 0.0, 2.0])]


def test_van_der_pol_values():
    s = make_van_der_pol()
    assert s.order_q == 2 and s.param_dim_p == 1
    assert s.rhs_H(0.0, np.array([2.0, 0.0]), np.array([1.0])) == -2.0
    assert s.binding_F(0.0, np.array([2.0, 0.0, -2.0]), np.array([1.0])) == 0.0
    assert s.binding_F_dtheta(0.0, np.array([2.0, 3.0, 123.0]), np.array([1.0]))[0] == 9.0
    np.testing.assert_array_equal(s.init_conditions, [2.0, 0.0])
    np.testing.assert_array_equal(s.theta_box, [[0.1, 10.0]])


def test_harmonic_values():
    s = make_harmonic_oscillator()
    assert s.rhs_H(0.0, np.array([1.0, 0.0]), np.array([2.0])) == -4.0
    assert s.exact_solution(0.0, [2.0]) == 1.0
    assert abs(s.exact_solution(np.pi / 4, [2.0])) < 1e-15


@pytest.mark.parametrize("q, init, t, expected", [
    (2, [0.5, -1.5], 0.3, 0.5 - 1.5 * 0.3),
    (1, [5.0], 0.77, 5.0),
    (3, [0.0, 0.0, 2.0], 0.6, 0.36),
])
def test_linear_null_exact(q, init, t, expected):
    s = make_linear_null(q, init)
    assert s.exact_solution(t) == pytest.approx(expected, abs=1e-15)
    assert s.rhs_H(t, np.asarray(init), np.array([1.0])) == 0.0


def test_linear_null_rejects_q0():
    with pytest.raises(ValueError):
        make_linear_null(0)


def test_box_must_be_ordered():
    s = make_van_der_pol()
    from hodeinfer.models import OdeSystem
    with pytest.raises(ValueError):
        OdeSystem("bad", 2, 1, s.rhs_H, s.binding_F, s.binding_F_dtheta, (2.0, 0.0), ((1.0, 1.0),))


@pytest.mark.parametrize("system", ALL, ids=lambda s: s.name)
def test_binding_consistent_with_explicit_form(system):
    rng = np.random.default_rng(1)
    lo, hi = system.lower, system.upper
    worst = 0.0
    for _ in range(1000):
        t = rng.uniform()
        y = rng.uniform(-3, 3, system.order_q)
        th = rng.uniform(lo, hi)
        h = np.append(y, system.rhs_H(t, y, th))
        worst = max(worst, abs(system.binding_F(t, h, th)) / (1 + np.abs(h).max()))
    assert worst <= 1e-12


@pytest.mark.parametrize("system", ALL, ids=lambda s: s.name)
@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_dF_dtheta_matches_finite_differences(system, data):
    u = data.draw(st.lists(st.floats(0.05, 0.95), min_size=system.param_dim_p,
                           max_size=system.param_dim_p))
    h = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=system.order_q + 1,
                                    max_size=system.order_q + 1)))
    th = system.lower + np.array(u) * (system.upper - system.lower)
    grad = system.binding_F_dtheta(0.4, h, th)
    for j in range(system.param_dim_p):
        eps = 1e-6 * max(1.0, abs(th[j]))
        up, dn = th.copy(), th.copy()
        up[j] += eps
        dn[j] -= eps
        fd = (system.binding_F(0.4, h, up) - system.binding_F(0.4, h, dn)) / (2 * eps)
        assert fd == pytest.approx(grad[j], rel=1e-6, abs=1e-8)


def test_catalog():
    assert get_model("vdp").name == "vdp"
    assert get_model("harmonic").name == "harmonic"
    assert get_model("glucose").param_dim_p == 4
    assert get_model("null-q3").order_q == 3
    with pytest.raises(KeyError):
        get_model("lorenz")


def test_systems_compile():
    for s in ALL:
        assert s.compiled_rhs is not None, s.name
