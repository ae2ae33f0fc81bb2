import math

import numpy as np
import pytest

from fibrelin.connection import connection_at, decompose, horizontal_lift, horizontal_lift_symbolic
from fibrelin.errors import SingularJacobian
from fibrelin.expr import Var, compile_exprs, to_text
from fibrelin.normal_form import build_normal_form
from fibrelin.system import parse_system
from fibrelin.zerodyn import zero_dynamics_at

STATES = ("x1", "x2", "x3")


def test_bases_at_origin(example_nf):
    cp = connection_at(example_nf, {"x1": 0.0, "x2": 0.0, "x3": 0.0})
    assert cp.V_basis.shape == (3, 1) and cp.H_basis.shape == (3, 2)
    assert np.allclose(cp.V_basis[:, 0], [1, 0, 0])
    # Horizontal vectors are annihilated by dx1 - exp(x2) dx2.
    assert np.allclose(np.array([1.0, -1.0, 0.0]) @ cp.H_basis, 0, atol=1e-12)
    assert cp.det == -1.0


def test_identity_lambda(identity_sys):
    nf = build_normal_form(identity_sys)
    assert nf.lam == (Var("x1"), Var("x2"), Var("x3"))
    cp = connection_at(nf, [0.3, -0.2, 0.9])
    assert np.allclose(cp.V_basis, [[0], [0], [1]])
    assert np.allclose(cp.H_basis, [[1, 0], [0, 1], [0, 0]])


def test_bases_normalised_and_signed(example_nf, rng):
    for _ in range(20):
        cp = connection_at(example_nf, rng.uniform(-2, 2, 3))
        for B in (cp.H_basis, cp.V_basis):
            assert np.allclose(np.linalg.norm(B, axis=0), 1.0)
            for col in B.T:
                first = col[np.flatnonzero(np.abs(col) > 1e-14)[0]]
                assert first > 0


def test_basis_annihilation_and_direct_sum(example_nf, rng):
    for _ in range(100):
        cp = connection_at(example_nf, rng.uniform(-2, 2, 3))
        r = cp.r
        assert np.max(np.abs(cp.J[:r] @ cp.V_basis)) <= 1e-12 * max(1.0, np.max(np.abs(cp.J[:r])))
        assert np.max(np.abs(cp.J[r:] @ cp.H_basis)) <= 1e-12 * max(1.0, np.max(np.abs(cp.J[r:])))
        assert np.isfinite(np.linalg.cond(np.hstack([cp.H_basis, cp.V_basis])))
        assert abs(np.linalg.det(np.hstack([cp.H_basis, cp.V_basis]))) > 1e-9


def test_lift_example_value(example_nf):
    cp = connection_at(example_nf, [0.5, 0.3, -1.0])
    assert horizontal_lift(cp, [1.0, 2.0]) == pytest.approx([2 * math.exp(0.3), 2.0, 1.0], abs=1e-14)


def test_lift_of_zero(example_nf):
    cp = connection_at(example_nf, [0.5, 0.3, -1.0])
    assert np.array_equal(horizontal_lift(cp, [0.0, 0.0]), np.zeros(3))


def test_symbolic_lift_map(example_nf, rng):
    Y = [Var("Y1"), Var("Y2")]
    lift = horizontal_lift_symbolic(example_nf, Y)
    assert [to_text(e) for e in lift] == ["Y2*exp(x2)", "Y2", "Y1"]
    prog = compile_exprs(lift, STATES + ("Y1", "Y2"))
    for _ in range(50):
        x = rng.uniform(-2, 2, 3)
        y = rng.uniform(-2, 2, 2)
        expected = [math.exp(x[1]) * y[1], y[1], y[0]]
        assert np.max(np.abs(prog(np.append(x, y)) - expected)) <= 1e-10
        assert np.max(np.abs(horizontal_lift(connection_at(example_nf, x), y) - expected)) <= 1e-10


def test_symbolic_lift_disabled_above_cap():
    n = 5
    states = " ".join(f"x{i}" for i in range(1, n + 1))
    f = ", ".join([f"x{i + 1}" for i in range(1, n)] + ["0"])
    g = ", ".join(["0"] * (n - 1) + ["1"])
    s = parse_system(f'system "chain"\nstates {states}\ninput u\nf = [{f}]\ng = [{g}]\nh = x1\n')
    nf = build_normal_form(s)
    assert horizontal_lift_symbolic(nf, [Var("x1")] * nf.r) is None


@pytest.mark.parametrize("fixture", ["example_nf", "nocomp_nf"])
def test_connection_laws(fixture, request, rng):
    nf = request.getfixturevalue(fixture)
    worst = {"identity": 0.0, "horizontal": 0.0, "linear": 0.0, "split": 0.0, "unique": 0.0}
    for _ in range(100):
        cp = connection_at(nf, rng.uniform(-2, 2, 3))
        Y1, Y2 = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        a = rng.uniform(-2, 2)
        X1 = horizontal_lift(cp, Y1)
        worst["identity"] = max(worst["identity"], np.max(np.abs(cp.project(X1) - Y1)))
        worst["horizontal"] = max(worst["horizontal"], np.max(np.abs(cp.J[2:] @ X1)))
        lin = horizontal_lift(cp, a * Y1 + Y2) - a * X1 - horizontal_lift(cp, Y2)
        worst["linear"] = max(worst["linear"], np.max(np.abs(lin)))
        X = rng.uniform(-1, 1, 3)
        Xh, Xv = decompose(cp, X)
        assert np.max(np.abs(Xh + Xv - X)) <= 1e-15
        worst["split"] = max(worst["split"], np.max(np.abs(cp.project(Xv))))
        # A vertical perturbation is returned unchanged as the vertical part.
        Vp = cp.V_basis @ rng.uniform(-1, 1, 1)
        Xh2, Xv2 = decompose(cp, X1 + Vp)
        worst["unique"] = max(worst["unique"], np.max(np.abs(Xh2 - X1)), np.max(np.abs(Xv2 - Vp)))
    assert max(worst.values()) <= 1e-10, worst


def test_decompose_vertical_and_horizontal(example_nf):
    cp = connection_at(example_nf, [0.2, -0.4, 1.0])
    Xv = cp.V_basis[:, 0] * 3.0
    h, v = decompose(cp, Xv)
    assert np.max(np.abs(h)) <= 1e-12 and np.max(np.abs(v - Xv)) <= 1e-12
    Xh = horizontal_lift(cp, [0.7, -1.1])
    h, v = decompose(cp, Xh)
    assert np.max(np.abs(h - Xh)) <= 1e-12 and np.max(np.abs(v)) <= 1e-12


def test_decompose_F_gives_zero_dynamics(example, example_nf, rng):
    from fibrelin.zerodyn import LiftedSystem
    ls = LiftedSystem(example, example_nf)
    for _ in range(50):
        x, u = rng.uniform(-2, 2, 3), rng.uniform(-1, 1)
        _, Xv = decompose(connection_at(example_nf, x), ls.F(x, u))
        assert np.max(np.abs(Xv - zero_dynamics_at(example, example_nf, x, u))) <= 1e-10


def test_singular_point_reports_det_and_point():
    s = parse_system('system "cubic"\nstates x1 x2\ninput u\nf = [0, x1]\ng = [0, 1]\nh = x2\n'
                     'complement = [x1^3]\npoint = [1, 0]\n')
    nf = build_normal_form(s)
    with pytest.raises(SingularJacobian) as info:
        connection_at(nf, [0.0, 0.5], time=0.25)
    err = info.value
    assert err.det == 0.0
    assert err.point == {"x1": 0.0, "x2": 0.5}
    assert err.time == 0.25
