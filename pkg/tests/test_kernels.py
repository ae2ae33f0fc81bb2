"""The compiled and pure-Python kernels must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fibrelin.kernels as kernels
from fibrelin.expr import compile_exprs, parse_expr
from fibrelin.linalg import LU, det

py = kernels.python_backend
cy = kernels.compiled_backend
needs_compiled = pytest.mark.skipif(cy is None, reason="compiled extension not built")

STATES = ("x1", "x2", "x3")
PROGRAM_TEXTS = [
    "-x1*(1 + x2*exp(x2))",
    "x1^7 - 3*x2^-3 + sqrt(2 + x3^2)",
    "sin(x1)*cos(x2)/tan(0.5 + x3^2) - ln(4 + x1)",
    "(x1 + x2 + x3)^5 / (1 + x1^2)",
]


def _run(backend, prog, x):
    out = np.empty(len(prog.exprs))
    pc = backend.run_program(prog.ops, prog.args, prog.consts, np.ascontiguousarray(x), out,
                             np.empty(prog.stack_depth))
    return pc, out


def test_backend_selected_at_import():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.active.BACKEND == kernels.BACKEND
    if cy is not None:
        assert kernels.BACKEND == "cython"


def test_pure_python_override():
    code = "import fibrelin.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, FIBRELIN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
@pytest.mark.parametrize("text", PROGRAM_TEXTS)
def test_programs_bitwise_equal(text, rng):
    prog = compile_exprs((parse_expr(text),), STATES)
    for _ in range(200):
        x = rng.uniform(-2, 2, 3)
        pc_py, out_py = _run(py, prog, x)
        pc_cy, out_cy = _run(cy, prog, x)
        assert pc_py == pc_cy
        if pc_py < 0:
            assert out_py.tobytes() == out_cy.tobytes()


@needs_compiled
def test_fault_location_matches():
    prog = compile_exprs((parse_expr("x2 + ln(x1)"), parse_expr("1/x3")), STATES)
    for x in ([-1.0, 0.0, 1.0], [1.0, 0.0, 0.0]):
        assert _run(py, prog, np.array(x))[0] == _run(cy, prog, np.array(x))[0] >= 0


@needs_compiled
def test_batch_equal(rng):
    prog = compile_exprs(tuple(parse_expr(t) for t in PROGRAM_TEXTS), STATES)
    xs = rng.uniform(-2, 2, (64, 3))
    res = []
    for backend in (py, cy):
        outs = np.zeros((64, len(PROGRAM_TEXTS)))
        status = np.empty(64, dtype=np.int64)
        backend.run_batch(prog.ops, prog.args, prog.consts, xs, outs, np.empty(prog.stack_depth), status)
        res.append((outs, status))
    assert np.array_equal(res[0][1], res[1][1])
    ok = res[0][1] < 0
    assert res[0][0][ok].tobytes() == res[1][0][ok].tobytes()


@needs_compiled
@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_lu_bitwise_equal(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    b = np.random.default_rng(seed + 1).normal(size=n)
    results = []
    for backend in (py, cy):
        lu = a.copy()
        piv = np.zeros(n, dtype=np.int32)
        sign = backend.lu_factor(lu, piv)
        x = b.copy()
        backend.lu_solve(lu, piv, x)
        results.append((sign, lu.tobytes(), piv.tobytes(), x.tobytes()))
    assert results[0] == results[1]


@pytest.mark.parametrize("backend", [py] + ([cy] if cy is not None else []), ids=lambda b: b.BACKEND)
def test_lu_solves(backend, rng):
    for n in range(1, 7):
        a = rng.normal(size=(n, n)) + n * np.eye(n)
        b = rng.normal(size=n)
        lu = a.copy()
        piv = np.zeros(n, dtype=np.int32)
        backend.lu_factor(lu, piv)
        x = b.copy()
        backend.lu_solve(lu, piv, x)
        assert np.allclose(a @ x, b, atol=1e-12)


def test_lu_ties_pick_lowest_index():
    a = np.array([[1.0, 2.0], [-1.0, 3.0]])
    f = LU(a)
    assert list(f.piv) == [0, 1]


def test_determinant_and_inverse(rng):
    a = rng.normal(size=(4, 4))
    assert det(a) == pytest.approx(np.linalg.det(a), rel=1e-12)
    assert np.allclose(LU(a).inverse() @ a, np.eye(4), atol=1e-12)


def test_singular_determinant_is_zero():
    assert det(np.array([[1.0, 2.0], [2.0, 4.0]])) == 0.0
    assert det(np.zeros((3, 3))) == 0.0


def test_lambda_jacobian_determinant():
    J = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, -1.0, 0.0]])
    assert det(J) == -1.0
