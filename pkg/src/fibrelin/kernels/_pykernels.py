"""Pure-Python kernels with the same interface as the compiled extension."""

from __future__ import annotations

import math

BACKEND = "python"

(OP_CONST, OP_VAR, OP_NEG, OP_ADD, OP_MUL, OP_DIV, OP_POW,
 OP_EXP, OP_LN, OP_SIN, OP_COS, OP_TAN, OP_SQRT, OP_STORE) = range(14)

_UNARY = {OP_EXP: math.exp, OP_SIN: math.sin, OP_COS: math.cos, OP_TAN: math.tan}


def _exp(v):
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _ipow(b, k):
    # Same square-and-multiply order as the compiled kernel.
    r = 1.0
    n = -k if k < 0 else k
    try:
        while n:
            if n & 1:
                r *= b
            b *= b
            n >>= 1
    except OverflowError:
        r = math.inf
    return r if k >= 0 else 1.0 / r


def _run(code, consts, x, out):
    stack = []
    push = stack.append
    for pc, (op, a) in enumerate(code):
        if op == OP_CONST:
            push(consts[a])
        elif op == OP_VAR:
            push(x[a])
        elif op == OP_NEG:
            stack[-1] = -stack[-1]
        elif op == OP_ADD:
            acc = stack[-a]
            for v in stack[len(stack) - a + 1:]:
                acc = acc + v
            del stack[len(stack) - a:]
            push(acc)
        elif op == OP_MUL:
            acc = stack[-a]
            for v in stack[len(stack) - a + 1:]:
                acc = acc * v
            del stack[len(stack) - a:]
            push(acc)
        elif op == OP_DIV:
            v = stack.pop()
            if v == 0.0:
                return pc
            stack[-1] = stack[-1] / v
        elif op == OP_POW:
            v = stack[-1]
            if a < 0 and v == 0.0:
                return pc
            stack[-1] = _ipow(v, a)
        elif op == OP_EXP:
            stack[-1] = _exp(stack[-1])
        elif op == OP_LN:
            v = stack[-1]
            if v <= 0.0:
                return pc
            stack[-1] = math.log(v)
        elif op == OP_SQRT:
            v = stack[-1]
            if v < 0.0:
                return pc
            stack[-1] = math.sqrt(v)
        elif op == OP_STORE:
            out[a] = stack.pop()
        else:
            v = stack[-1]
            stack[-1] = _UNARY[op](v) if math.isfinite(v) else math.nan
    return -1


def run_program(ops, args, consts, x, out, stack):
    res = [0.0] * len(out)
    r = _run(list(zip(ops.tolist(), args.tolist())), consts.tolist(), x.tolist(), res)
    out[:] = res
    return r


def run_batch(ops, args, consts, xs, outs, stack, status):
    code = list(zip(ops.tolist(), args.tolist()))
    cl = consts.tolist()
    failures = 0
    width = outs.shape[1]
    for i, row in enumerate(xs.tolist()):
        res = [0.0] * width
        s = _run(code, cl, row, res)
        status[i] = s
        outs[i, :] = res
        if s >= 0:
            failures += 1
    return failures


def lu_factor(a, piv):
    n = a.shape[0]
    m = a.tolist()
    sign = 1
    for k in range(n):
        p = max(range(k, n), key=lambda i: (abs(m[i][k]), -i))
        piv[k] = p
        if p != k:
            sign = -sign
            m[k], m[p] = m[p], m[k]
        pivot = m[k][k]
        if pivot == 0.0:
            continue
        rk = m[k]
        for i in range(k + 1, n):
            ri = m[i]
            t = ri[k] / pivot
            ri[k] = t
            if t != 0.0:
                for j in range(k + 1, n):
                    ri[j] = ri[j] - t * rk[j]
    a[:, :] = m
    return sign


def lu_solve(lu, piv, b):
    n = lu.shape[0]
    m = lu.tolist()
    x = b.tolist()
    for i in range(n):
        j = int(piv[i])
        if j != i:
            x[i], x[j] = x[j], x[i]
    for i in range(n):
        t = x[i]
        row = m[i]
        for j in range(i):
            t = t - row[j] * x[j]
        x[i] = t
    for i in range(n - 1, -1, -1):
        t = x[i]
        row = m[i]
        for j in range(i + 1, n):
            t = t - row[j] * x[j]
        x[i] = t / row[i] if row[i] != 0.0 else math.copysign(math.inf, t) if t else math.nan
    b[:] = x
