# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: expression-program interpreter and small dense LU."""

from libc.math cimport exp, log, sin, cos, tan, sqrt, fabs

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_MUL = 4
    OP_DIV = 5
    OP_POW = 6
    OP_EXP = 7
    OP_LN = 8
    OP_SIN = 9
    OP_COS = 10
    OP_TAN = 11
    OP_SQRT = 12
    OP_STORE = 13

BACKEND = "cython"


cdef inline double _ipow(double b, int k) nogil:
    cdef double r = 1.0
    cdef int n = k if k >= 0 else -k
    while n:
        if n & 1:
            r *= b
        b *= b
        n >>= 1
    return r if k >= 0 else 1.0 / r


cdef Py_ssize_t _run(const int[::1] ops, const int[::1] args, const double[::1] consts,
                     const double* x, double* out, double* stack) nogil:
    cdef Py_ssize_t pc, sp = 0, n = ops.shape[0]
    cdef int op, a, j
    cdef double v, acc
    for pc in range(n):
        op = ops[pc]
        a = args[pc]
        if op == OP_CONST:
            stack[sp] = consts[a]
            sp += 1
        elif op == OP_VAR:
            stack[sp] = x[a]
            sp += 1
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_ADD:
            acc = stack[sp - a]
            for j in range(1, a):
                acc = acc + stack[sp - a + j]
            sp -= a - 1
            stack[sp - 1] = acc
        elif op == OP_MUL:
            acc = stack[sp - a]
            for j in range(1, a):
                acc = acc * stack[sp - a + j]
            sp -= a - 1
            stack[sp - 1] = acc
        elif op == OP_DIV:
            v = stack[sp - 1]
            if v == 0.0:
                return pc
            sp -= 1
            stack[sp - 1] = stack[sp - 1] / v
        elif op == OP_POW:
            v = stack[sp - 1]
            if a < 0 and v == 0.0:
                return pc
            stack[sp - 1] = _ipow(v, a)
        elif op == OP_EXP:
            stack[sp - 1] = exp(stack[sp - 1])
        elif op == OP_LN:
            v = stack[sp - 1]
            if v <= 0.0:
                return pc
            stack[sp - 1] = log(v)
        elif op == OP_SIN:
            stack[sp - 1] = sin(stack[sp - 1])
        elif op == OP_COS:
            stack[sp - 1] = cos(stack[sp - 1])
        elif op == OP_TAN:
            stack[sp - 1] = tan(stack[sp - 1])
        elif op == OP_SQRT:
            v = stack[sp - 1]
            if v < 0.0:
                return pc
            stack[sp - 1] = sqrt(v)
        elif op == OP_STORE:
            sp -= 1
            out[a] = stack[sp]
    return -1


def run_program(const int[::1] ops, const int[::1] args, const double[::1] consts,
                const double[::1] x, double[::1] out, double[::1] stack):
    """Evaluate a program at one point; returns -1 or the faulting instruction."""
    cdef Py_ssize_t r
    with nogil:
        r = _run(ops, args, consts, &x[0] if x.shape[0] else NULL, &out[0], &stack[0])
    return r


def run_batch(const int[::1] ops, const int[::1] args, const double[::1] consts,
              const double[:, ::1] xs, double[:, ::1] outs, double[::1] stack,
              long[::1] status):
    """Evaluate a program at each row of ``xs``; per-row status as in run_program."""
    cdef Py_ssize_t i, m = xs.shape[0]
    cdef Py_ssize_t failures = 0
    with nogil:
        for i in range(m):
            status[i] = _run(ops, args, consts, &xs[i, 0] if xs.shape[1] else NULL,
                             &outs[i, 0], &stack[0])
            if status[i] >= 0:
                failures += 1
    return failures


def lu_factor(double[:, ::1] a, int[::1] piv):
    """In-place LU with partial pivoting; returns the permutation sign."""
    cdef Py_ssize_t n = a.shape[0], i, j, k, p
    cdef double best, t, pivot
    cdef int sign = 1
    with nogil:
        for k in range(n):
            p = k
            best = fabs(a[k, k])
            for i in range(k + 1, n):
                if fabs(a[i, k]) > best:
                    best = fabs(a[i, k])
                    p = i
            piv[k] = <int>p
            if p != k:
                sign = -sign
                for j in range(n):
                    t = a[k, j]
                    a[k, j] = a[p, j]
                    a[p, j] = t
            pivot = a[k, k]
            if pivot == 0.0:
                continue
            for i in range(k + 1, n):
                a[i, k] = a[i, k] / pivot
                t = a[i, k]
                if t != 0.0:
                    for j in range(k + 1, n):
                        a[i, j] = a[i, j] - t * a[k, j]
    return sign


def lu_solve(const double[:, ::1] lu, const int[::1] piv, double[::1] b):
    """Solve in place using factors from lu_factor."""
    cdef Py_ssize_t n = lu.shape[0], i, j
    cdef double t
    with nogil:
        for i in range(n):
            j = piv[i]
            if j != i:
                t = b[i]
                b[i] = b[j]
                b[j] = t
        for i in range(n):
            t = b[i]
            for j in range(i):
                t = t - lu[i, j] * b[j]
            b[i] = t
        for i in range(n - 1, -1, -1):
            t = b[i]
            for j in range(i + 1, n):
                t = t - lu[i, j] * b[j]
            b[i] = t / lu[i, i]
