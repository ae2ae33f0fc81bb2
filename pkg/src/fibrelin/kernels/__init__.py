"""Hot-loop kernels, compiled when available.

The Cython extension is preferred; set ``FIBRELIN_PURE_PYTHON=1`` to force
the pure-Python implementation.  Both expose the same functions.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("FIBRELIN_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = active.BACKEND

run_program = active.run_program
run_batch = active.run_batch
lu_factor = active.lu_factor
lu_solve = active.lu_solve

__all__ = ["BACKEND", "active", "compiled_backend", "python_backend",
           "run_program", "run_batch", "lu_factor", "lu_solve"]
