"""Kernel backend selection.

The hot numerical loops (Sturm counts, bisection, tridiagonal solves, RK4)
exist twice: a compiled Cython module (_kernels) and a pure-numpy fallback
(_pykernels).  The compiled one is preferred when importable.  Set
ALLOY1D_BACKEND=python to force the fallback, or ALLOY1D_BACKEND=compiled to
fail loudly when the extension is missing instead of silently degrading.
"""

from __future__ import annotations

import os

_requested = os.environ.get("ALLOY1D_BACKEND", "auto").strip().lower()

if _requested in ("python", "pure"):
    from . import _pykernels as _impl

    BACKEND = "python"
elif _requested in ("auto", "", "compiled", "c"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError as exc:
        if _requested in ("compiled", "c"):
            raise ImportError(
                "ALLOY1D_BACKEND=compiled but the _kernels extension is not "
                "built; run pip install -e . --no-build-isolation"
            ) from exc
        from . import _pykernels as _impl

        BACKEND = "python"
else:
    raise ValueError(
        f"unknown ALLOY1D_BACKEND={_requested!r}; "
        "expected auto, compiled, or python"
    )

pivot_floor = _impl.pivot_floor
sturm_counts = _impl.sturm_counts
bisect_eigenvalues = _impl.bisect_eigenvalues
tridiag_factor = _impl.tridiag_factor
tridiag_solve = _impl.tridiag_solve
rk4_linear2 = _impl.rk4_linear2
