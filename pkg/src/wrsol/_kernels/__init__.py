"""Kernel backend selection.

The compiled extension is used when importable; otherwise the NumPy
fallback takes over. Set WRSOL_KERNELS=python or WRSOL_KERNELS=compiled
to force a backend (forcing the compiled one raises if it is missing).
"""

import os

_choice = os.environ.get("WRSOL_KERNELS", "").strip().lower()

if _choice in ("", "compiled", "c"):
    try:
        from wrsol._kernels import _ck as _impl

        BACKEND = "compiled"
    except ImportError:
        if _choice:
            raise
        from wrsol._kernels import _pyk as _impl

        BACKEND = "python"
elif _choice in ("python", "py"):
    from wrsol._kernels import _pyk as _impl

    BACKEND = "python"
else:
    raise ImportError(
        "WRSOL_KERNELS must be 'compiled' or 'python', got %r" % _choice
    )

dot = _impl.dot
axpy = _impl.axpy
fsol_step = _impl.fsol_step
eval_accuracy_csr = _impl.eval_accuracy_csr

__all__ = ["BACKEND", "dot", "axpy", "fsol_step", "eval_accuracy_csr"]
