"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels`` is used. Setting ``BAYESNR_PURE=1``
forces the fallback.
"""
import os

from bayesnr import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("BAYESNR_PURE"):
    try:
        from bayesnr import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = impl.BACKEND


def backends():
    """All importable backends, compiled first."""
    found = [python_backend]
    if compiled_backend is not None:
        found.insert(0, compiled_backend)
    return found
