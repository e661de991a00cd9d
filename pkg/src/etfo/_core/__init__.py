"""Stepper backend selection: compiled extension when available, pure Python otherwise.

Both backends implement the same ``run_chunk(pt, step0, n_steps)`` contract
over a ``PackedTrial`` and are kept bit-identical; the compiled one is just
fast. ``get_stepper("auto")`` picks the best available.
"""

from __future__ import annotations

from . import _stepper_py

try:
    from . import _stepper as _compiled
except ImportError:  # extension not built; pure-Python fallback
    _compiled = None

HAVE_COMPILED = _compiled is not None
DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "python"


def available_backends() -> tuple:
    return ("compiled", "python") if HAVE_COMPILED else ("python",)


def get_stepper(backend: str = "auto"):
    """Return the run_chunk callable for the requested backend string."""
    if backend == "auto":
        backend = DEFAULT_BACKEND
    if backend == "python":
        return _stepper_py.run_chunk
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled stepper is not available; build the extension or use backend='python'")
        return _compiled.run_chunk
    raise ValueError(f"unknown backend {backend!r} (expected 'auto', 'compiled' or 'python')")


def resolve_backend(backend: str = "auto") -> str:
    if backend == "auto":
        return DEFAULT_BACKEND
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend
