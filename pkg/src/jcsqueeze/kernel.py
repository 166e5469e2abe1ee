"""Backend selection for the propagation kernel.

The compiled extension is used when it imports; otherwise the numpy fallback.
``JCSQUEEZE_BACKEND`` is deliberately not consulted so that runs stay
reproducible from their config alone; call ``set_backend`` instead.
"""
from __future__ import annotations

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

AVAILABLE = ("compiled", "python") if _compiled is not None else ("python",)
BACKEND = AVAILABLE[0]
_impl = _compiled if _compiled is not None else _kernel_py


def set_backend(name: str) -> None:
    """Select ``"compiled"`` or ``"python"``."""
    global BACKEND, _impl
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel is not built; run `pip install -e .`")
        _impl = _compiled
    elif name == "python":
        _impl = _kernel_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def propagate(*args):
    return _impl.propagate(*args)
