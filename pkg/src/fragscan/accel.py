"""Backend selection for the hot kernels.

Every accelerated kernel exists twice: a numba ``@njit`` loop version and a
vectorised numpy version.  The numba path is used when numba imports and the
environment variable ``FRAGSCAN_DISABLE_NUMBA`` is unset (or ``0``).  Both
paths must produce identical results; the test-suite checks this directly.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_FALSEY = {"", "0", "false", "no", "off"}

HAVE_NUMBA = numba is not None
_enabled = HAVE_NUMBA and os.environ.get("FRAGSCAN_DISABLE_NUMBA", "").strip().lower() in _FALSEY


def njit(*args, **kwargs):
    """``numba.njit`` with on-disk caching, or a no-op when numba is missing."""
    if numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def enabled():
    return _enabled


def backend():
    return "numba" if _enabled else "numpy"


def set_backend(name):
    """Switch backend at runtime (``"numba"`` or ``"numpy"``); returns the previous one."""
    global _enabled
    prev = backend()
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        _enabled = True
    elif name == "numpy":
        _enabled = False
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev
