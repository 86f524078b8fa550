"""Pick the compiled kernels when available, else the numpy fallback.

Set ``MAXBALL_BACKEND=python`` to force the fallback, ``native`` to require
the extension.
"""
import os

from . import _fallback

_choice = os.environ.get("MAXBALL_BACKEND", "auto").lower()

native = None
if _choice != "python":
    try:
        from . import _kernels as native
    except ImportError:
        if _choice == "native":
            raise

BACKENDS = {"python": _fallback}
if native is not None:
    BACKENDS["native"] = native

kernels = native if native is not None else _fallback
NAME = "native" if kernels is native else "python"


def get(name: str | None = None):
    """Kernel module by name; ``None`` means the import-time default."""
    if name is None:
        return kernels
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable (have {sorted(BACKENDS)})") from None


def default_threads() -> int:
    return os.cpu_count() or 1
