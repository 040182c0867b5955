"""Loop-kernel backend selection.

The compiled stepper is preferred when its extension imported cleanly; the
NumPy fallback has identical semantics (tolerance-level numerical agreement,
since the two hit LAPACK through different call sites). Selection happens
once at import and can be forced with ORLSPI_BACKEND=python|compiled|auto.
"""

import os

from . import _stepper_py
from .errors import ConfigError

_stepper_compiled = None
_import_error = None
try:
    from . import _stepper as _stepper_compiled
except ImportError as exc:  # extension not built; fallback covers everything
    _import_error = exc


def _select():
    choice = os.environ.get("ORLSPI_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return _stepper_compiled if _stepper_compiled is not None else _stepper_py
    if choice == "python":
        return _stepper_py
    if choice == "compiled":
        if _stepper_compiled is None:
            raise ConfigError(
                f"ORLSPI_BACKEND=compiled but the extension is unavailable ({_import_error})"
            )
        return _stepper_compiled
    raise ConfigError(f"ORLSPI_BACKEND must be auto, python, or compiled, got {choice!r}")


_active = _select()


def active_name():
    """Name of the stepper in use: 'compiled' or 'python'."""
    return "compiled" if _active.COMPILED else "python"


def step_range(ws, t_start, t_skip=-1):
    return _active.step_range(ws, t_start, t_skip)


def get_stepper(name=None):
    """Explicit stepper lookup, mainly for tests and benchmarks."""
    if name in (None, "auto"):
        return _active
    if name == "python":
        return _stepper_py
    if name == "compiled":
        if _stepper_compiled is None:
            raise ConfigError("compiled stepper unavailable in this environment")
        return _stepper_compiled
    raise ConfigError(f"unknown backend {name!r}")
