"""Kernel backend selection.

The compiled extension is used when importable; set LINEX_KERNEL=python to
force the pure-numpy fallback or LINEX_KERNEL=compiled to fail loudly when
the extension is missing.
"""
import os

_requested = os.environ.get("LINEX_KERNEL", "").strip().lower()

if _requested == "python":
    from . import _fallback as _impl
elif _requested == "compiled":
    from . import _core as _impl  # type: ignore[no-redef]
elif _requested == "":
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _fallback as _impl
else:
    raise ImportError(f"LINEX_KERNEL must be 'python' or 'compiled', got {_requested!r}")

BACKEND = _impl.BACKEND
project_l1_ball = _impl.project_l1_ball
dykstra_project = _impl.dykstra_project
exact_box_l1_project = _impl.exact_box_l1_project
best_response = _impl.best_response
run_game = _impl.run_game
lasso_cd_path = _impl.lasso_cd_path


def get_backend(name: str):
    """Return a specific backend module ('python' or 'compiled')."""
    if name == "python":
        from . import _fallback
        return _fallback
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
