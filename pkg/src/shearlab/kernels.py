"""Kernel selection: compiled core if available, pure Python otherwise.

``shearlab.kernels.BACKEND`` reports which one is active.  Set the
environment variable ``SHEARLAB_PURE_PYTHON=1`` to force the fallback (used
by the benchmark and by backend-parity tests).
"""

import os

from . import _core_py

STATUS_OK = _core_py.STATUS_OK
STATUS_DOMAIN = _core_py.STATUS_DOMAIN
STATUS_UNDERFLOW = _core_py.STATUS_UNDERFLOW
STATUS_NONFINITE = _core_py.STATUS_NONFINITE
STATUS_MAXSTEPS = _core_py.STATUS_MAXSTEPS

dense_eval = _core_py.dense_eval

_IMPLS = {"python": _core_py.integrate_segment}
if not os.environ.get("SHEARLAB_PURE_PYTHON"):
    try:
        from . import _core_cy

        _IMPLS["compiled"] = _core_cy.integrate_segment
    except ImportError:
        pass

BACKEND = "compiled" if "compiled" in _IMPLS else "python"
integrate_segment = _IMPLS[BACKEND]


def available_backends():
    return sorted(_IMPLS)


def get_backend(name):
    """Fetch a specific backend's integrate_segment (for benchmarks/tests)."""
    return _IMPLS[name]
