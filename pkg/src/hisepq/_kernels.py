"""Select the compiled kernels when available, else the pure-Python ones.

Set ``HISEPQ_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("HISEPQ_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import *  # noqa: F401,F403
    from ._pykernels import BACKEND, EMPTY  # noqa: F401
else:
    try:
        from ._ckernels import *  # noqa: F401,F403
        from ._ckernels import BACKEND, EMPTY  # noqa: F401
    except ImportError:
        from ._pykernels import *  # noqa: F401,F403
        from ._pykernels import BACKEND, EMPTY  # noqa: F401


def available_backends():
    """Return the importable kernel modules keyed by backend name."""
    from . import _pykernels

    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
