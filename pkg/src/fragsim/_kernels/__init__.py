"""Kernel selection: compiled extension when available, pure Python otherwise.

Set FRAGSIM_FORCE_PY=1 to force the fallback (used by the benchmark and the
kernel-equivalence tests).  Both kernels consume the identical RNG stream,
so results do not depend on which one ran.
"""

import os

from . import _py

if os.environ.get("FRAGSIM_FORCE_PY"):
    _impl = _py
    USING_COMPILED = False
else:
    try:
        from . import _core as _impl

        USING_COMPILED = True
    except ImportError:
        _impl = _py
        USING_COMPILED = False

run_local = _impl.run_local
run_local_py = _py.run_local
SplitMix64 = _py.SplitMix64
