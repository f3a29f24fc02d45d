"""Kernel backend selection.

The compiled extension is preferred when present; the NumPy fallback has
identical semantics. Set AEPL_KERNELS=py or AEPL_KERNELS=c to force a
backend (forcing "c" when the extension is missing raises ImportError).
"""

import os

from . import _pykernels

_forced = os.environ.get("AEPL_KERNELS", "").strip().lower()

if _forced == "py":
    _impl = _pykernels
    BACKEND = "python"
elif _forced == "c":
    from . import _ckernels as _impl  # noqa: F401  (import error is the contract)

    BACKEND = "compiled"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

pairwise_sqdist = _impl.pairwise_sqdist
sum_by_label = _impl.sum_by_label
# plain inner products are a matmul; BLAS beats naive compiled loops by an
# order of magnitude (see benchmarks/bench_kernels.py), so this one always
# routes to the NumPy implementation
pairwise_dot = _pykernels.pairwise_dot
