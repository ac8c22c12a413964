"""Backend selection for the EM and backprop loops.

The compiled extension is used when it imports; otherwise the numpy
fallback. Setting ``LATBUDGET_PURE_PYTHON=1`` forces the fallback.
"""

import os

from latbudget import _pykernels

LINEAR, RELU, SOFTMAX = _pykernels.LINEAR, _pykernels.RELU, _pykernels.SOFTMAX
MSE, CROSS_ENTROPY = _pykernels.MSE, _pykernels.CROSS_ENTROPY

_impl = _pykernels
BACKEND = "python"
if os.environ.get("LATBUDGET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from latbudget import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

em_fit = _impl.em_fit
batch_gradients = _impl.batch_gradients
sgd_epoch = _impl.sgd_epoch


def compiled():
    """The compiled module, or ``None`` when it is not built."""
    try:
        from latbudget import _kernels
    except ImportError:
        return None
    return _kernels
