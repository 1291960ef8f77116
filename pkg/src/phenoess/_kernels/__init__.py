"""Hot kernels with a numba path and a pure-numpy fallback.

Both implementations share signatures; the active one is chosen once at
import from ``PHENOESS_BACKEND`` (see :mod:`phenoess._backend`).
"""
from .._backend import BACKEND
from . import _np as numpy_impl

if BACKEND == "numba":
    from . import _nb as numba_impl
    active = numba_impl
else:
    numba_impl = None
    active = numpy_impl

kernel_log_batch = active.kernel_log_batch
invert_kernel_batch = active.invert_kernel_batch
bracket_panels = active.bracket_panels
mc_mean_fitness = active.mc_mean_fitness
log_integrand = active.log_integrand

__all__ = [
    "BACKEND", "numpy_impl", "numba_impl", "kernel_log_batch",
    "invert_kernel_batch", "bracket_panels", "mc_mean_fitness", "log_integrand",
]
