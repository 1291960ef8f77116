"""Kernel backend selection.

Set ``PHENOESS_BACKEND=numpy`` to bypass numba and run the pure-numpy
kernels. The default is ``numba`` whenever it can be imported.
"""
import os

ENV_FLAG = "PHENOESS_BACKEND"

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def requested_backend() -> str:
    name = os.environ.get(ENV_FLAG, "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"{ENV_FLAG} must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        return "numpy"
    return name


BACKEND = requested_backend()
