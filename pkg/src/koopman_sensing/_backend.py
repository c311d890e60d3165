"""Pick the compiled kernels when available, the numpy ones otherwise."""

import os

if os.environ.get("KOOPMAN_SENSING_BACKEND", "").lower() == "python":
    from . import _kernels_py as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels
        BACKEND = "python"

nearest_neighbours = kernels.nearest_neighbours
divergence_curve = kernels.divergence_curve
