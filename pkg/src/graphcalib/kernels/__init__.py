"""Backend selection for the hot inference kernels.

The environment variable GRAPH_CALIB_BACKEND picks the implementation:
"numba" (JIT-compiled loops), "numpy" (pure vectorized fallback), or
"auto" (default: numba when importable, else numpy). Both backends share
one arithmetic structure and agree to ~1e-9; per backend, results are
bit-deterministic.
"""

import logging
import os

logger = logging.getLogger(__name__)

_choice = os.environ.get("GRAPH_CALIB_BACKEND", "auto").strip().lower()

if _choice == "numpy":
    from . import numpy_backend as _impl
elif _choice == "numba":
    from . import numba_backend as _impl
elif _choice in ("", "auto"):
    try:
        from . import numba_backend as _impl
    except ImportError:
        from . import numpy_backend as _impl
else:
    raise ValueError(
        f"GRAPH_CALIB_BACKEND must be 'numba', 'numpy' or 'auto', got '{_choice}'"
    )

BACKEND = _impl.NAME
exact_marginals = _impl.exact_marginals
mean_field_sweeps = _impl.mean_field_sweeps
lbp_sweeps = _impl.lbp_sweeps

logger.debug("inference backend: %s", BACKEND)
