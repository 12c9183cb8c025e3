"""Backend selection for the hot numerical kernels.

The compiled extension ``homsafe._kernels`` is used when it has been built;
otherwise (or when the environment variable ``HOMSAFE_PURE`` is set to a
non-empty value other than ``0``) the pure-Python module is used.  Both expose
the same functions.
"""

import os

from . import _kernels_py

if os.environ.get("HOMSAFE_PURE", "0") not in ("", "0"):
    _backend = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _backend
        BACKEND = "compiled"
    except ImportError:
        _backend = _kernels_py
        BACKEND = "python"

cardano_real_root = _backend.cardano_real_root
cubic_max_real_root = _backend.cubic_max_real_root
ferrari_roots = _backend.ferrari_roots
hom_norm2 = _backend.hom_norm2
hom_norm_newton = _backend.hom_norm_newton
rk4_chain_step = _backend.rk4_chain_step

__all__ = [
    "BACKEND",
    "cardano_real_root",
    "cubic_max_real_root",
    "ferrari_roots",
    "hom_norm2",
    "hom_norm_newton",
    "rk4_chain_step",
]
