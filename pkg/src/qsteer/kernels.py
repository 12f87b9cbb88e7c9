"""Hot-loop kernels, compiled when available.

``BACKEND`` is ``"cython"`` if the extension built, else ``"python"``.
"""

try:
    from ._rk4 import rk4_modulated
    BACKEND = "cython"
except ImportError:  # extension not built
    from ._rk4_py import rk4_modulated
    BACKEND = "python"

__all__ = ["rk4_modulated", "BACKEND"]
