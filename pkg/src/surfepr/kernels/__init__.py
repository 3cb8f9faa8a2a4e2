"""Assembly and field kernels with a numba path and a numpy fallback.

The active path follows :func:`surfepr._accel.get_backend`.
"""
import numpy as np

from .._accel import get_backend
from . import npy
from .rules import BARY3, BARY7, W3, W7, QuadratureConfig, gauss01, rule_points

__all__ = ["BARY3", "BARY7", "W3", "W7", "QuadratureConfig", "gauss01", "rule_points", "impl",
           "triangle_potential", "triangle_self_integral"]


def impl():
    """Module holding the active kernels."""
    if get_backend() == "numba":
        from . import nb
        return nb
    return npy


def triangle_potential(point, tri):
    """Closed-form int_T dA'/|r - r'| and its gradient for horizontal triangles.

    Parameters
    ----------
    point : array_like, shape (3,) or (n, 3)
    tri : array_like, shape (3, 3) or (n, 3, 3)
        Triangle vertices; the triangle must lie in a plane z = const.

    Returns
    -------
    phi : float or ndarray
    grad : ndarray, shape (3,) or (n, 3)
    """
    p = np.asarray(point, dtype=float)
    t = np.asarray(tri, dtype=float)
    single = p.ndim == 1
    p2 = np.atleast_2d(p)
    t3 = t.reshape(-1, 3, 3)
    if t3.shape[0] == 1 and p2.shape[0] > 1:
        t3 = np.repeat(t3, p2.shape[0], axis=0)
    _check_tri(t3)
    phi, g = npy.tri_pot_grad(p2, t3)
    if single:
        return float(phi[0]), g[0]
    return phi, g


def triangle_self_integral(tri):
    """Exact int_T int_T dA dA'/|r - r'|."""
    t = np.asarray(tri, dtype=float).reshape(-1, 3, 3)
    _check_tri(t)
    v = npy.self_integral(t)
    return float(v[0]) if np.ndim(tri) == 2 else v


def _check_tri(t):
    from ..errors import ConfigError
    e1 = t[:, 1, :2] - t[:, 0, :2]
    e2 = t[:, 2, :2] - t[:, 0, :2]
    a = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(~(a > 0)):
        raise ConfigError("degenerate triangle (zero area)")
    if np.any(np.abs(t[:, :, 2] - t[:, :1, 2]) > 1e-12 * (1 + np.abs(t).max())):
        raise ConfigError("triangle is not horizontal")
