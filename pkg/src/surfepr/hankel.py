"""Ogata double-exponential quadrature for Hankel transforms.

The inverse transform used throughout is

    F(rho) = int_0^inf F~(lam) J_nu(lam rho) lam^p dlam,

evaluated by substituting x = lam rho and applying Ogata's Bessel-zero
rule with the mapping psi(t) = t tanh(pi/2 sinh t).
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy import special

from .errors import ConfigError, ConvergenceError


def bessel_zeros(nu, n):
    """First ``n`` positive zeros of J_nu for nu in {0, 1}.

    McMahon's asymptotic expansion seeds Newton iterations on scipy's J0/J1.
    """
    if nu not in (0, 1):
        raise ConfigError("only J0 and J1 zeros are supported")
    k = np.arange(1, n + 1, dtype=float)
    mu = 4.0 * nu * nu
    beta = (k + 0.5 * nu - 0.25) * math.pi
    b8 = 8.0 * beta
    x = (beta - (mu - 1) / b8 - 4 * (mu - 1) * (7 * mu - 31) / (3 * b8 ** 3)
         - 32 * (mu - 1) * (83 * mu * mu - 982 * mu + 3779) / (15 * b8 ** 5))
    for _ in range(4):
        if nu == 0:
            step = special.j0(x) / (-special.j1(x))
        else:
            j1 = special.j1(x)
            step = j1 / (special.j0(x) - j1 / x)
        x = x - step
        if np.max(np.abs(step) / x) < 1e-16:
            break
    return x


def _psi(t):
    return t * np.tanh(0.5 * math.pi * np.sinh(t))


def _dpsi(t):
    # overflow-safe: the derivative tends to 1 once pi sinh t is large
    out = np.ones_like(t)
    s = np.pi * np.sinh(t)
    m = s < 700.0
    tm, sm = t[m], s[m]
    out[m] = (math.pi * tm * np.cosh(tm) + np.sinh(sm)) / (1.0 + np.cosh(sm))
    return out


@lru_cache(maxsize=64)
def _zeros_cached(nu, n):
    z = bessel_zeros(nu, n)
    w = special.yv(nu, z) / special.jv(nu + 1, z)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def ogata_nodes(nu, h, n):
    """Nodes x_k and weights W_k such that int f(x) J_nu(x) dx ~ sum W_k f(x_k)."""
    z, w = _zeros_cached(nu, n)
    xi = z / math.pi
    t = h * xi
    x = math.pi * _psi(t) / h
    W = math.pi * w * special.jv(nu, x) * _dpsi(t)
    return x, W


@dataclass(frozen=True)
class OgataConfig:
    """Convergence control for the Ogata transform.

    Parameters
    ----------
    h0 : float
        Largest step in the mapped variable.
    n0 : int
        Minimum node count.
    tol : float
        Relative agreement required between successive step halvings.
    max_rounds : int
        Cap on halvings.
    decay_length : float
        Length D over which the spectral function decays like exp(-lam D);
        sets the step and the node extent. ``inf`` means no decay scale.
    x_span : float
        Node extent in units of rho / D.
    """

    h0: float = 0.1
    n0: int = 64
    tol: float = 1e-12
    max_rounds: int = 8
    decay_length: float = math.inf
    x_span: float = 40.0


def _round_start(rho, cfg):
    D = cfg.decay_length
    if math.isfinite(D) and D > 0:
        h = min(cfg.h0, rho / (40.0 * D))
        xmax = max(cfg.x_span * rho / D, 0.0)
    else:
        h, xmax = cfg.h0, 0.0
    return h, xmax


def _nodes_covering(nu, h, n, xmax):
    while True:
        x, W = ogata_nodes(nu, h, n)
        if x[-1] >= xmax or n >= 1 << 16:
            return x, W, n
        n *= 2


def inverse_hankel_ogata(spectral_fn, rho, config=None, nu=0, power=1):
    """Inverse Hankel transform int F~(lam) J_nu(lam rho) lam^power dlam.

    Parameters
    ----------
    spectral_fn : callable
        Maps an array of lambda values to an array of shape (K,) or (K, m).
    rho : float
        Radial distance (> 0).
    config : OgataConfig, optional
    nu : {0, 1}
        Bessel order.
    power : int
        Power of lambda in the integrand (1 for the potential, 2 for the
        radial derivative kernel).

    Returns
    -------
    float or ndarray
        Transform value(s).
    """
    if not rho > 0:
        raise ConfigError(f"rho must be positive, got {rho!r}")
    cfg = config or OgataConfig()
    h, xmax = _round_start(rho, cfg)
    n = cfg.n0
    prev = None
    for _ in range(cfg.max_rounds + 1):
        x, W, n = _nodes_covering(nu, h, n, xmax)
        f = np.asarray(spectral_fn(x / rho), dtype=float)
        xp = x ** power
        if f.ndim == 1:
            val = np.dot(W * xp, f) / rho ** (power + 1)
        else:
            val = (W * xp) @ f / rho ** (power + 1)
        if prev is not None:
            scale = np.max(np.abs(val))
            if np.max(np.abs(val - prev)) <= cfg.tol * scale or scale == 0.0:
                return val
        prev = val
        h *= 0.5  # node count only grows when coverage of xmax needs it
    raise ConvergenceError(f"Ogata transform did not converge at rho={rho}", (prev, val))
