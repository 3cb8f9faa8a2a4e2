"""Spectral-domain layered Green's function.

For a point charge on interface ``s`` the Hankel-transformed potential in
layer ``l`` is written with locally referenced exponentials,

    G~_l(z) = a_l exp(lam (z - top_l)) + b_l exp(-lam (z - bot_l)),

so every exponential is bounded by one inside its layer. The primary part
exp(-lam |z - z_s|) / (4 pi eps0 eps_eff lam) is subtracted analytically
and the linear system is solved directly for the scattered coefficients.
This keeps the scattered part accurate to relative precision even when it
is many orders of magnitude below the primary part.
"""
from dataclasses import dataclass
import math

import numpy as np

from .constants import EPS0
from .errors import ConfigError, NumericalError


def spectral_primary(lam, dz, eps_eff):
    """exp(-lam |dz|) / (4 pi eps0 eps_eff lam)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ConfigError("spectral variable must be positive")
    if eps_eff <= 0:
        raise ConfigError("effective permittivity must be positive")
    return np.exp(-lam * abs(dz)) / (4 * math.pi * EPS0 * eps_eff * lam)


@dataclass
class SpectralSolution:
    """Solution of the layered boundary-value problem for a batch of lambdas.

    Attributes
    ----------
    lam : ndarray, shape (K,)
    source_interface : int
    a_sct, b_sct : ndarray, shape (K, L)
        Scattered coefficients per layer.
    a_prm, b_prm : ndarray, shape (K, L)
        Primary coefficients in the same local representation.
    residual : float
        Max relative residual of the total-field system.
    """

    stackup: object
    lam: np.ndarray
    source_interface: int
    a_sct: np.ndarray
    b_sct: np.ndarray
    a_prm: np.ndarray
    b_prm: np.ndarray
    residual: float

    def _basis(self, z):
        st = self.stackup
        lo, hi = st.layer_bounds()
        l = _layer_index(st, z)
        lam = self.lam
        ea = np.exp(lam * (z - hi[l])) if math.isfinite(hi[l]) else np.zeros_like(lam)
        eb = np.exp(-lam * (z - lo[l])) if math.isfinite(lo[l]) else np.zeros_like(lam)
        return l, ea, eb

    def scattered(self, z):
        """Scattered spectral value at z (array over lam)."""
        l, ea, eb = self._basis(z)
        return self.a_sct[:, l] * ea + self.b_sct[:, l] * eb

    def scattered_dz(self, z):
        l, ea, eb = self._basis(z)
        return self.lam * (self.a_sct[:, l] * ea - self.b_sct[:, l] * eb)

    def primary(self, z):
        zs = self.stackup.interface_z[self.source_interface]
        return spectral_primary(self.lam, z - zs, self.stackup.eps_eff(self.source_interface))

    def total(self, z):
        return self.primary(z) + self.scattered(z)


def _layer_index(stackup, z):
    """Layer of a field point; points exactly on an interface use the layer above."""
    l = 0
    for zi in stackup.interface_z:
        if z >= zi:
            l += 1
    return l


def _system(stackup, lam):
    """Assemble the 2L x 2L matrices for a batch of lambdas.

    Unknown order is (a_0, b_0, a_1, b_1, ...). Row 0 is the bottom
    condition, rows 1 + 2i and 2 + 2i are continuity and flux at interface
    i, and the last row is the top condition.
    """
    L = stackup.n_layers
    K = lam.size
    eps = stackup.eps
    lo, hi = stackup.layer_bounds()
    thick = hi - lo
    # exp(-lam t) per layer; zero for unbounded layers
    E = np.zeros((K, L))
    for l in range(L):
        if math.isfinite(thick[l]):
            E[:, l] = np.exp(-lam * thick[l])
    M = np.zeros((K, 2 * L, 2 * L))
    if stackup.bottom_pec is None:
        M[:, 0, 1] = 1.0  # b_0 = 0
    else:
        M[:, 0, 0] = E[:, 0]  # value at the plane
        M[:, 0, 1] = 1.0
    for i in range(L - 1):
        r = 1 + 2 * i
        # layer i evaluated at its top, layer i+1 at its bottom
        M[:, r, 2 * i] = -1.0
        M[:, r, 2 * i + 1] = -E[:, i]
        M[:, r, 2 * i + 2] = E[:, i + 1]
        M[:, r, 2 * i + 3] = 1.0
        M[:, r + 1, 2 * i] = -eps[i]
        M[:, r + 1, 2 * i + 1] = eps[i] * E[:, i]
        M[:, r + 1, 2 * i + 2] = eps[i + 1] * E[:, i + 1]
        M[:, r + 1, 2 * i + 3] = -eps[i + 1]
    if stackup.top_pec is None:
        M[:, -1, 2 * L - 2] = 1.0  # a_top = 0
    else:
        M[:, -1, 2 * L - 2] = 1.0
        M[:, -1, 2 * L - 1] = E[:, L - 1]
    return M, E


def _primary_coefficients(stackup, lam, s):
    """Primary field written in the local per-layer representation."""
    L = stackup.n_layers
    lo, hi = stackup.layer_bounds()
    zs = stackup.interface_z[s]
    P = 1.0 / (4 * math.pi * EPS0 * stackup.eps_eff(s) * lam)
    a = np.zeros((lam.size, L))
    b = np.zeros((lam.size, L))
    for l in range(L):
        if l <= s:
            # below the source: P exp(lam (z - zs)) = P exp(-lam (zs - top)) exp(lam (z - top))
            a[:, l] = P * np.exp(-lam * (zs - hi[l]))
        else:
            b[:, l] = P * np.exp(-lam * (lo[l] - zs))
    return a, b


def solve_spectral(stackup, lam, source_interface, check=True):
    """Solve the layered spectral problem for one source interface.

    Parameters
    ----------
    stackup : Stackup
    lam : float or array_like
        Spectral variable(s) in 1/µm, all > 0.
    source_interface : int
    check : bool
        Compute the total-field residual (skipped in table builds).

    Returns
    -------
    SpectralSolution
    """
    s = stackup.check_interface(source_interface)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(~(lam > 0)) or np.any(~np.isfinite(lam)):
        raise ConfigError("spectral variable lambda must be positive and finite")
    L = stackup.n_layers
    M, E = _system(stackup, lam)
    a_p, b_p = _primary_coefficients(stackup, lam, s)
    p = np.empty((lam.size, 2 * L))
    p[:, 0::2] = a_p
    p[:, 1::2] = b_p
    rhs = -np.einsum("kij,kj->ki", M, p)
    # the primary satisfies both source-interface conditions exactly
    rhs[:, 1 + 2 * s] = 0.0
    rhs[:, 2 + 2 * s] = 0.0
    try:
        c = np.linalg.solve(M, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(_diagnose(stackup, M)) from exc
    if not np.all(np.isfinite(c)):
        raise NumericalError(_diagnose(stackup, M))
    if not check:
        return SpectralSolution(stackup, lam, s, c[:, 0::2], c[:, 1::2], a_p, b_p, float("nan"))
    # residual of the full system with the delta-source jump
    full = np.zeros_like(rhs)
    full[:, 2 + 2 * s] = -1.0 / (2 * math.pi * EPS0 * lam)
    tot = c + p
    r = np.einsum("kij,kj->ki", M, tot) - full
    scale = np.abs(M).max(axis=(1, 2)) * np.abs(tot).max(axis=1) + np.abs(full).max(axis=1)
    resid = float(np.max(np.abs(r).max(axis=1) / scale))
    return SpectralSolution(stackup, lam, s, c[:, 0::2], c[:, 1::2], a_p, b_p, resid)


def _diagnose(stackup, M):
    for l, lay in enumerate(stackup.layers):
        if lay.eps <= 0:
            return f"layer {l} has non-positive permittivity"
    return f"singular spectral system for stackup with {stackup.n_layers} layers (check layer thicknesses)"


def stackup_residual(stackup, lam, source_interface):
    """Relative interface-condition residual of the total solution."""
    return solve_spectral(stackup, lam, source_interface).residual
