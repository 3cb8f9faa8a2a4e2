"""Electric field evaluation and interface participation ratios.

Thin lossy layers (substrate-metal SM, substrate-air SA, metal-air MA) are
not meshed. Their energy is integrated from the field of the bulk solution
just beside the interface, rescaled for the layer permittivity by
continuity of tangential E and normal D. Depth integrals use
Gauss-Legendre nodes, so no evaluation happens on the interface itself.
"""
from dataclasses import dataclass, field
import csv
import io

import numpy as np

from .constants import EPS0
from .errors import ConfigError, NumericalError
from .greens import decay_length
from .kernels import BARY7, W7, gauss01, impl, rule_points
from .solver import _window_mask

KINDS = ("SM", "SA", "MA")
_PARTS = {"total": 1, "primary": 0, "scattered": 2}
# the scattered field is taken at mid depth when the layer is this thin
# compared with the decay length of the scattered part
FROZEN_SCT_RATIO = 1e-3

# evaluation counters (read by tests)
eval_stats = {"points": 0, "on_interface": 0}


@dataclass(frozen=True)
class InterfaceSpec:
    """One lossy interface layer.

    Parameters
    ----------
    kind : {"SM", "SA", "MA"}
    delta_nm : float
        Layer thickness in nm.
    eps_c : float
        Layer relative permittivity.
    interface : int
        Stackup interface holding the conductors.
    side : {"below", "above"}, optional
        Side on which the layer sits. SM and SA default to below (the
        substrate), MA to above.
    """

    kind: str
    delta_nm: float
    eps_c: float
    interface: int = 0
    side: str = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"interface kind must be one of {KINDS}, got {self.kind!r}")
        if not self.delta_nm > 0:
            raise ConfigError("interface thickness must be positive")
        if not self.eps_c > 0:
            raise ConfigError("interface permittivity must be positive")
        if self.side not in (None, "below", "above"):
            raise ConfigError("side must be 'below' or 'above'")

    @property
    def delta(self):
        """Thickness in µm."""
        return self.delta_nm * 1e-3

    @property
    def sign(self):
        side = self.side or ("above" if self.kind == "MA" else "below")
        return 1.0 if side == "above" else -1.0

    def bulk_eps(self, stackup):
        i = stackup.check_interface(self.interface)
        return stackup.layers[i + 1 if self.sign > 0 else i].eps

    def depth_nodes(self, order):
        """Gauss-Legendre depths in (0, delta) and weights (sum delta)."""
        if order < 2:
            raise ConfigError("gauss order must be at least 2")
        x, w = gauss01(order)
        return x * self.delta, w * self.delta

    def planes(self, stackup, order):
        """Depth-node planes plus the mid-depth plane."""
        z0 = stackup.interface_z[stackup.check_interface(self.interface)]
        zk = list(self.depth_nodes(order)[0]) + [0.5 * self.delta]
        return [z0 + self.sign * z for z in zk]

    def energy_weight(self, E, eps_bulk):
        """eps0 times the scaled |E|^2 (twice the layer energy density)."""
        En2 = E[..., 2] ** 2
        if self.kind == "SA":
            Et2 = E[..., 0] ** 2 + E[..., 1] ** 2
            return EPS0 * (self.eps_c * Et2 + eps_bulk ** 2 / self.eps_c * En2)
        return EPS0 * eps_bulk ** 2 / self.eps_c * En2


def energy_planes(stackup, interfaces, order=8):
    """Field planes needed to evaluate every interface (for table builds)."""
    zs = set(stackup.interface_z)
    for s in interfaces:
        zs.update(s.planes(stackup, order))
    return sorted(zs)


def evaluate_field(points, system, charges, part="total"):
    """Potential and field at points from triangle charges.

    Parameters
    ----------
    points : array_like, shape (K, 3)
    system : SystemMatrix
        Supplies the mesh, stackup and Green's tables.
    charges : array_like, shape (N,) or (N, R)
    part : {"total", "primary", "scattered"}
        Which part of the Green's function to use.

    Returns
    -------
    phi : ndarray, shape (K,) or (K, R), in V
    E : ndarray, shape (K, 3) or (K, R, 3), in V/µm
    """
    if part not in _PARTS:
        raise ConfigError(f"part must be one of {tuple(_PARTS)}")
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    q = np.asarray(charges, dtype=float)
    single = q.ndim == 1
    q2 = np.ascontiguousarray(q[:, None] if single else q)
    d = system.data
    mesh = system.mesh
    # reject points on a metal footprint plane
    for z in np.unique(pts[:, 2]):
        on = np.abs(mesh.tri[:, 0, 2] - z) == 0
        if np.any(on):
            raise NumericalError(f"field requested on the conductor plane z={z}; move the point off the surface")
    mode = _PARTS[part]
    if d.use_sct and mode:
        pplane = np.array([system.tables.plane_index(z) for z in pts[:, 2]], dtype=np.int64)
    else:
        pplane = np.zeros(len(pts), dtype=np.int64)
        if mode == 2:
            z = np.zeros((len(pts), q2.shape[1]))
            return (z[:, 0], np.zeros((len(pts), 3))) if single else (z, np.zeros(z.shape + (3,)))
        mode = 0
    eval_stats["points"] += len(pts)
    phi, E = impl().field(pts, pplane, d.tri, d.area, d.cen, d.diam, d.coef, d.src, d.q7, d.q3, q2, d.Gt, d.Grt,
                          d.Gzt, d.u0, d.du, mode, system.quad.as_array())
    if single:
        return phi[:, 0], E[:, 0]
    return phi, E


@dataclass
class InterfaceEnergy:
    """Energy integral of one interface.

    ``U`` is the integral of eps|E|^2 over the layer in fF V^2 and
    ``splits`` breaks it down by footprint owner. ``profile`` holds the
    depth nodes (µm) and the depth density (fF V^2 / µm).
    """

    spec: InterfaceSpec
    U: float
    splits: dict
    profile: tuple
    n_cells: int


def _cells(spec, system, window, sa_mesh):
    mesh = system.mesh
    if spec.kind == "SA":
        if sa_mesh is None or sa_mesh.n == 0:
            raise ConfigError("SA evaluation needs exposed-substrate footprints (sa_regions)")
        sel = _window_mask(sa_mesh, window) & (sa_mesh.iface == spec.interface)
        owner = np.array(["substrate"] * int(sel.sum()), dtype=object)
        return sa_mesh.tri[sel], sa_mesh.areas[sel], owner
    sel = _window_mask(mesh, window) & (mesh.iface == spec.interface)
    if not np.any(sel):
        raise ConfigError(f"no metal on interface {spec.interface} inside the window")
    names = np.array(mesh.net_names, dtype=object)
    return mesh.tri[sel], mesh.areas[sel], names[mesh.net[sel]]


def interface_energy(spec, system, solution, window=None, order=8, sa_mesh=None):
    """Integrate the scaled field energy of one interface layer.

    Parameters
    ----------
    spec : InterfaceSpec
    system : SystemMatrix
    solution : ChargeSolution
    window : Window, optional
        Restricts the footprint to cells with centroids inside.
    order : int
        Gauss-Legendre depth order.
    sa_mesh : SurfaceMesh, optional
        Evaluation cells for SA layers.

    Returns
    -------
    InterfaceEnergy
    """
    st = system.stackup
    tri, area, owner = _cells(spec, system, window, sa_mesh)
    zk, wk = spec.depth_nodes(order)
    z0 = st.interface_z[spec.interface]
    xy = rule_points(tri, BARY7)  # (nc, 7, 3)
    nc = len(tri)
    eps_b = spec.bulk_eps(st)
    dens = np.empty(order)
    per_cell = np.zeros(nc)
    base = xy.reshape(-1, 3)
    # a scattered field that is smooth across the layer is evaluated once
    Es = None
    if system.data.use_sct:
        D = min(decay_length(st, s, z0) for s in range(st.n_interfaces))
        if spec.delta <= FROZEN_SCT_RATIO * D:
            pts = base.copy()
            pts[:, 2] = z0 + spec.sign * 0.5 * spec.delta
            Es = evaluate_field(pts, system, solution.a, "scattered")[1]
    for k in range(order):
        pts = base.copy()
        pts[:, 2] = z0 + spec.sign * zk[k]
        if np.any(pts[:, 2] == z0):
            eval_stats["on_interface"] += 1
            raise NumericalError("depth node on the interface")
        if Es is None:
            E = evaluate_field(pts, system, solution.a)[1]
        else:
            E = evaluate_field(pts, system, solution.a, "primary")[1] + Es
        u = spec.energy_weight(E, eps_b).reshape(nc, 7) @ W7 * area
        per_cell += wk[k] * u
        dens[k] = u.sum()
    splits = {}
    for name in dict.fromkeys(owner):
        splits[str(name)] = float(per_cell[owner == name].sum())
    return InterfaceEnergy(spec, float(per_cell.sum()), splits, (zk, dens), nc)


def total_energy(system, solution, window=None):
    """Sum_k Q_k V_k with window-restricted charges (fF V^2)."""
    Q = solution.window_charges(system.mesh, window)
    return float(np.dot(Q, solution.V))


@dataclass
class EprReport:
    """Participation ratios of several interfaces for one excitation."""

    energies: list
    denominator: float
    meta: dict = field(default_factory=dict)

    @property
    def ratios(self):
        return {e.spec.kind: e.U / self.denominator for e in self.energies}

    def ratio(self, kind):
        for e in self.energies:
            if e.spec.kind == kind:
                return e.U / self.denominator
        raise KeyError(kind)

    def split_ratios(self, kind):
        for e in self.energies:
            if e.spec.kind == kind:
                return {k: v / self.denominator for k, v in e.splits.items()}
        raise KeyError(kind)

    def to_dict(self):
        rows = []
        for e in self.energies:
            rows.append({"kind": e.spec.kind, "delta_nm": e.spec.delta_nm, "eps_c": e.spec.eps_c,
                         "interface": e.spec.interface, "U_fF_V2": e.U, "P": e.U / self.denominator,
                         "splits": {k: v / self.denominator for k, v in e.splits.items()},
                         "cells": e.n_cells})
        return {"schema_version": 1, "interfaces": rows, "denominator_fF_V2": self.denominator,
                "total_P": sum(r["P"] for r in rows), **self.meta}

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "delta_nm", "eps_c", "U_fF_V2", "P"])
        for e in self.energies:
            w.writerow([e.spec.kind, e.spec.delta_nm, e.spec.eps_c, repr(e.U), repr(e.U / self.denominator)])
        return buf.getvalue()


def epr_report(system, solution, interfaces, window=None, order=8, sa_mesh=None):
    """Participation ratios P_i = int eps|E|^2 / sum Q_k V_k.

    Numerator and denominator both use the window when one is given.
    """
    den = total_energy(system, solution, window)
    if not den > 0:
        raise NumericalError(f"non-positive energy denominator {den!r} (zero excitation?)")
    energies = [interface_energy(s, system, solution, window, order, sa_mesh) for s in interfaces]
    meta = {"gauss_order": order, "n_elements": system.n}
    return EprReport(energies, den, meta)


@dataclass(frozen=True)
class LossModel:
    """Qubit frequency (rad/s) and loss tangent per interface kind."""

    omega_q: float
    tan_delta: dict

    def __post_init__(self):
        if self.omega_q < 0 or any(v < 0 for v in self.tan_delta.values()):
            raise ConfigError("frequency and loss tangents must be non-negative")


def relaxation_rate(report, loss):
    """Gamma = omega_q sum_i P_i tan(delta_i) in 1/s."""
    r = report.ratios if isinstance(report, EprReport) else dict(report)
    return loss.omega_q * sum(p * loss.tan_delta.get(k, 0.0) for k, p in r.items())
