"""Galerkin assembly, charge neutrality, multi-RHS solves and capacitance.

Unknowns are triangle charges a_j in fC with a uniform density a_j/A_j on
each triangle. Row i of the system states that the average potential over
triangle i equals the potential of its net.
"""
from dataclasses import dataclass, field
import csv
import io
import math
import os
import time
import warnings

import numpy as np
from scipy import linalg

from .constants import EPS0
from .errors import ConfigError, NumericalError, TableRangeError
from .greens import TableSet, decay_length
from .kernels import BARY3, BARY7, QuadratureConfig, gauss01, impl, rule_points

_DUMMY = np.zeros((1, 1, 6))


def table_rho_range(stackup, extent):
    """(rho_min, rho_max) covering all source-field separations up to ``extent``."""
    D = min(decay_length(stackup, s, stackup.interface_z[s]) for s in range(stackup.n_interfaces))
    D = D if math.isfinite(D) else 1.0
    return min(1e-6, 1e-5 * D), 1.05 * extent + 1e-9


def build_tables(stackup, planes, extent, interfaces=None, per_decade=64, ogata=None):
    """Green's tables for the given source interfaces and field planes."""
    interfaces = range(stackup.n_interfaces) if interfaces is None else interfaces
    planes = sorted(set(float(p) for p in planes) | set(stackup.interface_z))
    return TableSet.build(stackup, list(interfaces), planes, table_rho_range(stackup, extent), per_decade, ogata)


@dataclass
class KernelData:
    """Flat arrays describing a mesh for the kernels."""

    tri: np.ndarray
    area: np.ndarray
    cen: np.ndarray
    diam: np.ndarray
    coef: np.ndarray
    src: np.ndarray
    plane: np.ndarray
    q7: np.ndarray
    q3: np.ndarray
    Gt: np.ndarray
    Grt: np.ndarray
    Gzt: np.ndarray
    u0: float
    du: float
    use_sct: bool

    @classmethod
    def build(cls, mesh, stackup, tables=None):
        st = stackup
        tri = np.ascontiguousarray(mesh.tri)
        eps_eff = np.array([st.eps_eff(s) for s in range(st.n_interfaces)])
        coef = 1.0 / (4 * math.pi * EPS0 * eps_eff[mesh.iface])
        z = np.array(st.interface_z)[mesh.iface]
        if np.any(np.abs(tri[:, :, 2] - z[:, None]) > 1e-9 * (1 + np.abs(z[:, None]))):
            raise ConfigError("mesh triangles do not lie on their interfaces")
        use_sct = tables is not None and not tables.trivial
        if use_sct:
            plane = np.array([tables.plane_index(zz) for zz in z], dtype=np.int64)
            Gt, Grt, Gzt, u0, du = tables.G, tables.Gr, tables.Gz, tables.u0, tables.du
        else:
            if tables is None and not st.is_reflectionless():
                raise ConfigError("this stackup has a scattered field; a Green's table is required")
            plane = np.zeros(mesh.n, dtype=np.int64)
            Gt = Grt = Gzt = _DUMMY
            u0, du = 0.0, 1.0
        return cls(tri, mesh.areas.copy(), mesh.centroids, mesh.diameters, coef, mesh.iface.copy(), plane,
                   np.ascontiguousarray(rule_points(tri, BARY7)), np.ascontiguousarray(rule_points(tri, BARY3)),
                   Gt, Grt, Gzt, float(u0), float(du), bool(use_sct))


def _check_coverage(mesh, tables):
    if tables is None or tables.trivial:
        return
    c = mesh.tri.reshape(-1, 3)[:, :2]
    ext = float(np.hypot(*(c.max(axis=0) - c.min(axis=0))))
    if ext > tables.rho_max:
        raise TableRangeError(f"mesh extent {ext:.6g} µm exceeds the Green's table range {tables.rho_max:.6g} µm")


@dataclass
class SystemMatrix:
    """Dense Galerkin matrix and the data it was built from.

    Attributes
    ----------
    P : ndarray, shape (N, N)
        Potential (V) averaged over triangle i per fC on triangle j.
    tiers : ndarray of int8, shape (N, N)
        Integration rule used per pair (0 Duffy, 1 analytic inner,
        2 seven-point, 3 three-point, 4 centroid, 5 exact self term).
    """

    P: np.ndarray
    mesh: object
    stackup: object
    tables: object
    data: KernelData
    quad: QuadratureConfig
    tiers: np.ndarray = None
    wall_time: float = 0.0

    @property
    def n(self):
        return self.P.shape[0]

    def symmetry_error(self):
        P = self.P
        return float(np.max(np.abs(P - P.T)) / np.max(np.abs(P)))


def max_elements(fraction=0.75):
    """Largest N whose matrix, factorization and tier map fit in memory."""
    try:
        phys = os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):
        phys = 16 * 2 ** 30
    return int(math.sqrt(fraction * phys / 17.0))


def assemble(mesh, stackup, tables=None, quad=None, element_limit=None):
    """Assemble the Galerkin matrix of a mesh.

    Parameters
    ----------
    mesh : SurfaceMesh
    stackup : Stackup
    tables : TableSet, optional
        Required unless the stackup has no scattered field.
    quad : QuadratureConfig, optional
    element_limit : int, optional
        Guard against dense systems that would not fit in memory; defaults
        to :func:`max_elements`.

    Returns
    -------
    SystemMatrix
    """
    limit = element_limit or max_elements()
    if mesh.n > limit:
        raise ConfigError(f"mesh has {mesh.n} elements; matrix and factorization need "
                          f"{17 * mesh.n ** 2 / 2 ** 30:.1f} GiB (limit {limit} elements). Coarsen the mesh")
    quad = quad or QuadratureConfig()
    t0 = time.perf_counter()
    mesh.check()
    _check_coverage(mesh, tables)
    d = KernelData.build(mesh, stackup, tables)
    gx, gw = gauss01(quad.duffy_order)
    tiers = np.zeros((mesh.n, mesh.n), dtype=np.int8)
    P = impl().assemble(d.tri, d.area, d.cen, d.diam, d.coef, d.src, d.plane, d.q7, d.q3, d.Gt, d.u0, d.du,
                        d.use_sct, quad.as_array(), gx, gw, tiers)
    if not np.all(np.isfinite(P)):
        raise NumericalError("non-finite entries in the assembled matrix")
    return SystemMatrix(P, mesh, stackup, tables, d, quad, tiers, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# neutrality and solves

def apply_neutrality(P, phi):
    """Replace the last equation by the charge-neutrality constraint.

    Rows 0..N-2 become row_i - row_{N-1} with right side phi_i - phi_{N-1};
    the last row becomes all ones with right side 0.

    Parameters
    ----------
    P : ndarray, shape (N, N)
    phi : ndarray, shape (N,) or (N, R)

    Returns
    -------
    P2, phi2 : regularized matrix and right-hand side(s)
    """
    if P.shape[0] < 2:
        raise ConfigError("neutrality needs at least two unknowns")
    P2 = P - P[-1][None, :]
    P2[-1] = 1.0
    phi = np.asarray(phi, dtype=float)
    phi2 = phi - phi[-1]
    phi2[-1] = 0.0
    return P2, phi2


def _neutral_default(stackup, neutrality):
    if neutrality == "auto":
        return not stackup.has_pec
    return bool(neutrality)


@dataclass
class ChargeSolution:
    """Triangle charges for one excitation.

    Attributes
    ----------
    a : ndarray, shape (N,)
        Charge per triangle in fC.
    V : ndarray
        Net potentials in V.
    Q : ndarray
        Total charge per net in fC.
    residual : float
        Relative residual of the solved (regularized) system.
    """

    a: np.ndarray
    V: np.ndarray
    Q: np.ndarray
    residual: float

    def window_charges(self, mesh, window):
        sel = _window_mask(mesh, window)
        return np.bincount(mesh.net[sel], weights=self.a[sel], minlength=len(self.V))


def _window_mask(mesh, window):
    if window is None:
        return np.ones(mesh.n, bool)
    sel = window.contains(mesh.centroids[:, :2])
    if not np.any(sel):
        raise ConfigError("the de-embedding window contains no triangles")
    return sel


class ChargeSolver:
    """LU factorization of a system matrix reused across excitations.

    Parameters
    ----------
    system : SystemMatrix
    neutrality : bool or "auto"
        Apply the charge-neutrality constraint. ``"auto"`` applies it
        when the stackup has no perfect-conductor plane (charge cannot
        leave through a ground).
    """

    def __init__(self, system, neutrality="auto"):
        self.system = system
        self.neutral = _neutral_default(system.stackup, neutrality)
        P = system.P
        # one C-ordered working copy; its transpose is Fortran-ordered, so
        # LAPACK factors it in place and solves use trans=1
        work = apply_neutrality(P, np.zeros(P.shape[0]))[0] if self.neutral else P.copy()
        t0 = time.perf_counter()
        try:
            with np.errstate(all="raise"), warnings.catch_warnings():
                warnings.simplefilter("ignore", linalg.LinAlgWarning)
                self.lu = linalg.lu_factor(work.T, overwrite_a=True, check_finite=True)
        except (linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            raise NumericalError(f"factorization failed: {exc}") from exc
        piv = np.abs(np.diag(self.lu[0]))
        if np.any(piv == 0) or piv.min() < 1e-14 * piv.max():
            k = int(np.argmin(piv))
            raise NumericalError(f"singular system matrix: pivot {k} is {piv[k]:.3e} (max {piv.max():.3e})")
        self.factor_time = time.perf_counter() - t0

    def _rhs(self, phi):
        if not self.neutral:
            return phi
        out = phi - phi[-1]
        out[-1] = 0.0
        return out

    def apply(self, a):
        """Product of the (regularized) system matrix with charges a."""
        r = self.system.P @ a
        if self.neutral:
            r = r - r[-1]
            r[-1] = a.sum(axis=0)
        return r

    def solve(self, excitations):
        """Solve for one or more net-potential vectors.

        Parameters
        ----------
        excitations : array_like, shape (n_nets,) or (R, n_nets)

        Returns
        -------
        list of ChargeSolution
        """
        mesh = self.system.mesh
        V = np.atleast_2d(np.asarray(excitations, dtype=float))
        nn = len(mesh.net_names)
        if V.shape[1] != nn:
            raise ConfigError(f"excitation needs {nn} potentials, got {V.shape[1]}")
        phi = V[:, mesh.net].T  # (N, R)
        rhs = self._rhs(phi)
        a = linalg.lu_solve(self.lu, rhs, trans=1)
        r = self.apply(a) - rhs
        out = []
        for k in range(V.shape[0]):
            nrm = np.linalg.norm(rhs[:, k])
            res = float(np.linalg.norm(r[:, k]) / nrm) if nrm > 0 else float(np.linalg.norm(r[:, k]))
            if res > 1e-10 and nrm > 0:
                raise NumericalError(f"solve residual {res:.2e} exceeds 1e-10 for excitation {k}")
            Q = np.bincount(mesh.net, weights=a[:, k], minlength=nn)
            out.append(ChargeSolution(a[:, k].copy(), V[k].copy(), Q, res))
        return out


def solve_charges(system, excitations, neutrality="auto"):
    """Factor once and solve every excitation (see :class:`ChargeSolver`)."""
    return ChargeSolver(system, neutrality).solve(excitations)


@dataclass
class CapacitanceMatrix:
    """Capacitance matrix in fF.

    ``C[p, q]`` is the charge on net p for unit potential on net q with
    all other nets at zero. With a window only triangles whose centroids
    lie inside contribute, and ``length`` holds the window length along y.
    """

    C: np.ndarray
    names: tuple
    length: float = None
    neutral: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def per_length(self):
        if not self.length:
            raise ConfigError("no window length recorded")
        return self.C / self.length

    def symmetry_error(self):
        C = self.C
        off = [abs(C[p, q] - C[q, p]) / abs(C[p, q]) for p in range(len(C)) for q in range(len(C))
               if p != q and C[p, q] != 0]
        return max(off) if off else 0.0

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["net"] + list(self.names))
        for n, row in zip(self.names, self.C):
            w.writerow([n] + [repr(float(v)) for v in row])
        return buf.getvalue()

    def report(self):
        return {"schema_version": 1, "nets": list(self.names), "C_fF": self.C.tolist(),
                "window_length_um": self.length, "neutral": self.neutral, **self.meta}


def capacitance_matrix(system, window=None, neutrality="auto", solver=None):
    """Maxwell capacitance matrix from unit excitations of every net.

    Returns
    -------
    CapacitanceMatrix, list of ChargeSolution
    """
    solver = solver or ChargeSolver(system, neutrality)
    n = len(system.mesh.net_names)
    sols = solver.solve(np.eye(n))
    sel = _window_mask(system.mesh, window)
    C = np.empty((n, n))
    for q, s in enumerate(sols):
        C[:, q] = np.bincount(system.mesh.net[sel], weights=s.a[sel], minlength=n)
    L = window.length_y if window is not None else None
    meta = {"n_elements": system.n, "assembly_s": system.wall_time, "factor_s": solver.factor_time,
            "max_residual": max(s.residual for s in sols)}
    return CapacitanceMatrix(C, tuple(system.mesh.net_names), L, solver.neutral, meta), sols
