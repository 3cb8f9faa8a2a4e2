"""Spatial layered Green's function, its gradient, and the radial lookup table.

The total potential of a unit point charge on interface ``s`` is
``G = G_prm + G_sct`` with the closed-form primary part
``1 / (4 pi eps0 eps_eff r)`` and a smooth scattered remainder obtained
by Ogata inversion of the scattered spectral function.
"""
from dataclasses import dataclass, field
import csv
import io
import json
import math

import numpy as np

from .constants import EPS0
from .errors import ConfigError, NumericalError, TableRangeError
from .hankel import OgataConfig, inverse_hankel_ogata
from .spectral import solve_spectral

TABLE_FORMAT_VERSION = 1


def decay_length(stackup, s, z):
    """Shortest spectral decay length of the scattered field at plane z.

    Every scattered path either bounces off a reflector (another interface
    or a PEC plane) or, when z lies beyond another interface, crosses it.
    """
    zs = stackup.interface_z[s]
    refl = [zz for i, zz in enumerate(stackup.interface_z) if i != s]
    if stackup.bottom_pec is not None:
        refl.append(stackup.bottom_pec)
    if stackup.top_pec is not None:
        refl.append(stackup.top_pec)
    d = [abs(zs - zr) + abs(z - zr) for zr in refl]
    for zr in refl:
        if min(z, zs) < zr < max(z, zs):
            d.append(abs(z - zs))
    return min(d) if d else math.inf


def _plane_fn(stackup, s, planes, deriv):
    """Spectral integrand for several planes at once."""
    planes = list(planes)

    def f(lam):
        sol = solve_spectral(stackup, lam, s, check=False)
        cols = [sol.scattered(z) for z in planes]
        if deriv:
            cols += [sol.scattered_dz(z) for z in planes]
        return np.stack(cols, axis=1)
    return f


class LayeredGreens:
    """Direct (untabulated) evaluation of the layered Green's function.

    Parameters
    ----------
    stackup : Stackup
    ogata : OgataConfig, optional
        Base configuration; the decay length is filled in per query.
    """

    def __init__(self, stackup, ogata=None):
        self.stackup = stackup
        self.ogata = ogata or OgataConfig()

    def _cfg(self, s, planes):
        D = min(decay_length(self.stackup, s, z) for z in planes)
        return OgataConfig(h0=self.ogata.h0, n0=self.ogata.n0, tol=self.ogata.tol,
                           max_rounds=self.ogata.max_rounds, decay_length=D, x_span=self.ogata.x_span)

    def scattered(self, s, rho, planes, force=False):
        """Scattered part and its gradient at several planes.

        Reflectionless stackups return zeros without transforming unless
        ``force`` is set, in which case the spectral solve and the Hankel
        transform run as for any other stackup.

        Returns
        -------
        G, dG_drho, dG_dz : ndarray, shape (P,)
        """
        s = self.stackup.check_interface(s)
        planes = np.atleast_1d(np.asarray(planes, dtype=float))
        P = planes.size
        if self.stackup.is_reflectionless() and not force:
            z = np.zeros(P)
            return z, z.copy(), z.copy()
        if rho <= 0:
            raise ConfigError("rho must be positive for the scattered transform")
        cfg = self._cfg(s, planes)
        v = inverse_hankel_ogata(_plane_fn(self.stackup, s, planes, True), rho, cfg, nu=0, power=1)
        r = inverse_hankel_ogata(_plane_fn(self.stackup, s, planes, False), rho, cfg, nu=1, power=2)
        return v[:P], -r, v[P:]

    def primary(self, s, rho, z):
        zs = self.stackup.interface_z[s]
        r = math.hypot(rho, z - zs)
        return 1.0 / (4 * math.pi * EPS0 * self.stackup.eps_eff(s) * r)

    def total(self, s, rho, z, zp=None):
        """Total Green's function.

        Parameters
        ----------
        s : int
            Source interface.
        rho : float
            Radial distance in µm.
        z : float
            Field height in µm.
        zp : float, optional
            Source height; must equal the interface height when given.

        Returns
        -------
        value : float
            G_prm + G_sct, or only G_sct at the source point.
        singular : bool
            True when the primary part was dropped because r = 0.
        """
        s = self.stackup.check_interface(s)
        zs = self.stackup.interface_z[s]
        if zp is not None and zp != zs:
            raise ConfigError(f"source z={zp} is not on interface {s} (z={zs})")
        if rho < 0:
            raise ConfigError("rho must be non-negative")
        sing = rho == 0 and z == zs
        g_sct = self.scattered(s, rho, [z])[0][0] if rho > 0 else self.scattered_at_axis(s, z)
        if sing:
            return g_sct, True
        return self.primary(s, rho, z) + g_sct, False

    def scattered_at_axis(self, s, z):
        """G_sct on the axis rho = 0, by a direct spectral integral."""
        from scipy import integrate
        if self.stackup.is_reflectionless():
            return 0.0
        D = decay_length(self.stackup, s, z)
        f = lambda lam: float(solve_spectral(self.stackup, lam, s).scattered(z)[0]) * lam
        val, _ = integrate.quad(f, 0.0, 60.0 / D, epsabs=0.0, epsrel=1e-12, limit=200)
        return val

    def gradient(self, s, rho, z, zp=None):
        """(dG/drho, dG/dz) of the total Green's function."""
        s = self.stackup.check_interface(s)
        zs = self.stackup.interface_z[s]
        if zp is not None and zp != zs:
            raise ConfigError(f"source z={zp} is not on interface {s}")
        dz = z - zs
        r2 = rho * rho + dz * dz
        if r2 == 0:
            raise NumericalError("gradient requested at the source point")
        c = 1.0 / (4 * math.pi * EPS0 * self.stackup.eps_eff(s) * r2 ** 1.5)
        if rho > 0:
            _, gr, gz = self.scattered(s, rho, [z])
            gr, gz = gr[0], gz[0]
        else:
            gr, gz = 0.0, self._axis_dz(s, z)
        return -c * rho + gr, -c * dz + gz

    def _axis_dz(self, s, z):
        from scipy import integrate
        if self.stackup.is_reflectionless():
            return 0.0
        D = decay_length(self.stackup, s, z)
        f = lambda lam: float(solve_spectral(self.stackup, lam, s).scattered_dz(z)[0]) * lam
        val, _ = integrate.quad(f, 0.0, 60.0 / D, epsabs=0.0, epsrel=1e-12, limit=200)
        return val


def greens_total(stackup, source_interface, rho, z, zp=None):
    """Convenience wrapper around :meth:`LayeredGreens.total`."""
    return LayeredGreens(stackup).total(source_interface, rho, z, zp)


def greens_gradient(stackup, source_interface, rho, z, zp=None):
    """Convenience wrapper around :meth:`LayeredGreens.gradient`."""
    return LayeredGreens(stackup).gradient(source_interface, rho, z, zp)


# ---------------------------------------------------------------------------
# lookup table

INTERP_POINTS = 6  # quintic Lagrange in log(rho)


def lagrange_weights(t, n=INTERP_POINTS):
    """Lagrange weights for equispaced nodes 0..n-1 at fractional position t."""
    w = np.ones(n)
    for j in range(n):
        for m in range(n):
            if m != j:
                w[j] *= (t - m) / (j - m)
    return w


@dataclass
class GreensTable:
    """Scattered Green's function sampled on a log-spaced radial grid.

    Attributes
    ----------
    source_interface : int
    planes : ndarray, shape (P,)
        Field-plane heights in µm.
    u0, du : float
        ``rho_i = exp(u0 + i du)``.
    G, Gr, Gz : ndarray, shape (P, M)
        Scattered value and gradient components.
    trivial : bool
        True when the stackup has no scattered field (all values zero).
    """

    stackup_digest: str
    source_interface: int
    planes: np.ndarray
    u0: float
    du: float
    G: np.ndarray
    Gr: np.ndarray
    Gz: np.ndarray
    trivial: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def n_rho(self):
        return self.G.shape[1]

    @property
    def rho(self):
        return np.exp(self.u0 + self.du * np.arange(self.n_rho))

    @property
    def rho_min(self):
        return math.exp(self.u0)

    @property
    def rho_max(self):
        return math.exp(self.u0 + self.du * (self.n_rho - 1))

    def plane_index(self, z, tol=1e-12):
        d = np.abs(self.planes - z)
        i = int(np.argmin(d))
        if d[i] > tol * max(1.0, abs(z)):
            raise ConfigError(f"plane z={z} not in table (planes: {self.planes})")
        return i

    def query(self, plane, rho):
        """Interpolated (G, dG/drho, dG/dz) at plane index ``plane``.

        ``rho`` may be an array. Below rho_min the near-zero rule applies;
        beyond rho_max a :class:`TableRangeError` is raised.
        """
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        if self.trivial:
            z = np.zeros_like(rho)
            return z, z.copy(), z.copy()
        if np.any(rho > self.rho_max * (1 + 1e-12)):
            raise TableRangeError(f"rho={rho.max():.6g} exceeds table range {self.rho_max:.6g}; rebuild the table")
        return interp_table(self.G[plane], self.Gr[plane], self.Gz[plane], self.u0, self.du, rho)

    # -- io -----------------------------------------------------------------
    def header(self):
        return {
            "format": "surfepr-greens-table",
            "version": TABLE_FORMAT_VERSION,
            "stackup": self.stackup_digest,
            "source_interface": self.source_interface,
            "u0": repr(self.u0),
            "du": repr(self.du),
            "n_rho": self.n_rho,
            "planes": [repr(float(p)) for p in self.planes],
            "trivial": self.trivial,
            "meta": self.meta,
        }

    def save_npz(self, path):
        np.savez(path, header=json.dumps(self.header()), G=self.G, Gr=self.Gr, Gz=self.Gz)

    @classmethod
    def load_npz(cls, path, stackup=None):
        d = np.load(path, allow_pickle=False)
        return cls._from_header(json.loads(str(d["header"])), d["G"], d["Gr"], d["Gz"], stackup)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho", "plane", "G_sct", "dG_drho", "dG_dz"])
        rho = self.rho
        for p in range(len(self.planes)):
            for i in range(self.n_rho):
                w.writerow([repr(float(rho[i])), p, repr(float(self.G[p, i])),
                            repr(float(self.Gr[p, i])), repr(float(self.Gz[p, i]))])
        return buf.getvalue()

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text, stackup=None):
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise ConfigError("table CSV lacks its header line")
        head = json.loads(lines[0][2:])
        P, M = len(head["planes"]), int(head["n_rho"])
        G = np.zeros((P, M))
        Gr = np.zeros((P, M))
        Gz = np.zeros((P, M))
        rows = list(csv.reader(lines[2:]))
        if len(rows) != P * M:
            raise ConfigError(f"table CSV has {len(rows)} rows, expected {P * M}")
        for k, row in enumerate(rows):
            p, i = divmod(k, M)
            G[p, i], Gr[p, i], Gz[p, i] = float(row[2]), float(row[3]), float(row[4])
        return cls._from_header(head, G, Gr, Gz, stackup)

    @classmethod
    def load_csv(cls, path, stackup=None):
        with open(path) as fh:
            return cls.from_csv(fh.read(), stackup)

    @classmethod
    def _from_header(cls, head, G, Gr, Gz, stackup):
        if head.get("format") != "surfepr-greens-table":
            raise ConfigError("not a Green's table file")
        if int(head.get("version", -1)) != TABLE_FORMAT_VERSION:
            raise ConfigError(f"unsupported table version {head.get('version')}")
        if stackup is not None and stackup.digest() != head["stackup"]:
            raise ConfigError("table was built for a different stackup")
        return cls(head["stackup"], int(head["source_interface"]), np.array([float(p) for p in head["planes"]]),
                   float(head["u0"]), float(head["du"]), np.asarray(G, float), np.asarray(Gr, float),
                   np.asarray(Gz, float), bool(head["trivial"]), head.get("meta", {}))


def interp_table(G, Gr, Gz, u0, du, rho):
    """Numpy reference implementation of the table interpolation."""
    M = G.shape[0]
    n = INTERP_POINTS
    out_g = np.empty(rho.shape)
    out_r = np.empty(rho.shape)
    out_z = np.empty(rho.shape)
    rmin = math.exp(u0)
    for k, r in enumerate(rho.flat):
        scale = 1.0
        if r < rmin:
            scale = r / rmin
            r = rmin
        t = (math.log(r) - u0) / du
        i0 = min(max(int(math.floor(t)) - (n // 2 - 1), 0), M - n)
        w = lagrange_weights(t - i0, n)
        out_g.flat[k] = np.dot(w, G[i0:i0 + n])
        out_r.flat[k] = np.dot(w, Gr[i0:i0 + n]) * scale
        out_z.flat[k] = np.dot(w, Gz[i0:i0 + n])
    return out_g, out_r, out_z


def build_greens_table(stackup, source_interface, field_planes, rho_range, per_decade=64, ogata=None):
    """Tabulate the scattered Green's function for one source interface.

    Parameters
    ----------
    stackup : Stackup
    source_interface : int
    field_planes : sequence of float
        Plane heights in µm.
    rho_range : (float, float)
        (rho_min, rho_max) in µm.
    per_decade : int
        Radial samples per decade.
    ogata : OgataConfig, optional

    Returns
    -------
    GreensTable
    """
    s = stackup.check_interface(source_interface)
    planes = np.array(sorted(set(float(p) for p in field_planes)))
    rmin, rmax = float(rho_range[0]), float(rho_range[1])
    if not (0 < rmin < rmax):
        raise ConfigError(f"bad rho range {rho_range}")
    du = math.log(10.0) / per_decade
    u0 = math.log(rmin)
    M = max(int(math.ceil((math.log(rmax) - u0) / du)) + 1, INTERP_POINTS)
    P = planes.size
    G = np.zeros((P, M))
    Gr = np.zeros((P, M))
    Gz = np.zeros((P, M))
    trivial = stackup.is_reflectionless()
    if not trivial:
        lg = LayeredGreens(stackup, ogata)
        rho = np.exp(u0 + du * np.arange(M))
        for i, r in enumerate(rho):
            G[:, i], Gr[:, i], Gz[:, i] = lg.scattered(s, r, planes)
    meta = {"per_decade": per_decade, "interp_points": INTERP_POINTS}
    return GreensTable(stackup.digest(), s, planes, u0, du, G, Gr, Gz, trivial, meta)


class TableSet:
    """Green's tables for every source interface over a common plane list.

    Packs the per-interface tables into dense arrays for the kernels:
    ``G[s, p, i]`` etc., where ``p`` indexes :attr:`planes`.
    """

    def __init__(self, stackup, tables):
        self.stackup = stackup
        self.tables = {t.source_interface: t for t in tables}
        first = tables[0]
        for t in tables:
            if not (np.array_equal(t.planes, first.planes) and t.u0 == first.u0 and t.du == first.du
                    and t.n_rho == first.n_rho):
                raise ConfigError("tables in a set must share planes and radial grid")
        self.planes = first.planes
        self.u0, self.du = first.u0, first.du
        S = stackup.n_interfaces
        shape = (S, len(self.planes), first.n_rho)
        self.G = np.zeros(shape)
        self.Gr = np.zeros(shape)
        self.Gz = np.zeros(shape)
        for s, t in self.tables.items():
            self.G[s], self.Gr[s], self.Gz[s] = t.G, t.Gr, t.Gz
        self.trivial = all(t.trivial for t in tables)

    @property
    def rho_min(self):
        return math.exp(self.u0)

    @property
    def rho_max(self):
        return math.exp(self.u0 + self.du * (self.G.shape[2] - 1))

    def plane_index(self, z):
        return next(iter(self.tables.values())).plane_index(z)

    @classmethod
    def build(cls, stackup, interfaces, planes, rho_range, per_decade=64, ogata=None):
        tabs = [build_greens_table(stackup, s, planes, rho_range, per_decade, ogata) for s in interfaces]
        return cls(stackup, tabs)
