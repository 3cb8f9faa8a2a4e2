"""Planar conductor layouts on stackup interfaces.

A layout is a stackup plus named nets. Each net is a set of simple CCW
polygons pinned to one interface. Generators build the benchmark
structures: the coplanar capacitor, the grounded coplanar waveguide and the
two-pad rectangular qubit.
"""
from dataclasses import dataclass, field
import json
import math

import numpy as np

from .errors import ConfigError
from .stackup import Stackup


def signed_area(v):
    """Shoelace signed area of an (n, 2) vertex array (positive when CCW)."""
    v = np.asarray(v, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with CCW vertices in µm."""

    vertices: tuple

    def __post_init__(self):
        vs = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", vs)

    @property
    def array(self):
        return np.array(self.vertices, dtype=float)

    @property
    def area(self):
        return signed_area(self.array)

    @property
    def bbox(self):
        a = self.array
        return a[:, 0].min(), a[:, 1].min(), a[:, 0].max(), a[:, 1].max()

    def problems(self):
        """List of invariant violations (empty when well formed)."""
        out = []
        v = self.vertices
        if len(v) < 3:
            return ["fewer than 3 vertices"]
        for i in range(len(v)):
            if v[i] == v[(i + 1) % len(v)]:
                out.append(f"repeated consecutive vertex {i}")
        if not out and self.area <= 0:
            out.append("non-positive signed area (vertices must be counter-clockwise)")
        if not out and _self_intersects(self.array):
            out.append("self-intersecting outline")
        return out

    def is_rectangle(self):
        """True for an axis-aligned rectangle."""
        a = self.array
        if len(a) != 4:
            return False
        xs, ys = set(np.round(a[:, 0], 12)), set(np.round(a[:, 1], 12))
        if len(xs) != 2 or len(ys) != 2:
            return False
        for i in range(4):
            d = a[(i + 1) % 4] - a[i]
            if d[0] != 0 and d[1] != 0:
                return False
        return True

    def mirrored_x(self):
        """Mirror image under x -> -x (re-ordered to stay CCW)."""
        return Polygon(tuple((-x, y) for x, y in reversed(self.vertices)))


def rect(x0, y0, x1, y1):
    """Axis-aligned CCW rectangle."""
    if not (x1 > x0 and y1 > y0):
        raise ConfigError(f"degenerate rectangle ({x0}, {y0}, {x1}, {y1})")
    return Polygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))


@dataclass(frozen=True)
class ConductorNet:
    """Named conductor made of polygons on one interface."""

    name: str
    polygons: tuple
    interface: int = 0

    def __post_init__(self):
        object.__setattr__(self, "polygons", tuple(self.polygons))

    @property
    def area(self):
        return sum(p.area for p in self.polygons)


@dataclass(frozen=True)
class Window:
    """Axis-aligned de-embedding window in µm."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigError(f"empty window {self}")

    def contains(self, xy):
        xy = np.asarray(xy, dtype=float)
        return ((xy[..., 0] >= self.x0) & (xy[..., 0] <= self.x1)
                & (xy[..., 1] >= self.y0) & (xy[..., 1] <= self.y1))

    @property
    def length_y(self):
        return self.y1 - self.y0

    def expanded(self, m):
        return Window(self.x0 - m, self.x1 + m, self.y0 - m, self.y1 + m)


@dataclass(frozen=True)
class LayoutModel:
    """Stackup plus nets, optional SA footprints and de-embedding window."""

    stackup: Stackup
    nets: tuple
    sa_regions: tuple = ()
    sa_interface: int = 0
    deembed_window: Window = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nets", tuple(self.nets))
        object.__setattr__(self, "sa_regions", tuple(self.sa_regions))

    @property
    def net_names(self):
        return [n.name for n in self.nets]

    def net_index(self, name):
        try:
            return self.net_names.index(name)
        except ValueError:
            raise ConfigError(f"unknown net {name!r}; nets are {self.net_names}") from None

    @property
    def bbox(self):
        b = np.array([p.bbox for n in self.nets for p in n.polygons])
        return b[:, 0].min(), b[:, 1].min(), b[:, 2].max(), b[:, 3].max()

    @property
    def diameter(self):
        x0, y0, x1, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)

    def vertex_multiset(self):
        """Sorted vertex list of all nets (for symmetry audits)."""
        pts = [v for n in self.nets for p in n.polygons for v in p.vertices]
        return sorted((round(x, 9), round(y, 9)) for x, y in pts)

    # -- serialization ------------------------------------------------------
    def to_dict(self):
        d = {
            "stackup": self.stackup.to_dict(),
            "nets": [{"name": n.name, "interface": n.interface,
                      "polygons": [[list(v) for v in p.vertices] for p in n.polygons]} for n in self.nets],
        }
        if self.deembed_window is not None:
            w = self.deembed_window
            d["deembed_window"] = {"x0": w.x0, "x1": w.x1, "y0": w.y0, "y1": w.y1}
        if self.sa_regions:
            d["sa_regions"] = [[list(v) for v in p.vertices] for p in self.sa_regions]
            d["sa_interface"] = self.sa_interface
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("layout must be a JSON object")
        for key in ("stackup", "nets"):
            if key not in d:
                raise ConfigError(f"layout is missing {key!r}")
        st = Stackup.from_dict(d["stackup"])
        nets = []
        try:
            for i, n in enumerate(d["nets"]):
                polys = tuple(Polygon(tuple(tuple(v) for v in p)) for p in n["polygons"])
                nets.append(ConductorNet(str(n["name"]), polys, int(n.get("interface", 0))))
            win = None
            if d.get("deembed_window") is not None:
                w = d["deembed_window"]
                win = Window(float(w["x0"]), float(w["x1"]), float(w["y0"]), float(w["y1"]))
            sa = tuple(Polygon(tuple(tuple(v) for v in p)) for p in d.get("sa_regions", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed layout: {exc}") from exc
        return cls(st, tuple(nets), sa, int(d.get("sa_interface", 0)), win)


def load_layout(path):
    """Read a layout JSON file and validate it."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read layout {path}: {exc}") from exc
    lay = LayoutModel.from_dict(d)
    bad = validate_layout(lay)
    if bad:
        raise ConfigError("invalid layout: " + "; ".join(bad))
    return lay


def save_layout(layout, path):
    with open(path, "w") as fh:
        json.dump(layout.to_dict(), fh, indent=1)


# ---------------------------------------------------------------------------
# validation

def _seg_cross(p1, p2, q1, q2):
    """True when the open segments p1p2 and q1q2 cross properly."""
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 * (1 + abs(b[0] - a[0]) + abs(b[1] - a[1])) ** 2 else (1 if v > 0 else -1)
    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 * o2 < 0 and o3 * o4 < 0


def _self_intersects(a):
    n = len(a)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _seg_cross(a[i], a[(i + 1) % n], a[j], a[(j + 1) % n]):
                return True
    return False


def point_in_polygon(pt, a, strict=True, tol=1e-9):
    """Even-odd point test; with ``strict`` boundary points count as outside."""
    x, y = pt
    n = len(a)
    inside = False
    for i in range(n):
        x1, y1 = a[i]
        x2, y2 = a[(i + 1) % n]
        # on-edge check
        dx, dy = x2 - x1, y2 - y1
        L2 = dx * dx + dy * dy
        t = ((x - x1) * dx + (y - y1) * dy) / L2
        if -tol <= t <= 1 + tol:
            px, py = x1 + t * dx, y1 + t * dy
            if math.hypot(px - x, py - y) <= tol * (1 + math.sqrt(L2)):
                return not strict
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * dx / dy
            if xc > x:
                inside = not inside
    return inside


def _probe_points(a):
    """Vertices, edge midpoints and ear centroids of a polygon."""
    pts = [tuple(p) for p in a]
    n = len(a)
    pts += [tuple(0.5 * (a[i] + a[(i + 1) % n])) for i in range(n)]
    from .mesh import ear_clip
    for t in ear_clip(a):
        pts.append(tuple(a[list(t)].mean(axis=0)))
    return pts


def polygons_overlap(pa, pb):
    """True when the interiors of two simple polygons intersect."""
    a, b = pa.array, pb.array
    ax0, ay0, ax1, ay1 = pa.bbox
    bx0, by0, bx1, by1 = pb.bbox
    if ax1 <= bx0 or bx1 <= ax0 or ay1 <= by0 or by1 <= ay0:
        return False
    for i in range(len(a)):
        for j in range(len(b)):
            if _seg_cross(a[i], a[(i + 1) % len(a)], b[j], b[(j + 1) % len(b)]):
                return True
    if any(point_in_polygon(p, b) for p in _probe_points(a)):
        return True
    return any(point_in_polygon(p, a) for p in _probe_points(b))


def validate_layout(layout):
    """Return a list of human-readable violations; empty when well formed."""
    out = []
    st = layout.stackup
    names = [n.name for n in layout.nets]
    if not layout.nets:
        out.append("layout has no nets")
    for nm in set(names):
        if names.count(nm) > 1:
            out.append(f"duplicate net name {nm!r}")
    for i, n in enumerate(layout.nets):
        if not (0 <= n.interface < st.n_interfaces):
            out.append(f"net {n.name!r} uses interface {n.interface} but the stackup has "
                       f"{st.n_interfaces} interface(s)")
        if not n.polygons:
            out.append(f"net {n.name!r} has no polygons")
        for j, p in enumerate(n.polygons):
            for msg in p.problems():
                out.append(f"net {n.name!r} polygon {j}: {msg}")
    if out:
        return out
    for i, n in enumerate(layout.nets):
        for k in range(i, len(layout.nets)):
            m = layout.nets[k]
            if m.interface != n.interface:
                continue
            for a, pa in enumerate(n.polygons):
                for b, pb in enumerate(m.polygons):
                    if k == i and b <= a:
                        continue
                    if polygons_overlap(pa, pb):
                        if k == i:
                            out.append(f"net {n.name!r} polygons {a} and {b} overlap")
                        else:
                            out.append(f"nets {n.name!r} (polygon {a}) and {m.name!r} (polygon {b}) overlap")
    for j, p in enumerate(layout.sa_regions):
        for msg in p.problems():
            out.append(f"sa region {j}: {msg}")
    if layout.deembed_window is not None and layout.nets:
        w = layout.deembed_window
        x0, y0, x1, y1 = layout.bbox
        if w.x1 <= x0 or w.x0 >= x1 or w.y1 <= y0 or w.y0 >= y1:
            out.append("de-embedding window does not intersect the layout")
    return out


# ---------------------------------------------------------------------------
# generators

def generate_cpc(a, b, L, L0, stackup=None, eps_sub=11.9):
    """Coplanar capacitor: strips a <= |x| <= b, |y| <= L/2.

    Parameters
    ----------
    a, b : float
        Inner and outer strip edges in µm.
    L : float
        Strip length in µm.
    L0 : float
        Length of the central de-embedding window in µm.
    stackup : Stackup, optional
        Defaults to substrate ``eps_sub`` below air above, interface at z=0.
    """
    if not (0 < a < b):
        raise ConfigError(f"CPC needs 0 < a < b, got a={a}, b={b}")
    if not (0 < L0 < L):
        raise ConfigError(f"CPC needs 0 < L0 < L, got L0={L0}, L={L}")
    st = stackup or Stackup.two_layer(eps_sub, 1.0)
    h = 0.5 * L
    nets = (ConductorNet("left", (rect(-b, -h, -a, h),)), ConductorNet("right", (rect(a, -h, b, h),)))
    win = Window(-b, b, -0.5 * L0, 0.5 * L0)
    slot = rect(-a, -h, a, h)
    return LayoutModel(st, nets, (slot,), 0, win, meta=dict(kind="cpc", a=a, b=b, L=L, L0=L0))


def generate_gcpw(a, b, h, L=800.0, L0=100.0, Wg=None, eps_in=11.9, eps_out=1.0):
    """Grounded coplanar waveguide over a PEC plane at z = -h.

    Signal |x| <= a, grounds b <= |x| <= b + Wg (one net, two polygons).
    ``Wg`` defaults to 10 b.
    """
    if not (0 < a < b):
        raise ConfigError(f"GCPW needs 0 < a < b, got a={a}, b={b}")
    if not (h > 0):
        raise ConfigError(f"GCPW needs h > 0, got {h}")
    if not (0 < L0 < L):
        raise ConfigError(f"GCPW needs 0 < L0 < L, got L0={L0}, L={L}")
    Wg = 10.0 * b if Wg is None else float(Wg)
    if not Wg > 0:
        raise ConfigError("ground width must be positive")
    st = Stackup.substrate_over_pec(eps_in, h, eps_above=eps_out)
    y = 0.5 * L
    sig = ConductorNet("signal", (rect(-a, -y, a, y),))
    gnd = ConductorNet("ground", (rect(b, -y, b + Wg, y), rect(-b - Wg, -y, -b, y)))
    win = Window(-b - Wg, b + Wg, -0.5 * L0, 0.5 * L0)
    slots = (rect(a, -y, b, y), rect(-b, -y, -a, y))
    return LayoutModel(st, (sig, gnd), slots, 0, win,
                       meta=dict(kind="gcpw", a=a, b=b, h=h, L=L, L0=L0, Wg=Wg,
                                 focus=(-b, b, -0.5 * L0, 0.5 * L0)))


def generate_rect_qubit(W, H, D, stackup=None, eps_sub=10.15):
    """Two rectangular pads facing each other across a gap.

    The facing (inner) edges have width ``W`` along y and the pads extend
    ``H`` away from the gap along x; the gap is ``D``.
    """
    for nm, v in (("W", W), ("H", H), ("D", D)):
        if not v > 0:
            raise ConfigError(f"rectangular qubit needs {nm} > 0, got {v}")
    st = stackup or Stackup.two_layer(eps_sub, 1.0)
    g = 0.5 * D
    pa = ConductorNet("pad_a", (rect(-g - H, -0.5 * W, -g, 0.5 * W),))
    pb = ConductorNet("pad_b", (rect(g, -0.5 * W, g + H, 0.5 * W),))
    return LayoutModel(st, (pa, pb), (), 0, None, meta=dict(kind="rect_qubit", W=W, H=H, D=D))
