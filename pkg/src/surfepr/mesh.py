"""Triangle meshes of conductor polygons and edge refinement.

Meshes store each triangle by its own three vertices, so hanging nodes
created by local refinement need no bookkeeping. The pulse basis does not
need conformity.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigError

_EDGE_TOL = 1e-9


@dataclass
class SurfaceMesh:
    """Triangulated conductor surfaces.

    Attributes
    ----------
    tri : ndarray, shape (N, 3, 3)
        Vertex coordinates in µm, counter-clockwise seen from +z.
    net : ndarray of int, shape (N,)
    iface : ndarray of int, shape (N,)
        Stackup interface of each triangle.
    bflag : ndarray of bool, shape (N, 3)
        Edge k (vertex k to vertex k+1) lies on a conductor outline.
    level : ndarray of int, shape (N,)
        Homogeneous refinement level.
    origin : ndarray of int, shape (N,)
        Index of the ancestor in the base triangulation.
    stack : ndarray of int, shape (N,)
        Boundary-layer stack id, -1 outside stacks.
    stack_pos : ndarray of int, shape (N,)
        Strip index in the stack, 0 against the edge.
    net_names : tuple of str
    """

    tri: np.ndarray
    net: np.ndarray
    iface: np.ndarray
    bflag: np.ndarray
    level: np.ndarray = None
    origin: np.ndarray = None
    stack: np.ndarray = None
    stack_pos: np.ndarray = None
    net_names: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.tri)
        self.tri = np.asarray(self.tri, dtype=float).reshape(n, 3, 3)
        self.net = np.asarray(self.net, dtype=np.int64).reshape(n)
        self.iface = np.asarray(self.iface, dtype=np.int64).reshape(n)
        self.bflag = np.asarray(self.bflag, dtype=bool).reshape(n, 3)
        z = np.zeros(n, dtype=np.int64)
        self.level = z.copy() if self.level is None else np.asarray(self.level, dtype=np.int64)
        self.origin = np.arange(n) if self.origin is None else np.asarray(self.origin, dtype=np.int64)
        self.stack = z - 1 if self.stack is None else np.asarray(self.stack, dtype=np.int64)
        self.stack_pos = z - 1 if self.stack_pos is None else np.asarray(self.stack_pos, dtype=np.int64)
        self.net_names = tuple(self.net_names)

    def __len__(self):
        return len(self.tri)

    @property
    def n(self):
        return len(self.tri)

    @property
    def areas(self):
        e1 = self.tri[:, 1, :2] - self.tri[:, 0, :2]
        e2 = self.tri[:, 2, :2] - self.tri[:, 0, :2]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def centroids(self):
        return self.tri.mean(axis=1)

    @property
    def edge_lengths(self):
        d = self.tri[:, [1, 2, 0]] - self.tri
        return np.linalg.norm(d, axis=2)

    @property
    def diameters(self):
        return self.edge_lengths.max(axis=1)

    @property
    def heights(self):
        """Smallest altitude of each triangle."""
        return 2.0 * self.areas / self.diameters

    @property
    def vertices(self):
        """Unique vertex array and triangle index triples."""
        flat = self.tri.reshape(-1, 3)
        key = np.round(flat, 9)
        uniq, inv = np.unique(key, axis=0, return_inverse=True)
        return uniq, inv.reshape(-1, 3)

    def net_area(self, k):
        return float(self.areas[self.net == k].sum())

    def boundary_edges(self):
        """(M, 2, 3) array of outline edge segments."""
        t = self.tri
        segs = [np.stack([t[:, k], t[:, (k + 1) % 3]], axis=1)[self.bflag[:, k]] for k in range(3)]
        return np.concatenate(segs) if segs else np.zeros((0, 2, 3))

    def subset(self, mask):
        mask = np.asarray(mask)
        return SurfaceMesh(self.tri[mask], self.net[mask], self.iface[mask], self.bflag[mask], self.level[mask],
                           self.origin[mask], self.stack[mask], self.stack_pos[mask], self.net_names,
                           dict(self.meta))

    def check(self):
        """Raise ConfigError on degenerate or clockwise triangles."""
        a = self.areas
        if np.any(~(a > 0)):
            i = int(np.argmin(a))
            raise ConfigError(f"triangle {i} has non-positive area {a[i]!r}")
        return self

    # -- ASCII import/export -------------------------------------------------
    def to_text(self):
        lines = [str(self.n)]
        for t, n, s in zip(self.tri, self.net, self.iface):
            lines.append(" ".join(repr(float(v)) for v in t.reshape(-1)) + f" {int(n)} {int(s)}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text, net_names=None):
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        try:
            n = int(rows[0][0])
            body = np.array([[float(v) for v in r] for r in rows[1:1 + n]])
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"malformed mesh file: {exc}") from exc
        if body.shape != (n, 11):
            raise ConfigError(f"mesh file must hold {n} rows of 11 numbers, got shape {body.shape}")
        tri = body[:, :9].reshape(n, 3, 3)
        net = body[:, 9].astype(np.int64)
        iface = body[:, 10].astype(np.int64)
        names = tuple(net_names) if net_names is not None else tuple(f"net{k}" for k in range(int(net.max()) + 1))
        m = cls(tri, net, iface, np.zeros((n, 3), bool), net_names=names)
        m.check()
        return m

    @classmethod
    def load(cls, path, net_names=None, layout=None):
        """Read an ASCII mesh; with a layout, outline flags are recomputed."""
        with open(path) as fh:
            m = cls.from_text(fh.read(), net_names if layout is None else layout.net_names)
        if layout is not None:
            m.bflag = _outline_flags(m.tri, m.net, layout)
        return m


def concat_meshes(meshes):
    ms = [m for m in meshes if m.n]
    if not ms:
        raise ConfigError("nothing to concatenate")
    off = np.cumsum([0] + [m.n for m in ms[:-1]])
    soff = 0
    stacks = []
    for m in ms:
        s = m.stack.copy()
        s[s >= 0] += soff
        soff = max(soff, int(s.max()) + 1) if np.any(s >= 0) else soff
        stacks.append(s)
    return SurfaceMesh(np.concatenate([m.tri for m in ms]), np.concatenate([m.net for m in ms]),
                       np.concatenate([m.iface for m in ms]), np.concatenate([m.bflag for m in ms]),
                       np.concatenate([m.level for m in ms]),
                       np.concatenate([m.origin + o for m, o in zip(ms, off)]),
                       np.concatenate(stacks), np.concatenate([m.stack_pos for m in ms]), ms[0].net_names)


# ---------------------------------------------------------------------------
# base triangulation

def ear_clip(a):
    """Ear-clipping triangulation of a simple CCW polygon.

    Returns a list of vertex index triples.
    """
    a = np.asarray(a, dtype=float)
    idx = list(range(len(a)))
    out = []

    def cross(o, p, q):
        return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])

    guard = 0
    while len(idx) > 3:
        n = len(idx)
        clipped = False
        for k in range(n):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % n]
            p0, p1, p2 = a[i0], a[i1], a[i2]
            c = cross(p0, p1, p2)
            if c <= 0:
                if abs(c) <= 1e-14 * (1 + np.abs(a).max()) ** 2:
                    # collinear vertex: drop it when the rest stays valid
                    idx.pop(k)
                    clipped = True
                    break
                continue
            ok = True
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                q = a[j]
                if (cross(p0, p1, q) >= 0 and cross(p1, p2, q) >= 0 and cross(p2, p0, q) >= 0):
                    ok = False
                    break
            if ok:
                out.append((i0, i1, i2))
                idx.pop(k)
                clipped = True
                break
        guard += 1
        if not clipped or guard > 10 * len(a) + 10:
            raise ConfigError("ear clipping failed (polygon not simple or not counter-clockwise)")
    if len(idx) == 3:
        p0, p1, p2 = a[idx]
        if cross(p0, p1, p2) > 0:
            out.append(tuple(idx))
    return out


def _split4(t):
    """Four congruent children of each triangle in (n, 3, 3)."""
    m01 = 0.5 * (t[:, 0] + t[:, 1])
    m12 = 0.5 * (t[:, 1] + t[:, 2])
    m20 = 0.5 * (t[:, 2] + t[:, 0])
    c = np.stack([
        np.stack([t[:, 0], m01, m20], axis=1),
        np.stack([m01, t[:, 1], m12], axis=1),
        np.stack([m20, m12, t[:, 2]], axis=1),
        np.stack([m01, m12, m20], axis=1),
    ], axis=1)
    return c  # (n, 4, 3, 3)


# child k inherits parent's edge flag for (child edge, parent edge) pairs
_CHILD_FLAGS = (((0, 0), (2, 2)), ((0, 0), (1, 1)), ((1, 1), (2, 2)), ())


def _split4_flags(f):
    n = len(f)
    out = np.zeros((n, 4, 3), bool)
    for c, pairs in enumerate(_CHILD_FLAGS):
        for ce, pe in pairs:
            out[:, c, ce] = f[:, pe]
    return out


def _uniform_pieces(lo, hi, h, breaks):
    cuts = [lo] + sorted(b for b in set(breaks) if lo + 1e-9 * h < b < hi - 1e-9 * h) + [hi]
    t = [lo]
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(math.ceil((b - a) / h - 1e-9)))
        t.extend(np.linspace(a, b, n + 1)[1:])
    return np.array(t)


def graded_ticks(lo, hi, h_in, focus=None, growth=1.0, h_max=None, breaks=()):
    """Sorted ticks on [lo, hi] with spacing at most h_in inside ``focus``.

    Outside the focus interval the spacing grows geometrically by
    ``growth`` up to ``h_max``. Coordinates in ``breaks`` that fall inside
    the uniform part are always ticks (window edges, for instance).
    """
    if not hi > lo:
        raise ConfigError("empty interval")
    if focus is None or growth <= 1.0:
        return _uniform_pieces(lo, hi, h_in, breaks)
    f0, f1 = max(lo, focus[0]), min(hi, focus[1])
    h_max = h_max or 8 * h_in
    if f1 <= f0:
        # focus outside: grade from the nearest end
        f0 = f1 = lo if focus[1] <= lo else hi
    mid = [f0] if f1 == f0 else list(_uniform_pieces(f0, f1, h_in, breaks))

    def side(length):
        # spacings growing from h_in, rescaled to fill length exactly
        if length <= 0:
            return []
        sp, h, tot = [], h_in, 0.0
        while tot < length - 1e-12:
            h = min(h * growth, h_max)
            sp.append(h)
            tot += h
        if len(sp) > 1 and tot - length > 0.5 * sp[-1]:
            tot -= sp.pop()
        sp = np.array(sp) * (length / tot)
        return list(np.cumsum(sp))

    right = [f1 + d for d in side(hi - f1)]
    left = [f0 - d for d in side(f0 - lo)][::-1]
    t = np.array(left + mid + right)
    t[0], t[-1] = lo, hi
    return t


def _rect_mesh(x, y):
    """Triangulate the tensor grid of ticks; diagonals mirror about x=0 and y=0."""
    X0, Y0 = np.meshgrid(x[:-1], y[:-1], indexing="ij")
    X1, Y1 = np.meshgrid(x[1:], y[1:], indexing="ij")
    X0, Y0, X1, Y1 = X0.ravel(), Y0.ravel(), X1.ravel(), Y1.ravel()
    cx, cy = 0.5 * (X0 + X1), 0.5 * (Y0 + Y1)
    diag = cx * cy >= 0  # split along (x0,y0)-(x1,y1)
    z = np.zeros_like(X0)
    p00 = np.stack([X0, Y0, z], 1)
    p10 = np.stack([X1, Y0, z], 1)
    p11 = np.stack([X1, Y1, z], 1)
    p01 = np.stack([X0, Y1, z], 1)
    ta = np.where(diag[:, None, None], np.stack([p00, p10, p11], 1), np.stack([p00, p10, p01], 1))
    tb = np.where(diag[:, None, None], np.stack([p00, p11, p01], 1), np.stack([p10, p11, p01], 1))
    return np.concatenate([ta, tb])


def _on_segment(p, a, b, tol):
    d = b - a
    L = math.hypot(d[0], d[1])
    t = ((p[..., 0] - a[0]) * d[0] + (p[..., 1] - a[1]) * d[1]) / (L * L)
    dist = np.abs((p[..., 0] - a[0]) * d[1] - (p[..., 1] - a[1]) * d[0]) / L
    return (dist <= tol * max(L, 1.0)) & (t >= -tol) & (t <= 1 + tol)


def polygon_edge_flags(tri, poly):
    """Outline flags of triangles inside one polygon."""
    a = poly.array
    f = np.zeros((len(tri), 3), bool)
    for i in range(len(a)):
        on = _on_segment(tri[..., :2], a[i], a[(i + 1) % len(a)], _EDGE_TOL)
        for k in range(3):
            f[:, k] |= on[:, k] & on[:, (k + 1) % 3]
    return f


def _outline_flags(tri, net, layout):
    from .geometry import point_in_polygon
    f = np.zeros((len(tri), 3), bool)
    c = tri.mean(axis=1)
    for k, n in enumerate(layout.nets):
        for p in n.polygons:
            sel = np.where(net == k)[0]
            inside = np.array([point_in_polygon(c[i, :2], p.array) for i in sel], bool)
            sel = sel[inside]
            if sel.size:
                f[sel] |= polygon_edge_flags(tri[sel], p)
    return f


def _refine_to_max_edge(tri, max_edge):
    while True:
        d = np.linalg.norm(tri[:, [1, 2, 0]] - tri, axis=2).max(axis=1)
        big = d > max_edge * (1 + 1e-12)
        if not np.any(big):
            return tri
        tri = np.concatenate([tri[~big], _split4(tri[big]).reshape(-1, 3, 3)])


def triangulate_polygon(poly, z, max_edge, aspect=1.0, focus=None, growth=1.0, max_edge_far=None, breaks=None):
    """Triangles covering one polygon.

    Rectangles get a tensor grid: cells have diagonal ``max_edge`` with the
    long side ``aspect`` times the short side along the rectangle's longer
    direction. With ``focus`` (x0, x1, y0, y1) the grid is graded so cells
    outside it grow by ``growth`` up to diagonal ``max_edge_far``. Other
    polygons are ear-clipped and split until every edge is at most
    ``max_edge``. ``breaks`` = (xs, ys) lists grid lines that must appear.
    """
    if not max_edge > 0:
        raise ConfigError(f"max_edge must be positive, got {max_edge}")
    bad = poly.problems()
    if bad:
        raise ConfigError("degenerate polygon: " + "; ".join(bad))
    if poly.is_rectangle():
        x0, y0, x1, y1 = poly.bbox
        s = max_edge / math.sqrt(1.0 + aspect * aspect)
        hx, hy = (s, aspect * s) if (y1 - y0) >= (x1 - x0) else (aspect * s, s)
        far = (max_edge_far or max_edge) / max_edge
        fx = fy = None
        if focus is not None:
            fx, fy = (focus[0], focus[1]), (focus[2], focus[3])
        bx, by = breaks if breaks is not None else ((), ())
        x = graded_ticks(x0, x1, hx, fx, growth, hx * far, bx)
        y = graded_ticks(y0, y1, hy, fy, growth, hy * far, by)
        t = _rect_mesh(x, y)
        t[:, :, 2] = z
        return t
    a = poly.array
    t = np.array([[[*a[i], z] for i in e] for e in ear_clip(a)], dtype=float)
    return _refine_to_max_edge(t, max_edge)


def triangulate(layout, max_edge, aspect=1.0, focus=None, growth=1.0, max_edge_far=None):
    """Base triangulation of every net in a layout.

    Parameters
    ----------
    layout : LayoutModel
    max_edge : float
        Largest triangle edge in µm (inside ``focus`` when grading).
    aspect : float
        Cell elongation along long rectangles (1 gives square cells).
    focus : tuple (x0, x1, y0, y1), optional
        Region kept at ``max_edge``; cells coarsen away from it.
    growth : float
        Geometric growth of cell size outside ``focus``.
    max_edge_far : float, optional
        Cap on the coarsened cell diagonal.

    Grid lines always pass through the de-embedding window edges so the
    centroid rule selects whole cells.

    Returns
    -------
    SurfaceMesh
    """
    st = layout.stackup
    breaks = _window_breaks(layout.deembed_window)
    tris, nets, ifs, flags = [], [], [], []
    for k, n in enumerate(layout.nets):
        z = st.interface_z[st.check_interface(n.interface)]
        for p in n.polygons:
            t = triangulate_polygon(p, z, max_edge, aspect, focus, growth, max_edge_far, breaks)
            tris.append(t)
            nets.append(np.full(len(t), k))
            ifs.append(np.full(len(t), n.interface))
            flags.append(polygon_edge_flags(t, p))
    m = SurfaceMesh(np.concatenate(tris), np.concatenate(nets), np.concatenate(ifs), np.concatenate(flags),
                    net_names=layout.net_names)
    return m.check()


def _window_breaks(window):
    if window is None:
        return None
    return (window.x0, window.x1), (window.y0, window.y1)


# ---------------------------------------------------------------------------
# refinement

@dataclass(frozen=True)
class RefinementConfig:
    """Edge refinement settings.

    Parameters
    ----------
    homogeneous_levels : int
        Rounds of 4-splitting of outline triangles.
    boundary_layers : int
        Strips stacked against each outline edge.
    growth_ratio : float
        Ratio between successive strip heights (> 1).
    first_layer_height : float
        Height of the strip touching the edge in µm.
    region : tuple (x0, x1, y0, y1), optional
        Only triangles with centroid in this box are refined.
    """

    homogeneous_levels: int = 2
    boundary_layers: int = 8
    growth_ratio: float = 2.0
    first_layer_height: float = 1e-3
    region: tuple = None

    def __post_init__(self):
        if self.homogeneous_levels < 0 or self.boundary_layers < 0:
            raise ConfigError("refinement counts must be non-negative")
        if self.boundary_layers and not self.growth_ratio > 1:
            raise ConfigError("growth_ratio must exceed 1")
        if self.boundary_layers and not self.first_layer_height > 0:
            raise ConfigError("first_layer_height must be positive")

    @classmethod
    def for_thickness(cls, delta, **kw):
        """Defaults with the first strip height tied to a layer thickness (µm)."""
        return cls(first_layer_height=delta / 3.0, **kw)

    def layer_heights(self):
        return self.first_layer_height * self.growth_ratio ** np.arange(self.boundary_layers)


def _in_region(mesh, region):
    if region is None:
        return np.ones(mesh.n, bool)
    c = mesh.centroids
    x0, x1, y0, y1 = region
    return (c[:, 0] >= x0) & (c[:, 0] <= x1) & (c[:, 1] >= y0) & (c[:, 1] <= y1)


def homogeneous_refine(mesh, levels, region=None):
    """Split outline triangles into four congruent children, ``levels`` times."""
    if levels < 0:
        raise ConfigError("levels must be non-negative")
    m = mesh
    for _ in range(levels):
        sel = m.bflag.any(axis=1) & _in_region(m, region)
        if not np.any(sel):
            break
        keep = ~sel
        k = int(sel.sum())
        ch = _split4(m.tri[sel]).reshape(-1, 3, 3)
        chf = _split4_flags(m.bflag[sel]).reshape(-1, 3)
        rep = lambda a: np.repeat(a[sel], 4)
        m = SurfaceMesh(np.concatenate([m.tri[keep], ch]), np.concatenate([m.net[keep], rep(m.net)]),
                        np.concatenate([m.iface[keep], rep(m.iface)]), np.concatenate([m.bflag[keep], chf]),
                        np.concatenate([m.level[keep], rep(m.level) + 1]),
                        np.concatenate([m.origin[keep], rep(m.origin)]),
                        np.concatenate([m.stack[keep], np.full(4 * k, -1)]),
                        np.concatenate([m.stack_pos[keep], np.full(4 * k, -1)]), m.net_names, dict(m.meta))
    return m


def boundary_layer_refine(mesh, layers, growth_ratio, first_layer_height, region=None):
    """Replace outline triangles by stacks of strips graded toward the edge.

    Each selected triangle is cut by lines parallel to its outline edge at
    heights t, t(1+r), t(1+r+r^2), ... giving ``layers`` trapezoidal strips
    (two triangles each) plus the remaining apex triangle. A triangle with
    several outline edges is layered against its longest one.
    """
    if layers == 0:
        return mesh
    if layers < 0 or not growth_ratio > 1 or not first_layer_height > 0:
        raise ConfigError("boundary layers need layers >= 0, growth_ratio > 1, first_layer_height > 0")
    m = mesh
    sel = np.where(m.bflag.any(axis=1) & _in_region(m, region))[0]
    if sel.size == 0:
        return m
    cuts = first_layer_height * np.cumsum(growth_ratio ** np.arange(layers))
    lens = m.edge_lengths[sel]
    lens = np.where(m.bflag[sel], lens, -1.0)
    k = np.argmax(lens, axis=1)
    n = sel.size
    r = np.arange(n)
    T = m.tri[sel]
    P0 = T[r, k]
    P1 = T[r, (k + 1) % 3]
    P2 = T[r, (k + 2) % 3]
    base = np.linalg.norm(P1 - P0, axis=1)
    H = 2.0 * m.areas[sel] / base
    if np.any(cuts[-1] >= H * (1 - 1e-9)):
        i = int(np.argmin(H))
        raise ConfigError(
            f"boundary layers overflow: {layers} strips need height {cuts[-1]:.4g} µm but a boundary "
            f"triangle is only {H[i]:.4g} µm tall; use a smaller first_layer_height (at most "
            f"{H[i] / cuts[-1] * first_layer_height:.3g} µm) or fewer layers")
    fl = m.bflag[sel]
    f_side1 = fl[r, (k + 1) % 3]  # P1 -> P2
    f_side2 = fl[r, (k + 2) % 3]  # P2 -> P0
    frac = np.concatenate([np.zeros((n, 1)), cuts[None, :] / H[:, None]], axis=1)  # (n, L+1)
    Q0 = P0[:, None, :] + frac[:, :, None] * (P2 - P0)[:, None, :]
    Q1 = P1[:, None, :] + frac[:, :, None] * (P2 - P1)[:, None, :]
    nt = 2 * layers + 1
    new = np.empty((n, nt, 3, 3))
    nf = np.zeros((n, nt, 3), bool)
    pos = np.empty(nt, np.int64)
    for j in range(layers):
        a, b = 2 * j, 2 * j + 1
        new[:, a] = np.stack([Q0[:, j], Q1[:, j], Q1[:, j + 1]], axis=1)
        new[:, b] = np.stack([Q0[:, j], Q1[:, j + 1], Q0[:, j + 1]], axis=1)
        nf[:, a, 1] = f_side1
        nf[:, b, 2] = f_side2
        pos[a] = pos[b] = j
    nf[:, 0, 0] = True  # the outline edge itself
    new[:, -1] = np.stack([Q0[:, layers], Q1[:, layers], P2], axis=1)
    nf[:, -1, 1] = f_side1
    nf[:, -1, 2] = f_side2
    pos[-1] = layers
    keep = np.ones(m.n, bool)
    keep[sel] = False
    s0 = int(m.stack.max()) + 1 if np.any(m.stack >= 0) else 0
    rep = lambda a: np.repeat(a[sel], nt)
    out = SurfaceMesh(np.concatenate([m.tri[keep], new.reshape(-1, 3, 3)]),
                      np.concatenate([m.net[keep], rep(m.net)]), np.concatenate([m.iface[keep], rep(m.iface)]),
                      np.concatenate([m.bflag[keep], nf.reshape(-1, 3)]),
                      np.concatenate([m.level[keep], rep(m.level)]),
                      np.concatenate([m.origin[keep], rep(m.origin)]),
                      np.concatenate([m.stack[keep], np.repeat(s0 + np.arange(n), nt)]),
                      np.concatenate([m.stack_pos[keep], np.tile(pos, n)]), m.net_names, dict(m.meta))
    return out


def refine(mesh, cfg):
    """Apply homogeneous then boundary-layer refinement per ``cfg``."""
    m = homogeneous_refine(mesh, cfg.homogeneous_levels, cfg.region)
    return boundary_layer_refine(m, cfg.boundary_layers, cfg.growth_ratio, cfg.first_layer_height, cfg.region)


# ---------------------------------------------------------------------------
# evaluation meshes for exposed substrate

def region_mesh(polygons, z, max_edge, cfg=None, aspect=1.0, focus=None, growth=1.0, max_edge_far=None,
                interface=0, window=None):
    """Edge-graded mesh of evaluation footprints (for example SA regions)."""
    tris, flags = [], []
    for p in polygons:
        t = triangulate_polygon(p, z, max_edge, aspect, focus, growth, max_edge_far, _window_breaks(window))
        tris.append(t)
        flags.append(polygon_edge_flags(t, p))
    n = sum(len(t) for t in tris)
    m = SurfaceMesh(np.concatenate(tris), np.zeros(n), np.full(n, interface), np.concatenate(flags), net_names=("region",))
    if cfg is not None:
        m = refine(m, cfg)
    return m.check()
