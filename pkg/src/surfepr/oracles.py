"""Closed-form and semi-analytic references from conformal mapping.

Everything here is pure python/numpy/scipy and independent of the solver so
it can serve as ground truth. Lengths are in µm and capacitances per unit
length in fF/µm. Complete elliptic integrals take the modulus ``k`` (not the
parameter ``m = k**2`` used by scipy).
"""
from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy import integrate

from .constants import EPS0
from .errors import ConfigError, NumericalError


# ---------------------------------------------------------------------------
# elliptic integrals

def _agm_series(a, b):
    """Arithmetic-geometric mean of (a, b) plus the sum used for E."""
    c = math.sqrt(abs(a * a - b * b))
    s = 0.5 * c * c
    p = 1.0
    for _ in range(64):
        if abs(a - b) <= 1e-16 * a:
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        p *= 2.0
        s += 0.5 * p * c * c
    return a, s


def _check_modulus(k):
    k = float(k)
    if not (0.0 <= k < 1.0):
        raise ConfigError(f"elliptic modulus must satisfy 0 <= k < 1, got {k!r}")
    return k


def complementary_modulus(k):
    """Return k' = sqrt(1 - k^2) without cancellation near k = 1."""
    return math.sqrt((1.0 - k) * (1.0 + k))


def elliptic_K(k):
    """Complete elliptic integral of the first kind, K(k), by AGM.

    Parameters
    ----------
    k : float
        Modulus, ``0 <= k < 1``.
    """
    k = _check_modulus(k)
    a, _ = _agm_series(1.0, complementary_modulus(k))
    return math.pi / (2.0 * a)


def elliptic_Kp(k):
    """Complementary integral K(k') evaluated from k directly.

    Using AGM(1, k) avoids forming k' when k is tiny.
    """
    k = _check_modulus(k)
    if k == 0.0:
        return math.inf
    a, _ = _agm_series(1.0, k)
    return math.pi / (2.0 * a)


def elliptic_E(k):
    """Complete elliptic integral of the second kind, E(k), by AGM."""
    k = _check_modulus(k)
    a, s = _agm_series(1.0, complementary_modulus(k))
    return math.pi / (2.0 * a) * (1.0 - s)


def elliptic_Ep(k):
    """E(k') evaluated from k."""
    k = _check_modulus(k)
    a, s = _agm_series(1.0, k)
    return math.pi / (2.0 * a) * (1.0 - s)


def legendre_relation_residual(k):
    """K E' + K' E - K K' - pi/2 for modulus k (zero up to rounding)."""
    K, Kp = elliptic_K(k), elliptic_Kp(k)
    E, Ep = elliptic_E(k), elliptic_Ep(k)
    return K * Ep + Kp * E - K * Kp - 0.5 * math.pi


# ---------------------------------------------------------------------------
# coplanar capacitor (two strips a <= |x| <= b on a substrate half space)

@dataclass(frozen=True)
class CpcSpec:
    """Coplanar capacitor cross-section.

    Parameters
    ----------
    a, b : float
        Inner and outer strip edges in µm; conductors occupy a <= |x| <= b.
    eps_sub : float
        Substrate relative permittivity (air above).
    delta : float
        Contamination layer thickness in µm.
    eps_c : float
        Contamination layer relative permittivity.
    """

    a: float
    b: float
    eps_sub: float = 11.9
    delta: float = 3e-3
    eps_c: float = 11.9

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise ConfigError(f"CPC needs 0 < a < b, got a={self.a}, b={self.b}")
        if self.eps_sub <= 0 or self.eps_c <= 0 or self.delta <= 0:
            raise ConfigError("CPC permittivities and delta must be positive")


def cpc_capacitance(spec):
    """Capacitance per unit length between the two strips in fF/µm."""
    k = spec.a / spec.b
    return 0.5 * EPS0 * (spec.eps_sub + 1.0) * elliptic_Kp(k) / elliptic_K(k)


def cpc_psm(spec):
    """Leading-log substrate-metal participation ratio of the CPC.

    Valid for ``delta << a``; the neglected terms are O(delta/a).
    """
    a, k = spec.a, spec.a / spec.b
    K, Kp = elliptic_K(k), elliptic_Kp(k)
    pref = (spec.delta / a) * spec.eps_sub ** 2 / (spec.eps_c * (spec.eps_sub + 1.0))
    pref /= 2.0 * (1.0 - k) * Kp * K
    bracket = math.log(4 * a * (1 - k) / (spec.delta * (1 + k))) - k * math.log(k) / (1 + k) + 1.0
    return pref * bracket


def cpc_field(spec, zeta, v0=1.0):
    """Complex field E_x - i E_z of the CPC for strip potential difference v0.

    The magnitude is |E| in V/µm. The same expression holds on both sides of
    the interface for a thin-film structure on a half space.
    """
    zeta = np.asarray(zeta, dtype=complex)
    a, b = spec.a, spec.b
    c0 = v0 * b / (2.0 * elliptic_K(a / b))
    return c0 / np.sqrt((zeta * zeta - a * a) * (zeta * zeta - b * b))


def cpc_psm_semi_analytic(spec, epsabs=0.0, epsrel=1e-9):
    """SM participation from adaptive integration of the exact CPC field.

    Integrates ``eps0 eps_sub^2/eps_c |E|^2`` over both strips and depth
    (0, delta) and divides by ``C v0^2``.
    """
    a, b, d = spec.a, spec.b, spec.delta

    def inner(z):
        f = lambda x: float(abs(cpc_field(spec, x - 1j * z)) ** 2)
        return integrate.quad(f, a, b, points=[a + 10 * z, b - 10 * z] if 20 * z < b - a else None,
                              epsabs=epsabs, epsrel=epsrel, limit=400)[0]

    val = integrate.quad(inner, 0.0, d, epsabs=epsabs, epsrel=epsrel, limit=200)[0]
    num = 2.0 * EPS0 * spec.eps_sub ** 2 / spec.eps_c * val
    return num / cpc_capacitance(spec)


# ---------------------------------------------------------------------------
# grounded coplanar waveguide (signal |x| <= a, grounds |x| >= b, PEC at -h)

@dataclass(frozen=True)
class GcpwSpec:
    """Grounded coplanar waveguide cross-section.

    Parameters
    ----------
    a : float
        Signal half width in µm.
    b : float
        Distance from the centre to the ground edges in µm.
    h : float
        Substrate thickness in µm (PEC ground plane at z = -h).
    eps_in, eps_out : float
        Substrate and surrounding relative permittivities.
    delta : float
        Contamination layer thickness in µm.
    eps_c : float
        Contamination layer relative permittivity.
    phi0 : float
        Signal line potential in V.
    """

    a: float
    b: float
    h: float
    eps_in: float = 11.9
    eps_out: float = 1.0
    delta: float = 3e-3
    eps_c: float = 11.9
    phi0: float = 1.0

    def __post_init__(self):
        if not (0 < self.a < self.b):
            raise ConfigError(f"GCPW needs 0 < a < b, got a={self.a}, b={self.b}")
        if self.h <= 0:
            raise ConfigError(f"GCPW needs h > 0, got {self.h}")
        if min(self.eps_in, self.eps_out, self.eps_c, self.delta) <= 0:
            raise ConfigError("GCPW permittivities and delta must be positive")

    @property
    def k(self):
        return self.a / self.b

    @property
    def A(self):
        return math.pi * self.a / (2 * self.h)

    @property
    def B(self):
        return math.pi * self.b / (2 * self.h)

    @property
    def k1(self):
        return math.tanh(self.A) / math.tanh(self.B)


def gcpw_capacitance(spec):
    """Capacitance per unit length of the GCPW in fF/µm (air + substrate parts)."""
    k, k1 = spec.k, spec.k1
    c_out = 2 * EPS0 * spec.eps_out * elliptic_K(k) / elliptic_Kp(k)
    c_in = 2 * EPS0 * spec.eps_in * elliptic_K(k1) / elliptic_Kp(k1)
    return c_out + c_in


_LOG2 = math.log(2.0)


def _log_abs_sinh(p, q):
    """log|sinh(p + i q)| for real arrays p, q without overflow."""
    p = np.abs(np.asarray(p, dtype=float))
    q = np.asarray(q, dtype=float)
    big = p > 1.0
    out = np.empty(np.broadcast(p, q).shape)
    pb, qb = np.broadcast_arrays(p, q)
    # |sinh|^2 = (cosh 2p - cos 2q)/2
    e = np.exp(-2.0 * pb[big])
    out[big] = pb[big] - math.log(2.0) + 0.5 * np.log1p(e * e - 2.0 * np.cos(2.0 * qb[big]) * e)
    sp = np.sinh(pb[~big])
    sq = np.sin(qb[~big])
    out[~big] = 0.5 * np.log(sp * sp + sq * sq)
    return out


def gcpw_field_in_abs2(spec, x, z):
    """|E_in|^2 inside the substrate at lateral x and depth z below the interface.

    Uses cosh^2 u - cosh^2 A = sinh(u - A) sinh(u + A) in log form so that
    large |x|/h cannot overflow.
    """
    x = np.asarray(x, dtype=float)
    s = math.pi / (2 * spec.h)
    p, q = s * x, -s * np.asarray(z, dtype=float)
    A, B = spec.A, spec.B
    k1p = complementary_modulus(spec.k1)
    a0 = spec.phi0 * math.pi * math.cosh(A) * math.sinh(B) / (2 * spec.h * elliptic_K(k1p))
    lg = (_log_abs_sinh(p - A, q) + _log_abs_sinh(p + A, q)
          + _log_abs_sinh(p - B, q) + _log_abs_sinh(p + B, q))
    return a0 * a0 * np.exp(-lg)


def gcpw_field(spec, zeta, region="in"):
    """Complex GCPW field from conformal mapping.

    Parameters
    ----------
    spec : GcpwSpec
    zeta : complex or array
        ``x + i z`` in µm.
    region : {"in", "out"}
        ``"in"`` for the substrate layer, ``"out"`` for the air half space.

    Returns
    -------
    complex ndarray
        Field whose modulus is |E| in V/µm.
    """
    zeta = np.asarray(zeta, dtype=complex)
    a, b = spec.a, spec.b
    near = np.minimum.reduce([np.abs(zeta - a), np.abs(zeta + a), np.abs(zeta - b), np.abs(zeta + b)])
    if np.any(near < 1e-14 * b):
        raise ConfigError("field requested at a conductor edge (branch point)")
    if region == "out":
        return spec.phi0 * b / elliptic_Kp(spec.k) / np.sqrt((zeta ** 2 - a * a) * (zeta ** 2 - b * b))
    if region != "in":
        raise ConfigError(f"region must be 'in' or 'out', got {region!r}")
    s = math.pi / (2 * spec.h)
    u = s * zeta
    A, B = spec.A, spec.B
    k1p = complementary_modulus(spec.k1)
    a0 = spec.phi0 * math.pi * math.cosh(A) * math.sinh(B) / (2 * spec.h * elliptic_K(k1p))
    # K(k1') appears in the prefactor; elliptic_K(k1p) == elliptic_Kp(k1)
    prod = np.sinh(u - A) * np.sinh(u + A) * np.sinh(u - B) * np.sinh(u + B)
    return a0 / np.sqrt(prod)


@dataclass(frozen=True)
class GcpwClosedFormTerms:
    """Intermediate quantities of the closed-form GCPW SM participation."""

    A0: float
    C_pre: float
    A: float
    B: float
    k1: float
    La: float
    Lb: float
    U_tot: float
    C_gcpw: float
    prefactor: float  # multiplies the bracket in r(z)
    sinh_2A: float
    sinh_2B: float

    def X(self, x, h):
        """Dimensionless lateral coordinate pi x / (2 h)."""
        return math.pi * x / (2 * h)

    def Lambda_a(self, z):
        return np.log(self.La / np.asarray(z, dtype=float)) - 1.0 + 2.0 * self.A

    def Lambda_b(self, z):
        return np.log(self.Lb / np.asarray(z, dtype=float)) - 1.0

    def r(self, z):
        """Participation density per unit depth at depth z."""
        return self.prefactor * (self.Lambda_a(z) / self.sinh_2A + self.Lambda_b(z) / self.sinh_2B)


def gcpw_closed_form_terms(spec):
    """Evaluate the closed-form building blocks for ``spec``."""
    A, B, k1 = spec.A, spec.B, spec.k1
    h = spec.h
    k1p = complementary_modulus(k1)
    Kk1p = elliptic_Kp(k1)
    a0 = spec.phi0 * math.pi * math.cosh(A) * math.sinh(B) / (2 * h * Kk1p)
    c_pre = a0 * a0 / (math.cosh(B) ** 2 - math.cosh(A) ** 2)
    ratio = math.sinh(B - A) / math.sinh(B + A)
    s2a, s2b = math.sinh(2 * A), math.sinh(2 * B)
    la = 4 * h * math.e / math.pi * s2a * ratio
    # exp(-2B) sinh(2B) = (1 - exp(-4B))/2, written without overflow
    lb = 4 * h * math.e / math.pi * 0.5 * (-math.expm1(-4 * B)) * ratio
    c = gcpw_capacitance(spec)
    u_tot = 0.5 * c * spec.phi0 ** 2
    pref = EPS0 * spec.eps_in ** 2 / (spec.eps_c * c) * math.pi / (h * (k1p * Kk1p) ** 2)
    return GcpwClosedFormTerms(A0=a0, C_pre=c_pre, A=A, B=B, k1=k1, La=la, Lb=lb, U_tot=u_tot,
                               C_gcpw=c, prefactor=pref, sinh_2A=s2a, sinh_2B=s2b)


def gcpw_psm_closed_form(spec):
    """Closed-form SM participation ratio of the GCPW."""
    t = gcpw_closed_form_terms(spec)
    d = spec.delta
    return t.prefactor * d * ((math.log(t.La / d) + 2 * t.A) / t.sinh_2A + math.log(t.Lb / d) / t.sinh_2B)


def gcpw_psm_from_density(spec, epsrel=1e-12):
    """Integrate the closed-form density r(z) over (0, delta) adaptively.

    This reproduces :func:`gcpw_psm_closed_form` (the closed form is the
    exact integral of the log-density) and serves as a self-consistency check.
    """
    t = gcpw_closed_form_terms(spec)
    val, _ = integrate.quad(lambda z: float(t.r(z)), 0.0, spec.delta, epsabs=0.0, epsrel=epsrel, limit=200)
    return val


def gcpw_psm_semi_analytic(spec, tol=1e-9, cutoff=None):
    """SM participation from nested adaptive quadrature of the exact field.

    Integrates ``eps0 eps_in^2 / eps_c |E_in(x - i z)|^2`` over the metal
    footprint on one side (signal 0 < x < a, ground x > b) and depth
    (0, delta), then divides by the total energy ``C phi0^2 / 2``.

    Parameters
    ----------
    spec : GcpwSpec
    tol : float
        Relative and absolute tolerance passed to the adaptive integrator.
    cutoff : float, optional
        Width of the edge sub-intervals [a - c, a] and [b, b + c] split off
        from the lateral integral. Defaults to ``min(a, b - a, h) / 4``; the
        result must not depend on it.
    """
    a, b, h, d = spec.a, spec.b, spec.h, spec.delta
    c = cutoff if cutoff is not None else 0.25 * min(a, b - a, h)
    if not (0 < c < a):
        raise ConfigError("cutoff must lie in (0, a)")
    x_far = b + 30.0 * h  # |E|^2 decays like exp(-2 pi x / h)

    sc = math.pi / (2 * h)
    A, B = spec.A, spec.B
    a0 = spec.phi0 * math.pi * math.cosh(A) * math.sinh(B) / (2 * h * elliptic_Kp(spec.k1))
    la0 = 2.0 * math.log(a0)

    def f(x, z):
        # scalar twin of gcpw_field_in_abs2, kept in math for quad speed
        p = sc * x
        s2 = math.sin(sc * z) ** 2
        lg = 0.0
        for w in (p - A, p + A, p - B, p + B):
            w = abs(w)
            if w > 1.0:
                e = math.exp(-2.0 * w)
                lg += w - _LOG2 + 0.5 * math.log1p(e * e - 2.0 * (1.0 - 2.0 * s2) * e)
            else:
                lg += 0.5 * math.log(math.sinh(w) ** 2 + s2)
        return math.exp(la0 - lg)

    def lateral(z):
        tot = 0.0
        for lo, hi in ((0.0, a - c), (a - c, a), (b, b + c), (b + c, x_far)):
            v, _ = integrate.quad(f, lo, hi, args=(z,), epsabs=0.0, epsrel=tol, limit=400)
            tot += v
        return tot

    # z = d t^3 removes the log(z) behaviour of the lateral integral at the surface; the
    # slices that trip quad's roundoff warning sit at t << 1 where the Jacobian kills them
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(lambda t: 3.0 * d * t * t * lateral(d * t ** 3), 0.0, 1.0,
                                  epsabs=0.0, epsrel=tol, limit=200)
    if not np.isfinite(val):
        raise NumericalError("semi-analytic GCPW integral failed")
    t_cap = gcpw_capacitance(spec)
    u_tot = 0.5 * t_cap * spec.phi0 ** 2
    return EPS0 * spec.eps_in ** 2 * val / (spec.eps_c * u_tot)


# reference values (x1e-4) for a=5, b=30, delta=3 nm, eps=11.9
GCPW_PSM_REFERENCE = {
    25.0: (7.15503, 7.15514, 1.52e-3),
    35.0: (6.71921, 6.71930, 1.31e-3),
    45.0: (6.55110, 6.55118, 1.20e-3),
    100.0: (6.40298, 6.40305, 1.03e-3),
}


def gcpw_psm_reference_rows(tol=1e-9):
    """Recompute the GCPW P_SM comparison rows.

    Returns
    -------
    list of dict
        One row per substrate thickness with keys ``h``, ``semi``,
        ``closed`` (both x1e-4), ``rel_diff_pct`` and the reference values.
    """
    rows = []
    for h, (semi_ref, closed_ref, rel_ref) in GCPW_PSM_REFERENCE.items():
        spec = GcpwSpec(a=5.0, b=30.0, h=h, eps_in=11.9, eps_out=1.0, delta=3e-3, eps_c=11.9)
        semi = gcpw_psm_semi_analytic(spec, tol=tol) * 1e4
        closed = gcpw_psm_closed_form(spec) * 1e4
        rows.append(dict(h=h, semi=semi, closed=closed, rel_diff_pct=abs(closed - semi) / semi * 100,
                         semi_ref=semi_ref, closed_ref=closed_ref, rel_diff_ref_pct=rel_ref))
    return rows


def round_sig(x, n):
    """Round ``x`` to ``n`` significant figures."""
    if x == 0:
        return 0.0
    return round(x, n - 1 - int(math.floor(math.log10(abs(x)))))


def effective_junction_capacitance(cmat):
    """Series reduction of a two-conductor Maxwell matrix.

    ``(C11 C22 - C12^2) / (C11 + C22 + 2 C12)``; with a floating pair this is
    the capacitance seen between the pads for charges +Q and -Q.
    """
    c = np.asarray(cmat, dtype=float)
    if c.shape != (2, 2):
        raise ConfigError("effective junction capacitance needs a 2x2 matrix")
    den = c[0, 0] + c[1, 1] + 2 * c[0, 1]
    if den <= 0:
        raise NumericalError("Maxwell matrix has no self capacitance; solve without neutrality")
    return (c[0, 0] * c[1, 1] - c[0, 1] ** 2) / den


# ---------------------------------------------------------------------------
# image series for a substrate on a ground plane

def image_series_substrate_pec(eps_sub, eps_above, h, rho, z=0.0, nmax=None, tol=1e-15):
    """Green's function (V/fC) of a charge on the top of a grounded slab.

    The charge sits at the origin on the interface between a substrate
    of thickness ``h`` (PEC at z = -h) and the upper half space. For a
    field point at height ``z >= 0``

        G = [1/r_0 - (1 + K) sum_n (-K)^(n-1) / r_n] / (2 pi eps0 (eps_sub + eps_above))

    with K = (eps_sub - eps_above)/(eps_sub + eps_above) and
    r_n = sqrt(rho^2 + (z + 2 n h)^2). Terms are summed until they drop
    below ``tol`` relative to the running total.
    """
    if z < 0:
        raise ConfigError("image series is implemented for field points at or above the interface")
    if h <= 0 or eps_sub <= 0 or eps_above <= 0:
        raise ConfigError("h and permittivities must be positive")
    K = (eps_sub - eps_above) / (eps_sub + eps_above)
    r0 = math.hypot(rho, z)
    if r0 == 0:
        raise ConfigError("field point coincides with the charge")
    total = 1.0 / r0
    n = 1
    coef = 1.0 + K
    while True:
        term = coef / math.hypot(rho, z + 2 * n * h)
        total -= term
        if abs(term) < tol * abs(total) or (nmax is not None and n >= nmax) or coef == 0.0:
            break
        coef *= -K
        n += 1
        if n > 10_000_000:
            raise NumericalError("image series did not converge")
    return total / (2 * math.pi * EPS0 * (eps_sub + eps_above))
