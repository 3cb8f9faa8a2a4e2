"""Compiled kernels (numba).

Every function here has a vectorized counterpart in :mod:`.npy` that
implements the same formulas; the two are checked against each other in the
test suite.
"""
import math

import numpy as np

from .._accel import njit, prange
from .rules import W3, W7

_W7 = W7.copy()
_W3 = W3.copy()
_I120 = 1.0 / 120.0
_I24 = 1.0 / 24.0
_I12 = 1.0 / 12.0


@njit(cache=True)
def tri_pot_grad(px, py, pz, t):
    """Closed-form integral of 1/R over a horizontal triangle and its gradient.

    Returns (phi, gx, gy, gz) with phi = int_T dA'/|p - r'| and g = grad_p phi.
    In the triangle plane the normal component is the principal value 0.
    """
    h = pz - t[0, 2]
    ah = abs(h)
    phi = 0.0
    gx = 0.0
    gy = 0.0
    sb = 0.0
    for e in range(3):
        ax = t[e, 0]
        ay = t[e, 1]
        bx = t[(e + 1) % 3, 0]
        by = t[(e + 1) % 3, 1]
        dx = bx - ax
        dy = by - ay
        L = math.sqrt(dx * dx + dy * dy)
        lx = dx / L
        ly = dy / L
        mx = ly
        my = -lx
        sm = (ax - px) * lx + (ay - py) * ly
        sp = (bx - px) * lx + (by - py) * ly
        t0 = (ax - px) * mx + (ay - py) * my
        R02 = t0 * t0 + h * h
        if R02 == 0.0:
            # field point on the edge line inside the triangle plane
            if sm > 0.0:
                f = math.log(sp / sm)
            elif sp < 0.0:
                f = math.log(sm / sp)
            else:
                f = 0.0
            beta = 0.0
        else:
            Rm = math.sqrt(R02 + sm * sm)
            Rp = math.sqrt(R02 + sp * sp)
            if sm >= 0.0:
                f = math.log((Rp + sp) / (Rm + sm))
            elif sp <= 0.0:
                f = math.log((Rm - sm) / (Rp - sp))
            else:
                f = math.log((Rp + sp) * (Rm - sm) / R02)
            beta = math.atan(t0 * sp / (R02 + ah * Rp)) - math.atan(t0 * sm / (R02 + ah * Rm))
        phi += t0 * f - ah * beta
        gx -= mx * f
        gy -= my * f
        sb += beta
    if h > 0.0:
        gz = -sb
    elif h < 0.0:
        gz = sb
    else:
        gz = 0.0
    return phi, gx, gy, gz


@njit(cache=True)
def self_integral(t):
    """Exact int_T int_T dA dA' / |r - r'| for a planar triangle."""
    l = np.empty(3)
    for e in range(3):
        dx = t[(e + 1) % 3, 0] - t[e, 0]
        dy = t[(e + 1) % 3, 1] - t[e, 1]
        l[e] = math.sqrt(dx * dx + dy * dy)
    ax = t[1, 0] - t[0, 0]
    ay = t[1, 1] - t[0, 1]
    bx = t[2, 0] - t[0, 0]
    by = t[2, 1] - t[0, 1]
    A = 0.5 * abs(ax * by - ay * bx)
    s = 0.0
    for i in range(3):
        a = l[i]
        b = l[(i + 1) % 3]
        c = l[(i + 2) % 3]
        num = (a + b) * (a + b) - c * c
        den = b * b - (a - c) * (a - c)
        s += math.log(num / den) / a
    return (4.0 / 3.0) * A * A * s


@njit(cache=True)
def table_eval(Gt, Grt, Gzt, s, p, u0, du, rho, need_grad):
    """Quintic Lagrange interpolation in log(rho) with the near-zero rule."""
    M = Gt.shape[2]
    scale = 1.0
    if rho > 0.0:
        t = (math.log(rho) - u0) / du
    else:
        t = -1.0
    if t < 0.0:
        scale = rho / math.exp(u0)
        t = 0.0
    i0 = int(math.floor(t)) - 2
    if i0 < 0:
        i0 = 0
    if i0 > M - 6:
        i0 = M - 6
    x = t - i0
    # Lagrange weights on nodes 0..5; denominators prod_{m != j} (j - m)
    d0 = x
    d1 = x - 1.0
    d2 = x - 2.0
    d3 = x - 3.0
    d4 = x - 4.0
    d5 = x - 5.0
    p01 = d0 * d1
    p45 = d4 * d5
    p23 = d2 * d3
    w0 = -(d1 * p23 * p45) * _I120
    w1 = (d0 * p23 * p45) * _I24
    w2 = -(p01 * d3 * p45) * _I12
    w3 = (p01 * d2 * p45) * _I12
    w4 = -(p01 * p23 * d5) * _I24
    w5 = (p01 * p23 * d4) * _I120
    g = (w0 * Gt[s, p, i0] + w1 * Gt[s, p, i0 + 1] + w2 * Gt[s, p, i0 + 2] + w3 * Gt[s, p, i0 + 3]
         + w4 * Gt[s, p, i0 + 4] + w5 * Gt[s, p, i0 + 5])
    gr = 0.0
    gz = 0.0
    if need_grad:
        gr = (w0 * Grt[s, p, i0] + w1 * Grt[s, p, i0 + 1] + w2 * Grt[s, p, i0 + 2] + w3 * Grt[s, p, i0 + 3]
              + w4 * Grt[s, p, i0 + 4] + w5 * Grt[s, p, i0 + 5])
        gz = (w0 * Gzt[s, p, i0] + w1 * Gzt[s, p, i0 + 1] + w2 * Gzt[s, p, i0 + 2] + w3 * Gzt[s, p, i0 + 3]
              + w4 * Gzt[s, p, i0 + 4] + w5 * Gzt[s, p, i0 + 5])
    return g, gr * scale, gz


@njit(cache=True)
def _seg_dist2(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    L2 = dx * dx + dy * dy
    t = ((px - ax) * dx + (py - ay) * dy) / L2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    qx = ax + t * dx - px
    qy = ay + t * dy - py
    return qx * qx + qy * qy


@njit(cache=True)
def tri_gap(ti, tj):
    """Distance between two horizontal triangles that do not overlap."""
    d2 = 1e300
    for k in range(3):
        for e in range(3):
            v = _seg_dist2(ti[k, 0], ti[k, 1], tj[e, 0], tj[e, 1], tj[(e + 1) % 3, 0], tj[(e + 1) % 3, 1])
            if v < d2:
                d2 = v
            v = _seg_dist2(tj[k, 0], tj[k, 1], ti[e, 0], ti[e, 1], ti[(e + 1) % 3, 0], ti[(e + 1) % 3, 1])
            if v < d2:
                d2 = v
    dz = ti[0, 2] - tj[0, 2]
    return math.sqrt(d2 + dz * dz)


@njit(cache=True)
def galerkin_inv_r(ti, tj, Ai, Aj, ci, cj, di, dj, q7i, q7j, q3i, q3j, cfg, gx, gw):
    """(1/(Ai Aj)) int_Ti int_Tj 1/R with the tiered rule; returns (value, tier).

    Tiers: 0 close (Duffy), 1 near (analytic inner), 2 seven-point,
    3 three-point, 4 centroid.
    """
    dxc = ci[0] - cj[0]
    dyc = ci[1] - cj[1]
    dzc = ci[2] - cj[2]
    d = math.sqrt(dxc * dxc + dyc * dyc + dzc * dzc)
    dm = di if di > dj else dj
    if d >= cfg[2] * dm:
        return 1.0 / d, 4
    if d >= cfg[1] * dm:
        v = 0.0
        for a in range(3):
            for b in range(3):
                ex = q3i[a, 0] - q3j[b, 0]
                ey = q3i[a, 1] - q3j[b, 1]
                ez = q3i[a, 2] - q3j[b, 2]
                v += _W3[a] * _W3[b] / math.sqrt(ex * ex + ey * ey + ez * ez)
        return v, 3
    if d >= cfg[0] * dm:
        v = 0.0
        for a in range(7):
            for b in range(7):
                ex = q7i[a, 0] - q7j[b, 0]
                ey = q7i[a, 1] - q7j[b, 1]
                ez = q7i[a, 2] - q7j[b, 2]
                v += _W7[a] * _W7[b] / math.sqrt(ex * ex + ey * ey + ez * ez)
        return v, 2
    # outer = smaller element, inner analytic over the larger
    if di <= dj:
        to, tn, An, do, qo = ti, tj, Aj, di, q7i
    else:
        to, tn, An, do, qo = tj, ti, Ai, dj, q7j
    gap = tri_gap(to, tn)
    if gap >= cfg[3] * do:
        v = 0.0
        for a in range(7):
            v += _W7[a] * tri_pot_grad(qo[a, 0], qo[a, 1], qo[a, 2], tn)[0]
        return v / An, 1
    # Duffy: apex at the outer vertex nearest the inner centroid
    cx = (tn[0, 0] + tn[1, 0] + tn[2, 0]) / 3.0
    cy = (tn[0, 1] + tn[1, 1] + tn[2, 1]) / 3.0
    best = 0
    bd = 1e300
    for k in range(3):
        e = (to[k, 0] - cx) ** 2 + (to[k, 1] - cy) ** 2
        if e < bd:
            bd = e
            best = k
    p0 = to[best]
    p1 = to[(best + 1) % 3]
    p2 = to[(best + 2) % 3]
    v = 0.0
    n = gx.shape[0]
    for a in range(n):
        u = gx[a]
        for b in range(n):
            s = gx[b]
            x = p0[0] + u * (p1[0] - p0[0]) + u * s * (p2[0] - p1[0])
            y = p0[1] + u * (p1[1] - p0[1]) + u * s * (p2[1] - p1[1])
            z = p0[2] + u * (p1[2] - p0[2]) + u * s * (p2[2] - p1[2])
            v += 2.0 * u * gw[a] * gw[b] * tri_pot_grad(x, y, z, tn)[0]
    return v / An, 0


@njit(cache=True)
def _sct_pair(Gt, s, p, u0, du, qa, qb, wa, wb):
    v = 0.0
    for a in range(qa.shape[0]):
        for b in range(qb.shape[0]):
            ex = qa[a, 0] - qb[b, 0]
            ey = qa[a, 1] - qb[b, 1]
            r = math.sqrt(ex * ex + ey * ey)
            v += wa[a] * wb[b] * table_eval(Gt, Gt, Gt, s, p, u0, du, r, False)[0]
    return v


@njit(cache=True)
def _sct_entry(Gt, s, p, u0, du, tier, ci, cj, q7i, q7j, q3i, q3j):
    if tier == 4:
        ex = ci[0] - cj[0]
        ey = ci[1] - cj[1]
        return table_eval(Gt, Gt, Gt, s, p, u0, du, math.sqrt(ex * ex + ey * ey), False)[0]
    if tier == 3:
        return _sct_pair(Gt, s, p, u0, du, q3i, q3j, _W3, _W3)
    return _sct_pair(Gt, s, p, u0, du, q7i, q7j, _W7, _W7)


@njit(cache=True, parallel=True)
def assemble(tri, area, cen, diam, coef, src, plane, q7, q3, Gt, u0, du, use_sct, cfg, gx, gw, tiers):
    """Dense Galerkin matrix P[i, j] = potential on i per unit charge on j.

    ``coef[j]`` is 1/(4 pi eps0 eps_eff) of the source interface of j,
    ``src[j]`` its interface and ``plane[i]`` the table plane index of the
    interface of i. ``tiers`` receives the rule used for each pair.
    """
    N = tri.shape[0]
    P = np.empty((N, N))
    for i in prange(N):
        for j in range(i, N):
            if i == j:
                I = self_integral(tri[i]) / (area[i] * area[i])
                tier = 5
            else:
                I, tier = galerkin_inv_r(tri[i], tri[j], area[i], area[j], cen[i], cen[j], diam[i], diam[j],
                                         q7[i], q7[j], q3[i], q3[j], cfg, gx, gw)
            tiers[i, j] = tier
            tiers[j, i] = tier
            vij = coef[j] * I
            vji = coef[i] * I
            if use_sct:
                st = tier if tier < 5 else 2
                st = st if st > 1 else 2
                sij = _sct_entry(Gt, src[j], plane[i], u0, du, st, cen[i], cen[j], q7[i], q7[j], q3[i], q3[j])
                vij += sij
                if src[i] == src[j] and plane[i] == plane[j]:
                    vji += sij
                else:
                    vji += _sct_entry(Gt, src[i], plane[j], u0, du, st, cen[j], cen[i], q7[j], q7[i], q3[j],
                                      q3[i])
            P[i, j] = vij
            P[j, i] = vji
    return P


@njit(cache=True, parallel=True)
def field(pts, pplane, tri, area, cen, diam, coef, src, q7, q3, charges, Gt, Grt, Gzt, u0, du, mode, cfg):
    """Potential and field at points from per-triangle charges.

    Parameters
    ----------
    pts : (K, 3) field points
    pplane : (K,) table plane index of each point
    charges : (N, R) triangle charges for R excitations
    mode : 0 primary part only, 1 primary plus scattered, 2 scattered only

    Returns
    -------
    phi : (K, R)
    E : (K, R, 3)
    """
    K = pts.shape[0]
    N = tri.shape[0]
    R = charges.shape[1]
    phi = np.zeros((K, R))
    E = np.zeros((K, R, 3))
    for k in prange(K):
        px = pts[k, 0]
        py = pts[k, 1]
        pz = pts[k, 2]
        for j in range(N):
            dx = px - cen[j, 0]
            dy = py - cen[j, 1]
            dz = pz - cen[j, 2]
            d = math.sqrt(dx * dx + dy * dy + dz * dz)
            if d < cfg[0] * diam[j]:
                nq = 7
            elif d < cfg[2] * diam[j]:
                nq = 3
            else:
                nq = 1
            v = 0.0
            ex = 0.0
            ey = 0.0
            ez = 0.0
            # primary part per unit charge density times area
            if mode != 2:
                if nq == 7:
                    v, gxx, gyy, gzz = tri_pot_grad(px, py, pz, tri[j])
                    v /= area[j]
                    ex = -gxx / area[j]
                    ey = -gyy / area[j]
                    ez = -gzz / area[j]
                elif nq == 3:
                    for a in range(3):
                        rx = px - q3[j, a, 0]
                        ry = py - q3[j, a, 1]
                        rz = pz - q3[j, a, 2]
                        r = math.sqrt(rx * rx + ry * ry + rz * rz)
                        w = _W3[a] / r
                        v += w
                        w /= r * r
                        ex += w * rx
                        ey += w * ry
                        ez += w * rz
                else:
                    v = 1.0 / d
                    w = v / (d * d)
                    ex = w * dx
                    ey = w * dy
                    ez = w * dz
                v *= coef[j]
                ex *= coef[j]
                ey *= coef[j]
                ez *= coef[j]
            if mode != 0:
                sv = 0.0
                sx = 0.0
                sy = 0.0
                sz = 0.0
                for a in range(nq):
                    if nq == 7:
                        qx = px - q7[j, a, 0]
                        qy = py - q7[j, a, 1]
                        w = _W7[a]
                    elif nq == 3:
                        qx = px - q3[j, a, 0]
                        qy = py - q3[j, a, 1]
                        w = _W3[a]
                    else:
                        qx = dx
                        qy = dy
                        w = 1.0
                    r = math.sqrt(qx * qx + qy * qy)
                    g, gr, gz = table_eval(Gt, Grt, Gzt, src[j], pplane[k], u0, du, r, True)
                    sv += w * g
                    if r > 0.0:
                        sx -= w * gr * qx / r
                        sy -= w * gr * qy / r
                    sz -= w * gz
                v += sv
                ex += sx
                ey += sy
                ez += sz
            for c in range(R):
                q = charges[j, c]
                if q != 0.0:
                    phi[k, c] += q * v
                    E[k, c, 0] += q * ex
                    E[k, c, 1] += q * ey
                    E[k, c, 2] += q * ez
    return phi, E
