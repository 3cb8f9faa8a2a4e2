"""Vectorized numpy kernels mirroring :mod:`.nb` formula for formula."""
import numpy as np

from .rules import W3, W7

_DEN6 = np.array([np.prod([j - m for m in range(6) if m != j]) for j in range(6)], dtype=float)


def tri_pot_grad(P, T):
    """Vectorized closed-form triangle potential.

    Parameters
    ----------
    P : (n, 3) field points
    T : (n, 3, 3) horizontal triangles

    Returns
    -------
    phi : (n,)
    grad : (n, 3)
    """
    P = np.asarray(P, float)
    T = np.asarray(T, float)
    h = P[:, 2] - T[:, 0, 2]
    ah = np.abs(h)
    phi = np.zeros(len(P))
    g = np.zeros((len(P), 3))
    sb = np.zeros(len(P))
    with np.errstate(divide="ignore", invalid="ignore"):
        for e in range(3):
            a = T[:, e, :2]
            b = T[:, (e + 1) % 3, :2]
            d = b - a
            L = np.hypot(d[:, 0], d[:, 1])
            lx, ly = d[:, 0] / L, d[:, 1] / L
            mx, my = ly, -lx
            ax, ay = a[:, 0] - P[:, 0], a[:, 1] - P[:, 1]
            bx, by = b[:, 0] - P[:, 0], b[:, 1] - P[:, 1]
            sm = ax * lx + ay * ly
            sp = bx * lx + by * ly
            t0 = ax * mx + ay * my
            R02 = t0 * t0 + h * h
            Rm = np.sqrt(R02 + sm * sm)
            Rp = np.sqrt(R02 + sp * sp)
            f = np.where(sm >= 0, np.log((Rp + sp) / (Rm + sm)),
                         np.where(sp <= 0, np.log((Rm - sm) / (Rp - sp)), np.log((Rp + sp) * (Rm - sm) / R02)))
            beta = np.arctan(t0 * sp / (R02 + ah * Rp)) - np.arctan(t0 * sm / (R02 + ah * Rm))
            z = R02 == 0
            if np.any(z):
                fz = np.where(sm > 0, np.log(sp / sm), np.where(sp < 0, np.log(sm / sp), 0.0))
                f = np.where(z, fz, f)
                beta = np.where(z, 0.0, beta)
            phi += t0 * f - ah * beta
            g[:, 0] -= mx * f
            g[:, 1] -= my * f
            sb += beta
    g[:, 2] = -np.sign(h) * sb
    return phi, g


def self_integral(T):
    T = np.asarray(T, float)
    l = np.linalg.norm(T[:, [1, 2, 0], :2] - T[:, :, :2], axis=2)
    e1 = T[:, 1, :2] - T[:, 0, :2]
    e2 = T[:, 2, :2] - T[:, 0, :2]
    A = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    s = np.zeros(len(T))
    for i in range(3):
        a, b, c = l[:, i], l[:, (i + 1) % 3], l[:, (i + 2) % 3]
        s += np.log(((a + b) ** 2 - c * c) / (b * b - (a - c) ** 2)) / a
    return (4.0 / 3.0) * A * A * s


def table_eval(Gt, Grt, Gzt, s, p, u0, du, rho, need_grad=True):
    """Vectorized quintic interpolation; s, p, rho broadcast to one shape."""
    rho = np.asarray(rho, float)
    s = np.broadcast_to(s, rho.shape)
    p = np.broadcast_to(p, rho.shape)
    M = Gt.shape[2]
    rmin = np.exp(u0)
    small = rho < rmin
    scale = np.where(small, rho / rmin, 1.0)
    r = np.where(small, rmin, rho)
    t = (np.log(r) - u0) / du
    i0 = np.clip(np.floor(t).astype(np.int64) - 2, 0, M - 6)
    x = t - i0
    g = np.zeros(rho.shape)
    gr = np.zeros(rho.shape)
    gz = np.zeros(rho.shape)
    for j in range(6):
        w = np.ones(rho.shape)
        for m in range(6):
            if m != j:
                w = w * (x - m)
        w = w / _DEN6[j]
        g += w * Gt[s, p, i0 + j]
        if need_grad:
            gr += w * Grt[s, p, i0 + j]
            gz += w * Gzt[s, p, i0 + j]
    return g, gr * scale, gz


def _seg_dist2(P, A, B):
    d = B - A
    L2 = (d * d).sum(-1)
    t = np.clip(((P - A) * d).sum(-1) / L2, 0.0, 1.0)
    q = A + t[..., None] * d - P
    return (q * q).sum(-1)


def tri_gap(Ti, Tj):
    d2 = np.full(len(Ti), np.inf)
    for k in range(3):
        for e in range(3):
            d2 = np.minimum(d2, _seg_dist2(Ti[:, k, :2], Tj[:, e, :2], Tj[:, (e + 1) % 3, :2]))
            d2 = np.minimum(d2, _seg_dist2(Tj[:, k, :2], Ti[:, e, :2], Ti[:, (e + 1) % 3, :2]))
    dz = Ti[:, 0, 2] - Tj[:, 0, 2]
    return np.sqrt(d2 + dz * dz)


def _pp(qa, qb, wa, wb):
    """sum_ab wa wb / |qa_a - qb_b| for stacks of point sets."""
    r = np.linalg.norm(qa[:, :, None, :] - qb[:, None, :, :], axis=-1)
    return np.einsum("a,b,nab->n", wa, wb, 1.0 / r)


def galerkin_inv_r(Ti, Tj, Ai, Aj, ci, cj, di, dj, q7i, q7j, q3i, q3j, cfg, gx, gw):
    """Vector version of the tiered Galerkin 1/R integral; returns (I, tier)."""
    n = len(Ti)
    I = np.empty(n)
    tier = np.empty(n, np.int64)
    d = np.linalg.norm(ci - cj, axis=1)
    dm = np.maximum(di, dj)
    far = d >= cfg[2] * dm
    mid = ~far & (d >= cfg[1] * dm)
    sev = ~far & ~mid & (d >= cfg[0] * dm)
    near = ~(far | mid | sev)
    I[far] = 1.0 / d[far]
    tier[far] = 4
    if np.any(mid):
        I[mid] = _pp(q3i[mid], q3j[mid], W3, W3)
        tier[mid] = 3
    if np.any(sev):
        I[sev] = _pp(q7i[sev], q7j[sev], W7, W7)
        tier[sev] = 2
    idx = np.where(near)[0]
    if idx.size:
        swap = di[idx] > dj[idx]
        To = np.where(swap[:, None, None], Tj[idx], Ti[idx])
        Tn = np.where(swap[:, None, None], Ti[idx], Tj[idx])
        An = np.where(swap, Ai[idx], Aj[idx])
        do = np.where(swap, dj[idx], di[idx])
        qo = np.where(swap[:, None, None], q7j[idx], q7i[idx])
        gap = tri_gap(To, Tn)
        an = gap >= cfg[3] * do
        ia = np.where(an)[0]
        if ia.size:
            pts = qo[ia].reshape(-1, 3)
            ph, _ = tri_pot_grad(pts, np.repeat(Tn[ia], 7, axis=0))
            I[idx[ia]] = (ph.reshape(-1, 7) @ W7) / An[ia]
            tier[idx[ia]] = 1
        ic = np.where(~an)[0]
        if ic.size:
            To_c, Tn_c = To[ic], Tn[ic]
            c = Tn_c[:, :, :2].mean(axis=1)
            best = np.argmin(((To_c[:, :, :2] - c[:, None, :]) ** 2).sum(-1), axis=1)
            r = np.arange(ic.size)
            p0 = To_c[r, best]
            p1 = To_c[r, (best + 1) % 3]
            p2 = To_c[r, (best + 2) % 3]
            U, S = np.meshgrid(gx, gx, indexing="ij")
            WW = (2.0 * U * np.outer(gw, gw)).ravel()
            U, S = U.ravel(), S.ravel()
            pts = (p0[:, None, :] + U[None, :, None] * (p1 - p0)[:, None, :]
                   + (U * S)[None, :, None] * (p2 - p1)[:, None, :])
            m = len(U)
            ph, _ = tri_pot_grad(pts.reshape(-1, 3), np.repeat(Tn_c, m, axis=0))
            I[idx[ic]] = (ph.reshape(-1, m) @ WW) / An[ic]
            tier[idx[ic]] = 0
    return I, tier


def _sct_entries(Gt, s, p, u0, du, tier, ci, cj, q7i, q7j, q3i, q3j):
    out = np.empty(len(tier))
    t4 = tier == 4
    if np.any(t4):
        r = np.hypot(*(ci[t4, :2] - cj[t4, :2]).T)
        out[t4] = table_eval(Gt, Gt, Gt, s[t4], p[t4], u0, du, r, False)[0]
    for sel, qa, qb, w in ((tier == 3, q3i, q3j, W3), ((tier != 3) & ~t4, q7i, q7j, W7)):
        if np.any(sel):
            dd = qa[sel][:, :, None, :2] - qb[sel][:, None, :, :2]
            r = np.hypot(dd[..., 0], dd[..., 1])
            nq = len(w)
            ss = np.broadcast_to(s[sel][:, None, None], r.shape)
            pp = np.broadcast_to(p[sel][:, None, None], r.shape)
            g = table_eval(Gt, Gt, Gt, ss, pp, u0, du, r, False)[0]
            out[sel] = np.einsum("a,b,nab->n", w, w, g.reshape(-1, nq, nq))
    return out


def assemble(tri, area, cen, diam, coef, src, plane, q7, q3, Gt, u0, du, use_sct, cfg, gx, gw, tiers):
    N = len(tri)
    P = np.empty((N, N))
    for i in range(N):
        j = np.arange(i + 1, N)
        ii = np.full(j.size, i)
        I, tier = galerkin_inv_r(tri[ii], tri[j], area[ii], area[j], cen[ii], cen[j], diam[ii], diam[j],
                                 q7[ii], q7[j], q3[ii], q3[j], cfg, gx, gw)
        tiers[i, j] = tier
        tiers[j, i] = tier
        vij = coef[j] * I
        vji = coef[i] * I
        Iself = self_integral(tri[i:i + 1])[0] / area[i] ** 2
        tiers[i, i] = 5
        pii = coef[i] * Iself
        if use_sct:
            st = np.where(tier > 1, tier, 2)
            sij = _sct_entries(Gt, src[j], np.full(j.size, plane[i]), u0, du, st, cen[ii], cen[j], q7[ii],
                               q7[j], q3[ii], q3[j])
            vij = vij + sij
            same = (src[j] == src[i]) & (plane[j] == plane[i])
            sji = sij.copy()
            if not np.all(same):
                o = ~same
                sji[o] = _sct_entries(Gt, np.full(o.sum(), src[i]), plane[j][o], u0, du, st[o], cen[j][o],
                                      cen[ii][o], q7[j][o], q7[ii][o], q3[j][o], q3[ii][o])
            vji = vji + sji
            pii += _sct_entries(Gt, src[i:i + 1], plane[i:i + 1], u0, du, np.array([2]), cen[i:i + 1],
                                cen[i:i + 1], q7[i:i + 1], q7[i:i + 1], q3[i:i + 1], q3[i:i + 1])[0]
        P[i, j] = vij
        P[j, i] = vji
        P[i, i] = pii
    return P


def field(pts, pplane, tri, area, cen, diam, coef, src, q7, q3, charges, Gt, Grt, Gzt, u0, du, mode, cfg,
          chunk=64):
    K = len(pts)
    R = charges.shape[1]
    phi = np.zeros((K, R))
    E = np.zeros((K, R, 3))
    for k0 in range(0, K, chunk):
        kk = np.arange(k0, min(K, k0 + chunk))
        p = pts[kk]
        dvec = p[:, None, :] - cen[None, :, :]
        d = np.linalg.norm(dvec, axis=2)
        near = d < cfg[0] * diam[None, :]
        mid = ~near & (d < cfg[2] * diam[None, :])
        far = ~near & ~mid
        v = np.zeros(d.shape)
        e = np.zeros(d.shape + (3,))
        # centroid rule
        v[far] = 1.0 / d[far]
        e[far] = dvec[far] / (d[far] ** 3)[:, None]
        # three-point rule
        a, b = np.where(mid)
        if a.size:
            rv = p[a][:, None, :] - q3[b]
            r = np.linalg.norm(rv, axis=2)
            v[a, b] = (W3 / r).sum(axis=1)
            e[a, b] = np.einsum("q,nqd->nd", W3, rv / (r ** 3)[..., None])
        a, b = np.where(near)
        if a.size:
            ph, g = tri_pot_grad(p[a], tri[b])
            v[a, b] = ph / area[b]
            e[a, b] = -g / area[b][:, None]
        v *= coef[None, :]
        e *= coef[None, :, None]
        if mode == 2:
            v[:] = 0.0
            e[:] = 0.0
        if mode != 0:
            plane_k = pplane[kk]
            for sel, nq in ((far, 1), (mid, 3), (near, 7)):
                a, b = np.where(sel)
                if not a.size:
                    continue
                if nq == 1:
                    q = cen[b][:, None, :]
                    w = np.ones(1)
                elif nq == 3:
                    q, w = q3[b], W3
                else:
                    q, w = q7[b], W7
                dd = p[a][:, None, :2] - q[:, :, :2]
                r = np.hypot(dd[..., 0], dd[..., 1])
                g, gr, gz = table_eval(Gt, Grt, Gzt, np.broadcast_to(src[b][:, None], r.shape),
                                       np.broadcast_to(plane_k[a][:, None], r.shape), u0, du, r, True)
                with np.errstate(divide="ignore", invalid="ignore"):
                    ur = np.where(r[..., None] > 0, dd / r[..., None], 0.0)
                v[a, b] += g @ w
                e[a, b, 0] -= (gr * ur[..., 0]) @ w
                e[a, b, 1] -= (gr * ur[..., 1]) @ w
                e[a, b, 2] -= gz @ w
        phi[kk] = v @ charges
        E[kk] = np.stack([e[..., c] @ charges for c in range(3)], axis=-1)
    return phi, E
