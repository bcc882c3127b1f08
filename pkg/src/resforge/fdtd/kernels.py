"""Yee update kernels over a tile of the leading grid axis.

Units: c = 1, mu = 1.  Each kernel updates rows ``i0 <= i < i1`` only, reads
neighbouring rows from the shared arrays and writes nothing outside its tile,
so any tiling of axis 0 produces bitwise-identical results.

Boundary handling per axis: periodic axes wrap; other axes are closed by
PEC walls at node 0 and node n (tangential E forced to zero there).

CPML: every derivative d/du is replaced by d/du / kappa + psi with
psi <- b psi + c du, using per-axis coefficient vectors sampled at integer
nodes (``*e*``) or half nodes (``*h*``).  Where c == 0 the psi update is
skipped; psi stays zero there.
"""

from numba import njit


# ---------------------------------------------------------------- 2D TM (Ez, Hx, Hy)

@njit(nogil=True, cache=True)
def tm_update_e(Ez, Hx, Hy, ce, psi_ezx, psi_ezy,
                ikex, bex, cex, ikey, bey, cey,
                inv_dx, per_x, per_y, i0, i1):
    nx, ny = Ez.shape
    for i in range(i0, i1):
        if i == 0 and not per_x:
            continue
        im = i - 1 if i > 0 else nx - 1
        kx = ikex[i]
        bx = bex[i]
        cx = cex[i]
        for j in range(ny):
            if j == 0:
                if not per_y:
                    continue
                jm = ny - 1
            else:
                jm = j - 1
            dhy = (Hy[i, j] - Hy[im, j]) * inv_dx
            dhx = (Hx[i, j] - Hx[i, jm]) * inv_dx
            tx = dhy * kx
            if cx != 0.0:
                psi_ezx[i, j] = bx * psi_ezx[i, j] + cx * dhy
                tx += psi_ezx[i, j]
            ty = dhx * ikey[j]
            if cey[j] != 0.0:
                psi_ezy[i, j] = bey[j] * psi_ezy[i, j] + cey[j] * dhx
                ty += psi_ezy[i, j]
            Ez[i, j] += ce[i, j] * (tx - ty)


@njit(nogil=True, cache=True)
def tm_update_h(Ez, Hx, Hy, psi_hyx, psi_hxy,
                ikhx, bhx, chx, ikhy, bhy, chy,
                dt, inv_dx, per_x, per_y, i0, i1):
    nx, ny = Ez.shape
    for i in range(i0, i1):
        ip = i + 1
        x_edge = ip == nx
        if x_edge:
            ip = 0
        kx = ikhx[i]
        bx = bhx[i]
        cx = chx[i]
        for j in range(ny):
            jp = j + 1
            y_edge = jp == ny
            if y_edge:
                jp = 0
            ez = Ez[i, j]
            ez_xp = 0.0 if (x_edge and not per_x) else Ez[ip, j]
            ez_yp = 0.0 if (y_edge and not per_y) else Ez[i, jp]
            dex = (ez_xp - ez) * inv_dx
            dey = (ez_yp - ez) * inv_dx
            tx = dex * kx
            if cx != 0.0:
                psi_hyx[i, j] = bx * psi_hyx[i, j] + cx * dex
                tx += psi_hyx[i, j]
            ty = dey * ikhy[j]
            if chy[j] != 0.0:
                psi_hxy[i, j] = bhy[j] * psi_hxy[i, j] + chy[j] * dey
                ty += psi_hxy[i, j]
            Hy[i, j] += dt * tx
            Hx[i, j] -= dt * ty


# ---------------------------------------------------------------- 2D TE (Ex, Ey, Hz)

@njit(nogil=True, cache=True)
def te_update_e(Ex, Ey, Hz, cex_m, cey_m, psi_exy, psi_eyx,
                ikex, bex, cex, ikey, bey, cey,
                inv_dx, per_x, per_y, i0, i1):
    nx, ny = Hz.shape
    for i in range(i0, i1):
        im = i - 1 if i > 0 else nx - 1
        x_wall = i == 0 and not per_x
        kx = ikex[i]
        bx = bex[i]
        cx = cex[i]
        for j in range(ny):
            if j == 0:
                jm = ny - 1
                y_wall = not per_y
            else:
                jm = j - 1
                y_wall = False
            hz = Hz[i, j]
            if not y_wall:
                dhy = (hz - Hz[i, jm]) * inv_dx
                ty = dhy * ikey[j]
                if cey[j] != 0.0:
                    psi_exy[i, j] = bey[j] * psi_exy[i, j] + cey[j] * dhy
                    ty += psi_exy[i, j]
                Ex[i, j] += cex_m[i, j] * ty
            if not x_wall:
                dhx = (hz - Hz[im, j]) * inv_dx
                tx = dhx * kx
                if cx != 0.0:
                    psi_eyx[i, j] = bx * psi_eyx[i, j] + cx * dhx
                    tx += psi_eyx[i, j]
                Ey[i, j] -= cey_m[i, j] * tx


@njit(nogil=True, cache=True)
def te_update_h(Ex, Ey, Hz, psi_hzx, psi_hzy,
                ikhx, bhx, chx, ikhy, bhy, chy,
                dt, inv_dx, per_x, per_y, i0, i1):
    nx, ny = Hz.shape
    for i in range(i0, i1):
        ip = i + 1
        x_edge = ip == nx
        if x_edge:
            ip = 0
        kx = ikhx[i]
        bx = bhx[i]
        cx = chx[i]
        for j in range(ny):
            jp = j + 1
            y_edge = jp == ny
            if y_edge:
                jp = 0
            ey_xp = 0.0 if (x_edge and not per_x) else Ey[ip, j]
            ex_yp = 0.0 if (y_edge and not per_y) else Ex[i, jp]
            dey = (ey_xp - Ey[i, j]) * inv_dx
            dex = (ex_yp - Ex[i, j]) * inv_dx
            tx = dey * kx
            if cx != 0.0:
                psi_hzx[i, j] = bx * psi_hzx[i, j] + cx * dey
                tx += psi_hzx[i, j]
            ty = dex * ikhy[j]
            if chy[j] != 0.0:
                psi_hzy[i, j] = bhy[j] * psi_hzy[i, j] + chy[j] * dex
                ty += psi_hzy[i, j]
            Hz[i, j] += dt * (ty - tx)


# ---------------------------------------------------------------- 3D

@njit(nogil=True, cache=True)
def _nb_minus(i, n, per):
    """Index of the lower neighbour and whether the site sits on a PEC wall."""
    if i == 0:
        return n - 1, not per
    return i - 1, False


@njit(nogil=True, cache=True)
def e3_update(Ex, Ey, Ez, Hx, Hy, Hz, cx_m, cy_m, cz_m, psi,
              ike, be, ce, inv_dx, per, i0, i1):
    """E update in 3D.

    ``psi`` is a (6, nx, ny, nz) array ordered (Ex/y, Ex/z, Ey/z, Ey/x, Ez/x, Ez/y);
    ``ike``, ``be``, ``ce`` are (3, n_max) per-axis integer-node coefficients.
    """
    nx, ny, nz = Ex.shape
    for i in range(i0, i1):
        im, xw = _nb_minus(i, nx, per[0])
        for j in range(ny):
            jm, yw = _nb_minus(j, ny, per[1])
            for k in range(nz):
                km, zw = _nb_minus(k, nz, per[2])
                # Ex at (i+1/2, j, k): dHz/dy - dHy/dz
                if not (yw or zw):
                    d1 = (Hz[i, j, k] - Hz[i, jm, k]) * inv_dx
                    d2 = (Hy[i, j, k] - Hy[i, j, km]) * inv_dx
                    t1 = d1 * ike[1, j]
                    if ce[1, j] != 0.0:
                        psi[0, i, j, k] = be[1, j] * psi[0, i, j, k] + ce[1, j] * d1
                        t1 += psi[0, i, j, k]
                    t2 = d2 * ike[2, k]
                    if ce[2, k] != 0.0:
                        psi[1, i, j, k] = be[2, k] * psi[1, i, j, k] + ce[2, k] * d2
                        t2 += psi[1, i, j, k]
                    Ex[i, j, k] += cx_m[i, j, k] * (t1 - t2)
                # Ey at (i, j+1/2, k): dHx/dz - dHz/dx
                if not (xw or zw):
                    d1 = (Hx[i, j, k] - Hx[i, j, km]) * inv_dx
                    d2 = (Hz[i, j, k] - Hz[im, j, k]) * inv_dx
                    t1 = d1 * ike[2, k]
                    if ce[2, k] != 0.0:
                        psi[2, i, j, k] = be[2, k] * psi[2, i, j, k] + ce[2, k] * d1
                        t1 += psi[2, i, j, k]
                    t2 = d2 * ike[0, i]
                    if ce[0, i] != 0.0:
                        psi[3, i, j, k] = be[0, i] * psi[3, i, j, k] + ce[0, i] * d2
                        t2 += psi[3, i, j, k]
                    Ey[i, j, k] += cy_m[i, j, k] * (t1 - t2)
                # Ez at (i, j, k+1/2): dHy/dx - dHx/dy
                if not (xw or yw):
                    d1 = (Hy[i, j, k] - Hy[im, j, k]) * inv_dx
                    d2 = (Hx[i, j, k] - Hx[i, jm, k]) * inv_dx
                    t1 = d1 * ike[0, i]
                    if ce[0, i] != 0.0:
                        psi[4, i, j, k] = be[0, i] * psi[4, i, j, k] + ce[0, i] * d1
                        t1 += psi[4, i, j, k]
                    t2 = d2 * ike[1, j]
                    if ce[1, j] != 0.0:
                        psi[5, i, j, k] = be[1, j] * psi[5, i, j, k] + ce[1, j] * d2
                        t2 += psi[5, i, j, k]
                    Ez[i, j, k] += cz_m[i, j, k] * (t1 - t2)


@njit(nogil=True, cache=True)
def _nb_plus(i, n, per):
    if i == n - 1:
        return 0, not per
    return i + 1, False


@njit(nogil=True, cache=True)
def h3_update(Ex, Ey, Ez, Hx, Hy, Hz, psi, ikh, bh, ch, dt, inv_dx, per, i0, i1):
    """H update in 3D; ``psi`` ordered (Hx/y, Hx/z, Hy/z, Hy/x, Hz/x, Hz/y)."""
    nx, ny, nz = Ex.shape
    for i in range(i0, i1):
        ip, xo = _nb_plus(i, nx, per[0])
        for j in range(ny):
            jp, yo = _nb_plus(j, ny, per[1])
            for k in range(nz):
                kp, zo = _nb_plus(k, nz, per[2])
                ez_yp = 0.0 if yo else Ez[i, jp, k]
                ey_zp = 0.0 if zo else Ey[i, j, kp]
                ex_zp = 0.0 if zo else Ex[i, j, kp]
                ez_xp = 0.0 if xo else Ez[ip, j, k]
                ey_xp = 0.0 if xo else Ey[ip, j, k]
                ex_yp = 0.0 if yo else Ex[i, jp, k]
                # Hx at (i, j+1/2, k+1/2): -(dEz/dy - dEy/dz)
                d1 = (ez_yp - Ez[i, j, k]) * inv_dx
                d2 = (ey_zp - Ey[i, j, k]) * inv_dx
                t1 = d1 * ikh[1, j]
                if ch[1, j] != 0.0:
                    psi[0, i, j, k] = bh[1, j] * psi[0, i, j, k] + ch[1, j] * d1
                    t1 += psi[0, i, j, k]
                t2 = d2 * ikh[2, k]
                if ch[2, k] != 0.0:
                    psi[1, i, j, k] = bh[2, k] * psi[1, i, j, k] + ch[2, k] * d2
                    t2 += psi[1, i, j, k]
                Hx[i, j, k] -= dt * (t1 - t2)
                # Hy: -(dEx/dz - dEz/dx)
                d1 = (ex_zp - Ex[i, j, k]) * inv_dx
                d2 = (ez_xp - Ez[i, j, k]) * inv_dx
                t1 = d1 * ikh[2, k]
                if ch[2, k] != 0.0:
                    psi[2, i, j, k] = bh[2, k] * psi[2, i, j, k] + ch[2, k] * d1
                    t1 += psi[2, i, j, k]
                t2 = d2 * ikh[0, i]
                if ch[0, i] != 0.0:
                    psi[3, i, j, k] = bh[0, i] * psi[3, i, j, k] + ch[0, i] * d2
                    t2 += psi[3, i, j, k]
                Hy[i, j, k] -= dt * (t1 - t2)
                # Hz: -(dEy/dx - dEx/dy)
                d1 = (ey_xp - Ey[i, j, k]) * inv_dx
                d2 = (ex_yp - Ex[i, j, k]) * inv_dx
                t1 = d1 * ikh[0, i]
                if ch[0, i] != 0.0:
                    psi[4, i, j, k] = bh[0, i] * psi[4, i, j, k] + ch[0, i] * d1
                    t1 += psi[4, i, j, k]
                t2 = d2 * ikh[1, j]
                if ch[1, j] != 0.0:
                    psi[5, i, j, k] = bh[1, j] * psi[5, i, j, k] + ch[1, j] * d2
                    t2 += psi[5, i, j, k]
                Hz[i, j, k] -= dt * (t1 - t2)
