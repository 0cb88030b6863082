"""Compiled inner loop for the voxel lattice.

Everything in here works on flat numpy arrays so the same kernels serve the
single-step API in :mod:`morphsim.lattice` and the long actuated runs driven
by :mod:`morphsim.environment`.

Beams are linear Euler-Bernoulli elements evaluated in the geodesic mid
frame of their two voxels (co-rotational), which keeps the model free of any
preference for either end.  Local axes are cyclically permuted so the beam
axis is local 0.  Damping acts on the rates of the same local coordinates,
so rigid motion is never damped and the damping power is never positive.

Rest-dimension changes (bladder inflation) lengthen beams but keep the
construction cross-section, and the element length used for stiffness never
drops below the construction length, so the timestep bound computed at
construction holds under any actuation.
"""

import math

import numpy as np
from numba import njit



@njit(cache=True, error_model="numpy")
def quat_to_mat(q, out):
    w, x, y, z = q[0], q[1], q[2], q[3]
    out[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    out[0, 1] = 2.0 * (x * y - w * z)
    out[0, 2] = 2.0 * (x * z + w * y)
    out[1, 0] = 2.0 * (x * y + w * z)
    out[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    out[1, 2] = 2.0 * (y * z - w * x)
    out[2, 0] = 2.0 * (x * z - w * y)
    out[2, 1] = 2.0 * (y * z + w * x)
    out[2, 2] = 1.0 - 2.0 * (x * x + y * y)


@njit(cache=True, error_model="numpy", inline="always")
def _mid_frame(aw, ax, ay, az, bw, bx, by, bz):
    """Geodesic midpoint of two orientations and the relative rotation of
    ``b`` with respect to ``a``.

    Returns the mid-frame quaternion ``(mw, mx, my, mz)``, the rotation
    vector ``(t0, t1, t2)`` and the scalar part and vector norm ``(w, s)`` of
    the relative quaternion.  The relative rotation axis is fixed by the half
    rotation, so ``t`` has the same components in ``a``'s frame and in the
    mid frame.
    """
    if aw * bw + ax * bx + ay * by + az * bz < 0.0:
        bw, bx, by, bz = -bw, -bx, -by, -bz
    mw = aw + bw
    mx = ax + bx
    my = ay + by
    mz = az + bz
    n = 1.0 / math.sqrt(mw * mw + mx * mx + my * my + mz * mz)
    # conj(a) * b with the sign already chosen so w >= 0
    w = aw * bw + ax * bx + ay * by + az * bz
    x = aw * bx - ax * bw - ay * bz + az * by
    y = aw * by + ax * bz - ay * bw - az * bx
    z = aw * bz - ax * by + ay * bx - az * bw
    s = math.sqrt(x * x + y * y + z * z)
    if s < 1e-12:
        f = 2.0 / w if w > 0.0 else 2.0
    else:
        f = 2.0 * math.atan2(s, w) / s
    return mw * n, mx * n, my * n, mz * n, f * x, f * y, f * z, w, s


@njit(cache=True, error_model="numpy", inline="always")
def _mat_col(mw, mx, my, mz, c):
    """Column ``c`` of the rotation matrix of a unit quaternion."""
    if c == 0:
        return (1.0 - 2.0 * (my * my + mz * mz), 2.0 * (mx * my + mw * mz),
                2.0 * (mx * mz - mw * my))
    if c == 1:
        return (2.0 * (mx * my - mw * mz), 1.0 - 2.0 * (mx * mx + mz * mz),
                2.0 * (my * mz + mw * mx))
    return (2.0 * (mx * mz + mw * my), 2.0 * (my * mz - mw * mx),
            1.0 - 2.0 * (mx * mx + my * my))


@njit(cache=True, error_model="numpy", inline="always")
def _pick(v0, v1, v2, c):
    if c == 0:
        return v0
    if c == 1:
        return v1
    return v2


@njit(cache=True, error_model="numpy", inline="always")
def _beam_setup(i, pos, quat, ba, bb, baxis, rest, rest_base, E, G):
    """Local frame, geometry and stiffness of beam ``i``.

    Returns ``(e0, e1, e2, d, t, L0, k, w, s, r)`` where ``e0..e2`` are the
    mid-frame axes (beam axis first) in world coordinates, ``d`` and ``t``
    the separation and relative rotation in those axes, ``k`` the stiffness
    (axial, torsion, lateral 1, lateral 2, rotation about 1, rotation about
    2), ``w, s`` the relative quaternion data and ``r`` the world
    separation.
    """
    a = ba[i]
    b = bb[i]
    ax = baxis[i]
    c0 = ax
    c1 = (ax + 1) % 3
    c2 = (ax + 2) % 3
    mw, mx, my, mz, u0, u1, u2, w, s = _mid_frame(
        quat[a, 0], quat[a, 1], quat[a, 2], quat[a, 3],
        quat[b, 0], quat[b, 1], quat[b, 2], quat[b, 3])
    e0 = _mat_col(mw, mx, my, mz, c0)
    e1 = _mat_col(mw, mx, my, mz, c1)
    e2 = _mat_col(mw, mx, my, mz, c2)
    rx = pos[b, 0] - pos[a, 0]
    ry = pos[b, 1] - pos[a, 1]
    rz = pos[b, 2] - pos[a, 2]
    d = (e0[0] * rx + e0[1] * ry + e0[2] * rz,
         e1[0] * rx + e1[1] * ry + e1[2] * rz,
         e2[0] * rx + e2[1] * ry + e2[2] * rz)
    t = (_pick(u0, u1, u2, c0), _pick(u0, u1, u2, c1), _pick(u0, u1, u2, c2))
    L0 = rest[i, c0]
    L = max(L0, rest_base[i, c0])
    t1 = rest_base[i, c1]
    t2 = rest_base[i, c2]
    iz = t2 * t1 * t1 * t1 / 12.0      # bending in the (axis, c1) plane
    iy = t1 * t2 * t2 * t2 / 12.0      # bending in the (axis, c2) plane
    L3 = L * L * L
    k = (E * t1 * t2 / L, G * (iy + iz) / L, 12.0 * E * iz / L3,
         12.0 * E * iy / L3, E * iy / L, E * iz / L)
    return e0, e1, e2, d, t, L0, k, w, s, (rx, ry, rz)


@njit(cache=True, error_model="numpy", inline="always")
def _cross(a0, a1, a2, b0, b1, b2):
    return a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0


@njit(cache=True, error_model="numpy", inline="always")
def _rot_coeffs(t0, t1, t2, w, s):
    """Scalar coefficients for the rotation ``t`` whose unit quaternion has
    scalar part ``w`` and vector norm ``s``.

    Returns ``(A, B, C, Ah, Bh, Sh, Qh)``: the right Jacobian is
    ``Jr(t) = I - A t^ + B t^2`` with inverse ``I + t^/2 + C t^2``; ``Ah, Bh``
    give ``Jr(t/2)`` in powers of ``t`` and ``Sh, Qh`` give the
    rotation by ``t/2`` as ``I + Sh t^ + Qh t^2``.  No trigonometric calls
    are needed beyond the ``atan2`` that produced ``t``.
    """
    th2 = t0 * t0 + t1 * t1 + t2 * t2
    if th2 < 1e-6:
        A = 0.5 - th2 / 24.0
        B = 1.0 / 6.0 - th2 / 120.0
        C = 1.0 / 12.0 + th2 / 720.0
        Ah = 0.25 - th2 / 192.0
        Bh = 1.0 / 24.0 - th2 / 1920.0
        Sh = 0.5 * (1.0 - th2 / 24.0)
        Qh = 0.25 * (0.5 - th2 / 96.0)
    else:
        th = math.sqrt(th2)
        sn = 2.0 * s * w            # sin(th)
        cs = w * w - s * s          # cos(th)
        A = (1.0 - cs) / th2
        B = (th - sn) / (th2 * th)
        C = 1.0 / th2 - (1.0 + cs) / (2.0 * th * sn)
        Ah = 2.0 * (1.0 - w) / th2  # A(t/2) / 2
        Bh = 2.0 * (0.5 * th - s) / (th2 * th)  # B(t/2) / 4
        Sh = s / th                 # sin(th/2) / (th/2) * 1/2
        Qh = (1.0 - w) / th2
    return A, B, C, Ah, Bh, Sh, Qh


@njit(cache=True, error_model="numpy", inline="always")
def _apply_jac(t0, t1, t2, v0, v1, v2, lin, quad):
    """``v + lin * t x v + quad * t x (t x v)``."""
    c0, c1, c2 = _cross(t0, t1, t2, v0, v1, v2)
    cc0, cc1, cc2 = _cross(t0, t1, t2, c0, c1, c2)
    return v0 + lin * c0 + quad * cc0, v1 + lin * c1 + quad * cc1, v2 + lin * c2 + quad * cc2


@njit(cache=True, error_model="numpy")
def beam_forces(pos, vel, quat, angvel, mass, inertia, ba, bb, baxis, rest,
                rest_base, E, G, zeta, bend_scale, force, moment):
    """Accumulate elastic and damping beam loads into ``force``/``moment``.

    Each beam is evaluated in the mid frame ``Rm = Ra Exp(t/2)`` of its two
    voxels, with local separation ``d = Rm^T r`` and relative rotation
    ``t = Log(Ra^T Rb)``::

        U = ka/2 (d0 - L0)^2 + kt/2 t0^2 + k_lat/2 (d1^2, d2^2)
            + EI/(2L) (t1^2, t2^2)

    Loads are the exact gradient: with ``g_d = dU/dd``, ``g_t = dU/dt``::

        F_b = -Rm g_d,   F_a = -F_b
        M_b = -Rb Jr(t)^-T [g_t + 1/2 Jr(t/2)^T (g_d x d)]
        M_a = -M_b - r x F_b

    so linear and angular momentum are conserved exactly.  Damping adds
    ``C * rate`` to ``g_d`` and ``g_t`` using the exact rates of ``d`` and
    ``t``, so its power is never positive.  The cross-section comes from the
    construction dims ``rest_base``; the element length is the current rest
    length but never shorter than the construction length, so actuation can
    only soften a beam.
    """
    for i in range(ba.shape[0]):
        a = ba[i]
        b = bb[i]
        e, f, g, d, t, L0, k, w, sq, r = _beam_setup(
            i, pos, quat, ba, bb, baxis, rest, rest_base, E, G)
        e00, e01, e02 = e
        e10, e11, e12 = f
        e20, e21, e22 = g
        d0, d1, d2 = d
        t0, t1, t2 = t
        rx, ry, rz = r
        gd0 = k[0] * (d0 - L0)
        gd1 = k[2] * d1
        gd2 = k[3] * d2
        gt0 = k[1] * t0
        gt1 = k[4] * t1
        gt2 = k[5] * t2
        A, B, C, Ah, Bh, Sh, Qh = _rot_coeffs(t0, t1, t2, w, sq)

        if zeta > 0.0:
            # exact rates of (d, t), all in mid-frame coordinates
            wa0 = e00 * angvel[a, 0] + e01 * angvel[a, 1] + e02 * angvel[a, 2]
            wa1 = e10 * angvel[a, 0] + e11 * angvel[a, 1] + e12 * angvel[a, 2]
            wa2 = e20 * angvel[a, 0] + e21 * angvel[a, 1] + e22 * angvel[a, 2]
            wb0 = e00 * angvel[b, 0] + e01 * angvel[b, 1] + e02 * angvel[b, 2]
            wb1 = e10 * angvel[b, 0] + e11 * angvel[b, 1] + e12 * angvel[b, 2]
            wb2 = e20 * angvel[b, 0] + e21 * angvel[b, 1] + e22 * angvel[b, 2]
            # relative angular velocity in b's frame
            o0, o1, o2 = _apply_jac(t0, t1, t2, wb0 - wa0, wb1 - wa1, wb2 - wa2, -Sh, Qh)
            td0, td1, td2 = _apply_jac(t0, t1, t2, o0, o1, o2, 0.5, C)
            h0, h1, h2 = _apply_jac(t0, t1, t2, td0, td1, td2, -Ah, Bh)
            om0 = wa0 + 0.5 * h0
            om1 = wa1 + 0.5 * h1
            om2 = wa2 + 0.5 * h2
            vx = vel[b, 0] - vel[a, 0]
            vy = vel[b, 1] - vel[a, 1]
            vz = vel[b, 2] - vel[a, 2]
            x0, x1, x2 = _cross(om0, om1, om2, d0, d1, d2)
            dd0 = e00 * vx + e01 * vy + e02 * vz - x0
            dd1 = e10 * vx + e11 * vy + e12 * vz - x1
            dd2 = e20 * vx + e21 * vy + e22 * vz - x2
            # stiffness-proportional damping per deformation family; the
            # axial factor makes an isolated beam's stretch mode critical
            mred = mass[a] * mass[b] / (mass[a] + mass[b])
            ired = inertia[a] * inertia[b] / (inertia[a] + inertia[b])
            al_ax = 2.0 * zeta * math.sqrt(mred / k[0])
            al_t = 2.0 * zeta * math.sqrt(ired / k[1])
            al_1 = 2.0 * zeta * bend_scale * math.sqrt(mred / k[2])
            al_2 = 2.0 * zeta * bend_scale * math.sqrt(mred / k[3])
            gd0 += al_ax * k[0] * dd0
            gd1 += al_1 * k[2] * dd1
            gd2 += al_2 * k[3] * dd2
            gt0 += al_t * k[1] * td0
            gt1 += al_2 * k[4] * td1
            gt2 += al_1 * k[5] * td2

        # torque on b in b's frame, then into mid-frame coordinates
        x0, x1, x2 = _cross(gd0, gd1, gd2, d0, d1, d2)
        y0, y1, y2 = _apply_jac(t0, t1, t2, x0, x1, x2, Ah, Bh)
        y0 = gt0 + 0.5 * y0
        y1 = gt1 + 0.5 * y1
        y2 = gt2 + 0.5 * y2
        z0, z1, z2 = _apply_jac(t0, t1, t2, y0, y1, y2, -0.5, C)
        m0, m1, m2 = _apply_jac(t0, t1, t2, z0, z1, z2, Sh, Qh)

        fw0 = e00 * gd0 + e10 * gd1 + e20 * gd2
        fw1 = e01 * gd0 + e11 * gd1 + e21 * gd2
        fw2 = e02 * gd0 + e12 * gd1 + e22 * gd2
        mw0 = e00 * m0 + e10 * m1 + e20 * m2
        mw1 = e01 * m0 + e11 * m1 + e21 * m2
        mw2 = e02 * m0 + e12 * m1 + e22 * m2
        # F_b = -fw, M_b = -mw
        force[b, 0] -= fw0
        force[b, 1] -= fw1
        force[b, 2] -= fw2
        force[a, 0] += fw0
        force[a, 1] += fw1
        force[a, 2] += fw2
        moment[b, 0] -= mw0
        moment[b, 1] -= mw1
        moment[b, 2] -= mw2
        # M_a = -M_b - r x F_b = mw - r x fw... with F_b = -fw: M_a = mw + r x fw
        moment[a, 0] += mw0 + (ry * fw2 - rz * fw1)
        moment[a, 1] += mw1 + (rz * fw0 - rx * fw2)
        moment[a, 2] += mw2 + (rx * fw1 - ry * fw0)


@njit(cache=True, error_model="numpy")
def beam_energy(pos, quat, ba, bb, baxis, rest, rest_base, E, G):
    total = 0.0
    for i in range(ba.shape[0]):
        _, _, _, d, t, L0, k, _, _, _ = _beam_setup(
            i, pos, quat, ba, bb, baxis, rest, rest_base, E, G)
        ex = d[0] - L0
        total += 0.5 * (k[0] * ex * ex + k[2] * d[1] * d[1] + k[3] * d[2] * d[2]
                        + k[1] * t[0] * t[0] + k[4] * t[1] * t[1]
                        + k[5] * t[2] * t[2])
    return total


@njit(cache=True, error_model="numpy")
def half_height(q, size):
    """Extent of an oriented box below its centre along world z."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    r20 = 2.0 * (x * z - w * y)
    r21 = 2.0 * (y * z + w * x)
    r22 = 1.0 - 2.0 * (x * x + y * y)
    return 0.5 * (abs(r20) * size[0] + abs(r21) * size[1] + abs(r22) * size[2])


@njit(cache=True, error_model="numpy")
def contact_energy(pos, quat, size, kc):
    total = 0.0
    for i in range(pos.shape[0]):
        pen = half_height(quat[i], size[i]) - pos[i, 2]
        if pen > 0.0:
            total += 0.5 * kc * pen * pen
    return total


@njit(cache=True, error_model="numpy")
def pressure_forces(pos, quads, pressure, force):
    """Add ``pressure * dV/dx`` for the volume enclosed by ``quads``.

    Each quad (outward winding) is split into four triangles about its
    centroid.  The volume is invariant to rigid motion, so the loads carry no
    net force or torque whatever the shape.
    """
    g = np.zeros((4, 3))
    gc = np.zeros(3)
    for q in range(quads.shape[0]):
        cx = 0.0
        cy = 0.0
        cz = 0.0
        for k in range(4):
            v = quads[q, k]
            cx += 0.25 * pos[v, 0]
            cy += 0.25 * pos[v, 1]
            cz += 0.25 * pos[v, 2]
        for r in range(3):
            gc[r] = 0.0
            for k in range(4):
                g[k, r] = 0.0
        for k in range(4):
            a = quads[q, k]
            b = quads[q, (k + 1) % 4]
            ax, ay, az = pos[a, 0], pos[a, 1], pos[a, 2]
            bx, by, bz = pos[b, 0], pos[b, 1], pos[b, 2]
            # V_tri = (c . (a x b)) / 6
            gc[0] += ay * bz - az * by
            gc[1] += az * bx - ax * bz
            gc[2] += ax * by - ay * bx
            g[k, 0] += by * cz - bz * cy
            g[k, 1] += bz * cx - bx * cz
            g[k, 2] += bx * cy - by * cx
            kb = (k + 1) % 4
            g[kb, 0] += cy * az - cz * ay
            g[kb, 1] += cz * ax - cx * az
            g[kb, 2] += cx * ay - cy * ax
        s = pressure / 6.0
        for k in range(4):
            v = quads[q, k]
            for r in range(3):
                force[v, r] += s * (g[k, r] + 0.25 * gc[r])


@njit(cache=True, error_model="numpy")
def enclosed_volume(pos, quads):
    total = 0.0
    for q in range(quads.shape[0]):
        cx = 0.0
        cy = 0.0
        cz = 0.0
        for k in range(4):
            v = quads[q, k]
            cx += 0.25 * pos[v, 0]
            cy += 0.25 * pos[v, 1]
            cz += 0.25 * pos[v, 2]
        for k in range(4):
            a = quads[q, k]
            b = quads[q, (k + 1) % 4]
            total += (cx * (pos[a, 1] * pos[b, 2] - pos[a, 2] * pos[b, 1])
                      + cy * (pos[a, 2] * pos[b, 0] - pos[a, 0] * pos[b, 2])
                      + cz * (pos[a, 0] * pos[b, 1] - pos[a, 1] * pos[b, 0]))
    return total / 6.0


@njit(cache=True, error_model="numpy")
def contact_forces(pos, vel, quat, mass, mu, size, dt, kc, cn_ratio, slip_tol,
                   floor_on, force, normal_out, tangent_out, contact_out):
    """Penalty floor at z=0 with Coulomb friction; must run after all other
    loads have been accumulated into ``force``."""
    for i in range(pos.shape[0]):
        normal_out[i] = 0.0
        tangent_out[i] = 0.0
        contact_out[i] = False
        if not floor_on:
            continue
        pen = half_height(quat[i], size[i]) - pos[i, 2]
        if pen <= 0.0:
            continue
        cn = 2.0 * cn_ratio * math.sqrt(mass[i] * kc)
        n = kc * pen - cn * vel[i, 2]
        if n < 0.0:
            n = 0.0
        contact_out[i] = True
        normal_out[i] = n
        force[i, 2] += n
        # tangential force that would stop sliding exactly this step
        sx = -force[i, 0] - mass[i] * vel[i, 0] / dt
        sy = -force[i, 1] - mass[i] * vel[i, 1] / dt
        smag = math.sqrt(sx * sx + sy * sy)
        limit = mu[i] * n
        vt = math.sqrt(vel[i, 0] ** 2 + vel[i, 1] ** 2)
        if smag <= limit and vt < slip_tol:
            fx, fy = sx, sy
        elif smag <= limit:
            # kinetic, but the slide ends inside this step
            fx, fy = sx, sy
        elif smag > 0.0:
            fx = limit * sx / smag
            fy = limit * sy / smag
        else:
            fx, fy = 0.0, 0.0
        force[i, 0] += fx
        force[i, 1] += fy
        tangent_out[i] = math.sqrt(fx * fx + fy * fy)


@njit(cache=True, error_model="numpy")
def _integrate(pos, vel, quat, angvel, mass, inertia, force, moment, dt):
    for i in range(pos.shape[0]):
        im = 1.0 / mass[i]
        ii = 1.0 / inertia[i]
        for r in range(3):
            vel[i, r] += dt * force[i, r] * im
            angvel[i, r] += dt * moment[i, r] * ii
            pos[i, r] += dt * vel[i, r]
        wx = angvel[i, 0] * dt
        wy = angvel[i, 1] * dt
        wz = angvel[i, 2] * dt
        ang = math.sqrt(wx * wx + wy * wy + wz * wz)
        if ang > 0.0:
            s = math.sin(0.5 * ang) / ang
            dw = math.cos(0.5 * ang)
            dx = s * wx
            dy = s * wy
            dz = s * wz
            qw, qx, qy, qz = quat[i, 0], quat[i, 1], quat[i, 2], quat[i, 3]
            nw = dw * qw - dx * qx - dy * qy - dz * qz
            nx = dw * qx + dx * qw + dy * qz - dz * qy
            ny = dw * qy - dx * qz + dy * qw + dz * qx
            nz = dw * qz + dx * qy - dy * qx + dz * qw
            norm = math.sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
            quat[i, 0] = nw / norm
            quat[i, 1] = nx / norm
            quat[i, 2] = ny / norm
            quat[i, 3] = nz / norm


@njit(cache=True, error_model="numpy")
def _finite(pos, vel, quat, angvel):
    for i in range(pos.shape[0]):
        for r in range(3):
            if not (math.isfinite(pos[i, r]) and math.isfinite(vel[i, r])
                    and math.isfinite(angvel[i, r])):
                return False
        for r in range(4):
            if not math.isfinite(quat[i, r]):
                return False
    return True


@njit(cache=True, error_model="numpy")
def apply_group_deltas(rest, rest_base, size, size_base, ba, bb, voxel_group,
                       grp_ptr, grp_beams, vgrp_ptr, grp_voxels, grp_delta,
                       grp_sign, acc, acc_max, min_dim, max_dim):
    """One actuation step for every group.

    ``grp_sign`` is +1 (expand), -1 (contract) or 0 (hold).  A group's
    accumulated expansion ``acc[g]`` moves by ``grp_delta[g]`` and stays in
    ``[0, acc_max]``.  Voxel sizes are their construction size plus their
    group's expansion; a beam's rest dims are its construction dims plus the
    mean expansion of its two end voxels (zero for ungrouped voxels).  The
    result does not depend on group order.
    """
    changed = False
    for g in range(grp_sign.shape[0]):
        s = grp_sign[g]
        if s == 0:
            continue
        for r in range(3):
            nv = acc[g, r] + s * grp_delta[g, r]
            if nv < 0.0:
                nv = 0.0
            if nv > acc_max:
                nv = acc_max
            if nv != acc[g, r]:
                acc[g, r] = nv
                changed = True
    if not changed:
        return
    for g in range(grp_sign.shape[0]):
        if grp_sign[g] == 0:
            continue
        for j in range(vgrp_ptr[g], vgrp_ptr[g + 1]):
            i = grp_voxels[j]
            for r in range(3):
                size[i, r] = min(max(size_base[i, r] + acc[g, r], min_dim), max_dim)
        for j in range(grp_ptr[g], grp_ptr[g + 1]):
            i = grp_beams[j]
            ga = voxel_group[ba[i]]
            gb = voxel_group[bb[i]]
            for r in range(3):
                e = 0.0
                if ga >= 0:
                    e += 0.5 * acc[ga, r]
                if gb >= 0:
                    e += 0.5 * acc[gb, r]
                rest[i, r] = min(max(rest_base[i, r] + e, min_dim), max_dim)


@njit(cache=True, error_model="numpy")
def run_steps(pos, vel, quat, angvel, mass, inertia, mu, size,
              ba, bb, baxis, rest, E, G, zeta, bend_scale, gravity,
              floor_on, kc, cn_ratio, slip_tol,
              quads, pressure,
              dt, nsteps,
              rest_base, size_base, voxel_group, grp_ptr, grp_beams, vgrp_ptr,
              grp_voxels, grp_delta, grp_sign, acc, acc_max, min_dim, max_dim,
              act_every,
              force, moment, normal_out, tangent_out, contact_out,
              sample_every, sample_buf, sample_start, step_offset):
    """Advance ``nsteps`` steps.

    Returns the number of completed steps; a value below ``nsteps`` means the
    state went non-finite on the step with that index.  When
    ``sample_every`` > 0 the centre of mass is written to ``sample_buf``
    (starting at row ``sample_start``) after every step whose global index
    ``step_offset + step + 1`` is a multiple of ``sample_every``.  Group
    deltas are applied before every step whose global index
    ``step_offset + step`` is a multiple of ``act_every``.
    """
    n = pos.shape[0]
    mtot = 0.0
    for i in range(n):
        mtot += mass[i]
    row = sample_start
    for step in range(nsteps):
        if grp_sign.shape[0] > 0 and (step_offset + step) % act_every == 0:
            apply_group_deltas(rest, rest_base, size, size_base, ba, bb,
                               voxel_group, grp_ptr, grp_beams, vgrp_ptr,
                               grp_voxels, grp_delta, grp_sign, acc, acc_max,
                               min_dim, max_dim)
        for i in range(n):
            for r in range(3):
                force[i, r] = mass[i] * gravity[r]
                moment[i, r] = 0.0
        beam_forces(pos, vel, quat, angvel, mass, inertia, ba, bb, baxis,
                    rest, rest_base, E, G, zeta, bend_scale, force, moment)
        if quads.shape[0] > 0 and pressure != 0.0:
            pressure_forces(pos, quads, pressure, force)
        contact_forces(pos, vel, quat, mass, mu, size, dt, kc, cn_ratio,
                       slip_tol, floor_on, force, normal_out, tangent_out,
                       contact_out)
        _integrate(pos, vel, quat, angvel, mass, inertia, force, moment, dt)
        if not _finite(pos, vel, quat, angvel):
            return step
        if sample_every > 0 and (step_offset + step + 1) % sample_every == 0:
            for r in range(3):
                acc_r = 0.0
                for i in range(n):
                    acc_r += mass[i] * pos[i, r]
                sample_buf[row, r] = acc_r / mtot
            row += 1
    return nsteps
