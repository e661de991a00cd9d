"""Pure-Python stepper: the fallback backend.

Mirrors the compiled stepper operation for operation (same expressions,
same evaluation order, libm transcendentals via ``math``) so that both
backends produce bit-identical trajectories. Keep the two files in sync:
any change here must be replicated in ``_stepper.pyx``.
"""

from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi
GOAL_EPS = 1e-9
PROJECTION_SWEEPS = 50
PROJECTION_TOL = 1e-8
DEGENERATE_DIST2 = 1e-18

COMPILED = False


def _clip(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


def _wrap(a):
    return math.remainder(a, TWO_PI)


def _ensure_scratch(pt):
    import numpy as np

    if "du" not in pt.scratch:
        n = pt.n
        pt.scratch["du"] = np.zeros((n, 2))
        pt.scratch["dw"] = np.zeros((n, 2))
        pt.scratch["dz"] = np.zeros((n, 2))
        pt.scratch["dxi"] = np.zeros(n)
        pt.scratch["dx"] = np.zeros((n, 4))
        pt.scratch["sax"] = np.zeros(n)
        pt.scratch["say"] = np.zeros(n)
        pt.scratch["sbs"] = np.zeros(n)
    return (
        pt.scratch["du"],
        pt.scratch["dw"],
        pt.scratch["dz"],
        pt.scratch["dxi"],
        pt.scratch["dx"],
        pt.scratch["sax"],
        pt.scratch["say"],
        pt.scratch["sbs"],
    )


def _agent_eval(pt, i):
    """Bearing, aggregate-gradient, descent direction and error norm of agent i.

    Returns (phi_x, phi_y, g2_x, g2_y, dir_x, dir_y, e_norm).
    """
    x = pt.x
    w = pt.w
    z = pt.z
    px = x[i, 0]
    py = x[i, 1]
    bx = pt.target[0]
    by = pt.target[1]
    dx = px - bx
    dy = py - by
    r2 = dx * dx + dy * dy
    r = math.sqrt(r2)
    if r < pt.rho_min:
        c = 1.0
        s = 0.0
        phix = 1.0
        phiy = 0.0
    else:
        c = dx / r
        s = dy / r
        phix = c
        phiy = s
    shx = w[i, 0] + phix
    shy = w[i, 1] + phiy
    g2x = 2.0 * pt.gamma1 * shx
    g2y = 2.0 * pt.gamma1 * shy
    vx = g2x + z[i, 0]
    vy = g2y + z[i, 1]
    # own-state gradient (spot + danger), position space
    gx = 0.0
    gy = 0.0
    g2eff = pt.gamma2_eff[i]
    if g2eff > 0.0:
        gx += 2.0 * g2eff * (px - pt.spots[i, 0])
        gy += 2.0 * g2eff * (py - pt.spots[i, 1])
    if pt.gamma3 > 0.0:
        for l in range(pt.gauss.shape[0]):
            ddx = px - pt.gauss[l, 0]
            ddy = py - pt.gauss[l, 1]
            s2 = pt.gauss[l, 2] * pt.gauss[l, 2]
            e = pt.gauss[l, 3] * math.exp(-(ddx * ddx + ddy * ddy) / (2.0 * s2))
            gx += pt.gamma3 * (-ddx / s2 * e)
            gy += pt.gamma3 * (-ddy / s2 * e)
    # transpose bearing Jacobian applied to v
    rho_min2 = pt.rho_min * pt.rho_min
    rho2 = r2 if r2 > rho_min2 else rho_min2
    coef = (-s * vx + c * vy) / rho2
    dirx = gx + -dy * coef
    diry = gy + dx * coef
    ewx = w[i, 0] - pt.hat_w[i, 0] + phix - pt.hat_phi[i, 0]
    ewy = w[i, 1] - pt.hat_w[i, 1] + phiy - pt.hat_phi[i, 1]
    ezx = z[i, 0] - pt.hat_z[i, 0] + g2x - pt.hat_g2[i, 0]
    ezy = z[i, 1] - pt.hat_z[i, 1] + g2y - pt.hat_g2[i, 1]
    e_norm = math.sqrt(ewx * ewx + ewy * ewy + ezx * ezx + ezy * ezy)
    return phix, phiy, g2x, g2y, dirx, diry, e_norm


def refresh_direction_cache(pt):
    for i in range(pt.n):
        _, _, _, _, dirx, diry, e_norm = _agent_eval(pt, i)
        pt.g_dir[i, 0] = dirx
        pt.g_dir[i, 1] = diry
        pt.e_prev[i] = e_norm


def _plant_derivative(pt, i, dx_row):
    x = pt.x
    u = pt.u
    kind = pt.kinds[i]
    if kind == 0:  # single integrator
        k = pt.pparams[i, 0]
        dx_row[0] = k * (u[i, 0] - x[i, 0])
        dx_row[1] = k * (u[i, 1] - x[i, 1])
    elif kind == 1:  # unicycle pose follower
        k_v = pt.pparams[i, 0]
        k_alpha = pt.pparams[i, 1]
        k_beta = pt.pparams[i, 2]
        v_max = pt.pparams[i, 3]
        omega_max = pt.pparams[i, 4]
        ex = u[i, 0] - x[i, 0]
        ey = u[i, 1] - x[i, 1]
        r = math.sqrt(ex * ex + ey * ey)
        psi = x[i, 2]
        if r < GOAL_EPS:
            v = 0.0
            omega = _clip(k_alpha * _wrap(-psi), -omega_max, omega_max)
        else:
            los = math.atan2(ey, ex)
            alpha = _wrap(los - psi)
            beta = _wrap(los)
            v = k_v * r * math.cos(alpha)
            if v < 0.0:
                v = 0.0
            v = _clip(v, 0.0, v_max)
            omega = _clip(k_alpha * alpha + k_beta * beta, -omega_max, omega_max)
        dx_row[0] = v * math.cos(psi)
        dx_row[1] = v * math.sin(psi)
        dx_row[2] = omega
    else:  # planar quadrotor tracker
        k_p = pt.pparams[i, 0]
        k_d = pt.pparams[i, 1]
        dx_row[0] = x[i, 2]
        dx_row[1] = x[i, 3]
        dx_row[2] = k_p * (u[i, 0] - x[i, 0]) - k_d * x[i, 2]
        dx_row[3] = k_p * (u[i, 1] - x[i, 1]) - k_d * x[i, 3]


def _filter_velocity(pt, i, vx, vy, sax, say, sbs):
    """Cyclic half-plane projection of agent i's commanded velocity.

    Returns (vx, vy, infeasible).
    """
    x = pt.x
    px = x[i, 0]
    py = x[i, 1]
    sense2 = pt.sensing_radius * pt.sensing_radius
    m = 0
    nearest = -1
    nearest_d2 = math.inf
    for j in range(pt.n):
        if j == i:
            continue
        dx = px - x[j, 0]
        dy = py - x[j, 1]
        d2 = dx * dx + dy * dy
        if d2 > sense2 or d2 < DEGENERATE_DIST2:
            continue
        sax[m] = dx
        say[m] = dy
        sbs[m] = -(pt.kappa / 4.0) * (d2 - pt.delta * pt.delta)
        if d2 < nearest_d2:
            nearest_d2 = d2
            nearest = m
        m += 1
    if m == 0:
        return vx, vy, False
    feasible = False
    for _ in range(PROJECTION_SWEEPS):
        worst = 0.0
        for k in range(m):
            viol = sbs[k] - (sax[k] * vx + say[k] * vy)
            if viol > PROJECTION_TOL:
                scale = viol / (sax[k] * sax[k] + say[k] * say[k])
                vx += sax[k] * scale
                vy += say[k] * scale
            if viol > worst:
                worst = viol
        if worst <= PROJECTION_TOL:
            feasible = True
            break
    if not feasible:
        k = nearest
        scale = sbs[k] / (sax[k] * sax[k] + say[k] * say[k])
        return sax[k] * scale, say[k] * scale, True
    return vx, vy, False


def run_chunk(pt, step0, n_steps):
    """Advance the trial by n_steps Euler steps, starting at global step step0."""
    du, dw, dz, dxi, dxs, sax, say, sbs = _ensure_scratch(pt)
    n = pt.n
    dt = pt.dt
    inv_a2 = 1.0 / pt.alpha2
    x = pt.x
    u = pt.u
    w = pt.w
    z = pt.z
    xi = pt.xi
    hat_w = pt.hat_w
    hat_z = pt.hat_z
    hat_phi = pt.hat_phi
    hat_g2 = pt.hat_g2
    g_dir = pt.g_dir
    e_prev = pt.e_prev
    indptr = pt.indptr
    indices = pt.indices
    weights = pt.weights
    for kstep in range(n_steps):
        step_global = step0 + kstep
        # (1) flows and plant derivatives from the current snapshot
        for i in range(n):
            du[i, 0] = -pt.alpha1 * g_dir[i, 0]
            du[i, 1] = -pt.alpha1 * g_dir[i, 1]
            own_w0 = hat_w[i, 0] + hat_phi[i, 0]
            own_w1 = hat_w[i, 1] + hat_phi[i, 1]
            own_z0 = hat_z[i, 0] + hat_g2[i, 0]
            own_z1 = hat_z[i, 1] + hat_g2[i, 1]
            accw0 = 0.0
            accw1 = 0.0
            accz0 = 0.0
            accz1 = 0.0
            for idx in range(indptr[i], indptr[i + 1]):
                j = indices[idx]
                a = weights[idx]
                accw0 += a * (own_w0 - (hat_w[j, 0] + hat_phi[j, 0]))
                accw1 += a * (own_w1 - (hat_w[j, 1] + hat_phi[j, 1]))
                accz0 += a * (own_z0 - (hat_z[j, 0] + hat_g2[j, 0]))
                accz1 += a * (own_z1 - (hat_z[j, 1] + hat_g2[j, 1]))
            dw[i, 0] = -inv_a2 * accw0
            dw[i, 1] = -inv_a2 * accw1
            dz[i, 0] = -inv_a2 * accz0
            dz[i, 1] = -inv_a2 * accz1
            dxi[i] = -pt.nu * xi[i]
            _plant_derivative(pt, i, dxs[i])
            if pt.safety_on:
                vx, vy, infeasible = _filter_velocity(pt, i, dxs[i, 0], dxs[i, 1], sax, say, sbs)
                dxs[i, 0] = vx
                dxs[i, 1] = vy
                if infeasible:
                    pt.safety_infeasible[0] += 1
        # (2) forward-Euler update
        for i in range(n):
            nd = pt.state_dims[i]
            for kk in range(nd):
                x[i, kk] = x[i, kk] + dt * dxs[i, kk]
            u[i, 0] = u[i, 0] + dt * du[i, 0]
            u[i, 1] = u[i, 1] + dt * du[i, 1]
            w[i, 0] = w[i, 0] + dt * dw[i, 0]
            w[i, 1] = w[i, 1] + dt * dw[i, 1]
            z[i, 0] = z[i, 0] + dt * dz[i, 0]
            z[i, 1] = z[i, 1] + dt * dz[i, 1]
            xi[i] = xi[i] + dt * dxi[i]
        t = (step_global + 1) * dt
        # pairwise-distance monitor on the updated snapshot
        best = pt.min_pair_dist[0]
        for i in range(n):
            for j in range(i + 1, n):
                ddx = x[i, 0] - x[j, 0]
                ddy = x[i, 1] - x[j, 1]
                d = math.sqrt(ddx * ddx + ddy * ddy)
                if d < best:
                    best = d
        pt.min_pair_dist[0] = best
        # (3) triggering: refresh direction cache, evaluate the local test
        for i in range(n):
            phix, phiy, g2x, g2y, dirx, diry, e_norm = _agent_eval(pt, i)
            g_dir[i, 0] = dirx
            g_dir[i, 1] = diry
            rate = (e_norm - e_prev[i]) / dt
            if rate > pt.m_max[i]:
                pt.m_max[i] = rate
            thr = pt.lam * math.sqrt(dirx * dirx + diry * diry) + abs(xi[i])
            if pt.force_trigger or e_norm > thr:
                hat_w[i, 0] = w[i, 0]
                hat_w[i, 1] = w[i, 1]
                hat_phi[i, 0] = phix
                hat_phi[i, 1] = phiy
                hat_z[i, 0] = z[i, 0]
                hat_z[i, 1] = z[i, 1]
                hat_g2[i, 0] = g2x
                hat_g2[i, 1] = g2y
                gap = t - pt.last_trig_t[i]
                if gap < pt.min_gap[i]:
                    pt.min_gap[i] = gap
                zl = math.log(gap) + pt.nu * t
                if zl < pt.zeno_log_min[i]:
                    pt.zeno_log_min[i] = zl
                if t > 1.0:
                    pt.ev_after1[i] += 1
                    if step_global + 1 - pt.last_trig_step[i] == 1:
                        pt.consec_after1[i] += 1
                pt.trig_count[i] += 1
                pt.last_trig_t[i] = t
                pt.last_trig_step[i] = step_global + 1
                pt.trig_in_chunk[i] += 1
                e_prev[i] = 0.0
            else:
                e_prev[i] = e_norm
        # mean-conservation monitor
        sw0 = 0.0
        sw1 = 0.0
        sz0 = 0.0
        sz1 = 0.0
        for i in range(n):
            sw0 += w[i, 0]
            sw1 += w[i, 1]
            sz0 += z[i, 0]
            sz1 += z[i, 1]
        if abs(sw0) > pt.sum_w_max[0]:
            pt.sum_w_max[0] = abs(sw0)
        if abs(sw1) > pt.sum_w_max[1]:
            pt.sum_w_max[1] = abs(sw1)
        if abs(sz0) > pt.sum_z_max[0]:
            pt.sum_z_max[0] = abs(sz0)
        if abs(sz1) > pt.sum_z_max[1]:
            pt.sum_z_max[1] = abs(sz1)
