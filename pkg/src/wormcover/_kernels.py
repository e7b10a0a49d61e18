"""Compiled hot paths: hull areas of point clouds and a Nelder-Mead minimizer.

The objective of the box search is evaluated ~10^9 times, so everything here is
``numba.njit`` code working on plain float64 arrays.  The pure-Python geometry in
:mod:`wormcover.geom` is the reference these kernels are tested against.

A *scene* is a fixed point set (pre-sorted lexicographically once) plus a list of
moving polygons.  Moving polygon ``j`` owns vertices ``mverts[moffs[j]:moffs[j+1]]``
and reads its translation/rotation from ``params[pidx[j, 0..2]]``; an index of -1
pins that coordinate to zero.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


@njit(cache=True)
def hull_area_sorted(xs, ys, n):
    """Area of the convex hull of ``n`` points already sorted by (x, y)."""
    if n < 3:
        return 0.0
    hx = np.empty(2 * n)
    hy = np.empty(2 * n)
    k = 0
    for i in range(n):
        while k >= 2 and _cross(hx[k - 2], hy[k - 2], hx[k - 1], hy[k - 1], xs[i], ys[i]) <= 0.0:
            k -= 1
        hx[k] = xs[i]
        hy[k] = ys[i]
        k += 1
    lower = k + 1
    for i in range(n - 2, -1, -1):
        while k >= lower and _cross(hx[k - 2], hy[k - 2], hx[k - 1], hy[k - 1], xs[i], ys[i]) <= 0.0:
            k -= 1
        hx[k] = xs[i]
        hy[k] = ys[i]
        k += 1
    # hull is hx[0..k-1] with the first point repeated at k-1
    s = 0.0
    for i in range(k - 1):
        s += hx[i] * hy[i + 1] - hx[i + 1] * hy[i]
    return 0.5 * s


@njit(cache=True)
def _less(ax, ay, bx, by):
    return ax < bx or (ax == bx and ay < by)


@njit(cache=True)
def sort_points(xs, ys):
    """Insertion sort by (x, y), in place.  Meant for a handful of points."""
    n = xs.shape[0]
    for i in range(1, n):
        x = xs[i]
        y = ys[i]
        j = i - 1
        while j >= 0 and _less(x, y, xs[j], ys[j]):
            xs[j + 1] = xs[j]
            ys[j + 1] = ys[j]
            j -= 1
        xs[j + 1] = x
        ys[j + 1] = y


@njit(cache=True)
def merged_hull_area(fx, fy, mx, my):
    """Hull area of a sorted point set ``(fx, fy)`` joined with ``(mx, my)``.

    ``mx``/``my`` are sorted in place; the union is produced by a linear merge so
    the whole call is O(n) in the size of the fixed set.
    """
    if mx.shape[0] > 32:
        order = np.argsort(mx, kind="mergesort")
        mx2 = mx[order]
        my2 = my[order]
        # restore the y tie-break that argsort on x alone does not give
        sort_points(mx2, my2)
        mx[:] = mx2
        my[:] = my2
    else:
        sort_points(mx, my)
    nf = fx.shape[0]
    nm = mx.shape[0]
    n = nf + nm
    xs = np.empty(n)
    ys = np.empty(n)
    i = 0
    j = 0
    for k in range(n):
        if j >= nm or (i < nf and _less(fx[i], fy[i], mx[j], my[j])):
            xs[k] = fx[i]
            ys[k] = fy[i]
            i += 1
        else:
            xs[k] = mx[j]
            ys[k] = my[j]
            j += 1
    return hull_area_sorted(xs, ys, n)


@njit(cache=True)
def place_moving(params, mverts, moffs, pidx, mx, my):
    """Apply each moving polygon's rigid motion, writing into ``mx``/``my``."""
    npoly = moffs.shape[0] - 1
    for j in range(npoly):
        tx = params[pidx[j, 0]] if pidx[j, 0] >= 0 else 0.0
        ty = params[pidx[j, 1]] if pidx[j, 1] >= 0 else 0.0
        a = params[pidx[j, 2]] if pidx[j, 2] >= 0 else 0.0
        c = math.cos(a)
        s = math.sin(a)
        for q in range(moffs[j], moffs[j + 1]):
            px = mverts[q, 0]
            py = mverts[q, 1]
            mx[q] = c * px - s * py + tx
            my[q] = s * px + c * py + ty


@njit(cache=True)
def scene_area(params, data):
    """Hull area of a scene; ``data = (fx, fy, mverts, moffs, pidx)``."""
    fx, fy, mverts, moffs, pidx = data
    m = mverts.shape[0]
    mx = np.empty(m)
    my = np.empty(m)
    place_moving(params, mverts, moffs, pidx, mx, my)
    return merged_hull_area(fx, fy, mx, my)


@njit(cache=True)
def _wrap(k, n):
    k = k % n
    return k + n if k < 0 else k


@njit(cache=True)
def _outside_regular(qx, qy, vx, vy, phase, step):
    """True if q lies strictly outside the regular polygon ``(vx, vy)``."""
    n = vx.shape[0]
    k = int(math.floor((math.atan2(qy, qx) - phase) / step))
    for dk in (-1, 0, 1):
        a = _wrap(k + dk, n)
        b = _wrap(a + 1, n)
        if _cross(vx[a], vy[a], vx[b], vy[b], qx, qy) < 0.0:
            return True
    return False


@njit(cache=True)
def _tangent(qx, qy, vx, vy, start, left):
    """Vertex index t with the whole polygon to the left of q->t (``left``) or
    to its right, found by walking from ``start``."""
    n = vx.shape[0]
    t = _wrap(start, n)
    sgn = 1.0 if left else -1.0
    for _ in range(n):
        nx = _wrap(t + 1, n)
        pv = _wrap(t - 1, n)
        if sgn * _cross(qx, qy, vx[t], vy[t], vx[nx], vy[nx]) < 0.0:
            t = nx
        elif sgn * _cross(qx, qy, vx[t], vy[t], vx[pv], vy[pv]) < 0.0:
            t = pv
        else:
            break
    return t


@njit(cache=True)
def regular_hull_area(qx, qy, vx, vy, fan, radius, phase):
    """Hull area of a regular polygon centred at the origin plus extra points.

    ``vx``/``vy`` are the polygon vertices in counter-clockwise order starting
    at angle ``phase``; ``fan[k]`` is the prefix sum of the cross products
    ``v_i x v_{i+1}`` for ``i < k``.  The hull of the union equals the hull of
    the external points and their tangent vertices, with every edge joining
    two polygon vertices replaced by the polygon arc it cuts off.
    """
    n = vx.shape[0]
    step = 2.0 * math.pi / n
    m = qx.shape[0]
    sx = np.empty(3 * m)
    sy = np.empty(3 * m)
    lab = np.empty(3 * m, dtype=np.int64)
    ns = 0
    for i in range(m):
        x = qx[i]
        y = qy[i]
        if not _outside_regular(x, y, vx, vy, phase, step):
            continue
        d = math.hypot(x, y)
        ratio = radius / d
        alpha = math.acos(ratio) if ratio < 1.0 else 0.0
        phi = math.atan2(y, x) - phase
        g_left = int(math.floor((phi + alpha) / step + 0.5))
        g_right = int(math.floor((phi - alpha) / step + 0.5))
        tl = _tangent(x, y, vx, vy, g_left, True)
        tr = _tangent(x, y, vx, vy, g_right, False)
        sx[ns] = x
        sy[ns] = y
        lab[ns] = -1
        sx[ns + 1] = vx[tl]
        sy[ns + 1] = vy[tl]
        lab[ns + 1] = tl
        sx[ns + 2] = vx[tr]
        sy[ns + 2] = vy[tr]
        lab[ns + 2] = tr
        ns += 3
    if ns == 0:
        return 0.5 * fan[n]
    # insertion sort of the small candidate set, labels riding along
    for i in range(1, ns):
        x = sx[i]
        y = sy[i]
        lb = lab[i]
        j = i - 1
        while j >= 0 and _less(x, y, sx[j], sy[j]):
            sx[j + 1] = sx[j]
            sy[j + 1] = sy[j]
            lab[j + 1] = lab[j]
            j -= 1
        sx[j + 1] = x
        sy[j + 1] = y
        lab[j + 1] = lb
    hx = np.empty(2 * ns)
    hy = np.empty(2 * ns)
    hl = np.empty(2 * ns, dtype=np.int64)
    k = 0
    for i in range(ns):
        while k >= 2 and _cross(hx[k - 2], hy[k - 2], hx[k - 1], hy[k - 1], sx[i], sy[i]) <= 0.0:
            k -= 1
        hx[k] = sx[i]
        hy[k] = sy[i]
        hl[k] = lab[i]
        k += 1
    lower = k + 1
    for i in range(ns - 2, -1, -1):
        while k >= lower and _cross(hx[k - 2], hy[k - 2], hx[k - 1], hy[k - 1], sx[i], sy[i]) <= 0.0:
            k -= 1
        hx[k] = sx[i]
        hy[k] = sy[i]
        hl[k] = lab[i]
        k += 1
    s = 0.0
    for i in range(k - 1):
        a = hl[i]
        b = hl[i + 1]
        if a >= 0 and b >= 0:
            if b >= a:
                s += fan[b] - fan[a]
            else:
                s += fan[n] - fan[a] + fan[b]
        else:
            s += hx[i] * hy[i + 1] - hx[i + 1] * hy[i]
    return 0.5 * s


@njit(cache=True)
def config_points(x1, y1, x2, y2, theta, half_v, half_u, half_len, mx, my):
    """Rectangle corners R1..R4 then segment endpoints L1, L2."""
    mx[0] = x1 - half_v
    my[0] = y1 + half_u
    mx[1] = x1 + half_v
    my[1] = y1 + half_u
    mx[2] = x1 + half_v
    my[2] = y1 - half_u
    mx[3] = x1 - half_v
    my[3] = y1 - half_u
    c = half_len * math.cos(theta)
    s = half_len * math.sin(theta)
    mx[4] = x2 - c
    my[4] = y2 - s
    mx[5] = x2 + c
    my[5] = y2 + s


@njit(cache=True)
def config_area(x1, y1, x2, y2, theta, vx, vy, fan, radius, phase, half_v, half_u, half_len):
    """Objective: hull area of circle polygon, rectangle and segment."""
    mx = np.empty(6)
    my = np.empty(6)
    config_points(x1, y1, x2, y2, theta, half_v, half_u, half_len, mx, my)
    return regular_hull_area(mx, my, vx, vy, fan, radius, phase)


@njit(cache=True)
def config_area_merge(x1, y1, x2, y2, theta, fx, fy, half_v, half_u, half_len):
    """Same objective through a full monotone chain over all 506 points."""
    mx = np.empty(6)
    my = np.empty(6)
    config_points(x1, y1, x2, y2, theta, half_v, half_u, half_len, mx, my)
    return merged_hull_area(fx, fy, mx, my)


@njit(cache=True)
def config_area_vec(p, data):
    vx, vy, fan, radius, phase, half_v, half_u, half_len = data
    return config_area(p[0], p[1], p[2], p[3], p[4], vx, vy, fan, radius, phase, half_v, half_u, half_len)


@njit(cache=True)
def config_area_rows(points, data):
    out = np.empty(points.shape[0])
    for i in range(points.shape[0]):
        out[i] = config_area_vec(points[i], data)
    return out


@njit(cache=True)
def regular_scene_area(params, data):
    """Scene whose only fixed shape is a regular polygon at the origin.

    ``data = (vx, vy, fan, radius, phase, mverts, moffs, pidx)``.
    """
    vx, vy, fan, radius, phase, mverts, moffs, pidx = data
    m = mverts.shape[0]
    mx = np.empty(m)
    my = np.empty(m)
    place_moving(params, mverts, moffs, pidx, mx, my)
    return regular_hull_area(mx, my, vx, vy, fan, radius, phase)


@njit(cache=True)
def nelder_mead(fun, data, x0, scale, xtol, ftol, maxfev):
    """Plain Nelder-Mead (coefficients 1, 2, 1/2, 1/2) on ``fun(x, data)``.

    Returns ``(x_best, f_best, nfev)``.  Stops once both the simplex spread in
    ``x`` and the spread of function values drop below the tolerances.
    """
    d = x0.shape[0]
    sim = np.empty((d + 1, d))
    fs = np.empty(d + 1)
    for i in range(d + 1):
        sim[i, :] = x0
        if i > 0:
            sim[i, i - 1] += scale[i - 1]
        fs[i] = fun(sim[i], data)
    nfev = d + 1
    xr = np.empty(d)
    xe = np.empty(d)
    xc = np.empty(d)
    cen = np.empty(d)
    while nfev < maxfev:
        order = np.argsort(fs)
        sim = sim[order]
        fs = fs[order]
        spread_f = fs[d] - fs[0]
        spread_x = 0.0
        for i in range(1, d + 1):
            for k in range(d):
                dx = abs(sim[i, k] - sim[0, k])
                if dx > spread_x:
                    spread_x = dx
        if spread_f <= ftol and spread_x <= xtol:
            break
        for k in range(d):
            acc = 0.0
            for i in range(d):
                acc += sim[i, k]
            cen[k] = acc / d
        for k in range(d):
            xr[k] = cen[k] + (cen[k] - sim[d, k])
        fr = fun(xr, data)
        nfev += 1
        if fr < fs[0]:
            for k in range(d):
                xe[k] = cen[k] + 2.0 * (cen[k] - sim[d, k])
            fe = fun(xe, data)
            nfev += 1
            if fe < fr:
                sim[d, :] = xe
                fs[d] = fe
            else:
                sim[d, :] = xr
                fs[d] = fr
        elif fr < fs[d - 1]:
            sim[d, :] = xr
            fs[d] = fr
        else:
            if fr < fs[d]:
                for k in range(d):
                    xc[k] = cen[k] + 0.5 * (xr[k] - cen[k])
            else:
                for k in range(d):
                    xc[k] = cen[k] + 0.5 * (sim[d, k] - cen[k])
            fc = fun(xc, data)
            nfev += 1
            if fc < min(fr, fs[d]):
                sim[d, :] = xc
                fs[d] = fc
            else:
                for i in range(1, d + 1):
                    for k in range(d):
                        sim[i, k] = sim[0, k] + 0.5 * (sim[i, k] - sim[0, k])
                    fs[i] = fun(sim[i], data)
                nfev += d
    best = np.argmin(fs)
    return sim[best].copy(), fs[best], nfev


@njit(cache=True)
def restarted_nelder_mead(fun, data, x0, scale, xtol, ftol, maxfev, restarts):
    """Nelder-Mead restarted from its own optimum with a shrinking simplex.

    Restarting kicks the simplex out of the spurious stalls plain Nelder-Mead is
    prone to on piecewise-smooth functions such as hull areas.
    """
    x, fx, used = nelder_mead(fun, data, x0, scale, xtol, ftol, maxfev)
    step = scale.copy()
    for _ in range(restarts):
        step = step * 0.5
        x2, f2, n2 = nelder_mead(fun, data, x, step, xtol, ftol, maxfev)
        used += n2
        if f2 < fx - ftol:
            x = x2
            fx = f2
        else:
            if f2 < fx:
                x = x2
                fx = f2
            break
    return x, fx, used


@njit(cache=True)
def multistart(fun, data, starts, scale, xtol, ftol, maxfev, restarts):
    """Run the restarted minimizer from every row of ``starts``.

    Returns per-start optima and values; the caller takes the minimum, so the
    merge stays deterministic however the loop is scheduled.
    """
    ns, d = starts.shape
    xs = np.empty((ns, d))
    vals = np.empty(ns)
    for i in range(ns):
        x, fv, _ = restarted_nelder_mead(fun, data, starts[i].copy(), scale, xtol, ftol, maxfev, restarts)
        xs[i, :] = x
        vals[i] = fv
    return xs, vals
