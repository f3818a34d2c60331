"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same arithmetic order, so both backends agree to the last
bit on the trajectory kernel and to rounding on the eigenvalues.
"""

import math

import numpy as np


def _off_norm(a):
    off = a - np.diag(np.diag(a))
    return math.sqrt(float(np.sum(off * off)))


def jacobi_eigenvalues(a_in, tol=1e-13, max_sweeps=100):
    a = np.array(a_in, dtype=np.float64, order="C", copy=True)
    n = a.shape[0]
    sweep = 0
    off = _off_norm(a)
    while off >= tol and sweep < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                g = 100.0 * abs(apq)
                if sweep > 3 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                newp = colp - s * (colq + tau * colp)
                newq = colq + s * (colp - tau * colq)
                a[:, p] = newp
                a[:, q] = newq
                a[p, :] = newp
                a[q, :] = newq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = a[q, p] = 0.0
        sweep += 1
        off = _off_norm(a)
    return np.diag(a).copy(), sweep, off


def heatbath_trajectory(label_cum, order, cum, start, stop, uniforms, x0):
    steps = uniforms.shape[0]
    n_labels = label_cum.shape[0]
    path = np.empty(steps + 1, dtype=np.int64)
    x = int(x0)
    path[0] = x
    label_cum = label_cum.tolist()
    order = order.tolist()
    cum = cum.tolist()
    start = start.tolist()
    stop = stop.tolist()
    for k, (u1, u2) in enumerate(uniforms.tolist()):
        a = 0
        while a < n_labels - 1 and u1 >= label_cum[a]:
            a += 1
        i = start[a][x]
        end = stop[a][x] - 1
        row = cum[a]
        while i < end and u2 >= row[i]:
            i += 1
        x = order[a][i]
        path[k + 1] = x
    return path
