"""Compiled SMO solver for the soft-margin SVM dual.

Solves ``min 1/2 a'Qa - e'a`` s.t. ``0 <= a <= C``, ``y'a = 0`` with
``Q_ij = y_i y_j K_ij`` on a precomputed kernel matrix. The gradient
``G = Qa - e`` is maintained incrementally.
"""

import numpy as np
from numba import njit

TAU = 1e-12


@njit(cache=True, nogil=True)
def _select(y, alpha, G, K, C, second_order):
    # i: maximal violation over I_up, j: over I_low (first order) or best
    # second-order gain among violating partners
    n = y.shape[0]
    gmax = -np.inf
    i = -1
    for t in range(n):
        if y[t] > 0:
            if alpha[t] < C:
                v = -G[t]
                if v >= gmax:
                    gmax = v
                    i = t
        else:
            if alpha[t] > 0:
                v = G[t]
                if v >= gmax:
                    gmax = v
                    i = t
    gmin = np.inf
    j = -1
    best = np.inf
    for t in range(n):
        in_low = (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C)
        if not in_low:
            continue
        v = -y[t] * G[t]
        if v < gmin:
            gmin = v
            if not second_order:
                j = t
        if second_order and i >= 0:
            diff = gmax - v
            if diff > 0:
                quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                if quad <= 0:
                    quad = TAU
                obj = -(diff * diff) / quad
                if obj <= best:
                    best = obj
                    j = t
    return i, j, gmax, gmin


@njit(cache=True, nogil=True)
def smo(K, y, C, tol, max_iter, second_order):
    """Returns ``(alpha, G, iterations, gap)``; ``gap <= tol`` means converged."""
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    gap = np.inf
    it = 0
    i, j, gmax, gmin = _select(y, alpha, G, K, C, second_order)
    while True:
        gap = gmax - gmin
        if i < 0 or j < 0 or gap < tol:
            break
        if it >= max_iter:
            break
        it += 1
        ai_old = alpha[i]
        aj_old = alpha[j]
        Qij = y[i] * y[j] * K[i, j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] + 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * Qij
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            s = ai_old + aj_old
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s
        dai = (alpha[i] - ai_old) * y[i]
        daj = (alpha[j] - aj_old) * y[j]
        # K is symmetric; reading rows keeps the access contiguous
        Ki = K[i]
        Kj = K[j]
        if second_order:
            for t in range(n):
                G[t] += y[t] * (Ki[t] * dai + Kj[t] * daj)
            i, j, gmax, gmin = _select(y, alpha, G, K, C, second_order)
            continue
        # first-order selection needs no pivot, so fuse it with the update
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for t in range(n):
            G[t] += y[t] * (Ki[t] * dai + Kj[t] * daj)
            v = -y[t] * G[t]
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                if v >= gmax:
                    gmax = v
                    i = t
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                if v < gmin:
                    gmin = v
                    j = t
    return alpha, G, it, gap


@njit(cache=True, nogil=True)
def bias(y, alpha, G, C):
    """Offset ``b`` of ``f(x) = sum y_i a_i K(x_i, x) + b``.

    Averages ``-y_t G_t`` over free variables, or takes the midpoint of the
    feasible interval when no variable is free.
    """
    n = y.shape[0]
    ub = np.inf
    lb = -np.inf
    total = 0.0
    nfree = 0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            total += yg
    if nfree > 0:
        rho = total / nfree
    else:
        rho = 0.5 * (ub + lb)
    return -rho
