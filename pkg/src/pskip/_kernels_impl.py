"""Single-source hot loops, written in numba-compatible numpy.

This module is imported twice by :mod:`pskip.kernels`: once as-is (the pure
numpy backend) and once with every function rebound through ``numba.njit``
(the compiled backend). Keep everything here inside the numba-supported
numpy subset: contiguous ``np.dot``, elementwise ufuncs, axis-0 reductions.

Conventions shared by all chunk kernels:

* ``X`` (n, d) and ``Y`` (n, d) are in-out state buffers, updated in place.
* ``noise`` is the pre-scaled Gaussian perturbation per step, shape
  (k, n, d); ``coins`` holds the step's communication bits, shape (k,).
* ``rec_rows[k]`` is the row of ``metrics``/``comms_out`` to write after
  step k, or -1 to skip recording.
* ``metrics`` columns are [rel_error, grad_norm_sq, consensus_err, fgap,
  dist_sq].
* Return value is ``(div_step, comms, viol_mean, viol_ysum)`` where
  ``div_step`` is the chunk-local index of the first non-finite iterate
  (-1 when the chunk stayed finite) and the ``viol_*`` are running maxima
  of the mean-iterate identity error and the column sums of Y.
"""

import numpy as np

COL_REL = 0
COL_GRADSQ = 1
COL_CONS = 2
COL_FGAP = 3
COL_DISTSQ = 4
N_METRICS = 5


def _row_mean(X):
    return X.sum(axis=0) / X.shape[0]


def _consensus_err(X, xbar):
    return ((X - xbar) ** 2).sum() / X.shape[0]


def _mean_iter_violation(X_old, X_new, G, alpha):
    n = X_old.shape[0]
    drift = (X_new.sum(axis=0) - X_old.sum(axis=0) + alpha * G.sum(axis=0)) / n
    return np.sqrt((drift * drift).sum())


def quad_metrics_row(X, xbar, hbar, q, b2term, xstar, xstar_norm, fstar,
                     metrics, row):
    """Quadratic-family metric row: closed-form f and grad at the mean."""
    diff = xbar - xstar
    dist_sq = (diff * diff).sum()
    dist = np.sqrt(dist_sq)
    gvec = hbar * xbar - q
    fval = 0.5 * hbar * (xbar * xbar).sum() - (q * xbar).sum() + b2term
    metrics[row, COL_REL] = dist if xstar_norm == 0.0 else dist / xstar_norm
    metrics[row, COL_GRADSQ] = (gvec * gvec).sum()
    metrics[row, COL_CONS] = _consensus_err(X, xbar)
    metrics[row, COL_FGAP] = fval - fstar
    metrics[row, COL_DISTSQ] = dist_sq


def logit_reg_value(xbar, reg_kind, reg_c):
    x2 = xbar * xbar
    if reg_kind == 0:
        return 0.5 * reg_c * x2.sum()
    return (x2 / (1.0 + x2)).sum()


def logit_reg_grad(xbar, reg_kind, reg_c):
    if reg_kind == 0:
        return reg_c * xbar
    den = 1.0 + xbar * xbar
    return 2.0 * xbar / (den * den)


def logit_metrics_row(X, xbar, A, yv, ptr, reg_kind, reg_c, xstar,
                      xstar_norm, fstar, metrics, row):
    """Logistic-family metric row; one full pass over the stacked data."""
    n = ptr.shape[0] - 1
    diff = xbar - xstar
    dist_sq = (diff * diff).sum()
    dist = np.sqrt(dist_sq)
    t = -np.dot(A, xbar) * yv
    losses = np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))
    weights = -yv * (0.5 * (1.0 + np.tanh(0.5 * t)))
    fval = 0.0
    for i in range(n):
        lo, hi = ptr[i], ptr[i + 1]
        m_i = hi - lo
        fval += losses[lo:hi].sum() / m_i
        weights[lo:hi] /= m_i * n
    fval = fval / n + logit_reg_value(xbar, reg_kind, reg_c)
    grad = np.dot(weights, A) + logit_reg_grad(xbar, reg_kind, reg_c)
    metrics[row, COL_REL] = dist if xstar_norm == 0.0 else dist / xstar_norm
    metrics[row, COL_GRADSQ] = (grad * grad).sum()
    metrics[row, COL_CONS] = _consensus_err(X, xbar)
    metrics[row, COL_FGAP] = fval - fstar
    metrics[row, COL_DISTSQ] = dist_sq


def logit_node_grads(X, A, yv, ptr, reg_kind, reg_c):
    """Per-node exact gradients, stacked (n, d)."""
    n = ptr.shape[0] - 1
    G = np.empty(X.shape)
    for i in range(n):
        lo, hi = ptr[i], ptr[i + 1]
        m_i = hi - lo
        xi = X[i]
        t = -np.dot(A[lo:hi], xi) * yv[lo:hi]
        w = -yv[lo:hi] * (0.5 * (1.0 + np.tanh(0.5 * t))) / m_i
        G[i] = np.dot(w, A[lo:hi]) + logit_reg_grad(xi, reg_kind, reg_c)
    return G


def proxskip_quad_chunk(X, Y, h, C, hbar, q, b2term, Wa, alpha, beta,
                        coins, noise, rec_rows, xstar, xstar_norm, fstar,
                        metrics, comms_out, comms0):
    n = X.shape[0]
    comms = comms0
    viol_mean = 0.0
    viol_ysum = 0.0
    for k in range(coins.shape[0]):
        G = h.reshape(n, 1) * X - C + noise[k]
        Z = X - alpha * G - Y
        if coins[k] == 1:
            Xn = np.dot(Wa, Z)
            Y += beta * (Z - Xn)
            comms += 1
        else:
            Xn = Z
        v = _mean_iter_violation(X, Xn, G, alpha)
        if v > viol_mean:
            viol_mean = v
        ys = np.abs(Y.sum(axis=0)).max()
        if ys > viol_ysum:
            viol_ysum = ys
        X[:, :] = Xn
        if not np.all(np.isfinite(X)):
            return k, comms, viol_mean, viol_ysum
        row = rec_rows[k]
        if row >= 0:
            xbar = _row_mean(X)
            quad_metrics_row(X, xbar, hbar, q, b2term, xstar, xstar_norm,
                             fstar, metrics, row)
            comms_out[row] = comms
    return -1, comms, viol_mean, viol_ysum


def proxskip_logit_chunk(X, Y, A, yv, ptr, reg_kind, reg_c, Wa, alpha, beta,
                         coins, noise, rec_rows, xstar, xstar_norm, fstar,
                         metrics, comms_out, comms0):
    comms = comms0
    viol_mean = 0.0
    viol_ysum = 0.0
    for k in range(coins.shape[0]):
        G = logit_node_grads(X, A, yv, ptr, reg_kind, reg_c) + noise[k]
        Z = X - alpha * G - Y
        if coins[k] == 1:
            Xn = np.dot(Wa, Z)
            Y += beta * (Z - Xn)
            comms += 1
        else:
            Xn = Z
        v = _mean_iter_violation(X, Xn, G, alpha)
        if v > viol_mean:
            viol_mean = v
        ys = np.abs(Y.sum(axis=0)).max()
        if ys > viol_ysum:
            viol_ysum = ys
        X[:, :] = Xn
        if not np.all(np.isfinite(X)):
            return k, comms, viol_mean, viol_ysum
        row = rec_rows[k]
        if row >= 0:
            xbar = _row_mean(X)
            logit_metrics_row(X, xbar, A, yv, ptr, reg_kind, reg_c, xstar,
                              xstar_norm, fstar, metrics, row)
            comms_out[row] = comms
    return -1, comms, viol_mean, viol_ysum


def dsgd_quad_chunk(X, h, C, hbar, q, b2term, W, alpha, K, t0,
                    noise, rec_rows, xstar, xstar_norm, fstar,
                    metrics, comms_out, comms0):
    """Local SGD with gossip through W after every K-th inner step."""
    n = X.shape[0]
    comms = comms0
    viol_mean = 0.0
    for k in range(noise.shape[0]):
        G = h.reshape(n, 1) * X - C + noise[k]
        Xn = X - alpha * G
        if (t0 + k + 1) % K == 0:
            Xn = np.dot(W, Xn)
            comms += 1
        v = _mean_iter_violation(X, Xn, G, alpha)
        if v > viol_mean:
            viol_mean = v
        X[:, :] = Xn
        if not np.all(np.isfinite(X)):
            return k, comms, viol_mean, 0.0
        row = rec_rows[k]
        if row >= 0:
            xbar = _row_mean(X)
            quad_metrics_row(X, xbar, hbar, q, b2term, xstar, xstar_norm,
                             fstar, metrics, row)
            comms_out[row] = comms
    return -1, comms, viol_mean, 0.0


def dsgd_logit_chunk(X, A, yv, ptr, reg_kind, reg_c, W, alpha, K, t0,
                     noise, rec_rows, xstar, xstar_norm, fstar,
                     metrics, comms_out, comms0):
    comms = comms0
    viol_mean = 0.0
    for k in range(noise.shape[0]):
        G = logit_node_grads(X, A, yv, ptr, reg_kind, reg_c) + noise[k]
        Xn = X - alpha * G
        if (t0 + k + 1) % K == 0:
            Xn = np.dot(W, Xn)
            comms += 1
        v = _mean_iter_violation(X, Xn, G, alpha)
        if v > viol_mean:
            viol_mean = v
        X[:, :] = Xn
        if not np.all(np.isfinite(X)):
            return k, comms, viol_mean, 0.0
        row = rec_rows[k]
        if row >= 0:
            xbar = _row_mean(X)
            logit_metrics_row(X, xbar, A, yv, ptr, reg_kind, reg_c, xstar,
                              xstar_norm, fstar, metrics, row)
            comms_out[row] = comms
    return -1, comms, viol_mean, 0.0
