"""Pure numpy implementations of the hot loops.

Signatures mirror ``latbudget._kernels`` exactly; ``latbudget.kernels``
picks one of the two at import time.
"""

import numpy as np

LINEAR, RELU, SOFTMAX = 0, 1, 2
MSE, CROSS_ENTROPY = 0, 1
LOG_FLOOR = 1e-12


def _violation(A, B):
    return max(np.abs(A.sum(axis=1) - 1).max(), np.abs(B.sum(axis=0) - 1).max(),
               max(0.0, -A.min()), max(0.0, -B.min()),
               max(0.0, A.max() - 1), max(0.0, B.max() - 1))


def em_fit(counts, A, B, max_iter, tol):
    """Run EM for the latent budget model from (A, B).

    Returns ``(A, B, loglik, violation, converged)`` where ``loglik[t]`` and
    ``violation[t]`` describe the parameters after ``t`` updates.
    """
    n = np.ascontiguousarray(counts, dtype=np.float64)
    A = np.array(A, dtype=np.float64)
    B = np.array(B, dtype=np.float64)
    row_tot = n.sum(axis=1)
    ll_trace, viol_trace = [], []
    converged = False
    for t in range(max_iter + 1):
        pi = A @ B.T
        ll = float(np.sum(n * np.log(np.maximum(pi, LOG_FLOOR))))
        ll_trace.append(ll)
        viol_trace.append(_violation(A, B))
        if t > 0 and abs(ll - ll_trace[-2]) <= tol:
            converged = True
            break
        if t == max_iter:
            break
        w = np.divide(n, pi, out=np.zeros_like(n), where=(n > 0) & (pi > 0))
        # resp[i, j, k] * n_ij summed over j or i
        new_A = A * (w @ B)
        new_B = B * (w.T @ A)
        A = new_A / row_tot[:, None]
        col = new_B.sum(axis=0)
        keep = col > 0
        B[:, keep] = new_B[:, keep] / col[keep]
    return A, B, np.array(ll_trace), np.array(viol_trace), converged


def _act(z, kind):
    if kind == RELU:
        return np.maximum(z, 0.0)
    if kind == SOFTMAX:
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)
    return z


def batch_gradients(X, Y, w1, b1, w2, b2, act1, act2, loss):
    """Gradients of the batch-mean loss with respect to (w1, b1, w2, b2)."""
    m, J = Y.shape
    z1 = X @ w1 + b1
    h = _act(z1, act1)
    z2 = h @ w2 + b2
    out = _act(z2, act2)
    if loss == MSE:
        g = 2.0 * (out - Y) / (m * J)
    else:
        safe = out > LOG_FLOOR
        g = np.where(safe, -Y / (m * np.where(safe, out, 1.0)), 0.0)
    if act2 == SOFTMAX:
        dz2 = out * (g - (g * out).sum(axis=1, keepdims=True))
    elif act2 == RELU:
        dz2 = g * (z2 > 0)
    else:
        dz2 = g
    gw2 = h.T @ dz2
    gb2 = dz2.sum(axis=0)
    dh = dz2 @ w2.T
    dz1 = dh * (z1 > 0) if act1 == RELU else dh
    gw1 = X.T @ dz1
    gb1 = dz1.sum(axis=0)
    return gw1, gb1, gw2, gb2


def sgd_epoch(X, Y, w1, b1, w2, b2, act1, act2, loss, lr, batch_size):
    """One pass of mini-batch gradient descent over rows in order; updates in place."""
    N = X.shape[0]
    for start in range(0, N, batch_size):
        xb = X[start:start + batch_size]
        yb = Y[start:start + batch_size]
        gw1, gb1, gw2, gb2 = batch_gradients(xb, yb, w1, b1, w2, b2, act1, act2, loss)
        w1 -= lr * gw1
        b1 -= lr * gb1
        w2 -= lr * gw2
        b2 -= lr * gb2
