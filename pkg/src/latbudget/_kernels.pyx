# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled EM and mini-batch backprop loops.

Same signatures and semantics as ``latbudget._pykernels``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, fabs

cnp.import_array()

cdef enum:
    LINEAR = 0
    RELU = 1
    SOFTMAX = 2
    MSE = 0

cdef double LOG_FLOOR = 1e-12


cdef double _loglik_and_estep(const double[:, ::1] n, double[:, ::1] A, double[:, ::1] B,
                              double[:, ::1] accA, double[:, ::1] accB) nogil:
    cdef Py_ssize_t I = n.shape[0], J = n.shape[1], K = A.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double pi, w, r, ll = 0.0
    for i in range(I):
        for k in range(K):
            accA[i, k] = 0.0
    for j in range(J):
        for k in range(K):
            accB[j, k] = 0.0
    for i in range(I):
        for j in range(J):
            pi = 0.0
            for k in range(K):
                pi += A[i, k] * B[j, k]
            if n[i, j] > 0:
                ll += n[i, j] * log(pi if pi > LOG_FLOOR else LOG_FLOOR)
                if pi > 0:
                    w = n[i, j] / pi
                    for k in range(K):
                        r = w * A[i, k] * B[j, k]
                        accA[i, k] += r
                        accB[j, k] += r
    return ll


cdef double _violation(double[:, ::1] A, double[:, ::1] B) nogil:
    cdef Py_ssize_t I = A.shape[0], J = B.shape[0], K = A.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, v = 0.0, x
    for i in range(I):
        s = 0.0
        for k in range(K):
            x = A[i, k]
            s += x
            if -x > v:
                v = -x
            if x - 1.0 > v:
                v = x - 1.0
        if fabs(s - 1.0) > v:
            v = fabs(s - 1.0)
    for k in range(K):
        s = 0.0
        for j in range(J):
            x = B[j, k]
            s += x
            if -x > v:
                v = -x
            if x - 1.0 > v:
                v = x - 1.0
        if fabs(s - 1.0) > v:
            v = fabs(s - 1.0)
    return v


def em_fit(counts, A, B, int max_iter, double tol):
    cdef double[:, ::1] n = np.ascontiguousarray(counts, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A_arr = np.array(A, dtype=np.float64, order="C")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] B_arr = np.array(B, dtype=np.float64, order="C")
    cdef double[:, ::1] a = A_arr
    cdef double[:, ::1] b = B_arr
    cdef Py_ssize_t I = n.shape[0], J = n.shape[1], K = a.shape[1]
    cdef double[:, ::1] accA = np.zeros((I, K))
    cdef double[:, ::1] accB = np.zeros((J, K))
    cdef double[::1] row_tot = np.asarray(counts, dtype=np.float64).sum(axis=1)
    cdef double[::1] ll = np.empty(max_iter + 1)
    cdef double[::1] viol = np.empty(max_iter + 1)
    cdef Py_ssize_t t, i, j, k, n_rec = 0
    cdef double col
    cdef bint converged = False
    with nogil:
        for t in range(max_iter + 1):
            ll[t] = _loglik_and_estep(n, a, b, accA, accB)
            viol[t] = _violation(a, b)
            n_rec = t + 1
            if t > 0 and fabs(ll[t] - ll[t - 1]) <= tol:
                converged = True
                break
            if t == max_iter:
                break
            for i in range(I):
                for k in range(K):
                    a[i, k] = accA[i, k] / row_tot[i]
            for k in range(K):
                col = 0.0
                for j in range(J):
                    col += accB[j, k]
                if col > 0:
                    for j in range(J):
                        b[j, k] = accB[j, k] / col
    return (A_arr, B_arr, np.asarray(ll[:n_rec]).copy(),
            np.asarray(viol[:n_rec]).copy(), bool(converged))


cdef void _activate(double[:, ::1] z, double[:, ::1] out, Py_ssize_t m, int kind) nogil:
    cdef Py_ssize_t r, c, C = z.shape[1]
    cdef double mx, s
    for r in range(m):
        if kind == SOFTMAX:
            mx = z[r, 0]
            for c in range(1, C):
                if z[r, c] > mx:
                    mx = z[r, c]
            s = 0.0
            for c in range(C):
                out[r, c] = exp(z[r, c] - mx)
                s += out[r, c]
            for c in range(C):
                out[r, c] /= s
        elif kind == RELU:
            for c in range(C):
                out[r, c] = z[r, c] if z[r, c] > 0 else 0.0
        else:
            for c in range(C):
                out[r, c] = z[r, c]


cdef void _gradients(const double[:, ::1] X, const double[:, ::1] Y,
                     Py_ssize_t start, Py_ssize_t m,
                     double[:, ::1] w1, double[::1] b1, double[:, ::1] w2, double[::1] b2,
                     int act1, int act2, int loss,
                     double[:, ::1] z1, double[:, ::1] h, double[:, ::1] z2, double[:, ::1] out,
                     double[:, ::1] gw1, double[::1] gb1, double[:, ::1] gw2, double[::1] gb2) nogil:
    # h is reused for dz1 and out for dz2 once their forward values are consumed
    cdef Py_ssize_t I = w1.shape[0], L = w1.shape[1], J = w2.shape[1]
    cdef Py_ssize_t r, i, l, j
    cdef double s, x, o
    for r in range(m):
        for l in range(L):
            s = b1[l]
            for i in range(I):
                x = X[start + r, i]
                if x != 0.0:
                    s += x * w1[i, l]
            z1[r, l] = s
    _activate(z1, h, m, act1)
    for r in range(m):
        for j in range(J):
            s = b2[j]
            for l in range(L):
                s += h[r, l] * w2[l, j]
            z2[r, j] = s
    _activate(z2, out, m, act2)
    # g = dL/dout; for softmax it is parked in z2 so out keeps o until dz2 is formed
    for r in range(m):
        s = 0.0
        for j in range(J):
            o = out[r, j]
            if loss == MSE:
                x = 2.0 * (o - Y[start + r, j]) / (m * J)
            elif o > LOG_FLOOR:
                x = -Y[start + r, j] / (m * o)
            else:
                x = 0.0
            if act2 == SOFTMAX:
                z2[r, j] = x
                s += x * o
            elif act2 == RELU:
                out[r, j] = x if z2[r, j] > 0 else 0.0
            else:
                out[r, j] = x
        if act2 == SOFTMAX:
            for j in range(J):
                out[r, j] = out[r, j] * (z2[r, j] - s)
    # out now holds dz2
    for l in range(L):
        for j in range(J):
            s = 0.0
            for r in range(m):
                s += h[r, l] * out[r, j]
            gw2[l, j] = s
    for j in range(J):
        s = 0.0
        for r in range(m):
            s += out[r, j]
        gb2[j] = s
    for r in range(m):
        for l in range(L):
            s = 0.0
            for j in range(J):
                s += out[r, j] * w2[l, j]
            if act1 == RELU and z1[r, l] <= 0:
                s = 0.0
            h[r, l] = s
    # h now holds dz1
    for i in range(I):
        for l in range(L):
            s = 0.0
            for r in range(m):
                x = X[start + r, i]
                if x != 0.0:
                    s += x * h[r, l]
            gw1[i, l] = s
    for l in range(L):
        s = 0.0
        for r in range(m):
            s += h[r, l]
        gb1[l] = s


def batch_gradients(X, Y, w1, b1, w2, b2, int act1, int act2, int loss):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef double[:, ::1] W1 = np.ascontiguousarray(w1, dtype=np.float64)
    cdef double[::1] B1 = np.ascontiguousarray(b1, dtype=np.float64)
    cdef double[:, ::1] W2 = np.ascontiguousarray(w2, dtype=np.float64)
    cdef double[::1] B2 = np.ascontiguousarray(b2, dtype=np.float64)
    cdef Py_ssize_t m = Xv.shape[0], I = W1.shape[0], L = W1.shape[1], J = W2.shape[1]
    gw1 = np.zeros((I, L)); gb1 = np.zeros(L); gw2 = np.zeros((L, J)); gb2 = np.zeros(J)
    cdef double[:, ::1] z1 = np.empty((m, L))
    cdef double[:, ::1] h = np.empty((m, L))
    cdef double[:, ::1] z2 = np.empty((m, J))
    cdef double[:, ::1] out = np.empty((m, J))
    _gradients(Xv, Yv, 0, m, W1, B1, W2, B2, act1, act2, loss, z1, h, z2, out,
               gw1, gb1, gw2, gb2)
    return gw1, gb1, gw2, gb2


def sgd_epoch(X, Y, w1, b1, w2, b2, int act1, int act2, int loss, double lr, int batch_size):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef double[:, ::1] W1 = w1
    cdef double[::1] B1 = b1
    cdef double[:, ::1] W2 = w2
    cdef double[::1] B2 = b2
    cdef Py_ssize_t N = Xv.shape[0], I = W1.shape[0], L = W1.shape[1], J = W2.shape[1]
    cdef Py_ssize_t bs = batch_size
    cdef double[:, ::1] z1 = np.empty((bs, L))
    cdef double[:, ::1] h = np.empty((bs, L))
    cdef double[:, ::1] z2 = np.empty((bs, J))
    cdef double[:, ::1] out = np.empty((bs, J))
    cdef double[:, ::1] gw1 = np.empty((I, L))
    cdef double[::1] gb1 = np.empty(L)
    cdef double[:, ::1] gw2 = np.empty((L, J))
    cdef double[::1] gb2 = np.empty(J)
    cdef Py_ssize_t start, m, i, l, j
    with nogil:
        start = 0
        while start < N:
            m = bs if start + bs <= N else N - start
            _gradients(Xv, Yv, start, m, W1, B1, W2, B2, act1, act2, loss,
                       z1, h, z2, out, gw1, gb1, gw2, gb2)
            for i in range(I):
                for l in range(L):
                    W1[i, l] -= lr * gw1[i, l]
            for l in range(L):
                B1[l] -= lr * gb1[l]
                for j in range(J):
                    W2[l, j] -= lr * gw2[l, j]
            for j in range(J):
                B2[j] -= lr * gb2[j]
            start += bs
