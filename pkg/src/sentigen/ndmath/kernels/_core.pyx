# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled single-pass kernels for the hot elementwise math.

Same function set and semantics as `pyref`; the win over numpy is fusing
multi-op expressions (gate blends, softmax rows, clamped NLL rows) into one
pass without temporaries.
"""
import numpy as np

from libc.math cimport exp, log, tanh as c_tanh

CE_FLOOR = 1e-12
cdef double _FLOOR = 1e-12

ctypedef fused real:
    float
    double


def _sigmoid1(real[::1] x, real[::1] out):
    cdef Py_ssize_t i, n = x.shape[0]
    with nogil:
        for i in range(n):
            out[i] = <real>(1.0 / (1.0 + exp(-<double>x[i])))


def _sigmoid_bwd1(real[::1] y, real[::1] gy, real[::1] out):
    cdef Py_ssize_t i, n = y.shape[0]
    with nogil:
        for i in range(n):
            out[i] = gy[i] * y[i] * (<real>1 - y[i])


def _tanh1(real[::1] x, real[::1] out):
    cdef Py_ssize_t i, n = x.shape[0]
    with nogil:
        for i in range(n):
            out[i] = <real>c_tanh(<double>x[i])


def _tanh_bwd1(real[::1] y, real[::1] gy, real[::1] out):
    cdef Py_ssize_t i, n = y.shape[0]
    with nogil:
        for i in range(n):
            out[i] = gy[i] * (<real>1 - y[i] * y[i])


def _softmax2(real[:, ::1] x, real[:, ::1] out):
    cdef Py_ssize_t i, j, n = x.shape[0], c = x.shape[1]
    cdef double m, s
    with nogil:
        for i in range(n):
            m = <double>x[i, 0]
            for j in range(1, c):
                if <double>x[i, j] > m:
                    m = <double>x[i, j]
            s = 0.0
            for j in range(c):
                out[i, j] = <real>exp(<double>x[i, j] - m)
                s += <double>out[i, j]
            for j in range(c):
                out[i, j] = <real>(<double>out[i, j] / s)


def _softmax_bwd2(real[:, ::1] y, real[:, ::1] gy, real[:, ::1] out):
    cdef Py_ssize_t i, j, n = y.shape[0], c = y.shape[1]
    cdef double dot
    with nogil:
        for i in range(n):
            dot = 0.0
            for j in range(c):
                dot += <double>gy[i, j] * <double>y[i, j]
            for j in range(c):
                out[i, j] = y[i, j] * <real>(<double>gy[i, j] - dot)


def _lerp1(real[::1] z, real[::1] h, real[::1] hbar, real[::1] out):
    cdef Py_ssize_t i, n = z.shape[0]
    with nogil:
        for i in range(n):
            out[i] = h[i] + z[i] * (hbar[i] - h[i])


def _lerp_bwd1(real[::1] z, real[::1] h, real[::1] hbar, real[::1] g,
               real[::1] gz, real[::1] gh, real[::1] ghbar):
    cdef Py_ssize_t i, n = z.shape[0]
    with nogil:
        for i in range(n):
            gz[i] = g[i] * (hbar[i] - h[i])
            gh[i] = g[i] * (<real>1 - z[i])
            ghbar[i] = g[i] * z[i]


def _ce2(real[:, ::1] probs, long long[::1] targets, real[::1] out):
    cdef Py_ssize_t i, n = probs.shape[0]
    cdef double p
    with nogil:
        for i in range(n):
            p = <double>probs[i, targets[i]]
            if p < _FLOOR:
                p = _FLOOR
            out[i] = <real>(-log(p))


def _ce_bwd2(real[:, ::1] probs, long long[::1] targets, real[::1] g,
             real[:, ::1] out):
    cdef Py_ssize_t i, n = probs.shape[0]
    cdef double p
    with nogil:
        for i in range(n):
            p = <double>probs[i, targets[i]]
            if p < _FLOOR:
                p = _FLOOR
            out[i, targets[i]] = <real>(-<double>g[i] / p)


def sigmoid_fwd(x):
    x = np.ascontiguousarray(x)
    out = np.empty_like(x)
    _sigmoid1(x.reshape(-1), out.reshape(-1))
    return out


def sigmoid_bwd(y, gy):
    y = np.ascontiguousarray(y)
    gy = np.ascontiguousarray(gy)
    out = np.empty_like(y)
    _sigmoid_bwd1(y.reshape(-1), gy.reshape(-1), out.reshape(-1))
    return out


def tanh_fwd(x):
    x = np.ascontiguousarray(x)
    out = np.empty_like(x)
    _tanh1(x.reshape(-1), out.reshape(-1))
    return out


def tanh_bwd(y, gy):
    y = np.ascontiguousarray(y)
    gy = np.ascontiguousarray(gy)
    out = np.empty_like(y)
    _tanh_bwd1(y.reshape(-1), gy.reshape(-1), out.reshape(-1))
    return out


def softmax_rows_fwd(x):
    x = np.ascontiguousarray(x)
    out = np.empty_like(x)
    _softmax2(x, out)
    return out


def softmax_rows_bwd(y, gy):
    y = np.ascontiguousarray(y)
    gy = np.ascontiguousarray(gy)
    out = np.empty_like(y)
    _softmax_bwd2(y, gy, out)
    return out


def lerp_gate_fwd(z, h, hbar):
    z = np.ascontiguousarray(z)
    h = np.ascontiguousarray(h)
    hbar = np.ascontiguousarray(hbar)
    out = np.empty_like(z)
    _lerp1(z.reshape(-1), h.reshape(-1), hbar.reshape(-1), out.reshape(-1))
    return out


def lerp_gate_bwd(z, h, hbar, g):
    z = np.ascontiguousarray(z)
    h = np.ascontiguousarray(h)
    hbar = np.ascontiguousarray(hbar)
    g = np.ascontiguousarray(g)
    gz = np.empty_like(z)
    gh = np.empty_like(z)
    ghbar = np.empty_like(z)
    _lerp_bwd1(z.reshape(-1), h.reshape(-1), hbar.reshape(-1), g.reshape(-1),
               gz.reshape(-1), gh.reshape(-1), ghbar.reshape(-1))
    return gz, gh, ghbar


def ce_rows_fwd(probs, targets):
    probs = np.ascontiguousarray(probs)
    targets = np.ascontiguousarray(targets, dtype=np.int64)
    out = np.empty(probs.shape[0], dtype=probs.dtype)
    _ce2(probs, targets, out)
    return out


def ce_rows_bwd(probs, targets, g):
    probs = np.ascontiguousarray(probs)
    targets = np.ascontiguousarray(targets, dtype=np.int64)
    g = np.ascontiguousarray(g)
    out = np.zeros_like(probs)
    _ce_bwd2(probs, targets, g, out)
    return out
