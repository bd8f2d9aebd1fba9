# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM sequence kernels.

Drop-in twins of _kernels_py: same signatures, same cache layout, so the
backend selector can swap them freely. The x projections are precomputed by
the caller; these kernels fuse the recurrent matmul with the gate updates.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


cdef inline double _sigmoid(double x) nogil:
    return 1.0 / (1.0 + exp(-x))


def lstm_sequence_forward(object xp_in, object Wh_in):
    cdef double[:, ::1] xp = np.ascontiguousarray(xp_in, dtype=np.float64)
    cdef double[:, ::1] Wh = np.ascontiguousarray(Wh_in, dtype=np.float64)
    cdef Py_ssize_t T = xp.shape[0]
    cdef Py_ssize_t H4 = xp.shape[1]
    cdef Py_ssize_t H = H4 // 4

    gates_i_arr = np.empty((T, H), dtype=np.float64)
    gates_f_arr = np.empty((T, H), dtype=np.float64)
    gates_g_arr = np.empty((T, H), dtype=np.float64)
    gates_o_arr = np.empty((T, H), dtype=np.float64)
    cells_arr = np.empty((T, H), dtype=np.float64)
    hiddens_arr = np.empty((T, H), dtype=np.float64)
    h_arr = np.zeros(H, dtype=np.float64)
    c_arr = np.zeros(H, dtype=np.float64)
    z_arr = np.empty(H4, dtype=np.float64)

    cdef double[:, ::1] gi = gates_i_arr
    cdef double[:, ::1] gf = gates_f_arr
    cdef double[:, ::1] gg = gates_g_arr
    cdef double[:, ::1] go = gates_o_arr
    cdef double[:, ::1] cc = cells_arr
    cdef double[:, ::1] hh = hiddens_arr
    cdef double[::1] h = h_arr
    cdef double[::1] c = c_arr
    cdef double[::1] z = z_arr
    cdef Py_ssize_t t, i, j
    cdef double hi, iv, fv, gv, ov

    with nogil:
        for t in range(T):
            for j in range(H4):
                z[j] = xp[t, j]
            for i in range(H):
                hi = h[i]
                if hi != 0.0:
                    for j in range(H4):
                        z[j] += hi * Wh[i, j]
            for i in range(H):
                iv = _sigmoid(z[i])
                fv = _sigmoid(z[H + i])
                gv = tanh(z[2 * H + i])
                ov = _sigmoid(z[3 * H + i])
                c[i] = fv * c[i] + iv * gv
                h[i] = ov * tanh(c[i])
                gi[t, i] = iv
                gf[t, i] = fv
                gg[t, i] = gv
                go[t, i] = ov
                cc[t, i] = c[i]
                hh[t, i] = h[i]

    return h_arr.copy(), (
        gates_i_arr,
        gates_f_arr,
        gates_g_arr,
        gates_o_arr,
        cells_arr,
        hiddens_arr,
    )


def lstm_sequence_backward(tuple cache, object Wh_in, object d_h_last_in):
    cdef double[:, ::1] gi = np.ascontiguousarray(cache[0], dtype=np.float64)
    cdef double[:, ::1] gf = np.ascontiguousarray(cache[1], dtype=np.float64)
    cdef double[:, ::1] gg = np.ascontiguousarray(cache[2], dtype=np.float64)
    cdef double[:, ::1] go = np.ascontiguousarray(cache[3], dtype=np.float64)
    cdef double[:, ::1] cc = np.ascontiguousarray(cache[4], dtype=np.float64)
    cdef double[:, ::1] hh = np.ascontiguousarray(cache[5], dtype=np.float64)
    cdef double[:, ::1] Wh = np.ascontiguousarray(Wh_in, dtype=np.float64)
    cdef Py_ssize_t T = gi.shape[0]
    cdef Py_ssize_t H = gi.shape[1]
    cdef Py_ssize_t H4 = 4 * H

    d_xp_arr = np.zeros((T, H4), dtype=np.float64)
    d_Wh_arr = np.zeros((H, H4), dtype=np.float64)
    dh_arr = np.ascontiguousarray(d_h_last_in, dtype=np.float64).copy()
    dc_arr = np.zeros(H, dtype=np.float64)

    cdef double[:, ::1] d_xp = d_xp_arr
    cdef double[:, ::1] d_Wh = d_Wh_arr
    cdef double[::1] dh = dh_arr
    cdef double[::1] dc = dc_arr
    cdef Py_ssize_t t, i, j
    cdef double tan_c, do, di, dg, df, c_prev, h_prev, s

    with nogil:
        for t in range(T - 1, -1, -1):
            for i in range(H):
                tan_c = tanh(cc[t, i])
                do = dh[i] * tan_c
                dc[i] = dc[i] + dh[i] * go[t, i] * (1.0 - tan_c * tan_c)
                c_prev = cc[t - 1, i] if t > 0 else 0.0
                di = dc[i] * gg[t, i]
                dg = dc[i] * gi[t, i]
                df = dc[i] * c_prev
                d_xp[t, i] = di * gi[t, i] * (1.0 - gi[t, i])
                d_xp[t, H + i] = df * gf[t, i] * (1.0 - gf[t, i])
                d_xp[t, 2 * H + i] = dg * (1.0 - gg[t, i] * gg[t, i])
                d_xp[t, 3 * H + i] = do * go[t, i] * (1.0 - go[t, i])
            for i in range(H):
                h_prev = hh[t - 1, i] if t > 0 else 0.0
                if h_prev != 0.0:
                    for j in range(H4):
                        d_Wh[i, j] += h_prev * d_xp[t, j]
            for i in range(H):
                s = 0.0
                for j in range(H4):
                    s += Wh[i, j] * d_xp[t, j]
                dh[i] = s
                dc[i] = dc[i] * gf[t, i]

    return d_xp_arr, d_Wh_arr
