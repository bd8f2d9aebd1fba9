"""Pure-numpy LSTM sequence kernels (fallback for the compiled extension).

Gate layout along the last axis is (input, forget, cell, output). The x
projections (x @ Wx + b) are precomputed by the caller so both backends only
handle the recurrent part.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def lstm_sequence_forward(
    xp: np.ndarray, Wh: np.ndarray
) -> tuple[np.ndarray, tuple]:
    """Run an LSTM over ``xp`` (T, 4H) from zero state.

    Returns the final hidden state (H,) and the activation cache needed by
    the backward pass.
    """
    T, four_h = xp.shape
    H = four_h // 4
    gates_i = np.empty((T, H))
    gates_f = np.empty((T, H))
    gates_g = np.empty((T, H))
    gates_o = np.empty((T, H))
    cells = np.empty((T, H))
    hiddens = np.empty((T, H))
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(T):
        z = xp[t] + h @ Wh
        i = _sigmoid(z[:H])
        f = _sigmoid(z[H : 2 * H])
        g = np.tanh(z[2 * H : 3 * H])
        o = _sigmoid(z[3 * H :])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates_i[t], gates_f[t], gates_g[t], gates_o[t] = i, f, g, o
        cells[t] = c
        hiddens[t] = h
    return h, (gates_i, gates_f, gates_g, gates_o, cells, hiddens)


def lstm_sequence_backward(
    cache: tuple, Wh: np.ndarray, d_h_last: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Backprop from the final hidden state only.

    Returns (d_xp, d_Wh); gradients w.r.t. the initial state are discarded
    because the sequence always starts from zeros.
    """
    gates_i, gates_f, gates_g, gates_o, cells, hiddens = cache
    T, H = gates_i.shape
    d_xp = np.zeros((T, 4 * H))
    d_Wh = np.zeros_like(Wh)
    dh = d_h_last.copy()
    dc = np.zeros(H)
    for t in range(T - 1, -1, -1):
        i, f, g, o = gates_i[t], gates_f[t], gates_g[t], gates_o[t]
        tan_c = np.tanh(cells[t])
        do = dh * tan_c
        dc = dc + dh * o * (1.0 - tan_c * tan_c)
        c_prev = cells[t - 1] if t > 0 else np.zeros(H)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ]
        )
        d_xp[t] = dz
        h_prev = hiddens[t - 1] if t > 0 else np.zeros(H)
        d_Wh += np.outer(h_prev, dz)
        dh = Wh @ dz
        dc = dc * f
    return d_xp, d_Wh
