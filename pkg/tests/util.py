"""Shared test oracles: finite differences and brute-force convolutions."""

import numpy as np


def finite_diff(value_fn, arrays, h=1e-5):
    """Central-difference gradients of scalar value_fn() w.r.t. each array.

    value_fn must re-evaluate from the arrays on every call; they are
    perturbed in place.
    """
    grads = []
    for x in arrays:
        g = np.zeros_like(x)
        flat = x.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            fp = value_fn()
            flat[j] = orig - h
            fm = value_fn()
            flat[j] = orig
            gflat[j] = (fp - fm) / (2.0 * h)
        grads.append(g)
    return grads


def assert_grads_close(analytic, numeric, rtol=1e-4, atol=1e-7):
    for a, n in zip(analytic, numeric):
        np.testing.assert_allclose(a, n, rtol=rtol, atol=atol)


def conv1d_loop(x, w, bias=None, stride=1, pad=0):
    """Direct quadruple-loop cross-correlation (float64 oracle)."""
    b_n, c_n, length = x.shape
    o_n, _, k_n = w.shape
    t_n = (length + 2 * pad - k_n) // stride + 1
    y = np.zeros((b_n, o_n, t_n), dtype=np.float64)
    for b in range(b_n):
        for o in range(o_n):
            for t in range(t_n):
                acc = 0.0 if bias is None else float(bias[o])
                for c in range(c_n):
                    for k in range(k_n):
                        idx = t * stride + k - pad
                        if 0 <= idx < length:
                            acc += float(x[b, c, idx]) * float(w[o, c, k])
                y[b, o, t] = acc
    return y


def conv_transpose1d_loop(x, w, bias=None, stride=1, pad=0, opad=0):
    """Direct loop transposed convolution (float64 oracle)."""
    b_n, ci_n, length = x.shape
    _, co_n, k_n = w.shape
    m_n = (length - 1) * stride - 2 * pad + k_n + opad
    y = np.zeros((b_n, co_n, m_n), dtype=np.float64)
    for b in range(b_n):
        for co in range(co_n):
            for ci in range(ci_n):
                for t in range(length):
                    for k in range(k_n):
                        i = t * stride + k - pad
                        if 0 <= i < m_n:
                            y[b, co, i] += float(x[b, ci, t]) * float(w[ci, co, k])
        if bias is not None:
            y[b] += np.asarray(bias, dtype=np.float64)[:, None]
    return y


def linear_loop(x, w, bias=None):
    b_n, i_n = x.shape
    _, o_n = w.shape
    y = np.zeros((b_n, o_n), dtype=np.float64)
    for b in range(b_n):
        for o in range(o_n):
            acc = 0.0 if bias is None else float(bias[o])
            for i in range(i_n):
                acc += float(x[b, i]) * float(w[i, o])
            y[b, o] = acc
    return y
