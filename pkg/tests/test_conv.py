"""Convolution ops vs brute-force loop oracles and the adjoint identity."""

import numpy as np
import pytest

import loadgan.engine as E
from loadgan.engine import tensor as T

from util import conv1d_loop, conv_transpose1d_loop, linear_loop


def t(data, rg=False):
    return T.Tensor(np.asarray(data, dtype=np.float64), requires_grad=rg)


def test_conv1d_identity_kernel():
    y = E.conv1d(t([[[1.0, 2.0, 3.0]]]), t([[[1.0]]]))
    np.testing.assert_array_equal(y.data, [[[1.0, 2.0, 3.0]]])


def test_conv1d_k2_hand_sum():
    y = E.conv1d(t([[[1.0, 2.0, 3.0]]]), t([[[1.0, 1.0]]]))
    np.testing.assert_array_equal(y.data, [[[3.0, 5.0]]])


def test_conv1d_matches_loop_oracle():
    rng = np.random.default_rng(42)
    for _ in range(12):
        b = int(rng.integers(1, 4))
        c = int(rng.integers(1, 4))
        o = int(rng.integers(1, 5))
        k = int(rng.integers(1, 5))
        s = int(rng.integers(1, 4))
        p = int(rng.integers(0, k))
        length = int(rng.integers(k, k + 12))
        x = rng.normal(size=(b, c, length))
        w = rng.normal(size=(o, c, k))
        bias = rng.normal(size=o)
        got = E.conv1d(t(x), t(w), t(bias), s, p).data
        want = conv1d_loop(x, w, bias, s, p)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


def test_conv1d_shape_error_reports_both_shapes():
    with pytest.raises(E.ShapeError) as exc:
        E.conv1d(t(np.zeros((1, 2, 8))), t(np.zeros((3, 4, 2))))
    msg = str(exc.value)
    assert "(1, 2, 8)" in msg and "(3, 4, 2)" in msg


def test_conv_transpose1d_length_formula():
    x = t(np.zeros((1, 2, 6)))
    w = t(np.zeros((2, 3, 4)))
    y = E.conv_transpose1d(x, w, stride=2, pad=1)
    assert y.shape == (1, 3, 12)
    assert E.conv_transpose1d_out_len(6, 4, 2, 1) == 12


def test_conv_transpose1d_single_element():
    y = E.conv_transpose1d(t([[[1.0]]]), t([[[2.5]]]))
    np.testing.assert_array_equal(y.data, [[[2.5]]])


def test_conv_transpose1d_matches_loop_oracle():
    rng = np.random.default_rng(7)
    for _ in range(12):
        b = int(rng.integers(1, 3))
        ci = int(rng.integers(1, 4))
        co = int(rng.integers(1, 4))
        k = int(rng.integers(1, 5))
        s = int(rng.integers(1, 4))
        p = int(rng.integers(0, k))
        opad = int(rng.integers(0, s))
        length = int(rng.integers(2, 9))
        if (length - 1) * s - 2 * p + k + opad < 1:
            continue
        x = rng.normal(size=(b, ci, length))
        w = rng.normal(size=(ci, co, k))
        bias = rng.normal(size=co)
        got = E.conv_transpose1d(t(x), t(w), t(bias), s, p, opad).data
        want = conv_transpose1d_loop(x, w, bias, s, p, opad)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


def test_adjoint_identity_random_shapes():
    # <conv1d(a, w), b> == <a, conv_transpose1d(b, w)> on 50 shape/seed pairs
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 50:
        b_n = int(rng.integers(1, 4))
        c = int(rng.integers(1, 5))
        o = int(rng.integers(1, 5))
        k = int(rng.integers(1, 6))
        s = int(rng.integers(1, 4))
        p = int(rng.integers(0, k))
        length = int(rng.integers(k, k + 20))
        if length + 2 * p < k:
            continue
        t_out = E.conv1d_out_len(length, k, s, p)
        opad = (length + 2 * p - k) - (t_out - 1) * s
        a = rng.normal(size=(b_n, c, length))
        w = rng.normal(size=(o, c, k))
        cot = rng.normal(size=(b_n, o, t_out))
        lhs = float(np.sum(E.conv1d(t(a), t(w), stride=s, pad=p).data * cot))
        back = E.conv_transpose1d(t(cot), t(w), stride=s, pad=p, output_padding=opad).data
        rhs = float(np.sum(a * back))
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs - rhs) / scale < 1e-12
        checked += 1


def test_linear_matches_loop_oracle():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(5, 7))
    w = rng.normal(size=(7, 3))
    bias = rng.normal(size=3)
    got = E.linear(t(x), t(w), t(bias)).data
    np.testing.assert_allclose(got, linear_loop(x, w, bias), rtol=1e-12)


def test_conv1d_output_padding_keeps_gradient_shape():
    # stride 2 with odd leftover: gradient w.r.t. input must keep input length
    rng = np.random.default_rng(1)
    x = t(rng.normal(size=(2, 3, 9)), rg=True)
    w = t(rng.normal(size=(4, 3, 4)), rg=True)
    y = E.conv1d(x, w, stride=2, pad=0)
    gx, gw = E.grad(T.tsum(y), [x, w])
    assert gx.shape == x.shape
    assert gw.shape == w.shape
