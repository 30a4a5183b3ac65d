"""Encoder and field network: structure, equivariance, exact gradients."""

import numpy as np
import pytest

from floodflow.neural import (ModelParams, col2im, encode_rainfall,
                              encoder_backward, encoder_forward,
                              field_backward, field_forward, flatten_params,
                              im2col, init_params, named_arrays,
                              params_from_arrays, unflatten_params)
from floodflow.rainfall import gen_uniform

REL_TOL = 1e-4
ABS_FLOOR = 1e-6


def finite_diff(loss, vec, index, eps=1e-5):
    vp, vm = vec.copy(), vec.copy()
    vp[index] += eps
    vm[index] -= eps
    return (loss(vp) - loss(vm)) / (2 * eps)


def assert_grad_close(analytic, numeric):
    assert abs(analytic - numeric) <= max(ABS_FLOOR, REL_TOL * max(abs(analytic), abs(numeric)))


class TestParams:
    def test_init_deterministic(self):
        a, b = init_params(seed=5), init_params(seed=5)
        assert all(np.array_equal(x, y) for (_, x), (_, y) in zip(named_arrays(a), named_arrays(b)))
        c = init_params(seed=6)
        assert not np.array_equal(a.enc_val, c.enc_val)

    def test_shapes(self):
        params = init_params(embed_dim=8, hidden=(32, 32))
        assert params.enc_val.shape == (8,)
        assert params.enc_pos.shape == (24, 8)
        assert params.field_weights[0].shape == (9 * 12, 32)
        assert params.field_weights[-1].shape == (32, 1)
        assert params.embed_dim == 8 and params.channels == 12 and params.hidden == (32, 32)

    def test_init_range(self):
        vec = flatten_params(init_params(seed=0))
        assert np.abs(vec).max() <= 0.1

    def test_flatten_roundtrip(self):
        params = init_params(embed_dim=4, hidden=(6, 5), seed=2)
        back = unflatten_params(params, flatten_params(params))
        for (na, xa), (nb, xb) in zip(named_arrays(params), named_arrays(back)):
            assert na == nb
            np.testing.assert_array_equal(xa, xb)

    def test_named_arrays_roundtrip(self):
        params = init_params(embed_dim=3, hidden=(), seed=7)
        back = params_from_arrays(dict(named_arrays(params)))
        assert all(np.array_equal(x, y) for (_, x), (_, y) in zip(named_arrays(params), named_arrays(back)))


class TestEncoder:
    def test_constant_series_shuffle_invariant(self):
        params = init_params(embed_dim=4, seed=1)
        series = gen_uniform(240.0)
        emb = encode_rainfall(params, series, rain_scale=10.0)
        shuffled = np.random.default_rng(0).permutation(series.hourly)
        emb2 = encode_rainfall(params, shuffled, rain_scale=10.0)
        np.testing.assert_array_equal(emb, emb2)

    def test_nonconstant_shuffle_changes_embedding(self):
        # positional embeddings break permutation symmetry
        params = init_params(embed_dim=4, seed=1)
        rng = np.random.default_rng(3)
        hourly = rng.uniform(0, 20, 24)
        emb = encode_rainfall(params, hourly)
        emb2 = encode_rainfall(params, np.roll(hourly, 5))
        assert not np.allclose(emb, emb2)

    def test_rain_scale_required_positive(self):
        with pytest.raises(ValueError, match="rain_scale"):
            encode_rainfall(init_params(seed=0), np.ones(24), rain_scale=0.0)

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError, match="24"):
            encoder_forward(init_params(seed=0), np.ones(23))

    def test_gradients_match_finite_differences(self):
        params = init_params(embed_dim=4, hidden=(6,), seed=11)
        rng = np.random.default_rng(4)
        scaled = rng.random(24)
        proj = rng.standard_normal(4)

        emb, cache = encoder_forward(params, scaled)
        grads = encoder_backward(params, cache, proj)

        vec = flatten_params(params)

        def loss(v):
            e, _ = encoder_forward(unflatten_params(params, v), scaled)
            return float(proj @ e)

        offset = 0
        enc_grad_flat = {}
        for name, arr in named_arrays(params):
            if name.startswith("enc_"):
                enc_grad_flat[name] = (offset, grads[name].ravel())
            offset += arr.size

        for name, (off, gflat) in enc_grad_flat.items():
            for k in rng.choice(gflat.size, size=min(8, gflat.size), replace=False):
                assert_grad_close(gflat[k], finite_diff(loss, vec, off + int(k)))


class TestFieldNet:
    def test_zero_params_zero_velocity(self):
        params = init_params(embed_dim=2, hidden=(4,), seed=0)
        zeroed = unflatten_params(params, np.zeros(flatten_params(params).size))
        channels = np.random.default_rng(1).standard_normal((6, 5, 5))
        velocity, _ = field_forward(zeroed, channels)
        np.testing.assert_array_equal(velocity, np.zeros((5, 5)))

    def test_translation_equivariance_in_interior(self):
        params = init_params(embed_dim=2, hidden=(5,), seed=3)
        rng = np.random.default_rng(2)
        channels = rng.standard_normal((6, 8, 8))
        shifted = np.roll(channels, (1, 1), axis=(1, 2))
        v, _ = field_forward(params, channels)
        vs, _ = field_forward(params, shifted)
        # away from edges the shifted input yields the shifted output
        np.testing.assert_allclose(vs[2:-1, 2:-1], v[1:-2, 1:-2], rtol=0, atol=1e-14)

    def test_batch_matches_single(self):
        params = init_params(embed_dim=2, hidden=(5,), seed=3)
        rng = np.random.default_rng(8)
        batch = rng.standard_normal((3, 6, 4, 4))
        vb, _ = field_forward(params, batch)
        for i in range(3):
            vi, _ = field_forward(params, batch[i])
            np.testing.assert_array_equal(vb[i], vi)

    def test_wrong_channel_count(self):
        params = init_params(embed_dim=2, seed=0)
        with pytest.raises(ValueError, match="channels"):
            field_forward(params, np.zeros((5, 4, 4)))

    def test_im2col_col2im_adjoint(self):
        # <im2col(x), y> == <x, col2im(y)> for random x, y
        rng = np.random.default_rng(6)
        x = rng.standard_normal((2, 3, 4, 5))
        y = rng.standard_normal((2 * 4 * 5, 9 * 3))
        lhs = float((im2col(x) * y).sum())
        rhs = float((x * col2im(y, x.shape)).sum())
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_linear_model_gradient_structure(self):
        # with no hidden layers the map is features @ W + b, so the exact
        # gradients are X^T @ upstream and column sums of upstream
        params = init_params(embed_dim=2, hidden=(), seed=4)
        rng = np.random.default_rng(5)
        channels = rng.standard_normal((6, 4, 4))
        velocity, cache = field_forward(params, channels)
        upstream = rng.standard_normal((4, 4))
        grads, d_channels = field_backward(params, cache, upstream)
        X = im2col(channels[None])
        np.testing.assert_allclose(grads["field_w0"], X.T @ upstream.reshape(-1, 1), rtol=1e-12)
        np.testing.assert_allclose(grads["field_b0"], [upstream.sum()], rtol=1e-12)
        np.testing.assert_allclose(
            d_channels, col2im(upstream.reshape(-1, 1) @ params.field_weights[0].T, (1, 6, 4, 4))[0],
            rtol=1e-12)

    def test_backward_additive_in_upstream(self):
        params = init_params(embed_dim=2, hidden=(5, 4), seed=9)
        rng = np.random.default_rng(10)
        channels = rng.standard_normal((6, 5, 5))
        _, cache = field_forward(params, channels)
        g1, g2 = rng.standard_normal((5, 5)), rng.standard_normal((5, 5))
        grads1, din1 = field_backward(params, cache, g1)
        grads2, din2 = field_backward(params, cache, g2)
        grads12, din12 = field_backward(params, cache, g1 + g2)
        for name in grads1:
            np.testing.assert_allclose(grads12[name], grads1[name] + grads2[name],
                                       rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(din12, din1 + din2, rtol=1e-10, atol=1e-12)

    def test_gradients_match_finite_differences(self):
        params = init_params(embed_dim=2, hidden=(5,), seed=12)
        rng = np.random.default_rng(13)
        channels = rng.standard_normal((6, 4, 4))
        proj = rng.standard_normal((4, 4))

        velocity, cache = field_forward(params, channels)
        grads, _ = field_backward(params, cache, proj)

        vec = flatten_params(params)

        def loss(v):
            out, _ = field_forward(unflatten_params(params, v), channels)
            return float((proj * out).sum())

        offset = 0
        for name, arr in named_arrays(params):
            if name.startswith("field_"):
                gflat = grads[name].ravel()
                for k in rng.choice(arr.size, size=min(10, arr.size), replace=False):
                    assert_grad_close(gflat[k], finite_diff(loss, vec, offset + int(k)))
            offset += arr.size
