"""Finite-difference checks for every autodiff op."""

import numpy as np
import pytest

from ocl import autodiff as ad


def numeric_grad(fn, args, wrt, h=1e-6):
    """Central-difference gradient of scalar fn(*args) w.r.t. args[wrt]."""
    base = [a.copy() for a in args]
    g = np.zeros_like(base[wrt])
    flat = g.reshape(-1)
    x = base[wrt].reshape(-1)
    for i in range(x.size):
        orig = x[i]
        x[i] = orig + h
        hi = fn(*base)
        x[i] = orig - h
        lo = fn(*base)
        x[i] = orig
        flat[i] = (hi - lo) / (2 * h)
    return g


def check_grads(build, arrays, h=1e-6, tol=1e-6):
    """build(*tensors) -> scalar Tensor; compares backward vs central diff."""
    tensors = [ad.Parameter(a.copy()) for a in arrays]
    out = build(*tensors)
    out.backward()

    def value(*arrs):
        consts = [ad.Tensor(a) for a in arrs]
        return build(*consts).item()

    for i, t in enumerate(tensors):
        num = numeric_grad(value, [a.copy() for a in arrays], i, h=h)
        ana = np.zeros_like(arrays[i]) if t.grad is None else t.grad
        np.testing.assert_allclose(ana, num, rtol=tol, atol=tol)


RNG = np.random.default_rng(1234)


def randn(*shape):
    return RNG.standard_normal(shape)


def scalarize(t):
    return ad.sum_(ad.mul(t, t))


class TestArithmetic:
    def test_add_broadcast(self):
        check_grads(lambda a, b: scalarize(a + b), [randn(3, 4), randn(4)])

    def test_add_scalar(self):
        check_grads(lambda a: scalarize(a + 2.5), [randn(3, 4)])

    def test_sub(self):
        check_grads(lambda a, b: scalarize(a - b), [randn(2, 3), randn(2, 3)])

    def test_rsub(self):
        check_grads(lambda a: scalarize(1.0 - a), [randn(5)])

    def test_mul_broadcast(self):
        check_grads(lambda a, b: scalarize(a * b), [randn(2, 1, 4), randn(3, 1)])

    def test_div_tensor(self):
        b = np.abs(randn(3, 4)) + 1.0
        check_grads(lambda a, b: scalarize(a / b), [randn(3, 4), b])

    def test_div_scalar_numerator(self):
        b = np.abs(randn(6)) + 1.0
        check_grads(lambda b: scalarize(2.0 / b), [b])

    def test_neg(self):
        check_grads(lambda a: scalarize(-a), [randn(4)])


class TestMatmul:
    def test_plain_2d(self):
        check_grads(lambda a, b: scalarize(a @ b), [randn(3, 4), randn(4, 5)])

    def test_batched_times_weight(self):
        check_grads(lambda a, b: scalarize(a @ b), [randn(2, 3, 4), randn(4, 5)])

    def test_batched_both(self):
        check_grads(lambda a, b: scalarize(a @ b),
                    [randn(2, 2, 3, 4), randn(2, 2, 4, 3)])


class TestShapes:
    def test_reshape(self):
        check_grads(lambda a: scalarize(ad.reshape(a, (6, 2))), [randn(3, 4)])

    def test_transpose(self):
        check_grads(lambda a: scalarize(ad.transpose(a, (2, 0, 1))),
                    [randn(2, 3, 4)])

    def test_transpose_negative_axes(self):
        check_grads(lambda a: scalarize(ad.transpose(a, (0, -1, -2))),
                    [randn(2, 3, 4)])

    def test_broadcast_to(self):
        check_grads(lambda a: scalarize(ad.broadcast_to(a, (5, 3))), [randn(3)])

    def test_getitem_slice(self):
        check_grads(lambda a: scalarize(a[:, 1:3]), [randn(4, 5)])

    def test_getitem_int(self):
        check_grads(lambda a: scalarize(a[:, 0]), [randn(4, 5)])

    def test_concat(self):
        check_grads(lambda a, b: scalarize(ad.concat([a, b], axis=1)),
                    [randn(2, 3, 4), randn(2, 2, 4)])

    def test_gather_rows(self):
        idx = np.array([[2, 0], [1, 3], [3, 1]])
        check_grads(lambda a: scalarize(ad.gather_rows(a, idx)),
                    [randn(3, 4, 5)])


class TestReductions:
    def test_sum_all(self):
        check_grads(lambda a: ad.sum_(ad.mul(a, a)), [randn(3, 4)])

    def test_sum_axis_keepdims(self):
        check_grads(lambda a: scalarize(ad.sum_(a, axis=1, keepdims=True)),
                    [randn(3, 4)])

    def test_sum_axis(self):
        check_grads(lambda a: scalarize(ad.sum_(a, axis=0)), [randn(3, 4)])

    def test_mean(self):
        check_grads(lambda a: scalarize(ad.mean(a, axis=-1, keepdims=True)),
                    [randn(2, 5)])


class TestNonlinear:
    def test_exp(self):
        check_grads(lambda a: ad.sum_(ad.exp(a)), [randn(3, 3) * 0.5])

    def test_log(self):
        a = np.abs(randn(3, 3)) + 0.5
        check_grads(lambda a: ad.sum_(ad.log(a)), [a])

    def test_sqrt(self):
        a = np.abs(randn(3, 3)) + 0.5
        check_grads(lambda a: ad.sum_(ad.sqrt(a)), [a])

    def test_clip_interior_gradient(self):
        a = np.linspace(-2.0, 2.0, 9)
        check_grads(lambda a: ad.sum_(ad.mul(ad.clip(a, -0.9, 0.9),
                                             ad.clip(a, -0.9, 0.9))), [a])

    def test_clip_zero_outside(self):
        t = ad.Parameter(np.array([-3.0, 0.0, 3.0]))
        ad.sum_(ad.clip(t, -1.0, 1.0)).backward()
        np.testing.assert_array_equal(t.grad, [0.0, 1.0, 0.0])

    def test_gelu(self):
        check_grads(lambda a: ad.sum_(ad.gelu(a)), [randn(4, 4)], h=1e-6,
                    tol=1e-5)


class TestComposites:
    def test_softmax_rows_sum_to_one(self):
        s = ad.softmax(ad.Tensor(randn(5, 7)), axis=-1)
        np.testing.assert_allclose(s.data.sum(axis=-1), 1.0, atol=1e-12)

    def test_softmax_grad(self):
        w = randn(3, 4)

        def build(a):
            return ad.sum_(ad.mul(ad.softmax(a, axis=-1), ad.Tensor(w)))

        check_grads(build, [randn(3, 4)])

    def test_layer_norm_grad(self):
        def build(x, g, b):
            return scalarize(ad.layer_norm(x, g, b, eps=1e-6))

        check_grads(build, [randn(2, 3, 8), randn(8), randn(8)], tol=1e-5)

    def test_layer_norm_statistics(self):
        x = ad.Tensor(randn(4, 16))
        out = ad.layer_norm(x, ad.Tensor(np.ones(16)), ad.Tensor(np.zeros(16)),
                            eps=1e-12)
        np.testing.assert_allclose(out.data.mean(axis=-1), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.data.std(axis=-1), 1.0, atol=1e-6)


class TestTape:
    def test_grad_accumulates_over_reuse(self):
        x = ad.Parameter(np.array([3.0]))
        y = ad.add(ad.mul(x, x), ad.mul(x, 2.0))  # x^2 + 2x
        ad.sum_(y).backward()
        np.testing.assert_allclose(x.grad, [8.0])

    def test_no_grad_without_leaves(self):
        x = ad.Tensor(np.ones(3))
        y = ad.mul(x, 2.0)
        assert not y.requires_grad and y._parents == ()

    def test_backward_requires_scalar(self):
        x = ad.Parameter(np.ones(3))
        with pytest.raises(ValueError):
            ad.mul(x, 2.0).backward()

    def test_dtype_preserved_float32(self):
        x = ad.Parameter(np.ones((2, 2), dtype=np.float32))
        out = ad.sum_(ad.gelu(ad.mul(ad.add(x, 0.5), 2.0)))
        assert out.dtype == np.float32
        out.backward()
        assert x.grad.dtype == np.float32

    def test_diamond_graph(self):
        # two paths from x to the output must both contribute
        x = ad.Parameter(np.array([2.0]))
        a = ad.mul(x, 3.0)
        b = ad.mul(x, x)
        ad.sum_(ad.add(a, b)).backward()
        np.testing.assert_allclose(x.grad, [7.0])
