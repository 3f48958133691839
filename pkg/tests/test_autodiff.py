import numpy as np
import pytest

from sgncl import autodiff as ad


def rng_for(seed):
    return np.random.default_rng(seed)


def weighted_scalar(t, seed=0):
    """Collapse any tensor to a scalar with fixed random weights."""
    w = ad.tensor(rng_for(seed).normal(size=t.shape))
    return ad.tsum(ad.mul(t, w))


class TestForwardBasics:
    def test_relu_definition(self):
        out = ad.relu(ad.tensor([-1.0, 2.0]))
        assert out.data.tolist() == [[0.0, 2.0]]

    def test_l2_normalize_345(self):
        out = ad.l2_normalize_rows(ad.tensor([[3.0, 4.0]]))
        assert out.data == pytest.approx(np.array([[0.6, 0.8]]), abs=1e-9)

    def test_cosine_orthogonal(self):
        c = ad.cosine_similarity_matrix(ad.tensor([[1.0, 0.0]]), ad.tensor([[0.0, 1.0]]))
        assert c.data[0, 0] == 0.0

    def test_cosine_zero_row_defined(self):
        c = ad.cosine_similarity_matrix(ad.tensor([[0.0, 0.0]]), ad.tensor([[1.0, 0.0]]))
        assert c.data[0, 0] == 0.0

    def test_matmul_shape_error_names_both(self):
        with pytest.raises(ValueError, match=r"\(2, 3\) @ \(2, 3\)"):
            ad.matmul(ad.tensor(np.ones((2, 3))), ad.tensor(np.ones((2, 3))))

    def test_add_rejects_general_broadcast(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            ad.add(ad.tensor(np.ones((2, 3))), ad.tensor(np.ones((2, 1))))

    def test_nonfinite_trips(self):
        with pytest.raises(FloatingPointError, match="exp"):
            ad.exp(ad.tensor([[1000.0]]))
        with pytest.raises(FloatingPointError, match="div"):
            ad.div(ad.tensor([[1.0]]), ad.tensor([[0.0]]))
        with pytest.raises(FloatingPointError, match="log"):
            ad.log(ad.tensor([[0.0]]))

    def test_empty_reductions_are_zero(self):
        empty = ad.tensor(np.zeros((0, 4)))
        assert ad.tsum(empty, axis=0).data.tolist() == [[0, 0, 0, 0]]
        assert ad.tmean(empty, axis=0).data.tolist() == [[0, 0, 0, 0]]
        assert ad.tmax(empty, axis=0).data.tolist() == [[0, 0, 0, 0]]


class TestBackward:
    def test_sum_of_linear_map(self):
        w = ad.parameter([[1.0, 2.0], [3.0, 4.0]])
        x = ad.tensor([[5.0], [7.0]])
        loss = ad.tsum(ad.matmul(w, x))
        ad.backward(loss)
        # d/dW sum(Wx) = 1 x^T broadcast over rows, by hand
        assert w.grad.tolist() == [[5.0, 7.0], [5.0, 7.0]]

    def test_unused_parameter_has_no_gradient(self):
        p = ad.parameter([[1.0]])
        q = ad.parameter([[2.0]])
        loss = ad.tsum(ad.mul(q, q))
        ad.backward(loss)
        assert p.grad is None          # never reached: gradient is zero
        assert q.grad.tolist() == [[4.0]]

    def test_relu_blocks_gradient_at_negative_input(self):
        p = ad.parameter([[-3.0, 3.0]])
        loss = ad.tsum(ad.relu(p))
        ad.backward(loss)
        assert p.grad.tolist() == [[0.0, 1.0]]

    def test_repeated_backward_rejected(self):
        p = ad.parameter([[1.0]])
        loss = ad.tsum(p)
        ad.backward(loss)
        with pytest.raises(RuntimeError, match="already ran"):
            ad.backward(loss)

    def test_non_scalar_loss_rejected(self):
        p = ad.parameter([[1.0, 2.0]])
        with pytest.raises(ValueError, match="scalar"):
            ad.backward(ad.relu(p))

    def test_grad_accumulates_across_losses(self):
        p = ad.parameter([[2.0]])
        ad.backward(ad.tsum(p))
        ad.backward(ad.tsum(ad.smul(p, 3.0)))
        assert p.grad.tolist() == [[4.0]]
        ad.zero_grad([p])
        assert p.grad is None

    def test_shared_node_gradient_counted_once_per_path(self):
        p = ad.parameter([[3.0]])
        doubled = ad.smul(p, 2.0)
        loss = ad.tsum(ad.add(doubled, doubled))
        ad.backward(loss)
        assert p.grad.tolist() == [[4.0]]

    def test_concat_rows_split_is_exact(self):
        a = ad.parameter(rng_for(1).normal(size=(3, 4)))
        b = ad.parameter(rng_for(2).normal(size=(2, 4)))
        joined = ad.concat_rows([a, b])
        loss = weighted_scalar(joined, seed=3)
        ad.backward(loss)
        g_norm_sq = np.linalg.norm(a.grad) ** 2 + np.linalg.norm(b.grad) ** 2
        w = rng_for(3).normal(size=(5, 4))
        assert g_norm_sq == pytest.approx(np.linalg.norm(w) ** 2, rel=1e-12)

    def test_max_ties_route_to_first_index(self):
        p = ad.parameter([[1.0, 1.0]])
        ad.backward(ad.tsum(ad.tmax(p, axis=1)))
        assert p.grad.tolist() == [[1.0, 0.0]]


def make_case(name):
    r = rng_for(abs(hash(name)) % 2**31)

    def pos(shape):
        return r.uniform(0.5, 2.0, size=shape)

    if name == "matmul":
        a, b = ad.parameter(r.normal(size=(3, 4))), ad.parameter(r.normal(size=(4, 2)))
        return [a, b], lambda: weighted_scalar(ad.matmul(a, b))
    if name == "add_bias":
        a, b = ad.parameter(r.normal(size=(3, 4))), ad.parameter(r.normal(size=(1, 4)))
        return [a, b], lambda: weighted_scalar(ad.add(a, b))
    if name == "sub":
        a, b = ad.parameter(r.normal(size=(2, 3))), ad.parameter(r.normal(size=(2, 3)))
        return [a, b], lambda: weighted_scalar(ad.sub(a, b))
    if name == "mul":
        a, b = ad.parameter(r.normal(size=(2, 3))), ad.parameter(r.normal(size=(2, 3)))
        return [a, b], lambda: weighted_scalar(ad.mul(a, b))
    if name == "div":
        a, b = ad.parameter(r.normal(size=(2, 3))), ad.parameter(pos((2, 3)))
        return [a, b], lambda: weighted_scalar(ad.div(a, b))
    if name == "smul":
        a = ad.parameter(r.normal(size=(2, 3)))
        return [a], lambda: weighted_scalar(ad.smul(a, -1.75))
    if name == "relu":
        a = ad.parameter(r.normal(size=(3, 3)) + np.sign(r.normal(size=(3, 3))) * 0.5)
        return [a], lambda: weighted_scalar(ad.relu(a))
    if name == "exp":
        a = ad.parameter(r.normal(size=(2, 2)))
        return [a], lambda: weighted_scalar(ad.exp(a))
    if name == "log":
        a = ad.parameter(pos((2, 2)))
        return [a], lambda: weighted_scalar(ad.log(a))
    if name == "transpose":
        a = ad.parameter(r.normal(size=(2, 4)))
        return [a], lambda: weighted_scalar(ad.transpose(a))
    if name == "concat_rows":
        a, b = ad.parameter(r.normal(size=(2, 3))), ad.parameter(r.normal(size=(3, 3)))
        return [a, b], lambda: weighted_scalar(ad.concat_rows([a, b]))
    if name == "concat_cols":
        a, b = ad.parameter(r.normal(size=(2, 3))), ad.parameter(r.normal(size=(2, 2)))
        return [a, b], lambda: weighted_scalar(ad.concat_cols([a, b]))
    if name == "gather_rows":
        a = ad.parameter(r.normal(size=(4, 3)))
        idx = np.array([3, 0, 0, 2, 1])
        return [a], lambda: weighted_scalar(ad.gather_rows(a, idx))
    if name == "scatter_rows":
        a = ad.parameter(r.normal(size=(5, 3)))
        idx = np.array([1, 0, 1, 3, 3])
        return [a], lambda: weighted_scalar(ad.scatter_rows(a, idx, 4))
    if name == "tsum_all":
        a = ad.parameter(r.normal(size=(3, 2)))
        return [a], lambda: ad.tsum(a)
    if name == "tsum_axis0":
        a = ad.parameter(r.normal(size=(3, 2)))
        return [a], lambda: weighted_scalar(ad.tsum(a, axis=0))
    if name == "tsum_axis1":
        a = ad.parameter(r.normal(size=(3, 2)))
        return [a], lambda: weighted_scalar(ad.tsum(a, axis=1))
    if name == "tmean_axis0":
        a = ad.parameter(r.normal(size=(4, 2)))
        return [a], lambda: weighted_scalar(ad.tmean(a, axis=0))
    if name == "tmax_axis0":
        a = ad.parameter(r.normal(size=(4, 3)))
        return [a], lambda: weighted_scalar(ad.tmax(a, axis=0))
    if name == "tmax_axis1":
        a = ad.parameter(r.normal(size=(4, 3)))
        return [a], lambda: weighted_scalar(ad.tmax(a, axis=1))
    if name == "l2_normalize_rows":
        a = ad.parameter(r.normal(size=(3, 4)))
        return [a], lambda: weighted_scalar(ad.l2_normalize_rows(a))
    if name == "cosine":
        a = ad.parameter(r.normal(size=(3, 4)))
        b = ad.parameter(r.normal(size=(2, 4)))
        return [a, b], lambda: weighted_scalar(ad.cosine_similarity_matrix(a, b))
    raise AssertionError(name)


ALL_OPS = [
    "matmul", "add_bias", "sub", "mul", "div", "smul", "relu", "exp", "log",
    "transpose", "concat_rows", "concat_cols", "gather_rows", "scatter_rows",
    "tsum_all", "tsum_axis0", "tsum_axis1", "tmean_axis0",
    "tmax_axis0", "tmax_axis1", "l2_normalize_rows", "cosine",
]


class TestGradCheck:
    def test_quadratic_closed_form(self):
        theta = ad.parameter([[1.0, 2.0]])
        fn = lambda: ad.tsum(ad.mul(theta, theta))
        err = ad.grad_check(fn, [theta], epsilon=1e-5)
        assert err < 1e-8
        ad.zero_grad([theta])
        ad.backward(fn())
        assert theta.grad.tolist() == [[2.0, 4.0]]

    @pytest.mark.parametrize("name", ALL_OPS)
    def test_every_op_matches_central_differences(self, name):
        params, fn = make_case(name)
        assert ad.grad_check(fn, params, epsilon=1e-5) <= 1e-6

    def test_epsilon_validated(self):
        p = ad.parameter([[1.0]])
        with pytest.raises(ValueError, match="epsilon"):
            ad.grad_check(lambda: ad.tsum(p), [p], epsilon=0.0)


class TestIndexValidation:
    def test_gather_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            ad.gather_rows(ad.tensor(np.ones((2, 2))), [0, 2])

    def test_scatter_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            ad.scatter_rows(ad.tensor(np.ones((2, 2))), [0, 5], 3)

    def test_scatter_needs_one_target_per_row(self):
        with pytest.raises(ValueError, match="one target per row"):
            ad.scatter_rows(ad.tensor(np.ones((2, 2))), [0], 3)
