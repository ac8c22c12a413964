import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latbudget.importance import ImportanceTable, connection_weights, importance_plot_data, seed_sweep
from latbudget.nn import Network, TrainConfig, forward, init_network


def brute(net):
    I, L = net.w1.shape
    J = net.w2.shape[1]
    out = np.zeros((J, I))
    for j in range(J):
        for i in range(I):
            for l in range(L):
                out[j, i] += net.w1[i, l] * net.w2[l, j]
    return out


class TestConnectionWeights:
    def test_example_product(self):
        net = Network(np.array([[1.0, 2.0], [3.0, 4.0]]), np.zeros(2),
                      np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros(2))
        np.testing.assert_array_equal(connection_weights(net).values, [[1, 3], [2, 4]])

    def test_labels(self):
        net = init_network(2, 3, 2, input_labels=("P-1", "P-2"), output_labels=("a", "b"))
        t = connection_weights(net)
        assert t.row_labels == ("a", "b") and t.col_labels == ("P-1", "P-2")

    def test_plot_data(self):
        t = ImportanceTable(np.array([[0.5, -0.2]]), ("a",), ("x", "y"))
        assert importance_plot_data(t, "a") == [("x", 0.5), ("y", -0.2)]
        with pytest.raises(ValueError, match="unknown response level"):
            importance_plot_data(t, "zz")

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            ImportanceTable(np.array([[np.nan]]), ("a",), ("x",))

    def test_seed_sweep_shapes(self):
        rng = np.random.default_rng(0)
        X, Y = np.eye(3)[rng.integers(0, 3, 40)], np.eye(2)[rng.integers(0, 2, 40)]
        tables, mean, std = seed_sweep(X, Y, 4, "relu", "softmax",
                                       TrainConfig(epochs=2, loss="cross-entropy"), [1, 2, 3])
        assert len(tables) == 3 and mean.shape == (2, 3) and std.shape == (2, 3)
        assert np.all(std > 0)


nets = st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 5), st.integers(0, 10_000))


@settings(max_examples=60, deadline=None)
@given(nets)
def test_brute_force_oracle(shape):
    I, L, J, seed = shape
    rng = np.random.default_rng(seed)
    net = Network(rng.normal(size=(I, L)), rng.normal(size=L), rng.normal(size=(L, J)),
                  rng.normal(size=J), "relu", "softmax")
    np.testing.assert_allclose(connection_weights(net).values, brute(net), atol=1e-12, rtol=0)


@settings(max_examples=60, deadline=None)
@given(nets)
def test_linear_net_unit_response(shape):
    I, L, J, seed = shape
    rng = np.random.default_rng(seed)
    net = Network(rng.normal(size=(I, L)), np.zeros(L), rng.normal(size=(L, J)), np.zeros(J))
    diff = forward(net, np.eye(I)) - forward(net, np.zeros((1, I)))
    np.testing.assert_allclose(diff.T, connection_weights(net).values, atol=1e-12, rtol=0)


@settings(max_examples=40, deadline=None)
@given(nets, st.floats(0.1, 10))
def test_scaling_and_hidden_permutation(shape, c):
    I, L, J, seed = shape
    rng = np.random.default_rng(seed)
    w1, w2 = rng.normal(size=(I, L)), rng.normal(size=(L, J))
    base = connection_weights(Network(w1, np.zeros(L), w2, np.zeros(J))).values
    scaled = connection_weights(Network(w1 * c, np.zeros(L), w2 / c, np.zeros(J))).values
    np.testing.assert_allclose(scaled, base, atol=1e-10)
    perm = rng.permutation(L)
    permuted = connection_weights(Network(w1[:, perm], np.zeros(L), w2[perm], np.zeros(J))).values
    np.testing.assert_allclose(permuted, base, atol=1e-12)
