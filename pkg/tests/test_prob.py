import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from divib.errors import LabelMismatch, SupportViolation, ZeroMarginal
from divib.prob import (
    Channel,
    Distribution,
    Joint,
    UnnormalizedWeight,
    compose_channels,
    entropy,
    joint_decompose,
    kl_divergence,
    mutual_information,
    pushforward,
    tensor_channels,
    tensor_dists,
)

from conftest import J22, P4, seeds, simplex


def naive_kl(p, q):
    return sum(a * math.log(a / b) for a, b in zip(p, q) if a > 0)


def test_kl_examples():
    assert kl_divergence(Distribution.from_array(P4), Distribution.uniform(list("abcd"))) == pytest.approx(0.1927448, abs=1e-7)
    assert kl_divergence(Distribution.from_array([1, 0]), Distribution.from_array([0.5, 0.5])) == pytest.approx(math.log(2), abs=1e-15)
    p = Distribution.from_array(P4)
    assert kl_divergence(p, p) == 0.0


def test_kl_support_violation():
    with pytest.raises(SupportViolation):
        kl_divergence(Distribution.from_array([0.5, 0.5]), Distribution.from_array([1.0, 0.0]))


def test_kl_accepts_weights():
    w = UnnormalizedWeight(("a", "b"), np.array([0.2, 0.2]))
    p = Distribution.from_array([0.5, 0.5])
    assert kl_divergence(p, w) == pytest.approx(math.log(2.5), abs=1e-14)


def test_label_mismatch():
    with pytest.raises(LabelMismatch):
        kl_divergence(Distribution.from_array([0.5, 0.5]), Distribution.uniform("abc"))


def test_distribution_validation():
    with pytest.raises(ValueError):
        Distribution.from_array([0.5, 0.6])
    with pytest.raises(ValueError):
        Distribution.from_array([1.5, -0.5])
    d = Distribution.from_array([0.5, 0.5])
    with pytest.raises(ValueError):
        d.p[0] = 1.0


def test_mutual_information_examples():
    assert mutual_information(Joint.from_array(J22)) == pytest.approx(0.0822829, abs=1e-7)
    assert mutual_information(Joint.from_array([[0.5, 0], [0, 0.5]])) == pytest.approx(math.log(2), abs=1e-15)
    prod = np.outer([0.3, 0.7], [0.2, 0.5, 0.3])
    assert mutual_information(Joint.from_array(prod)) == pytest.approx(0.0, abs=1e-15)


def test_pushforward_examples():
    k = Channel.from_array([[1, 0], [0, 1], [0, 1]])
    out = pushforward(k, Distribution.from_array([0.5, 0.25, 0.25]))
    np.testing.assert_allclose(out.p, [0.5, 0.5])
    p = Distribution.from_array(P4)
    np.testing.assert_array_equal(pushforward(Channel.identity(p.labels), p).p, p.p)
    c = Channel.constant(p.labels, Distribution.from_array([0.2, 0.3, 0.5], ("u", "v", "w")))
    np.testing.assert_allclose(pushforward(c, p).p, [0.2, 0.3, 0.5], atol=1e-15)


def test_pushforward_of_weight_stays_unnormalized():
    w = UnnormalizedWeight(("0", "1", "2"), np.array([0.1, 0.1, 0.1]))
    out = pushforward(Channel.from_array([[1, 0], [0, 1], [0, 1]]), w)
    assert isinstance(out, UnnormalizedWeight)
    np.testing.assert_allclose(out.w, [0.1, 0.2])


def test_compose_examples(rng):
    k = Channel.from_array(rng.dirichlet(np.ones(3), size=3))
    ident = Channel.identity(k.output_labels)
    np.testing.assert_array_equal(compose_channels(ident, k).rows, k.rows)
    f = Channel.deterministic(("0", "1", "2"), ("a", "b"), [1, 0, 1])
    g = Channel.deterministic(("a", "b"), ("u", "v"), [1, 1])
    fg = compose_channels(g, f)
    np.testing.assert_array_equal(fg.rows, Channel.deterministic(("0", "1", "2"), ("u", "v"), [1, 1, 1]).rows)
    k2 = Channel.from_array(rng.dirichlet(np.ones(3), size=3))
    prod = compose_channels(k2, k)
    np.testing.assert_allclose(prod.rows, k.rows @ k2.rows, atol=1e-15)
    np.testing.assert_allclose(prod.rows.sum(axis=1), 1.0, atol=1e-12)


def test_compose_label_mismatch():
    a = Channel.from_array([[1.0, 0.0]])
    with pytest.raises(LabelMismatch):
        compose_channels(Channel.from_array([[1.0], [1.0], [1.0]]), a)


def test_tensor_examples(rng):
    a = Channel.from_array(rng.dirichlet(np.ones(2), size=2))
    b = Channel.from_array(rng.dirichlet(np.ones(2), size=2))
    t = tensor_channels(a, b)
    assert t.shape == (4, 4)
    for x in range(2):
        for y in range(2):
            for u in range(2):
                for v in range(2):
                    assert t.rows[x * 2 + y, u * 2 + v] == pytest.approx(a.rows[x, u] * b.rows[y, v], abs=1e-16)
    assert t.input_labels[1] == f"{a.input_labels[0]}|{b.input_labels[1]}"
    i2 = Channel.identity(("a", "b"))
    np.testing.assert_array_equal(tensor_channels(i2, i2).rows, np.eye(4))
    s = Channel.deterministic(("a", "b"), ("a", "b"), [1, 0])
    st_ = tensor_channels(s, i2).rows
    assert set(st_.sum(axis=0)) == {1.0} and set(st_.ravel()) == {0.0, 1.0}
    d = tensor_dists(Distribution.from_array([0.5, 0.5]), Distribution.from_array([0.2, 0.8]))
    np.testing.assert_allclose(d.p, [0.1, 0.4, 0.1, 0.4])


def test_joint_decompose():
    px, py, ch = joint_decompose(Joint.from_array(J22))
    np.testing.assert_allclose(px.p, [0.5, 0.5])
    np.testing.assert_allclose(py.p, [0.5, 0.5])
    np.testing.assert_allclose(ch.rows, [[0.7, 0.3], [0.3, 0.7]])
    _, _, ch = joint_decompose(Joint.from_array(np.outer([0.3, 0.7], [0.25, 0.75])))
    np.testing.assert_allclose(ch.rows[0], ch.rows[1], atol=1e-15)
    with pytest.raises(ZeroMarginal) as e:
        joint_decompose(Joint.from_array([[0.5, 0.5], [0.0, 0.0]]))
    assert e.value.index == 1


def test_joint_flatten_roundtrip():
    j = Joint.from_array(J22)
    flat = j.flatten()
    assert flat.labels == ("x0|y0", "x0|y1", "x1|y0", "x1|y1")
    back = Joint.unflatten(flat, j.x_labels, j.y_labels)
    np.testing.assert_array_equal(back.p, j.p)


def test_json_roundtrip():
    d = Distribution.from_array(P4)
    assert np.array_equal(Distribution.from_dict(d.to_dict()).p, d.p)
    c = Channel.from_array([[0.2, 0.8], [1.0, 0.0]])
    assert np.array_equal(Channel.from_dict(c.to_dict()).rows, c.rows)
    j = Joint.from_array(J22)
    assert np.array_equal(Joint.from_dict(j.to_dict()).p, j.p)


@given(simplex(), seeds)
def test_kl_nonnegative_zero_iff_equal(p, seed):
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(p.size)) + 1e-3
    q /= q.sum()
    P, Q = Distribution.from_array(p), Distribution.from_array(q)
    d = kl_divergence(P, Q)
    assert d >= 0
    assert d == pytest.approx(naive_kl(p, q), abs=1e-12)
    if np.max(np.abs(p - q)) > 1e-6:
        assert d > 0
    assert kl_divergence(P, P) == 0.0


@given(simplex(), seeds)
def test_pushforward_preserves_mass(p, seed):
    rng = np.random.default_rng(seed)
    k = Channel.from_array(rng.dirichlet(np.ones(3), size=p.size))
    assert math.fsum(pushforward(k, Distribution.from_array(p)).p) == pytest.approx(1.0, abs=1e-12)
    w = UnnormalizedWeight(tuple(str(i) for i in range(p.size)), 0.3 * p)
    assert math.fsum(pushforward(k, w).w) == pytest.approx(0.3, abs=1e-12)


@given(seeds, st.integers(2, 5), st.integers(2, 5), st.integers(2, 5), st.integers(2, 5))
def test_compose_associative(seed, a, b, c, d):
    rng = np.random.default_rng(seed)
    k1 = Channel.from_array(rng.dirichlet(np.ones(b), size=a))
    k2 = Channel.from_array(rng.dirichlet(np.ones(c), size=b))
    k3 = Channel.from_array(rng.dirichlet(np.ones(d), size=c))
    left = compose_channels(k3, compose_channels(k2, k1))
    right = compose_channels(compose_channels(k3, k2), k1)
    np.testing.assert_allclose(left.rows, right.rows, atol=1e-12)


@given(seeds, st.integers(2, 5), st.integers(2, 5))
def test_mi_is_kl_from_product(seed, nx, ny):
    rng = np.random.default_rng(seed)
    j = Joint.from_array(rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny))
    prod = np.outer(j.marginal_x().p, j.marginal_y().p).ravel()
    assert mutual_information(j) == pytest.approx(naive_kl(j.p.ravel(), prod), abs=1e-12)
    assert entropy(j.flatten()) >= mutual_information(j) - 1e-12
