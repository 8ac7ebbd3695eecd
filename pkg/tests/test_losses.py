import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttakit.engine import Tensor, gradients
from ttakit.errors import DimensionError
from ttakit.losses import consistency_loss, entropy, kl_divergence, total_loss

from conftest import fd_gradient, grad_close

mpmath.mp.dps = 50


def mp_kl(p, q):
    return float(sum(mpmath.mpf(pi) * mpmath.log(mpmath.mpf(pi) / mpmath.mpf(qi))
                     for pi, qi in zip(p, q) if pi > 0))


def mp_consistency(p_x, p1, p2):
    pbar = [(a + b + c) / mpmath.mpf(3) for a, b, c in zip(p_x, p1, p2)]
    return float((mp_kl(p_x, pbar) + mp_kl(p1, pbar) + mp_kl(p2, pbar)) / mpmath.mpf(3))


def mp_entropy(p):
    return float(-sum(mpmath.mpf(pi) * mpmath.log(mpmath.mpf(pi)) for pi in p if pi > 0))


# --- scalar oracle values ------------------------------------------------------

def test_kl_of_identical_distributions_is_zero():
    p = [0.2, 0.3, 0.5]
    assert kl_divergence(p, p).item() == pytest.approx(0.0, abs=1e-12)


def test_kl_against_high_precision_oracle():
    value = kl_divergence([0.5, 0.5], [0.25, 0.75]).item()
    assert value == pytest.approx(mp_kl([0.5, 0.5], [0.25, 0.75]), abs=1e-9)
    assert value == pytest.approx(0.14384, abs=5e-6)


def test_kl_asymmetry():
    ab = kl_divergence([0.5, 0.5], [0.25, 0.75]).item()
    ba = kl_divergence([0.25, 0.75], [0.5, 0.5]).item()
    assert ba == pytest.approx(mp_kl([0.25, 0.75], [0.5, 0.5]), abs=1e-9)
    assert ba == pytest.approx(0.13081, abs=5e-6)
    assert ab != pytest.approx(ba, abs=1e-3)


def test_kl_length_mismatch():
    with pytest.raises(DimensionError):
        kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])


def test_consistency_of_identical_posteriors_is_zero():
    p = [0.1, 0.6, 0.3]
    assert consistency_loss(p, p, p).item() == pytest.approx(0.0, abs=1e-12)


def test_consistency_three_distinct_one_hots():
    e = np.eye(3)
    assert consistency_loss(e[0], e[1], e[2]).item() == pytest.approx(np.log(3), abs=1e-9)


def test_consistency_against_high_precision_oracle():
    value = consistency_loss([1.0, 0.0], [0.5, 0.5], [0.5, 0.5]).item()
    oracle = mp_consistency([1, 0], [mpmath.mpf(1) / 2] * 2, [mpmath.mpf(1) / 2] * 2)
    assert value == pytest.approx(oracle, abs=1e-9)
    # analytic form: (ln(3/2) + 2 * 0.5 * ln(9/8)) / 3
    analytic = (np.log(1.5) + np.log(9 / 8)) / 3
    assert value == pytest.approx(analytic, abs=1e-12)


def test_entropy_corner_values():
    assert entropy([1.0, 0.0, 0.0]).item() == pytest.approx(0.0, abs=1e-9)
    assert entropy([0.25] * 4).item() == pytest.approx(np.log(4), abs=1e-12)
    assert entropy([0.5, 0.5]).item() == pytest.approx(np.log(2), abs=1e-12)


def test_total_loss_composition():
    one_hot = [1.0, 0.0]
    uniform = [0.5, 0.5]
    assert total_loss(one_hot, one_hot, one_hot).item() == pytest.approx(0.0, abs=1e-9)
    assert total_loss(uniform, uniform, uniform).item() == pytest.approx(np.log(2), abs=1e-9)
    expected = mp_consistency([1, 0], [0.5, 0.5], [0.5, 0.5]) + 0.0
    assert total_loss(one_hot, uniform, uniform).item() == pytest.approx(expected, abs=1e-9)


# --- invariants ------------------------------------------------------------------

posterior = st.integers(min_value=0, max_value=2 ** 31 - 1).map(
    lambda s: np.random.default_rng(s).dirichlet(np.full(4, 0.7)))


@settings(max_examples=60, deadline=None)
@given(posterior, posterior, posterior)
def test_consistency_bounded_by_ln3(p, p1, p2):
    value = consistency_loss(p, p1, p2).item()
    assert -1e-12 <= value <= np.log(3) + 1e-12


@settings(max_examples=30, deadline=None)
@given(posterior, posterior, posterior)
def test_consistency_permutation_symmetric(p, p1, p2):
    base = consistency_loss(p, p1, p2).item()
    assert consistency_loss(p1, p2, p).item() == pytest.approx(base, abs=1e-12)
    assert consistency_loss(p2, p, p1).item() == pytest.approx(base, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(posterior)
def test_entropy_within_bounds(p):
    value = entropy(p).item()
    assert -1e-12 <= value <= np.log(len(p)) + 1e-12


def test_batch_version_equals_mean_of_per_sample():
    rng = np.random.default_rng(5)
    p = rng.dirichlet(np.ones(6), size=10)
    q = rng.dirichlet(np.ones(6), size=10)
    r = rng.dirichlet(np.ones(6), size=10)
    batch = consistency_loss(p, q, r).item()
    per = np.mean([consistency_loss(p[i], q[i], r[i]).item() for i in range(10)])
    assert batch == pytest.approx(per, abs=1e-9)
    assert entropy(p).item() == pytest.approx(
        np.mean([entropy(p[i]).item() for i in range(10)]), abs=1e-9)


def test_saturated_posteriors_stay_finite():
    one_hot = np.eye(5)[0]
    assert np.isfinite(entropy(one_hot).item())
    assert np.isfinite(kl_divergence(one_hot, np.eye(5)[1]).item())
    assert np.isfinite(consistency_loss(one_hot, np.eye(5)[1], np.eye(5)[2]).item())


# --- differentiability -------------------------------------------------------------

def test_consistency_gradient_matches_finite_differences():
    rng = np.random.default_rng(6)
    arrays = [rng.dirichlet(np.ones(5)) for _ in range(3)]

    def scalar():
        return consistency_loss(*[Tensor(a) for a in arrays]).item()

    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    loss = consistency_loss(*tensors)
    grads = gradients(loss, {str(i): t for i, t in enumerate(tensors)})
    for i in range(3):
        numeric = fd_gradient(scalar, arrays[i])
        assert grad_close(grads[str(i)], numeric)


def test_entropy_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    p = rng.dirichlet(np.ones(6))

    def scalar():
        return entropy(Tensor(p)).item()

    t = Tensor(p.copy(), requires_grad=True)
    grads = gradients(entropy(t), {"p": t})
    numeric = fd_gradient(scalar, p)
    assert grad_close(grads["p"], numeric)


def test_gradients_flow_through_all_three_branches():
    rng = np.random.default_rng(8)
    tensors = [Tensor(rng.dirichlet(np.ones(4)), requires_grad=True) for _ in range(3)]
    loss = consistency_loss(*tensors)
    grads = gradients(loss, {str(i): t for i, t in enumerate(tensors)})
    for i in range(3):
        assert np.any(grads[str(i)] != 0), f"branch {i} received no gradient"
