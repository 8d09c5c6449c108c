import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ftuap.attack import (
    AttackConfig,
    AttackDiverged,
    DegenerateGradient,
    Perturbation,
    apply,
    deepfool_step,
    project_dct,
    project_spatial,
    random_sign_perturbation,
    train_universal,
    zero_perturbation,
)
from ftuap.bands import parse_band_spec
from ftuap.blockdct import DctStack, forward_dct, inverse_dct
from ftuap.jnd import jnd_matrix
from ftuap.tinynet import TrainConfig, make_dataset, train


class Linear2D:
    """Two-class affine model: logits (0, w.x + b)."""

    def __init__(self, w, b):
        self.w, self.b = np.asarray(w, float), float(b)

    def jacobian(self, x):
        return np.array([0.0, self.w @ x + self.b]), np.stack([np.zeros(2), self.w])


class Flat:
    """Every class has the same gradient."""

    def jacobian(self, x):
        return np.array([1.0, 0.0, 0.0]), np.ones((3,) + x.shape)


class NanModel:
    input_shape = (8, 8, 1)
    num_classes = 2

    def logits(self, x, batch_size=None):
        x = np.asarray(x)
        return np.zeros(x.shape[:-3] + (2,)) + np.array([1.0, 0.0])

    def jacobian(self, x):
        return self.logits(x), np.full((2,) + x.shape, np.nan)


@pytest.mark.parametrize("w,b,x", [([3.0, 4.0], -5.0, [0.0, 0.0]), ([1.0, -2.0], 0.5, [3.0, 1.0])])
def test_deepfool_linear_oracle(w, b, x):
    m = Linear2D(w, b)
    x = np.array(x)
    step = deepfool_step(m, x, overshoot=0.02)
    w = np.array(w)
    margin = w @ x + b
    exact = -margin / (w @ w) * w
    np.testing.assert_allclose(step.delta, 1.02 * exact, rtol=1e-12)
    assert np.linalg.norm(step.delta) == pytest.approx(1.02 * abs(margin) / np.linalg.norm(w))
    assert step.flipped and step.iterations == 1


def test_deepfool_degenerate_gradient():
    with pytest.raises(DegenerateGradient):
        deepfool_step(Flat(), np.zeros((8, 8, 1)))


def test_project_spatial_examples():
    np.testing.assert_array_equal(project_spatial(np.array([12.0, -15.0, 3.0]), 10), [10.0, -10.0, 3.0])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(-1e3, 1e3)), st.floats(0, 50))
def test_project_spatial_idempotent(d, eps):
    once = project_spatial(d, eps)
    assert np.array_equal(project_spatial(once, eps), once)
    assert np.abs(once).max() <= eps


def test_project_dct_examples():
    thr = jnd_matrix(2.0)
    blocks = np.zeros((1, 1, 64))
    blocks[0, 0, 0] = 50.0
    blocks[0, 0, 8 * 1 + 3] = -3.0
    out = project_dct(DctStack(blocks, (1, 1)), thr).blocks[0, 0]
    assert out[0] == pytest.approx(34.61, abs=0.02)
    assert out[0] == thr.thresholds[0, 0]
    assert out[8 + 3] == -3.0


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (1, 4, 64), elements=st.floats(-500, 500)),
       st.sampled_from(["ff", "mf", "lhf", "custom:2,9"]))
def test_project_dct_idempotent_and_feasible(blocks, bands):
    thr = jnd_matrix(2.0, mask=parse_band_spec(bands))
    once = project_dct(DctStack(blocks, (2, 2)), thr)
    twice = project_dct(once, thr)
    assert np.array_equal(once.blocks, twice.blocks)
    assert np.all(np.abs(once.blocks) <= thr.flat)


def test_apply_examples():
    p = Perturbation("spatial", np.full((8, 8, 1), 10.0), epsilon=10.0)
    assert apply(p, np.full((8, 8, 1), 250.0)).max() == 255.0
    p = Perturbation("spatial", np.full((8, 8, 1), -10.0), epsilon=10.0)
    assert apply(p, np.full((8, 8, 1), 3.0)).min() == 0.0
    img = np.random.default_rng(0).uniform(0, 255, (8, 8, 1))
    assert np.array_equal(apply(zero_perturbation((8, 8, 1)), img), img)
    with pytest.raises(ValueError):
        apply(p, np.zeros((16, 16, 1)))


def test_perturbation_budget_validation():
    with pytest.raises(ValueError):
        Perturbation("spatial", np.zeros((8, 8, 1)))
    with pytest.raises(ValueError):
        Perturbation("dct", np.zeros((8, 8, 1)), thresholds=jnd_matrix())
    with pytest.raises(ValueError):
        AttackConfig(method="fgsm")


def test_random_sign_saturates_budget():
    thr = jnd_matrix(2.0, mask=parse_band_spec("mf"))
    p = random_sign_perturbation(thr, (16, 16, 1), seed=4)
    np.testing.assert_array_equal(np.abs(p.values.blocks), np.broadcast_to(thr.flat, p.values.blocks.shape))


@pytest.fixture(scope="module")
def toy():
    ds = make_dataset(200, 5)
    model = train(ds, TrainConfig(arch="b", epochs=6, learning_rate=1e-3, width=64, seed=1))
    return model, ds.subset(np.arange(40))


def test_zero_epochs_gives_zero_perturbation(toy):
    model, ds = toy
    res = train_universal(model, ds, AttackConfig(epochs=0))
    assert res.fooling_trace == []
    assert np.all(res.perturbation.values.blocks == 0.0)


@pytest.mark.parametrize("inner", ["deepfool", "sign"])
def test_uap_respects_epsilon(toy, inner):
    model, ds = toy
    res = train_universal(model, ds, AttackConfig(method="uap", epochs=2, inner=inner, seed=3))
    d = res.perturbation.values
    assert np.abs(d).max() <= 10.0
    assert np.abs(d).max() > 0


@pytest.mark.parametrize("bands", ["lf", "mf", "hf", "ff"])
def test_ftuap_confined_to_bands(toy, bands):
    model, ds = toy
    mask = parse_band_spec(bands)
    res = train_universal(model, ds, AttackConfig(bands=mask, epochs=1, seed=2))
    p = res.perturbation
    assert np.all(np.abs(p.values.blocks) <= p.thresholds.flat)
    off = ~mask.array.reshape(64)
    assert np.all(p.values.blocks[..., off] == 0.0)
    # the spatial signal re-analysed carries no off-band energy
    again = forward_dct(inverse_dct(p.values)).blocks
    assert np.all(np.abs(again[..., off]) < 1e-8)
    np.testing.assert_allclose(again, p.values.blocks, atol=1e-8)


def test_attack_deterministic(toy):
    model, ds = toy
    cfg = AttackConfig(epochs=1, seed=9)
    a = train_universal(model, ds, cfg).perturbation
    b = train_universal(model, ds, cfg).perturbation
    assert np.array_equal(a.values.blocks, b.values.blocks)
    assert a.provenance == b.provenance == cfg.digest()


def test_attack_shape_mismatch(toy):
    model, _ = toy
    other = make_dataset(4, 0)
    small = type(other)(other.images[:, :16, :16], other.labels)
    with pytest.raises(ValueError):
        train_universal(model, small, AttackConfig(epochs=1))


def test_non_finite_update_aborts():
    ds = make_dataset(4, 0)
    small = type(ds)(ds.images[:, :8, :8], ds.labels)
    with pytest.raises(AttackDiverged):
        train_universal(NanModel(), small, AttackConfig(method="uap", epochs=1, inner="sign"))
