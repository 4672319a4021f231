import numpy as np
import pytest

from ipakit import (
    Mode,
    StudentConfig,
    StudentModel,
    grad_check,
    mse_loss,
    parse_ipa,
    synthetic_teacher,
    train,
)
from ipakit.lexicon import CorpusPair

from oracles import mse_oracle


def make_pairs(table, texts_to_ipa):
    return [CorpusPair(text=text, pronunciation=parse_ipa(ipa, table))
            for text, ipa in texts_to_ipa]


def small_config(mode=Mode.IPA_FROZEN, **overrides):
    base = dict(mode=mode, d_model=16, layers=1, heads=2, teacher_dim=6,
                max_len=16, seed=11, learning_rate=1e-3, batch_size=4,
                epochs=3)
    base.update(overrides)
    return StudentConfig(**base)


@pytest.fixture()
def toy_setup(table):
    pairs = make_pairs(table, [
        ("a cat.", "ə kæt."),
        ("a dog!", "ə dɔg!"),
        ("a desk", "ə dɛsk"),
        ("the fish", "ðə fɪʃ"),
        ("a bridge", "ə bɹɪʤ"),
        ("a thing", "ə θɪŋ"),
    ])
    teacher = synthetic_teacher([p.text for p in pairs], dim=6, seed=2)
    return pairs, teacher


# ----------------------------------------------------------------------
# loss


def test_mse_loss_goldens():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert mse_loss(pred, pred) == 0.0
    assert mse_loss(pred + 1.0, pred) == 1.0


def test_mse_loss_matches_oracle():
    rng = np.random.default_rng(4)
    pred = rng.normal(size=(5, 7))
    target = rng.normal(size=(5, 7))
    assert abs(mse_loss(pred, target) - mse_oracle(pred, target)) < 1e-9


def test_mse_loss_shape_mismatch():
    with pytest.raises(ValueError):
        mse_loss(np.zeros((2, 3)), np.zeros((3, 2)))


# ----------------------------------------------------------------------
# training behaviors


def test_zero_learning_rate_keeps_parameters(table, toy_setup):
    pairs, teacher = toy_setup
    model = StudentModel.build(small_config(learning_rate=0.0, epochs=2), table)
    before = {k: v.copy() for k, v in model.params.items()}
    train(model, pairs, teacher)
    for name, value in before.items():
        assert np.array_equal(model.params[name], value)


def test_training_reduces_loss_and_logs(table, toy_setup):
    pairs, teacher = toy_setup
    model = StudentModel.build(small_config(epochs=10), table)
    log = train(model, pairs[:-1], teacher, val_pairs=pairs[-1:])
    assert len(log) == 10
    assert log[-1].train_mse < log[0].train_mse
    assert all(stats.val_mse is not None for stats in log)


def test_seeded_training_is_bitwise_reproducible(table, toy_setup):
    pairs, teacher = toy_setup

    def run():
        model = StudentModel.build(small_config(epochs=4), table)
        log = train(model, pairs, teacher)
        return model, log

    model_a, log_a = run()
    model_b, log_b = run()
    assert log_a == log_b
    for name in model_a.params:
        assert np.array_equal(model_a.params[name], model_b.params[name])


def test_frozen_mode_keeps_feature_matrix_bit_identical(table, toy_setup):
    pairs, teacher = toy_setup
    model = StudentModel.build(small_config(mode=Mode.IPA_FROZEN, epochs=3),
                               table)
    before = model.params["embed.W"].tobytes()
    train(model, pairs, teacher)
    assert model.params["embed.W"].tobytes() == before


def test_trainable_mode_updates_feature_matrix(table, toy_setup):
    pairs, teacher = toy_setup
    model = StudentModel.build(small_config(mode=Mode.IPA_TRAINABLE, epochs=3),
                               table)
    before = model.params["embed.W"].tobytes()
    train(model, pairs, teacher)
    assert model.params["embed.W"].tobytes() != before


def test_teacher_never_updated(table, toy_setup):
    pairs, teacher = toy_setup
    snapshot = [(text, vec.copy()) for text, vec in teacher.records]
    model = StudentModel.build(small_config(epochs=2), table)
    train(model, pairs, teacher)
    for (text, vec), (text2, vec2) in zip(snapshot, teacher.records):
        assert text == text2
        assert np.array_equal(vec, vec2)


def test_missing_teacher_text_rejected(table, toy_setup):
    pairs, teacher = toy_setup
    model = StudentModel.build(small_config(), table)
    extra = make_pairs(table, [("unseen words", "ʌnsin wɜɹdz")])
    with pytest.raises(ValueError, match="missing from teacher"):
        train(model, pairs + extra, teacher)


def test_non_finite_loss_aborts(table, toy_setup):
    pairs, teacher = toy_setup
    model = StudentModel.build(small_config(), table)
    model.params["proj_out.bias"][:] = np.float32("inf")
    with pytest.raises(RuntimeError, match="non-finite"):
        train(model, pairs, teacher)


def test_single_pair_overfit(table):
    pairs = make_pairs(table, [("a cat.", "ə kæt.")])
    teacher = synthetic_teacher(["a cat."], dim=8, seed=2)
    config = StudentConfig(mode=Mode.IPA_FROZEN, d_model=32, layers=1, heads=4,
                           teacher_dim=8, max_len=16, seed=1,
                           learning_rate=1e-2, batch_size=32, epochs=500)
    model = StudentModel.build(config, table)
    log = train(model, pairs, teacher)
    assert log[-1].train_mse < 1e-3


# ----------------------------------------------------------------------
# gradient checking


def generic_point(model, seed=99, scale=0.3):
    rng = np.random.default_rng(seed)
    for name in model.params:
        model.params[name] = rng.normal(0, scale, model.params[name].shape) \
            .astype(np.float32)
    return rng


def test_grad_check_linear_only_model(table):
    config = small_config(layers=0, d_model=8, heads=2, teacher_dim=4)
    model = StudentModel.build(config, table)
    rng = generic_point(model)
    seqs = [parse_ipa("kæt", table), parse_ipa("dɔg!", table)]
    targets = rng.normal(0, 0.5, size=(2, 4))
    assert grad_check(model, seqs, targets, eps=1e-3) < 1e-7


@pytest.mark.parametrize("mode", list(Mode))
def test_grad_check_full_one_layer(table, mode):
    config = StudentConfig(mode=mode, d_model=8, layers=1, heads=2,
                           teacher_dim=4, max_len=8, seed=3)
    model = StudentModel.build(config, table)
    rng = generic_point(model)
    seqs = [parse_ipa(s, table) for s in ("kæt", "dɛsk.", "ə pæd")]
    targets = rng.normal(0, 0.5, size=(3, 4))
    total = sum(v.size for v in model.params.values())
    assert total <= 10_000
    assert grad_check(model, seqs, targets, eps=1e-3) < 1e-4


def test_untouched_attribute_rows_get_zero_gradient(table):
    from ipakit.distill import mse_loss_backward
    from ipakit.embedding import attribute_index, attribute_vector

    config = small_config(mode=Mode.IPA_TRAINABLE, layers=1)
    model = StudentModel.build(config, table)
    seqs = [parse_ipa("kæt", table)]
    tok, mask = model.prepare_batch(seqs)
    pred, cache = model.forward_with_cache(tok, mask)
    grads = model.backward(cache, mse_loss_backward(pred, np.zeros_like(pred)))
    idx = attribute_index(table)
    touched = set()
    for token in "kæt":
        touched |= {i for i in range(idx.n)
                    if attribute_vector(token, table)[i] != 0.0}
    for dim in range(idx.n):
        row_is_zero = not np.any(grads["embed.W"][dim])
        assert row_is_zero == (dim not in touched)
