"""Distillation training: MSE against a frozen teacher table, Adam updates,
and finite-difference verification of the hand-written gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .lexicon import CorpusPair
from .model import StudentModel
from .teacher import TeacherTable

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over batch and dimensions of the squared difference."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_loss_backward(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    return 2.0 * (np.asarray(pred, np.float64) - np.asarray(target, np.float64)) \
        / pred.size


class Adam:
    """Adam over the model's named trainable tensors.

    Moments are kept in float64; the updated parameter is written back as
    float32 (the storage dtype), which keeps runs bitwise reproducible.
    """

    def __init__(self, model: StudentModel, lr: float,
                 beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
                 eps: float = ADAM_EPS):
        self.model = model
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.names = model.trainable_names()
        self.m = {n: np.zeros(model.params[n].shape) for n in self.names}
        self.v = {n: np.zeros(model.params[n].shape) for n in self.names}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name in self.names:
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            theta = self.model.params[name].astype(np.float64)
            theta -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            self.model.params[name] = theta.astype(np.float32)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float | None


def _targets_for(pairs: Sequence[CorpusPair], teacher: TeacherTable) -> np.ndarray:
    missing = [p.text for p in pairs if p.text not in teacher]
    if missing:
        raise ValueError(
            f"{len(missing)} corpus text(s) missing from teacher, "
            f"first: {missing[0]!r}")
    return np.stack([teacher.lookup(p.text) for p in pairs]).astype(np.float64)


def train(model: StudentModel, pairs: Sequence[CorpusPair],
          teacher: TeacherTable,
          val_pairs: Sequence[CorpusPair] = (),
          epoch_callback: Callable[[EpochStats], None] | None = None,
          ) -> list[EpochStats]:
    """Distill the frozen teacher into the student with MSE + Adam.

    One seeded shuffle per epoch (stream derived from config.seed), batches
    of config.batch_size, config.epochs passes. The teacher is never
    touched; in ipa-frozen mode the attribute feature matrix is excluded
    from the optimizer, so it stays bit-identical. Returns per-epoch stats;
    training aborts with RuntimeError on a non-finite loss.
    """
    cfg = model.config
    if cfg.teacher_dim != teacher.dim:
        raise ValueError(
            f"model teacher_dim={cfg.teacher_dim} != teacher dim={teacher.dim}")
    targets = _targets_for(pairs, teacher)
    val_targets = _targets_for(val_pairs, teacher) if val_pairs else None
    seqs = [p.pronunciation for p in pairs]
    optimizer = Adam(model, lr=cfg.learning_rate)
    rng = np.random.default_rng([cfg.seed, 1])
    n = len(pairs)
    log: list[EpochStats] = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        sq_err_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            batch_idx = order[start:start + cfg.batch_size]
            batch_seqs = [seqs[i] for i in batch_idx]
            tok, mask = model.prepare_batch(batch_seqs)
            pred, cache = model.forward_with_cache(tok, mask)
            batch_targets = targets[batch_idx]
            loss = mse_loss(pred, batch_targets)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss {loss} at epoch {epoch}, "
                    f"batch starting {start}")
            grads = model.backward(cache, mse_loss_backward(pred, batch_targets))
            optimizer.step(grads)
            sq_err_sum += loss * pred.size
        train_mse = sq_err_sum / (n * cfg.teacher_dim)
        val_mse = None
        if val_targets is not None:
            val_pred = model.encode([p.pronunciation for p in val_pairs])
            val_mse = mse_loss(val_pred, val_targets)
        stats = EpochStats(epoch=epoch, train_mse=train_mse, val_mse=val_mse)
        log.append(stats)
        if epoch_callback is not None:
            epoch_callback(stats)
    return log


def grad_check(model: StudentModel, seqs, targets: np.ndarray,
               eps: float = 1e-3) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs entirely in float64 on a copy of the parameters; intended for
    small models (every trainable scalar is perturbed twice).
    """
    targets = np.asarray(targets, dtype=np.float64)
    tok, mask = model.prepare_batch(seqs)
    params64 = {k: v.astype(np.float64) for k, v in model.params.items()}

    def loss_of(params: dict[str, np.ndarray]) -> float:
        out, _ = model._forward(params, tok, mask, want_cache=False)
        return mse_loss(out, targets)

    pred, cache = model._forward(params64, tok, mask, want_cache=True)
    grads = model.backward(cache, mse_loss_backward(pred, targets))
    worst = 0.0
    for name in model.trainable_names():
        theta = params64[name]
        analytic = grads[name]
        it = np.nditer(theta, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = theta[ix]
            theta[ix] = orig + eps
            up = loss_of(params64)
            theta[ix] = orig - eps
            down = loss_of(params64)
            theta[ix] = orig
            numeric = (up - down) / (2.0 * eps)
            a = float(analytic[ix])
            rel = abs(a - numeric) / (abs(a) + abs(numeric) + 1e-12)
            worst = max(worst, rel)
    return worst
