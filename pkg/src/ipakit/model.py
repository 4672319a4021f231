"""Student pronunciation encoder: a post-norm transformer over phoneme
embeddings, mean-pooled and projected to the teacher dimension.

Pure NumPy. Parameters are stored as float32 (what the checkpoint format
carries, so save/load round-trips bit-exactly) while all arithmetic runs in
float64. The backward pass is written by hand and verified against central
finite differences in the distillation module.
"""

from __future__ import annotations

import enum
import struct
import warnings
from dataclasses import dataclass, replace
from typing import BinaryIO, Sequence

import numpy as np

from .embedding import (
    BaselineTable,
    EmbeddingMode,
    FeatureMatrix,
    INIT_STD,
    attribute_index,
    token_magnitudes,
)
from .inventory import AttributeTable, PronunciationSequence, default_table

LN_EPS = 1e-12
_MASK_BIAS = -1e30  # padded keys: exp(bias - rowmax) underflows to exactly 0
_GELU_C = float(np.sqrt(2.0 / np.pi))
_GELU_A = 0.044715


class Mode(enum.Enum):
    IPA_FROZEN = "ipa-frozen"
    IPA_TRAINABLE = "ipa-trainable"
    BASELINE = "baseline"


_MODE_CODES = {Mode.IPA_FROZEN: 0, Mode.IPA_TRAINABLE: 1, Mode.BASELINE: 2}
_CODE_MODES = {v: k for k, v in _MODE_CODES.items()}


@dataclass
class StudentConfig:
    mode: Mode
    d_model: int
    layers: int
    heads: int
    teacher_dim: int
    ffn_mult: int = 4
    max_len: int = 77
    seed: int = 0
    learning_rate: float = 5e-5
    batch_size: int = 32
    epochs: int = 50
    embed_dim: int | None = None  # token-layer width; None means d_model

    def __post_init__(self) -> None:
        if self.d_model % self.heads != 0:
            raise ValueError("d_model must be divisible by heads")
        if self.max_len < 2:
            raise ValueError("max_len must be >= 2")
        for name in ("d_model", "layers", "heads", "teacher_dim", "ffn_mult"):
            if getattr(self, name) < 0 or (name != "layers" and getattr(self, name) == 0):
                raise ValueError(f"{name} must be positive")

    @property
    def token_dim(self) -> int:
        return self.embed_dim if self.embed_dim is not None else self.d_model


class CheckpointError(ValueError):
    """Malformed or inconsistent checkpoint stream."""


def _gelu(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.tanh(_GELU_C * (x + _GELU_A * x ** 3))
    return 0.5 * x * (1.0 + t), t


def _gelu_backward(d: np.ndarray, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    du = 0.5 * x * (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return d * (0.5 * (1.0 + t) + du)


def _layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return gamma * xhat + beta, (xhat, inv, gamma)


def _layer_norm_backward(dy: np.ndarray, cache) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xhat, inv, gamma = cache
    lead = tuple(range(dy.ndim - 1))
    dgamma = (dy * xhat).sum(axis=lead)
    dbeta = dy.sum(axis=lead)
    dxhat = dy * gamma
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dgamma, dbeta


def _linear_backward(d: np.ndarray, x: np.ndarray, w: np.ndarray):
    i, o = w.shape
    dw = x.reshape(-1, i).T @ d.reshape(-1, o)
    db = d.reshape(-1, o).sum(axis=0)
    dx = d @ w.T
    return dx, dw, db


class StudentModel:
    """Encoder instance: config + attribute table + named parameter tensors."""

    def __init__(self, config: StudentConfig, table: AttributeTable,
                 params: dict[str, np.ndarray]):
        self.config = config
        self.table = table
        self.params = params
        idx = attribute_index(table)
        self.n_attributes = idx.n
        self.vocab = len(table.all_symbols)
        # Gather matrix for the IPA path: one magnitude row per symbol plus a
        # zero row at index `vocab` used for padding.
        mags = token_magnitudes(table)
        self._mags_padded = np.vstack([mags, np.zeros((1, idx.n))])

    # ------------------------------------------------------------------
    # construction

    @staticmethod
    def param_names(config: StudentConfig, n_attributes: int) -> list[str]:
        names = ["embed.table" if config.mode is Mode.BASELINE else "embed.W"]
        if config.token_dim != config.d_model:
            names += ["proj_in.weight", "proj_in.bias"]
        names.append("pos.embed")
        for i in range(config.layers):
            base = f"layers.{i}"
            for proj in ("q", "k", "v", "o"):
                names += [f"{base}.attn.{proj}.weight", f"{base}.attn.{proj}.bias"]
            names += [f"{base}.ln1.gamma", f"{base}.ln1.beta"]
            names += [f"{base}.ffn.w1.weight", f"{base}.ffn.w1.bias",
                      f"{base}.ffn.w2.weight", f"{base}.ffn.w2.bias"]
            names += [f"{base}.ln2.gamma", f"{base}.ln2.beta"]
        names += ["proj_out.weight", "proj_out.bias"]
        return names

    @classmethod
    def _shapes(cls, config: StudentConfig, n_attributes: int,
                vocab: int) -> dict[str, tuple[int, ...]]:
        dm, dt = config.d_model, config.teacher_dim
        de = config.token_dim
        ff = config.ffn_mult * dm
        shapes: dict[str, tuple[int, ...]] = {}
        if config.mode is Mode.BASELINE:
            shapes["embed.table"] = (vocab, de)
        else:
            shapes["embed.W"] = (n_attributes, de)
        if de != dm:
            shapes["proj_in.weight"] = (de, dm)
            shapes["proj_in.bias"] = (dm,)
        shapes["pos.embed"] = (config.max_len, dm)
        for i in range(config.layers):
            base = f"layers.{i}"
            for proj in ("q", "k", "v", "o"):
                shapes[f"{base}.attn.{proj}.weight"] = (dm, dm)
                shapes[f"{base}.attn.{proj}.bias"] = (dm,)
            shapes[f"{base}.ln1.gamma"] = (dm,)
            shapes[f"{base}.ln1.beta"] = (dm,)
            shapes[f"{base}.ffn.w1.weight"] = (dm, ff)
            shapes[f"{base}.ffn.w1.bias"] = (ff,)
            shapes[f"{base}.ffn.w2.weight"] = (ff, dm)
            shapes[f"{base}.ffn.w2.bias"] = (dm,)
            shapes[f"{base}.ln2.gamma"] = (dm,)
            shapes[f"{base}.ln2.beta"] = (dm,)
        shapes["proj_out.weight"] = (dm, dt)
        shapes["proj_out.bias"] = (dt,)
        return shapes

    @classmethod
    def build(cls, config: StudentConfig, table: AttributeTable | None = None,
              token_layer: FeatureMatrix | BaselineTable | None = None) -> "StudentModel":
        """Initialize a model from config.seed.

        All weight matrices draw Normal(0, 0.02^2) from one seeded stream in
        canonical parameter order; biases start at 0 and layer-norm gains at
        1. A prebuilt token layer may be passed in (its width then defines
        embed_dim).
        """
        if table is None:
            table = default_table()
        idx = attribute_index(table)
        vocab = len(table.all_symbols)
        if token_layer is not None:
            config = replace(config, embed_dim=token_layer.dim)
        shapes = cls._shapes(config, idx.n, vocab)
        rng = np.random.default_rng(config.seed)
        params: dict[str, np.ndarray] = {}
        for name in cls.param_names(config, idx.n):
            shape = shapes[name]
            if name in ("embed.W", "embed.table") and token_layer is not None:
                weights = np.asarray(token_layer.weights, dtype=np.float32)
                if weights.shape != shape:
                    raise ValueError(
                        f"token layer shape {weights.shape} != expected {shape}")
                params[name] = weights.copy()
            elif name.endswith(".gamma"):
                params[name] = np.ones(shape, dtype=np.float32)
            elif name.endswith(".bias") or name.endswith(".beta"):
                params[name] = np.zeros(shape, dtype=np.float32)
            else:
                params[name] = rng.normal(0.0, INIT_STD, size=shape) \
                    .astype(np.float32)
        return cls(config, table, params)

    # ------------------------------------------------------------------
    # views

    @property
    def token_layer(self) -> FeatureMatrix | BaselineTable:
        if self.config.mode is Mode.BASELINE:
            return BaselineTable(weights=self.params["embed.table"],
                                 seed=self.config.seed)
        emb_mode = (EmbeddingMode.FROZEN if self.config.mode is Mode.IPA_FROZEN
                    else EmbeddingMode.TRAINABLE)
        return FeatureMatrix(weights=self.params["embed.W"], mode=emb_mode,
                             seed=self.config.seed)

    def trainable_names(self) -> list[str]:
        names = self.param_names(self.config, self.n_attributes)
        if self.config.mode is Mode.IPA_FROZEN:
            names = [n for n in names if n != "embed.W"]
        return names

    # ------------------------------------------------------------------
    # batching

    def prepare_batch(self, seqs: Sequence[PronunciationSequence]):
        """Index + mask arrays for a batch; truncates over-long sequences."""
        if not seqs:
            raise ValueError("empty batch")
        max_len = self.config.max_len
        index = self.table.index
        truncated = 0
        rows: list[list[int]] = []
        for seq in seqs:
            if not seq:
                raise ValueError("empty sequence in batch")
            tokens = seq.tokens
            if len(tokens) > max_len:
                tokens = tokens[:max_len]
                truncated += 1
            rows.append([index(t) for t in tokens])
        if truncated:
            warnings.warn(f"truncated {truncated} sequence(s) to max_len={max_len}",
                          stacklevel=3)
        width = max(len(r) for r in rows)
        tok = np.full((len(rows), width), self.vocab, dtype=np.int64)
        mask = np.zeros((len(rows), width), dtype=np.float64)
        for i, row in enumerate(rows):
            tok[i, :len(row)] = row
            mask[i, :len(row)] = 1.0
        return tok, mask

    # ------------------------------------------------------------------
    # forward / backward

    def _forward(self, params: dict[str, np.ndarray], tok: np.ndarray,
                 mask: np.ndarray, want_cache: bool):
        cfg = self.config
        p = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        B, L = tok.shape
        heads, dm = cfg.heads, cfg.d_model
        dh = dm // heads
        scale = 1.0 / np.sqrt(dh)

        if cfg.mode is Mode.BASELINE:
            tab = np.vstack([p["embed.table"], np.zeros((1, cfg.token_dim))])
            emb = tab[tok]
            x_mag = None
        else:
            x_mag = self._mags_padded[tok]            # (B, L, N)
            emb = x_mag @ p["embed.W"]                # (B, L, token_dim)
        if "proj_in.weight" in p:
            h = emb @ p["proj_in.weight"] + p["proj_in.bias"]
        else:
            h = emb
        h = h + p["pos.embed"][:L]

        # 0 for real keys, -1e30 for padded keys
        key_bias = np.where(mask > 0.0, 0.0, _MASK_BIAS)[:, None, None, :]
        layer_caches = []
        for i in range(cfg.layers):
            base = f"layers.{i}"
            h_in = h
            q = h_in @ p[f"{base}.attn.q.weight"] + p[f"{base}.attn.q.bias"]
            k = h_in @ p[f"{base}.attn.k.weight"] + p[f"{base}.attn.k.bias"]
            v = h_in @ p[f"{base}.attn.v.weight"] + p[f"{base}.attn.v.bias"]
            q4 = q.reshape(B, L, heads, dh).transpose(0, 2, 1, 3)
            k4 = k.reshape(B, L, heads, dh).transpose(0, 2, 1, 3)
            v4 = v.reshape(B, L, heads, dh).transpose(0, 2, 1, 3)
            scores = (q4 @ k4.transpose(0, 1, 3, 2)) * scale + key_bias
            scores -= scores.max(axis=-1, keepdims=True)
            expo = np.exp(scores)
            attn = expo / expo.sum(axis=-1, keepdims=True)
            ctx4 = attn @ v4                           # (B, heads, L, dh)
            ctx = ctx4.transpose(0, 2, 1, 3).reshape(B, L, dm)
            att_out = ctx @ p[f"{base}.attn.o.weight"] + p[f"{base}.attn.o.bias"]
            r1 = h_in + att_out
            h_mid, ln1_cache = _layer_norm(r1, p[f"{base}.ln1.gamma"],
                                           p[f"{base}.ln1.beta"])
            a1 = h_mid @ p[f"{base}.ffn.w1.weight"] + p[f"{base}.ffn.w1.bias"]
            g, gelu_t = _gelu(a1)
            a2 = g @ p[f"{base}.ffn.w2.weight"] + p[f"{base}.ffn.w2.bias"]
            r2 = h_mid + a2
            h, ln2_cache = _layer_norm(r2, p[f"{base}.ln2.gamma"],
                                       p[f"{base}.ln2.beta"])
            if want_cache:
                layer_caches.append(dict(
                    h_in=h_in, q4=q4, k4=k4, v4=v4, attn=attn, ctx=ctx,
                    ln1=ln1_cache, h_mid=h_mid, a1=a1, g=g, gelu_t=gelu_t,
                    ln2=ln2_cache,
                ))

        counts = mask.sum(axis=1)
        pooled = (h * mask[:, :, None]).sum(axis=1) / counts[:, None]
        out = pooled @ p["proj_out.weight"] + p["proj_out.bias"]
        if not want_cache:
            return out, None
        cache = dict(p=p, tok=tok, mask=mask, x_mag=x_mag, emb=emb,
                     h_layers=layer_caches, h_final=h, counts=counts,
                     pooled=pooled, B=B, L=L)
        return out, cache

    def forward(self, seqs: Sequence[PronunciationSequence]) -> np.ndarray:
        """Batch of pooled encoder outputs, shape (B, teacher_dim)."""
        tok, mask = self.prepare_batch(seqs)
        out, _ = self._forward(self.params, tok, mask, want_cache=False)
        return out

    def forward_with_cache(self, tok: np.ndarray, mask: np.ndarray):
        return self._forward(self.params, tok, mask, want_cache=True)

    def backward(self, cache: dict, dout: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss w.r.t. every parameter, given dloss/dout."""
        cfg = self.config
        p = cache["p"]
        mask = cache["mask"]
        B, L = cache["B"], cache["L"]
        heads, dm = cfg.heads, cfg.d_model
        dh = dm // heads
        scale = 1.0 / np.sqrt(dh)
        grads: dict[str, np.ndarray] = {}

        dpooled, dw, db = _linear_backward(dout, cache["pooled"],
                                           p["proj_out.weight"])
        grads["proj_out.weight"] = dw
        grads["proj_out.bias"] = db
        dh_cur = (dpooled[:, None, :] * mask[:, :, None]
                  / cache["counts"][:, None, None])

        for i in reversed(range(cfg.layers)):
            base = f"layers.{i}"
            lc = cache["h_layers"][i]
            dr2, dg2, db2 = _layer_norm_backward(dh_cur, lc["ln2"])
            grads[f"{base}.ln2.gamma"] = dg2
            grads[f"{base}.ln2.beta"] = db2
            dh_mid = dr2.copy()
            dg_ffn, dw2, db_w2 = _linear_backward(dr2, lc["g"],
                                                  p[f"{base}.ffn.w2.weight"])
            grads[f"{base}.ffn.w2.weight"] = dw2
            grads[f"{base}.ffn.w2.bias"] = db_w2
            da1 = _gelu_backward(dg_ffn, lc["a1"], lc["gelu_t"])
            dmid2, dw1, db_w1 = _linear_backward(da1, lc["h_mid"],
                                                 p[f"{base}.ffn.w1.weight"])
            grads[f"{base}.ffn.w1.weight"] = dw1
            grads[f"{base}.ffn.w1.bias"] = db_w1
            dh_mid += dmid2
            dr1, dg1, db1 = _layer_norm_backward(dh_mid, lc["ln1"])
            grads[f"{base}.ln1.gamma"] = dg1
            grads[f"{base}.ln1.beta"] = db1
            dh_in = dr1.copy()
            datt, dwo, dbo = _linear_backward(dr1, lc["ctx"],
                                              p[f"{base}.attn.o.weight"])
            grads[f"{base}.attn.o.weight"] = dwo
            grads[f"{base}.attn.o.bias"] = dbo
            dctx4 = datt.reshape(B, L, heads, dh).transpose(0, 2, 1, 3)
            attn = lc["attn"]
            dattn = dctx4 @ lc["v4"].transpose(0, 1, 3, 2)
            dv4 = attn.transpose(0, 1, 3, 2) @ dctx4
            dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
            dq4 = (dscores @ lc["k4"]) * scale
            dk4 = (dscores.transpose(0, 1, 3, 2) @ lc["q4"]) * scale
            dq = dq4.transpose(0, 2, 1, 3).reshape(B, L, dm)
            dk = dk4.transpose(0, 2, 1, 3).reshape(B, L, dm)
            dv = dv4.transpose(0, 2, 1, 3).reshape(B, L, dm)
            for name, dproj in (("q", dq), ("k", dk), ("v", dv)):
                dx, dwp, dbp = _linear_backward(
                    dproj, lc["h_in"], p[f"{base}.attn.{name}.weight"])
                grads[f"{base}.attn.{name}.weight"] = dwp
                grads[f"{base}.attn.{name}.bias"] = dbp
                dh_in += dx
            dh_cur = dh_in

        grads["pos.embed"] = np.zeros_like(p["pos.embed"])
        grads["pos.embed"][:L] = dh_cur.sum(axis=0)
        demb = dh_cur
        if "proj_in.weight" in p:
            demb, dwp, dbp = _linear_backward(dh_cur, cache["emb"],
                                              p["proj_in.weight"])
            grads["proj_in.weight"] = dwp
            grads["proj_in.bias"] = dbp
        if cfg.mode is Mode.BASELINE:
            dtab = np.zeros_like(p["embed.table"])
            tok = cache["tok"]
            flat_tok = tok.reshape(-1)
            flat_d = demb.reshape(-1, demb.shape[-1])
            real = flat_tok < self.vocab
            np.add.at(dtab, flat_tok[real], flat_d[real])
            grads["embed.table"] = dtab
        else:
            x_mag = cache["x_mag"]
            n = x_mag.shape[-1]
            grads["embed.W"] = (x_mag.reshape(-1, n).T
                                @ demb.reshape(-1, demb.shape[-1]))
        return grads

    def encode(self, seqs: Sequence[PronunciationSequence],
               batch_size: int | None = None) -> np.ndarray:
        """Forward in evaluation batches; rows align with the input order."""
        if not seqs:
            return np.zeros((0, self.config.teacher_dim))
        size = batch_size or self.config.batch_size
        chunks = [self.forward(seqs[i:i + size])
                  for i in range(0, len(seqs), size)]
        return np.vstack(chunks)


# ----------------------------------------------------------------------
# checkpoint format

MAGIC = b"MDL1"
_VERSION = 1
_HEADER = struct.Struct("<4sI")
_CONFIG = struct.Struct("<9I")
_U32 = struct.Struct("<I")


def save_checkpoint(model: StudentModel, stream: BinaryIO) -> int:
    """Serialize config block and named f32 tensors in canonical order."""
    cfg = model.config
    written = stream.write(_HEADER.pack(MAGIC, _VERSION))
    written += stream.write(_CONFIG.pack(
        _MODE_CODES[cfg.mode], model.n_attributes, model.vocab, cfg.d_model,
        cfg.layers, cfg.heads, cfg.ffn_mult, cfg.max_len, cfg.teacher_dim))
    for name in model.param_names(cfg, model.n_attributes):
        tensor = model.params[name]
        data = name.encode("utf-8")
        written += stream.write(_U32.pack(len(data)))
        written += stream.write(data)
        written += stream.write(_U32.pack(tensor.ndim))
        for dim in tensor.shape:
            written += stream.write(_U32.pack(dim))
        written += stream.write(
            np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    return written


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    data = stream.read(n)
    if len(data) < n:
        raise CheckpointError(f"truncated {what}")
    return data


def load_checkpoint(stream: BinaryIO,
                    table: AttributeTable | None = None) -> StudentModel:
    """Rebuild a model; tensor names and shapes must match the config block."""
    if table is None:
        table = default_table()
    magic, version = _HEADER.unpack(_read_exact(stream, _HEADER.size, "header"))
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise CheckpointError(f"unsupported version {version}")
    (mode_code, n_attr, vocab, d_model, layers, heads, ffn_mult, max_len,
     teacher_dim) = _CONFIG.unpack(_read_exact(stream, _CONFIG.size, "config"))
    if mode_code not in _CODE_MODES:
        raise CheckpointError(f"unknown mode code {mode_code}")
    idx_n = attribute_index(table).n
    if n_attr != idx_n or vocab != len(table.all_symbols):
        raise CheckpointError(
            f"checkpoint table dims (N={n_attr}, V={vocab}) do not match the "
            f"attribute table (N={idx_n}, V={len(table.all_symbols)})")
    tensors: dict[str, np.ndarray] = {}
    while True:
        raw = stream.read(_U32.size)
        if not raw:
            break
        if len(raw) < _U32.size:
            raise CheckpointError("truncated tensor name length")
        (name_len,) = _U32.unpack(raw)
        name = _read_exact(stream, name_len, "tensor name").decode("utf-8")
        (rank,) = _U32.unpack(_read_exact(stream, _U32.size, "tensor rank"))
        shape = tuple(
            _U32.unpack(_read_exact(stream, _U32.size, "tensor dim"))[0]
            for _ in range(rank))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = _read_exact(stream, 4 * count, f"tensor {name} data")
        tensors[name] = np.frombuffer(data, dtype="<f4").reshape(shape).copy()
    mode = _CODE_MODES[mode_code]
    embed_name = "embed.table" if mode is Mode.BASELINE else "embed.W"
    if embed_name not in tensors:
        raise CheckpointError(f"missing tensor {embed_name}")
    config = StudentConfig(
        mode=mode, d_model=d_model, layers=layers, heads=heads,
        teacher_dim=teacher_dim, ffn_mult=ffn_mult, max_len=max_len,
        embed_dim=tensors[embed_name].shape[1])
    expected = StudentModel._shapes(config, n_attr, vocab)
    names = StudentModel.param_names(config, n_attr)
    if set(tensors) != set(names):
        missing = set(names) - set(tensors)
        extra = set(tensors) - set(names)
        raise CheckpointError(
            f"tensor set mismatch (missing={sorted(missing)}, "
            f"extra={sorted(extra)})")
    for name in names:
        if tensors[name].shape != expected[name]:
            raise CheckpointError(
                f"tensor {name}: shape {tensors[name].shape} does not match "
                f"config-implied {expected[name]}")
    return StudentModel(config, table, {n: tensors[n] for n in names})
