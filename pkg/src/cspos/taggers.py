"""BiLSTM-CRF taggers: single-task POS, two-pair MTL-POS, and joint POS+LID.

All three share one layout: embedding layer -> dropout -> BiLSTM -> dropout,
then one linear+CRF head per task.  Training is one sentence per step with
Adam and early stopping on dev POS accuracy.
"""

from __future__ import annotations

import json
import logging
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import LID_TAGS, UPOS_TAGS, Corpus, UNK_INDEX, Vocabulary, build_shared_vocab, build_vocab
from .errors import ConfigError, DataError, TrainingError, UsageError
from .metrics import accuracy
from .nn import CRF, Adam, BiLSTM, Dropout, Embedding, Linear, Module

log = logging.getLogger(__name__)

KINDS = ("BILSTM_CRF", "MTL_POS", "MTL_POS_LID")
CHECKPOINT_MAGIC = b"CSTAG1"


@dataclass(frozen=True)
class TaggerArch:
    kind: str = "BILSTM_CRF"
    hidden: int = 200
    dropout: float = 0.2
    fine_tune_embeddings: bool = True
    embedding_dim: int = 100

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown architecture {self.kind!r}")
        if self.hidden < 1 or self.embedding_dim < 1:
            raise ConfigError("hidden and embedding_dim must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")


@dataclass(frozen=True)
class TrainSchedule:
    max_epochs: int = 50
    patience: int = 5
    seed: int = 1
    lr: float = 1e-3
    clip_norm: float = 5.0

    def validate(self):
        if self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("max_epochs and patience must be >= 1")
        if self.patience >= self.max_epochs:
            raise ConfigError("patience must be smaller than max_epochs")


@dataclass
class TaggedOutput:
    pos: list
    lid: list | None = None

    def __len__(self):
        return len(self.pos)


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    dev_acc: float
    dev_lid_acc: float | None = None


@dataclass
class TrainResult:
    model: "TaggerModel"
    log: list = field(default_factory=list)
    best_epoch: int = 0
    best_dev_acc: float = 0.0

    def log_tsv(self) -> str:
        lid = any(r.dev_lid_acc is not None for r in self.log)
        head = "epoch\ttrain_loss\tdev_acc" + ("\tdev_lid_acc" if lid else "")
        rows = [head]
        for r in self.log:
            row = f"{r.epoch}\t{r.train_loss:.6f}\t{r.dev_acc:.6f}"
            if lid:
                row += f"\t{r.dev_lid_acc:.6f}"
            rows.append(row)
        return "\n".join(rows) + "\n"


class TaggerModel(Module):
    def __init__(self, arch: TaggerArch, vocab: Vocabulary, heads: dict, table=None, seed=1,
                 dtype=np.float32, embedding_init=None):
        arch.validate()
        self.arch = arch
        self.vocab = vocab
        self.heads = {k: list(v) for k, v in heads.items()}
        self.table = table
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        dim = table.dim if table is not None else arch.embedding_dim
        if embedding_init is None and table is not None:
            embedding_init = np.zeros((len(vocab), dim), dtype=np.float64)
            for i, w in enumerate(vocab.itos[2:], start=2):
                embedding_init[i] = table.lookup(w)
        self.embedding = Embedding("embedding", len(vocab), dim, rng, embedding_init, dtype)
        self.embedding.weight.trainable = arch.fine_tune_embeddings
        self.drop_in = Dropout(arch.dropout)
        self.encoder = BiLSTM("bilstm", dim, arch.hidden, rng, dtype)
        self.drop_out = Dropout(arch.dropout)
        self.projections = [Linear(f"head.{h}.linear", 2 * arch.hidden, len(tags), rng, dtype)
                            for h, tags in self.heads.items()]
        self.crfs = [CRF(f"head.{h}.crf", len(tags), dtype) for h, tags in self.heads.items()]
        self.tag_index = {h: {t: i for i, t in enumerate(tags)} for h, tags in self.heads.items()}
        self._head_pos = {h: i for i, h in enumerate(self.heads)}
        self._encoded_state = None

    # -- encoding ---------------------------------------------------------

    def encode_words(self, forms):
        """Vocabulary ids plus fallback vectors for words outside the vocabulary.

        With a pre-trained table, unknown words are composed from the table
        (n-gram backoff) instead of sharing the UNK row.
        """
        ids = np.array(self.vocab.encode(forms), dtype=np.int64)
        fallback = None
        if self.table is not None:
            unknown = ids == UNK_INDEX
            if unknown.any():
                fallback = np.full((len(forms), self.table.dim), np.nan, dtype=self.dtype)
                for k in np.flatnonzero(unknown):
                    fallback[k] = self.table.lookup(forms[k])
        return ids, fallback

    def _encode(self, ids, fallback, training, rng):
        x = self.embedding.forward(ids, fallback)
        x = self.drop_in.forward(x, training, rng)
        h = self.encoder.forward(x)
        return self.drop_out.forward(h, training, rng)

    # -- training ---------------------------------------------------------

    def loss(self, ids, fallback, targets: dict, training=True, rng=None):
        """Sum of CRF losses for the heads in ``targets``; caches for ``backward``."""
        h = self._encode(ids, fallback, training, rng)
        total = 0.0
        active = []
        for head, tags in targets.items():
            k = self._head_pos[head]
            em = self.projections[k].forward(h)
            total += self.crfs[k].forward(em, tags)
            active.append(k)
        self._encoded_state = active
        return total

    def backward(self):
        if self._encoded_state is None:
            raise UsageError("backward called before a forward pass")
        dh = None
        for k in self._encoded_state:
            d_em = self.crfs[k].backward()
            d = self.projections[k].backward(d_em)
            dh = d if dh is None else dh + d
        self._encoded_state = None
        dx = self.encoder.backward(self.drop_out.backward(dh))
        self.embedding.backward(self.drop_in.backward(dx))

    # -- inference --------------------------------------------------------

    def decode(self, forms, heads=None) -> dict:
        if not forms:
            return {h: [] for h in (heads or self.heads)}
        ids, fallback = self.encode_words(forms)
        emb = self.embedding.weight.value[ids]
        if fallback is not None:
            mask = ~np.isnan(fallback[:, 0])
            emb = emb.copy()
            emb[mask] = fallback[mask]
        h = self.encoder.forward(emb)
        self.encoder.fwd._cache = self.encoder.bwd._cache = None
        out = {}
        for head in heads or self.heads:
            k = self._head_pos[head]
            proj = self.projections[k]
            em = h @ proj.W.value.T + proj.b.value
            out[head] = [self.heads[head][i] for i in self.crfs[k].decode(em)]
        return out

    def snapshot(self) -> dict:
        return {p.name: p.value.copy() for p in self.parameters()}

    def restore(self, values: dict):
        for p in self.parameters():
            p.value[...] = values[p.name]

    # -- persistence ------------------------------------------------------

    def save(self, path, embedding_ref: str | None = None) -> None:
        """Write the checkpoint; ``embedding_ref`` is stored relative to the checkpoint's directory."""
        params = self.parameters()
        if embedding_ref is not None:
            embedding_ref = Path(os.path.relpath(os.path.abspath(embedding_ref),
                                                 os.path.dirname(os.path.abspath(path)))).as_posix()
        header = json.dumps({
            "arch": asdict(self.arch),
            "vocab": list(self.vocab.itos),
            "heads": self.heads,
            "params": [{"name": p.name, "shape": list(p.shape)} for p in params],
            "embedding_ref": embedding_ref,
        }, ensure_ascii=False).encode("utf-8")
        with open(path, "wb") as f:
            f.write(CHECKPOINT_MAGIC)
            f.write(struct.pack("<I", len(header)))
            f.write(header)
            for p in params:
                f.write(np.ascontiguousarray(p.value, dtype="<f4").tobytes())

    @classmethod
    def load(cls, path, table=None) -> "TaggerModel":
        data = Path(path).read_bytes()
        if data[:6] != CHECKPOINT_MAGIC:
            raise DataError(f"{path}: not a tagger checkpoint (bad magic)")
        (hlen,) = struct.unpack_from("<I", data, 6)
        header = json.loads(data[10:10 + hlen].decode("utf-8"))
        arch = TaggerArch(**header["arch"])
        vocab = Vocabulary(tuple(header["vocab"]))
        if table is not None and table.dim != header["params"][0]["shape"][1]:
            raise ConfigError("embedding table dimension does not match checkpoint")
        model = cls(arch, vocab, header["heads"], table=None, embedding_init=np.zeros(
            tuple(header["params"][0]["shape"])), dtype=np.float32)
        model.table = table
        off = 10 + hlen
        named = model.named_parameters()
        for spec in header["params"]:
            n = int(np.prod(spec["shape"]))
            named[spec["name"]].value[...] = np.frombuffer(data, "<f4", n, off).reshape(spec["shape"])
            off += 4 * n
        ref = header.get("embedding_ref")
        model.embedding_ref = None if ref is None else os.path.normpath(
            os.path.join(os.path.dirname(os.path.abspath(path)), ref))
        return model


# --------------------------------------------------------------------------


def _tag_inventory(corpus, field_name):
    order = UPOS_TAGS if field_name == "POS" else LID_TAGS
    seen = {t.pos if field_name == "POS" else t.lid for t in corpus.tokens()}
    return [t for t in order if t in seen]


def _prepare(model, corpus, head_fields):
    """Encode each sentence once: (ids, fallback, {head: tag indices})."""
    out = []
    for s in corpus:
        ids, fb = model.encode_words(s.forms)
        targets = {}
        for head, fld in head_fields.items():
            idx = model.tag_index[head]
            seq = s.pos if fld == "POS" else s.lid
            targets[head] = [idx[t] for t in seq]
        out.append((ids, fb, targets))
    return out


def tag(model: TaggerModel, sentences, head: str = "pos") -> TaggedOutput:
    """Viterbi-decode ``sentences`` (a Corpus or lists of forms) with dropout off."""
    forms = [s.forms if hasattr(s, "forms") else list(s) for s in sentences]
    heads = [head] + (["lid"] if "lid" in model.heads else [])
    decoded = [model.decode(f, heads) for f in forms]
    lid = [d["lid"] for d in decoded] if "lid" in model.heads else None
    return TaggedOutput(pos=[d[head] for d in decoded], lid=lid)


def _dev_scores(model, dev, head):
    if dev is None or len(dev) == 0:
        return 0.0, None
    out = tag(model, dev, head)
    lid = accuracy(dev, out, "LID") if out.lid is not None else None
    return accuracy(dev, out, "POS"), lid


def _fit(model, schedule, make_epoch, dev, dev_head="pos") -> TrainResult:
    schedule.validate()
    opt = Adam(model.parameters(), lr=schedule.lr, clip_norm=schedule.clip_norm)
    order_rng = np.random.default_rng([schedule.seed, 1])
    drop_rng = np.random.default_rng([schedule.seed, 2])
    result = TrainResult(model)
    best = None
    bad = 0
    for epoch in range(1, schedule.max_epochs + 1):
        total = 0.0
        steps = 0
        for ids, fb, targets in make_epoch(order_rng):
            loss = model.loss(ids, fb, targets, training=True, rng=drop_rng)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {epoch}")
            model.backward()
            opt.step()
            total += loss
            steps += 1
        dev_acc, dev_lid = _dev_scores(model, dev, dev_head)
        result.log.append(EpochLog(epoch, total / max(1, steps), dev_acc, dev_lid))
        log.info("epoch %d loss %.4f dev %.4f", epoch, total / max(1, steps), dev_acc)
        if best is None or dev_acc > result.best_dev_acc:
            best = model.snapshot()
            result.best_epoch, result.best_dev_acc = epoch, dev_acc
            bad = 0
        else:
            bad += 1
            if bad >= schedule.patience:
                break
    model.restore(best)
    return result


def _new_model(arch, vocab, heads, table, schedule):
    if table is not None and arch.embedding_dim != table.dim:
        raise ConfigError(f"embedding table has dim {table.dim}, architecture expects {arch.embedding_dim}")
    return TaggerModel(arch, vocab, heads, table=table, seed=schedule.seed)


def train_bilstm_crf(train: Corpus, dev: Corpus | None, arch: TaggerArch = TaggerArch(),
                     schedule: TrainSchedule = TrainSchedule(), table=None) -> TrainResult:
    if arch.kind != "BILSTM_CRF":
        raise ConfigError(f"train_bilstm_crf needs kind BILSTM_CRF, got {arch.kind}")
    if len(train) == 0:
        raise UsageError("empty training corpus")
    model = _new_model(arch, build_vocab(train), {"pos": _tag_inventory(train, "POS")}, table, schedule)
    data = _prepare(model, train, {"pos": "POS"})

    def epoch(rng):
        for i in rng.permutation(len(data)):
            yield data[i]

    return _fit(model, schedule, epoch, dev)


def train_mtl_pos(train_a: Corpus, train_b: Corpus | None, dev_a: Corpus | None, dev_b: Corpus | None = None,
                  arch: TaggerArch = TaggerArch(kind="MTL_POS"), schedule: TrainSchedule = TrainSchedule(),
                  table=None) -> TrainResult:
    """Two POS heads over a shared encoder; steps alternate A, B, A, B, ...

    The shorter corpus is recycled so each epoch covers the longer one
    once.  Model selection uses head A's dev accuracy.
    """
    if arch.kind != "MTL_POS":
        raise ConfigError(f"train_mtl_pos needs kind MTL_POS, got {arch.kind}")
    if train_b is None or len(train_b) == 0:
        raise ConfigError("MTL_POS requires a second training corpus")
    if len(train_a) == 0:
        raise UsageError("empty training corpus")
    vocab = build_shared_vocab([train_a, train_b])
    heads = {"pos": _tag_inventory(train_a, "POS"), "pos_b": _tag_inventory(train_b, "POS")}
    model = _new_model(arch, vocab, heads, table, schedule)
    data_a = _prepare(model, train_a, {"pos": "POS"})
    data_b = _prepare(model, train_b, {"pos_b": "POS"})
    n = max(len(data_a), len(data_b))

    def epoch(rng):
        pa = rng.permutation(len(data_a))
        pb = rng.permutation(len(data_b))
        for k in range(n):
            yield data_a[pa[k % len(pa)]]
            yield data_b[pb[k % len(pb)]]

    return _fit(model, schedule, epoch, dev_a)


def train_mtl_pos_lid(train: Corpus, dev: Corpus | None, arch: TaggerArch = TaggerArch(kind="MTL_POS_LID"),
                      schedule: TrainSchedule = TrainSchedule(), table=None) -> TrainResult:
    """POS head + LID head; per-sentence loss is the unweighted sum."""
    if arch.kind != "MTL_POS_LID":
        raise ConfigError(f"train_mtl_pos_lid needs kind MTL_POS_LID, got {arch.kind}")
    if len(train) == 0:
        raise UsageError("empty training corpus")
    lids = _tag_inventory(train, "LID")
    if not set(lids) & {"LANG1", "LANG2"}:
        raise ConfigError("MTL_POS_LID requires LID annotations on the training corpus")
    heads = {"pos": _tag_inventory(train, "POS"), "lid": lids}
    model = _new_model(arch, build_vocab(train), heads, table, schedule)
    data = _prepare(model, train, {"pos": "POS", "lid": "LID"})

    def epoch(rng):
        for i in rng.permutation(len(data)):
            yield data[i]

    return _fit(model, schedule, epoch, dev)
