"""Config-driven experiment runner: one condition x one architecture x several seeds.

A run composes the embedding corpus for its condition, trains (or reuses
from cache) the embedding model, trains one tagger per seed, evaluates on
the fixed test set and writes per-seed and aggregate reports plus a
manifest under the configured output directory.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import __version__
from .align import procrustes_fit, project, projection_bytes, read_dictionary
from .corpus import Corpus, read_corpus
from .embed import CompositionRecipe, EmbeddingConfig, EmbeddingTable, compose_corpus, merge_tables, train_embeddings
from .errors import ConfigError, CsposError, DataError, PartialRunError
from .metrics import MetricsReport, aggregate_seeds, evaluate, report_text, report_tsv
from .taggers import TaggerArch, TrainSchedule, tag, train_bilstm_crf, train_mtl_pos, train_mtl_pos_lid

log = logging.getLogger(__name__)

CONDITIONS = ("RANDOM", "MONO_L1", "MONO_L2", "CFM", "PCS", "PSEUDO_CS", "MULTI_PIVOT", "PROJECTED")
DATA_KEYS = ("train", "dev", "test", "train_b", "dev_b", "raw_lang1", "raw_lang2", "raw_cs",
             "raw_pivot", "raw_pivot_cs", "dictionary")
_LIST_KEYS = ("raw_cs", "raw_pivot_cs")


def _parse_bool(v: str) -> bool:
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _coerce(cls, values: dict, section: str):
    """Build dataclass ``cls`` from string values, typed after its defaults."""
    known = {f.name: f for f in fields(cls)}
    out = {}
    for k, v in values.items():
        if k not in known:
            raise ConfigError(f"unknown key [{section}] {k}")
        default = getattr(cls(), k)
        try:
            if isinstance(default, bool):
                out[k] = _parse_bool(v)
            elif isinstance(default, int):
                out[k] = int(v)
            elif isinstance(default, float):
                out[k] = float(v)
            else:
                out[k] = str(v).strip()
        except ValueError as e:
            raise ConfigError(f"[{section}] {k}: {e}") from None
    return cls(**out)


@dataclass(frozen=True)
class ExperimentConfig:
    condition: str
    arch: TaggerArch
    embedding: EmbeddingConfig
    schedule: TrainSchedule
    data: dict
    output_dir: Path
    seeds: tuple = (1, 2, 3, 4, 5)
    corpus_label: str = ""

    def validate(self) -> None:
        if self.condition not in CONDITIONS:
            raise ConfigError(f"unknown condition {self.condition!r}; expected one of {', '.join(CONDITIONS)}")
        self.arch.validate()
        self.embedding.validate()
        self.schedule.validate()
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        for key in ("train", "dev", "test"):
            if not self.data.get(key):
                raise ConfigError(f"[data] {key} is required")
        if self.arch.kind == "MTL_POS" and not self.data.get("train_b"):
            raise ConfigError("MTL_POS needs [data] train_b")
        if self.condition == "PROJECTED" and not self.data.get("dictionary"):
            raise ConfigError("PROJECTED needs [data] dictionary")
        self.recipes()

    def recipes(self) -> list[tuple[str, tuple, tuple]]:
        """(kind, mono paths, cs paths) per embedding model the condition needs.

        Arity is checked against the composition rules here, before any
        corpus is read.
        """
        d = self.data
        l1, l2 = d.get("raw_lang1"), d.get("raw_lang2")
        cs = tuple(d.get("raw_cs") or ())
        mono_present = tuple(p for p in (l1, l2) if p)
        spec = {
            "RANDOM": [],
            "MONO_L1": [("MONO", (l1,) if l1 else (), ())],
            "MONO_L2": [("MONO", (l2,) if l2 else (), ())],
            "CFM": [("CFM", mono_present, ())],
            "PCS": [("PCS", (), cs)],
            "PSEUDO_CS": [("PSEUDO_CS", mono_present, cs)],
            "MULTI_PIVOT": [("MULTI_PIVOT", mono_present + ((d["raw_pivot"],) if d.get("raw_pivot") else ()),
                             cs + tuple(d.get("raw_pivot_cs") or ()))],
            "PROJECTED": [("MONO", (l1,) if l1 else (), ()), ("MONO", (l2,) if l2 else (), ())],
        }[self.condition]
        for kind, mono, css in spec:
            CompositionRecipe(kind, mono, css).validate()
        return spec

    def canonical(self) -> dict:
        return {
            "condition": self.condition,
            "arch": asdict(self.arch),
            "embedding": asdict(self.embedding),
            "schedule": asdict(self.schedule),
            "data": {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in sorted(self.data.items()) if v},
            "seeds": list(self.seeds),
            "corpus_label": self.corpus_label,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _apply_overrides(parser: configparser.ConfigParser, overrides) -> None:
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        section, name = key.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name.strip(), value.strip())


def load_config(path, overrides=None) -> ExperimentConfig:
    """Read an INI experiment file; relative paths resolve against its directory."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    _apply_overrides(parser, overrides)
    return config_from_parser(parser, path.parent)


def config_from_parser(parser: configparser.ConfigParser, base: Path) -> ExperimentConfig:
    allowed = {"experiment", "data", "tagger", "embedding", "schedule"}
    extra = set(parser.sections()) - allowed
    if extra:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(extra))}")
    sec = lambda name: dict(parser[name]) if parser.has_section(name) else {}  # noqa: E731

    exp = sec("experiment")
    unknown = set(exp) - {"condition", "seeds", "output_dir", "corpus_label"}
    if unknown:
        raise ConfigError(f"unknown key(s) in [experiment]: {', '.join(sorted(unknown))}")
    if "condition" not in exp or "output_dir" not in exp:
        raise ConfigError("[experiment] needs condition and output_dir")
    try:
        seeds = tuple(int(s) for s in exp.get("seeds", "1,2,3,4,5").replace(",", " ").split())
    except ValueError:
        raise ConfigError("seeds must be integers") from None

    def resolve(p):
        p = Path(p.strip())
        return str(p if p.is_absolute() else (base / p).resolve())

    data = {}
    for k, v in sec("data").items():
        if k not in DATA_KEYS:
            raise ConfigError(f"unknown key [data] {k}")
        if k in _LIST_KEYS:
            data[k] = tuple(resolve(x) for x in v.replace(",", " ").split())
        elif v.strip():
            data[k] = resolve(v)

    embedding = _coerce(EmbeddingConfig, sec("embedding"), "embedding")
    tagger = sec("tagger")
    if "embedding_dim" in tagger:
        raise ConfigError("[tagger] embedding_dim follows [embedding] dim; set that instead")
    arch = _coerce(TaggerArch, tagger, "tagger")
    arch = replace(arch, embedding_dim=embedding.dim)
    sched_vals = sec("schedule")
    if "seed" in sched_vals:
        raise ConfigError("[schedule] seed is set per run from [experiment] seeds")
    schedule = _coerce(TrainSchedule, sched_vals, "schedule")
    label = exp.get("corpus_label", "").strip() or Path(data.get("test", "test")).stem
    cfg = ExperimentConfig(
        condition=exp["condition"].strip().upper(), arch=arch, embedding=embedding, schedule=schedule,
        data=data, output_dir=Path(resolve(exp["output_dir"])), seeds=seeds, corpus_label=label,
    )
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# artifacts


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Create-then-rename: readers only ever see a complete file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _read(path, split):
    try:
        return read_corpus(path, split)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None


def cache_key(recipe: CompositionRecipe, config: EmbeddingConfig) -> str:
    blob = json.dumps(asdict(config), sort_keys=True).encode("utf-8")
    return hashlib.sha256(recipe.fingerprint().encode("ascii") + b"\x00" + blob).hexdigest()[:24]


def cached_embeddings(recipe: CompositionRecipe, config: EmbeddingConfig, cache_dir: Path) -> tuple[EmbeddingTable, Path, bool]:
    """Train the recipe's embedding model, or load it when already cached."""
    path = cache_dir / f"emb-{recipe.kind.lower()}-{cache_key(recipe, config)}.bin"
    if path.exists():
        log.info("reusing cached embedding model %s", path.name)
        return EmbeddingTable.load(path), path, True
    log.info("training %s embeddings -> %s", recipe.kind, path.name)
    # composition shuffles under the embedding seed, so one model serves every tagger seed
    table = train_embeddings(compose_corpus(recipe, seed=config.seed), config)
    atomic_write_bytes(path, table.to_bytes())
    return table, path, False


@dataclass
class RunManifest:
    config_hash: str
    version: str
    condition: str
    architecture: str
    corpus_label: str
    output_dir: str
    status: str = "complete"
    seeds: list = field(default_factory=list)
    completed_seeds: list = field(default_factory=list)
    embeddings: list = field(default_factory=list)
    cache_hits: int = 0
    per_seed: dict = field(default_factory=dict)
    aggregate: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        d["per_seed"] = {str(k): v for k, v in d.get("per_seed", {}).items()}
        return cls(**{k: v for k, v in d.items() if k in {f.name for f in fields(cls)}})

    @classmethod
    def load(cls, path) -> "RunManifest":
        try:
            return cls.from_json(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError, TypeError) as e:
            raise DataError(f"cannot read manifest {path}: {e}") from None


def prepare_embeddings(config: ExperimentConfig, out: Path):
    """Embedding table for the condition (None for RANDOM), cache paths, cache hits."""
    specs = config.recipes()
    if not specs:
        return None, [], 0
    loaded = []
    for kind, mono, cs in specs:
        recipe = CompositionRecipe(kind, tuple(_read(p, "RAW") for p in mono), tuple(_read(p, "RAW") for p in cs))
        loaded.append(cached_embeddings(recipe, config.embedding, out / "cache"))
    hits = sum(hit for _, _, hit in loaded)
    paths = [str(p) for _, p, _ in loaded]
    if config.condition != "PROJECTED":
        return loaded[0][0], paths, hits
    src, tgt = loaded[0][0], loaded[1][0]
    W = procrustes_fit(src, tgt, read_dictionary(config.data["dictionary"]))
    proj_path = out / "projection.bin"
    atomic_write_bytes(proj_path, projection_bytes(W))
    merged = merge_tables(project(src, W), tgt)
    merged_path = out / "projected.bin"
    atomic_write_bytes(merged_path, merged.to_bytes())
    return merged, [str(merged_path)] + paths + [str(proj_path)], hits


def train_tagger(config: ExperimentConfig, seed: int, train: Corpus, dev: Corpus, table, extra: dict):
    schedule = replace(config.schedule, seed=seed)
    kind = config.arch.kind
    if kind == "BILSTM_CRF":
        return train_bilstm_crf(train, dev, config.arch, schedule, table)
    if kind == "MTL_POS":
        return train_mtl_pos(train, extra["train_b"], dev, extra.get("dev_b"), config.arch, schedule, table)
    return train_mtl_pos_lid(train, dev, config.arch, schedule, table)


def run_experiment(config: ExperimentConfig) -> RunManifest:
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config.config_hash(), __version__, config.condition, config.arch.kind,
                           config.corpus_label, str(out), seeds=list(config.seeds))
    atomic_write_text(out / "config.json", json.dumps(config.canonical(), indent=2, sort_keys=True) + "\n")

    train = _read(config.data["train"], "TRAIN")
    dev = _read(config.data["dev"], "DEV")
    test = _read(config.data["test"], "TEST")
    extra = {}
    if config.arch.kind == "MTL_POS":
        extra["train_b"] = _read(config.data["train_b"], "TRAIN")
        if config.data.get("dev_b"):
            extra["dev_b"] = _read(config.data["dev_b"], "DEV")

    reports: list[MetricsReport] = []
    failure = None
    try:
        table, manifest.embeddings, manifest.cache_hits = prepare_embeddings(config, out)
        for seed in config.seeds:
            seed_dir = out / f"seed-{seed}"
            seed_dir.mkdir(exist_ok=True)
            result = train_tagger(config, seed, train, dev, table, extra)
            ckpt = seed_dir / "model.ckpt"
            result.model.save(ckpt, embedding_ref=manifest.embeddings[0] if manifest.embeddings else None)
            atomic_write_text(seed_dir / "train_log.tsv", result.log_tsv())
            report = evaluate(test, tag(result.model, test), table=table, seed=seed)
            atomic_write_text(seed_dir / "report.tsv", report_tsv(report))
            atomic_write_text(seed_dir / "report.json", json.dumps(report.to_dict(), sort_keys=True) + "\n")
            atomic_write_text(seed_dir / "report.txt",
                              report_text(report, f"{config.arch.kind} / {config.condition} / seed {seed}"))
            reports.append(report)
            manifest.per_seed[str(seed)] = {
                "checkpoint": str(ckpt),
                "log": str(seed_dir / "train_log.tsv"),
                "report": str(seed_dir / "report.tsv"),
                "report_json": str(seed_dir / "report.json"),
                "best_epoch": result.best_epoch,
            }
            manifest.completed_seeds.append(seed)
    except CsposError as e:
        failure = e
        manifest.status = "partial" if manifest.completed_seeds else "failed"
        manifest.error = f"{type(e).__name__}: {e}"
        log.error("run failed after seeds %s: %s", manifest.completed_seeds, e)

    if reports:
        agg = aggregate_seeds(reports)
        atomic_write_text(out / "aggregate.tsv", report_tsv(agg))
        atomic_write_text(out / "aggregate.txt", report_text(agg, f"{config.arch.kind} / {config.condition}"))
        manifest.aggregate = {"tsv": str(out / "aggregate.tsv"), "text": str(out / "aggregate.txt")}
        manifest.summary = {k: v for k, v in agg.scalars().items() if v is not None}
    atomic_write_text(out / "manifest.json", manifest.to_json())
    if failure is not None:
        if not manifest.completed_seeds:
            # nothing usable was produced: surface the original error and its exit code
            failure.manifest = manifest
            raise failure
        err = PartialRunError(f"run incomplete ({manifest.error}); completed seeds: {manifest.completed_seeds}")
        err.manifest = manifest
        raise err
    return manifest


# --------------------------------------------------------------------------
# tables


def render_table(manifests, metric: str = "pos_accuracy", mark: str = "*") -> str:
    """Rows (architecture, condition), columns corpora, cells mean accuracy in percent.

    The best cell in each column is marked; equal values at two decimals
    are all marked.
    """
    if not manifests:
        raise ValueError("render_table needs at least one manifest")
    rows, cols, cells = [], [], {}
    for m in manifests:
        r = (m.architecture, m.condition)
        if r not in rows:
            rows.append(r)
        if m.corpus_label not in cols:
            cols.append(m.corpus_label)
        v = m.summary.get(metric)
        if v is not None:
            cells[(r, m.corpus_label)] = round(100.0 * v, 2)
    best = {}
    for c in cols:
        vals = [v for (r, cc), v in cells.items() if cc == c]
        if vals:
            best[c] = max(vals)
    head = ["Model", "Embeddings"] + cols
    body = []
    for r in rows:
        line = [r[0], r[1]]
        for c in cols:
            v = cells.get((r, c))
            line.append("-" if v is None else f"{v:.2f}" + (mark if v == best[c] else ""))
        body.append(line)
    widths = [max(len(x[i]) for x in [head] + body) for i in range(len(head))]
    fmt = lambda xs: "  ".join(x.ljust(w) if i < 2 else x.rjust(w) for i, (x, w) in enumerate(zip(xs, widths)))  # noqa: E731
    out = [fmt(head), "  ".join("-" * w for w in widths)] + [fmt(b) for b in body]
    return "\n".join(line.rstrip() for line in out) + "\n"
