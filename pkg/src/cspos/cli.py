"""Command-line entry point: ``cspos <subcommand> ...``.

Exit codes: 0 success, 2 config/usage error, 3 data error, 4 numeric
failure, 5 partial run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import __version__
from .align import induce_dictionary, load_projection, procrustes_fit, project, read_dictionary, save_projection, write_dictionary
from .corpus import SPLITS, corpus_stats, format_stats, read_corpus, write_corpus
from .embed import CompositionRecipe, EmbeddingConfig, EmbeddingTable, compose_corpus, train_embeddings
from .errors import ConfigError, CsposError, DataError
from .experiment import RunManifest, _coerce, load_config, render_table, run_experiment
from .metrics import evaluate, report_text, report_tsv
from .synth import SynthConfig, config_from_dict, config_to_dict, generate_synthetic
from .taggers import KINDS, TaggerArch, TaggerModel, TrainSchedule, tag, train_bilstm_crf, train_mtl_pos, train_mtl_pos_lid

log = logging.getLogger("cspos")


def _pairs(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _read(path, split):
    try:
        return read_corpus(path, split)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None


def _load_table(path):
    if path is None:
        return None
    try:
        if str(path).endswith(".vec"):
            return EmbeddingTable.load_text(path)
        return EmbeddingTable.load(path)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None


# -- subcommands -------------------------------------------------------------


def cmd_prep(args):
    for path in args.files:
        corpus = _read(path, args.split)
        if args.json:
            print(json.dumps({"file": str(path), **corpus_stats(corpus)}, sort_keys=True))
        else:
            print(format_stats(corpus_stats(corpus), str(path)))
    return 0


def cmd_synth(args):
    values = {}
    if args.config:
        values.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    defaults = SynthConfig()
    for k, v in _pairs(args.set).items():
        if k not in {f.name for f in fields(SynthConfig)}:
            raise ConfigError(f"unknown synth option {k!r}")
        d = getattr(defaults, k)
        if k == "templates":
            values[k] = v
        elif k == "lexicon_seed":
            values[k] = None if v.lower() == "none" else int(v)
        else:
            values[k] = type(d)(v)
    config = config_from_dict(values)
    data = generate_synthetic(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, corpus in data.corpora().items():
        write_corpus(corpus, out / (f"{name}.txt" if corpus.split == "RAW" else f"{name}.conllu"))
    write_dictionary(data.dictionary, out / "dictionary.tsv")
    (out / "synth.json").write_text(json.dumps(config_to_dict(config), indent=2) + "\n", encoding="utf-8")
    print(format_stats(corpus_stats(data.train), "train"))
    return 0


def cmd_embed(args):
    config = _coerce(EmbeddingConfig, _pairs(args.set), "embedding")
    config.validate()
    mono = tuple(_read(p, "RAW") for p in args.mono)
    cs = tuple(_read(p, "RAW") for p in args.cs)
    recipe = CompositionRecipe(args.kind, mono, cs)
    recipe.validate()
    table = train_embeddings(compose_corpus(recipe, seed=config.seed), config)
    table.save(args.out)
    if args.text:
        table.save_text(args.text)
    print(f"{len(table)} words, dim {table.dim} -> {args.out}")
    return 0


def cmd_align(args):
    if args.action == "fit":
        src, tgt = _load_table(args.src), _load_table(args.tgt)
        W = procrustes_fit(src, tgt, read_dictionary(args.dictionary))
        save_projection(W, args.out)
        print(f"projection {W.shape[0]}x{W.shape[1]} -> {args.out}")
    elif args.action == "apply":
        table = project(_load_table(args.table), load_projection(args.projection))
        table.save(args.out)
        print(f"projected {len(table)} words -> {args.out}")
    else:
        src, tgt = _load_table(args.src), _load_table(args.tgt)
        W = load_projection(args.projection)
        words = [line.strip() for line in Path(args.words).read_text(encoding="utf-8").splitlines()
                 if line.strip()] if args.words else None
        for w, cands in induce_dictionary(src, tgt, W, args.k, words):
            print(w + "\t" + "\t".join(cands))
    return 0


def cmd_train(args):
    arch_vals = _pairs(args.set_arch)
    arch_vals["kind"] = args.arch
    table = _load_table(args.embeddings)
    arch = _coerce(TaggerArch, arch_vals, "tagger")
    schedule = _coerce(TrainSchedule, _pairs(args.set_schedule), "schedule")
    if table is not None:
        arch = replace(arch, embedding_dim=table.dim)
    train = _read(args.train, "TRAIN")
    dev = _read(args.dev, "DEV") if args.dev else None
    if args.arch == "BILSTM_CRF":
        result = train_bilstm_crf(train, dev, arch, schedule, table)
    elif args.arch == "MTL_POS":
        if not args.train_b:
            raise ConfigError("MTL_POS needs --train-b")
        result = train_mtl_pos(train, _read(args.train_b, "TRAIN"), dev,
                               _read(args.dev_b, "DEV") if args.dev_b else None, arch, schedule, table)
    else:
        result = train_mtl_pos_lid(train, dev, arch, schedule, table)
    result.model.save(args.out, embedding_ref=args.embeddings)
    if args.log:
        Path(args.log).write_text(result.log_tsv(), encoding="utf-8")
    print(f"best epoch {result.best_epoch}, dev accuracy {100 * result.best_dev_acc:.2f}% -> {args.out}")
    return 0


def cmd_eval(args):
    table_path = args.embeddings
    model = TaggerModel.load(args.model)
    if table_path is None and model.embedding_ref and Path(model.embedding_ref).exists():
        table_path = model.embedding_ref
    table = _load_table(table_path)
    model.table = table
    test = _read(args.test, "TEST")
    report = evaluate(test, tag(model, test), table=table, seed=args.seed)
    if args.out:
        Path(args.out).write_text(report_tsv(report), encoding="utf-8")
    print(report_text(report, str(args.test)), end="")
    return 0


def cmd_report(args):
    manifests = []
    for p in args.manifests:
        p = Path(p)
        manifests.append(RunManifest.load(p / "manifest.json" if p.is_dir() else p))
    print(render_table(manifests, metric=args.metric), end="")
    return 0


def cmd_run(args):
    config = load_config(args.config, args.set)
    if args.dry_run:
        print(json.dumps({"config_hash": config.config_hash(), **config.canonical()}, indent=2, sort_keys=True))
        return 0
    manifest = run_experiment(config)
    print(f"{manifest.status}: seeds {manifest.completed_seeds} -> {Path(manifest.output_dir) / 'manifest.json'}")
    if manifest.summary:
        print(render_table([manifest]), end="")
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cspos", description="POS tagging experiments for code-switched text.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prep", help="parse and validate corpora, print statistics")
    s.add_argument("files", nargs="+")
    s.add_argument("--split", choices=SPLITS, default="TRAIN", help="RAW reads one sentence per line")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_prep)

    s = sub.add_parser("synth", help="generate a synthetic code-switched language pair")
    s.add_argument("--out", required=True)
    s.add_argument("--config", help="JSON file with generator options")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one generator option")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("embed", help="compose a raw corpus and train subword embeddings")
    s.add_argument("--kind", required=True, choices=("MONO", "CFM", "PCS", "PSEUDO_CS", "MULTI_PIVOT"))
    s.add_argument("--mono", nargs="*", default=[], help="monolingual raw corpora")
    s.add_argument("--cs", nargs="*", default=[], help="code-switched raw corpora")
    s.add_argument("--out", required=True)
    s.add_argument("--text", help="also write composed vectors in text format")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="embedding option, e.g. dim=50")
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("align", help="orthogonal Procrustes mapping between embedding models")
    asub = s.add_subparsers(dest="action", required=True)
    a = asub.add_parser("fit")
    a.add_argument("--src", required=True)
    a.add_argument("--tgt", required=True)
    a.add_argument("--dictionary", required=True, help="TSV of source<TAB>target pairs")
    a.add_argument("--out", required=True)
    a = asub.add_parser("apply")
    a.add_argument("--table", required=True)
    a.add_argument("--projection", required=True)
    a.add_argument("--out", required=True)
    a = asub.add_parser("induce")
    a.add_argument("--src", required=True)
    a.add_argument("--tgt", required=True)
    a.add_argument("--projection", required=True)
    a.add_argument("--words", help="file with one source word per line (default: whole vocabulary)")
    a.add_argument("-k", type=int, default=1)
    s.set_defaults(func=cmd_align)

    s = sub.add_parser("train", help="train one tagger")
    s.add_argument("--arch", choices=KINDS, default="BILSTM_CRF")
    s.add_argument("--train", required=True)
    s.add_argument("--dev")
    s.add_argument("--train-b", help="second pair's training corpus (MTL_POS)")
    s.add_argument("--dev-b")
    s.add_argument("--embeddings", help="embedding model (.bin) or text vectors (.vec)")
    s.add_argument("--out", required=True, help="checkpoint path")
    s.add_argument("--log", help="write the per-epoch log as TSV")
    s.add_argument("--set-arch", action="append", metavar="KEY=VALUE", help="e.g. hidden=64")
    s.add_argument("--set-schedule", action="append", metavar="KEY=VALUE", help="e.g. lr=0.002")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="tag a test corpus and report metrics")
    s.add_argument("--model", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--embeddings", help="defaults to the model recorded in the checkpoint")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="write the report as TSV")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("report", help="render an accuracy table from run manifests")
    s.add_argument("manifests", nargs="+", help="manifest.json files or run directories")
    s.add_argument("--metric", default="pos_accuracy")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("run", help="run a full experiment from a config file")
    s.add_argument("config")
    s.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override a config value")
    s.add_argument("--dry-run", action="store_true", help="validate and print the resolved config")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CsposError as e:
        print(f"cspos: error: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, json.JSONDecodeError) as e:
        print(f"cspos: error: {e}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
