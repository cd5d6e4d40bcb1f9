"""``procap`` command line.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Failures print one line to stderr: ``procap: error: <kind>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset import SPLITS, convert, load_dataset, read_manifest
from .errors import ConfigError, PartialFailureError, ProCapError
from .rundir import RunDirectory

log = logging.getLogger("procap")

SUBCOMMANDS = ("convert", "preprocess", "caption", "train", "evaluate", "ablate", "report")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_run_dir(p):
    p.add_argument("--run-dir", default="run", help="run directory (default: ./run)")


def _add_config(p, questions=True):
    g = p.add_argument_group("configuration (flag > --config file > default)")
    g.add_argument("--config", help="flat JSON RunConfig file")
    g.add_argument("--head", choices=("encoder", "prompt"))
    g.add_argument("--dataset-name")
    g.add_argument("--lr", type=float, dest="learning_rate")
    g.add_argument("--batch-size", type=int)
    g.add_argument("--epochs", type=int)
    g.add_argument("--seeds", help="comma-separated seeds, e.g. 0,1,2")
    g.add_argument("--backbone", help="'stub' or a Hugging Face model id")
    g.add_argument("--encoder-dim", type=int)
    g.add_argument("--loss", choices=("bce", "true-class"),
                   help="bce: per-output binary cross-entropy; true-class: -(y0 log s0 + y1 log s1)")
    g.add_argument("--use-tags", action="store_true", default=None)
    g.add_argument("--max-answer-tokens", type=int)
    if questions:
        g.add_argument("--length-penalty", type=float)
        g.add_argument("--questions", dest="question_subset",
                       help="all | content_only | comma list of foci (race,gender,...)")


_CONFIG_KEYS = ("head", "dataset_name", "learning_rate", "batch_size", "epochs", "seeds", "backbone",
                "encoder_dim", "loss", "use_tags", "max_answer_tokens", "length_penalty", "question_subset")


def resolve_config(args):
    from .harness import RunConfig

    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    if overrides.get("seeds") is not None:
        try:
            overrides["seeds"] = [int(s) for s in overrides["seeds"].split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"bad --seeds value {args.seeds!r}") from None
    if getattr(args, "config", None):
        return RunConfig.load(args.config, **overrides)
    return RunConfig.from_dict({k: v for k, v in overrides.items() if v is not None})


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="procap", description="Probe-captioning pipeline for hateful meme detection.")
    parser.add_argument("--version", action="version", version=f"procap {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}", parser_class=_Parser)

    p = sub.add_parser("convert", help="convert a raw FHM/HarM/MAMI file into a manifest",
                       description="Convert one raw release file into manifest records of one split. "
                                   "Appends to --out if it exists. For FHM the labelled evaluation file "
                                   "is normally dev_seen.jsonl (convert it with --split test); check "
                                   "your release. HarM harm levels are merged to binary.")
    p.add_argument("--dataset", required=True, choices=("fhm", "harm", "mami"))
    p.add_argument("--in", dest="raw", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", required=True, choices=SPLITS)

    p = sub.add_parser("preprocess", help="detect meme text and in-paint it")
    _add_run_dir(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", help="cleaned images directory (default: <run-dir>/images)")
    p.add_argument("--fill", choices=("median-ring", "median-image"), default="median-ring")
    p.add_argument("--ocr", default="contour", help="contour | easyocr | fixture:<sidecar.json>")

    p = sub.add_parser("caption", help="ask the probing questions and fill the answer cache")
    _add_run_dir(p)
    _add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--backend", help="URL, fixture:<answers.json> or local:<model-id> "
                                     "(PROCAP_BACKEND_URL overrides)")
    p.add_argument("--cache", help="answer cache (default: <run-dir>/cache/answers.jsonl)")
    p.add_argument("--split", choices=SPLITS + ("all",), default="all")
    p.add_argument("--concurrency", type=int, default=1)

    p = sub.add_parser("train", help="train one head per seed")
    _add_run_dir(p)
    _add_config(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--cache")

    p = sub.add_parser("evaluate", help="score the test split with every trained seed")
    _add_run_dir(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--cache")
    p.add_argument("--checkpoints", help="default: <run-dir>/checkpoints")
    p.add_argument("--inference", action="store_true", help="allow unlabeled test memes; skip metrics")

    p = sub.add_parser("ablate", help="run a question-subset x length-penalty grid")
    _add_run_dir(p)
    _add_config(p)
    p.add_argument("--grid", required=True, help="e.g. 'questions=content_only,all;penalty=1,2,3' or a JSON file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--cache")
    p.add_argument("--backend", help="fill missing cache cells with this backend first")

    p = sub.add_parser("report", help="render tables and figures from report JSON files")
    _add_run_dir(p)
    p.add_argument("--in", dest="indir", help="directory of report JSON files (default: <run-dir>/reports)")
    return parser


def _images_for(records, dataset_root: Path, cleaned_dir: Path):
    from .preprocess import load_image

    def loader(rec):
        cleaned = cleaned_dir / f"{rec.id}.png"
        path = cleaned if cleaned.is_file() else Path(rec.image_ref)
        if not path.is_absolute() and path is not cleaned:
            path = dataset_root / path
        return lambda: load_image(path)

    return {r.id: loader(r) for r in records}


def cmd_convert(args):
    out = convert(args.dataset, args.raw, args.out, args.split)
    print(f"wrote {out}")
    return 0


def cmd_preprocess(args):
    from .preprocess import clean_image, load_image, make_ocr, save_image

    run = RunDirectory(args.run_dir).ensure()
    out_dir = Path(args.out_dir) if args.out_dir else run.images
    manifest = Path(args.manifest)
    records = read_manifest(manifest)
    ocr = make_ocr(args.ocr)
    failures = {}
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "regions.jsonl").open("w", encoding="utf-8") as fh:
        for rec in records:
            path = Path(rec.image_ref)
            if not path.is_absolute():
                path = manifest.parent / path
            try:
                cleaned, regions = clean_image(load_image(path), ocr, image_id=rec.id, fill=args.fill)
                save_image(cleaned, out_dir / f"{rec.id}.png")
            except ProCapError as exc:
                failures[rec.id] = str(exc)
                continue
            fh.write(json.dumps({"id": rec.id, "regions": [r.to_json() for r in regions]}) + "\n")
    print(f"preprocess: {len(records)} images, {len(failures)} failed")
    if failures:
        raise PartialFailureError(f"{len(failures)} of {len(records)} images failed: {', '.join(sorted(failures))}")
    return 0


def _caption(records, dataset_root, run, config, backend, cache, concurrency=1, bank=None):
    from .probing import caption_records

    images = _images_for(records, dataset_root, run.images)
    return caption_records([r.id for r in records], images, bank or config.bank, backend,
                           config.decode_params, cache, concurrency=concurrency)


def cmd_caption(args):
    from .probing import AnswerCache, make_backend

    config = resolve_config(args)
    run = RunDirectory(args.run_dir)
    run.write_config(config)
    manifest = Path(args.manifest)
    records = [r for r in read_manifest(manifest) if args.split == "all" or r.split == args.split]
    cache = AnswerCache(args.cache or run.cache)
    before = len(cache)
    result = _caption(records, manifest.parent, run, config, make_backend(args.backend), cache, args.concurrency)
    print(f"caption: {len(records)} memes, {len(result.failures)} failed, {len(cache) - before} new cache rows "
          f"(params {config.decode_params.fingerprint})")
    if result.failures:
        ids = ", ".join(sorted(result.failures))
        raise PartialFailureError(f"{len(result.failures)} of {len(records)} memes failed: {ids}")
    return 0


def _procaps(config, records, cache_path):
    from .probing import AnswerCache, load_procaps

    return load_procaps([r.id for r in records], config.bank, config.decode_params, AnswerCache(cache_path))


def cmd_train(args):
    from .harness import train

    config = resolve_config(args)
    run = RunDirectory(args.run_dir)
    run.write_config(config)
    train_set = load_dataset(args.manifest, "train", name=config.dataset_name)
    procaps = _procaps(config, train_set, args.cache or run.cache)
    summary = []
    for seed in config.seeds:
        trained = train(config, train_set, procaps, seed=seed)
        trained.save(run.checkpoints / f"seed_{seed}")
        summary.append({"seed": seed, "train_accuracy": trained.train_accuracy, "final_loss": trained.final_loss})
        print(f"seed {seed}: train accuracy {trained.train_accuracy:.4f}, final loss {trained.final_loss:.6f}")
    run.reports.mkdir(parents=True, exist_ok=True)
    (run.reports / "train.json").write_text(
        json.dumps({"config_fingerprint": config.fingerprint, "seeds": summary}, indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_evaluate(args):
    from .harness import SeedResult, TrainedModel, accuracy, aggregate_runs, auc_roc, evaluate, render_report

    run = RunDirectory(args.run_dir)
    ckpt_root = Path(args.checkpoints) if args.checkpoints else run.checkpoints
    dirs = sorted(ckpt_root.glob("seed_*"), key=lambda p: int(p.name.split("_", 1)[1]))
    if not dirs:
        raise ProCapError(f"no seed_* checkpoints under {ckpt_root}")
    test_set = load_dataset(args.manifest, "test", inference=args.inference)
    labels = [r.label for r in test_set]
    results, config = [], None
    run.reports.mkdir(parents=True, exist_ok=True)
    for d in dirs:
        model = TrainedModel.load(d)
        config = model.config
        scores, preds = evaluate(model, test_set, _procaps(config, test_set, args.cache or run.cache))
        with (run.reports / f"predictions_seed_{model.seed}.jsonl").open("w", encoding="utf-8") as fh:
            for rec, s, p in zip(test_set, scores, preds):
                fh.write(json.dumps({"id": rec.id, "s0": s.s0, "s1": s.s1, "prediction": p}) + "\n")
        if not args.inference:
            results.append(SeedResult(model.seed, auc_roc([s.s1 for s in scores], labels), accuracy(preds, labels),
                                      model.train_accuracy, model.final_loss))
    if args.inference:
        print(f"evaluate: wrote predictions for {len(dirs)} seeds")
        return 0
    report = aggregate_runs(results, config.fingerprint, config.to_dict())
    report.save(run.reports / "metrics.json")
    print(render_report(report, title=config.dataset_name), end="")
    return 0


def cmd_ablate(args):
    from .harness import expand_grid, parse_grid, run_ablation
    from .probing import AnswerCache, make_backend, select_bank

    config = resolve_config(args)
    run = RunDirectory(args.run_dir)
    run.write_config(config)
    grid = parse_grid(args.grid)
    manifest = Path(args.manifest)
    train_set = load_dataset(manifest, "train", name=config.dataset_name)
    test_set = load_dataset(manifest, "test", name=config.dataset_name)
    cache = AnswerCache(args.cache or run.cache)
    if args.backend:
        backend = make_backend(args.backend)
        records = list(train_set) + list(test_set)
        by_penalty = {}
        for cell in expand_grid(grid, config):
            by_penalty.setdefault(cell.config.length_penalty, set()).update(q.focus for q in cell.config.bank)
        for penalty, foci in sorted(by_penalty.items()):
            bank = [q for q in select_bank("all") if q.focus in foci]
            res = _caption(records, manifest.parent, run, config.replace(length_penalty=penalty), backend, cache,
                           bank=bank)
            if res.failures:
                raise ProCapError(f"captioning failed for {len(res.failures)} memes at penalty {penalty:g}")
    table = run_ablation(grid, config, train_set, test_set, cache)
    table.save(run.reports / "ablation.json")
    text = table.render()
    (run.reports / "ablation.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_report(args):
    from .harness import AblationTable, MetricsReport, render_report, render_tables
    from .plotting import plot_ablation, plot_seeds

    run = RunDirectory(args.run_dir)
    indir = Path(args.indir) if args.indir else run.reports
    if not indir.is_dir():
        raise ProCapError(f"report directory not found: {indir}")
    tables, reports = [], []
    for path in sorted(indir.glob("*.json")):
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except ValueError:
            continue
        if isinstance(data, dict) and data.get("kind") == "ablation":
            tables.append((path.stem, AblationTable.from_json(data)))
        elif isinstance(data, dict) and "per_seed" in data and "mean_auc" in data:
            reports.append((path.stem, MetricsReport.from_json(data)))
    if not tables and not reports:
        raise ProCapError(f"no metrics or ablation reports in {indir}")
    chunks = []
    for name, rep in reports:
        chunks.append(render_report(rep, title=name))
        plot_seeds(rep, indir / "figures" / f"{name}_seeds.png", title=name)
    if tables:
        chunks.append(render_tables([t for _, t in tables]))
        plot_ablation([t for _, t in tables], indir / "figures" / "ablation_acc.png", "acc")
        plot_ablation([t for _, t in tables], indir / "figures" / "ablation_auc.png", "auc")
    text = "\n".join(chunks)
    (indir / "summary.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


COMMANDS = {
    "convert": cmd_convert,
    "preprocess": cmd_preprocess,
    "caption": cmd_caption,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "report": cmd_report,
}


def _fail(kind: str, message: str, code: int) -> int:
    print(f"procap: error: {kind}: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    first = next((a for a in argv if not a.startswith("-")), None)
    if first is not None and first not in SUBCOMMANDS:
        return _fail("usage", f"unknown subcommand {first!r}", 2)
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", exc, 2)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help()
        return 2
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail(exc.kind, exc, 2)
    except ProCapError as exc:
        return _fail(exc.kind, exc, 1)
    except (OSError, ValueError) as exc:
        return _fail("runtime", exc, 1)


if __name__ == "__main__":
    sys.exit(main())
