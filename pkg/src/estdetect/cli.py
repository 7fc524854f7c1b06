"""Command-line pipeline: ``estdetect {synth,extract,fuse,select,evaluate,report}``.

Exit codes: 0 success, 2 invalid input, 3 evaluation failure.  All
randomness comes from ``--seed``.  Each command records its configuration
(including SHA-256 digests of its input files) and names the resulting
config hash in its output file names or provenance sidecar.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus as cio
from .emotion import AUDIO_EXPANSION
from .errors import EstDetectError
from .est import top_transitions
from .evaluation import EvaluationError, PipelineConfig, config_hash, run_trials
from .fusion import DEFAULT_SELECT_RATIO, fuse
from .learners import KINDS, LearnerSpec, canonical_kind
from .synth import SynthConfig, synth_corpus

EXIT_INPUT = 2
EXIT_EVAL = 3


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _pairs(items, what: str) -> dict[str, str]:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name or not value:
            raise argparse.ArgumentTypeError(f"--{what} expects name=value, got {item!r}")
        out[name.strip()] = value.strip()
    return out


def _run_config(args, inputs: dict[str, str]) -> dict:
    """Echo of every option except the output directory, plus input digests."""
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out_dir", "func")}
    cfg["input_sha256"] = {k: _file_digest(p) for k, p in sorted(inputs.items())}
    return json.loads(json.dumps(cfg, default=str))


def _write_provenance(out, out_dir: Path, command: str, cfg: dict, outputs: list[str]) -> str:
    h = config_hash(cfg)
    doc = {"command": command, "config": cfg, "config_hash": h, "outputs": sorted(outputs)}
    out.add(out_dir / f"{command}-{h}.json", json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return h


def _inputs(args) -> dict[str, str]:
    inputs = {}
    for key in ("manifest", "visual", "audio"):
        if getattr(args, key, None):
            inputs[key] = getattr(args, key)
    for name, path in _pairs(getattr(args, "aux", None), "aux").items():
        inputs[f"aux:{name}"] = path
    return inputs


def _load(args, need_visual: bool = True):
    aux = _pairs(getattr(args, "aux", None), "aux")
    if need_visual or getattr(args, "visual", None):
        return cio.load_corpus(args.manifest, args.visual, getattr(args, "audio", None), aux)
    manifest = cio.read_manifest(args.manifest)
    corpus = cio.Corpus(manifest, {}, {}, {n: cio.read_block(p, n) for n, p in aux.items()})
    for block in corpus.blocks.values():
        for cid in manifest.clip_ids:
            block.row(cid)
    return corpus


def _resolve_blocks(args, corpus):
    names = [b.strip() for b in args.blocks.split(",") if b.strip()] if args.blocks else None
    if names is None:
        names = (["est"] if corpus.visual else []) + [n for n in corpus.blocks if n != "est"]
    blocks = []
    for name in names:
        if name in corpus.blocks:
            blocks.append(corpus.blocks[name])
        elif name == "est" and corpus.visual:
            blocks.append(corpus.est_block(args.audio_factor))
        else:
            raise EstDetectError(f"block {name!r} is neither an --aux input nor computable (est needs --visual)")
    if not blocks:
        raise EstDetectError("no feature blocks selected")
    return blocks


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    aux = tuple((n, int(d)) for n, d in _pairs(args.aux_dim, "aux-dim").items())
    config = SynthConfig(
        n_clips_per_class=args.clips_per_class, frames_min=args.frames_min, frames_max=args.frames_max,
        separation=args.separation, audio_noise=args.audio_noise, n_identities=args.identities,
        aux_blocks=aux, seed=args.seed,
    )
    paths = synth_corpus(config, args.out_dir)
    for p in sorted(paths.values()):
        print(p)
    return 0


def cmd_extract(args) -> int:
    corpus = _load(args)
    cfg = _run_config(args, _inputs(args))
    out_dir = Path(args.out_dir)
    est = corpus.est_block(args.audio_factor)
    rows = cio.aggregate_report(corpus, args.audio_factor)
    with cio.StagedOutputs() as out:
        out.add(out_dir / "est.csv", cio.block_csv(est))
        out.add(out_dir / "aggregate.csv", cio.aggregate_report_csv(rows))
        h = _write_provenance(out, out_dir, "extract", cfg, ["est.csv", "aggregate.csv"])
    print(f"est.csv: {len(est.clip_ids)} clips x {est.dimension} features (config {h})")
    return 0


def cmd_fuse(args) -> int:
    corpus = _load(args, need_visual=False)
    cfg = _run_config(args, _inputs(args))
    records = fuse(_resolve_blocks(args, corpus), corpus.manifest)
    out_dir = Path(args.out_dir)
    with cio.StagedOutputs() as out:
        out.add(out_dir / "fused.csv", cio.fused_csv(records))
        h = _write_provenance(out, out_dir, "fuse", cfg, ["fused.csv"])
    print(f"fused.csv: {len(records)} clips x {records[0].dimension} features (config {h})")
    return 0


def _pipeline(args) -> PipelineConfig:
    ratio = None if args.select_k is not None else args.select_ratio
    if ratio is not None and ratio <= 0:
        ratio = None
    return PipelineConfig(select_k=args.select_k, select_ratio=ratio, select_method=args.select_method,
                          select_global=args.select_global,
                          standardize=not getattr(args, "no_standardize", False))


def cmd_select(args) -> int:
    corpus = _load(args, need_visual=False)
    cfg = _run_config(args, _inputs(args))
    records = fuse(_resolve_blocks(args, corpus), corpus.manifest)
    X = np.vstack([r.features for r in records])
    y = np.array([r.label for r in records])
    pipe = _pipeline(args)
    if not pipe.selects:
        raise EstDetectError("select needs --select-k or a positive --select-ratio")
    mask = pipe.fit_mask(X, y)
    out_dir = Path(args.out_dir)
    with cio.StagedOutputs() as out:
        out.add(out_dir / "selection.json", mask.to_json())
        h = _write_provenance(out, out_dir, "select", cfg, ["selection.json"])
    print(f"selected {mask.k} of {X.shape[1]} features (config {h})")
    return 0


def cmd_evaluate(args) -> int:
    corpus = _load(args, need_visual=False)
    cfg = _run_config(args, _inputs(args))
    records = fuse(_resolve_blocks(args, corpus), corpus.manifest)
    kinds = [canonical_kind(c) for c in args.classifiers.split(",")] if args.classifiers else list(KINDS)
    specs = [LearnerSpec(k, seed=args.seed) for k in kinds]
    strategy = "identity_grouped" if args.identity_grouped else ("shuffled" if args.shuffled else "stratified")
    h = config_hash(cfg)
    report = run_trials(specs, records, K=args.folds, n_trials=args.trials, base_seed=args.seed,
                        strategy=strategy, config=_pipeline(args), echo=cfg)
    out_dir = Path(args.out_dir)
    with cio.StagedOutputs() as out:
        out.add(out_dir / f"eval-{h}.json", report.to_json())
        out.add(out_dir / f"eval-{h}.csv", report.to_csv())
        out.add(out_dir / f"confusion-{h}.csv", report.confusion_csv())
    dim = records[0].dimension
    print(f"{len(records)} clips, {dim} features, K={args.folds}, trials={args.trials}, "
          f"strategy={strategy}, config {h}")
    print(report.summary_table())
    return 0


def cmd_report(args) -> int:
    if args.eval_report:
        doc = json.loads(Path(args.eval_report).read_text(encoding="utf-8"))
        print(f"{'classifier':<22} {'AUC best':>9} {'AUC top10':>10} {'ACC best':>9} {'ACC top10':>10}")
        for name, c in doc["classifiers"].items():
            s = c["summary"]
            cells = [s["roc_auc"]["best"], s["roc_auc"]["top10_mean"], s["accuracy"]["best"], s["accuracy"]["top10_mean"]]
            print(f"{name:<22} " + " ".join(f"{'n/a' if v is None else f'{v:.4f}':>9}" for v in cells))
        return 0
    if not (args.manifest and args.visual and args.out_dir):
        raise EstDetectError("report needs --eval-report, or --manifest, --visual and --out-dir")
    corpus = _load(args)
    cfg = _run_config(args, _inputs(args))
    rows = cio.aggregate_report(corpus, args.audio_factor)
    out_dir = Path(args.out_dir)
    with cio.StagedOutputs() as out:
        out.add(out_dir / "aggregate.csv", cio.aggregate_report_csv(rows))
        _write_provenance(out, out_dir, "report", cfg, ["aggregate.csv"])
    for source in cio.REPORT_SOURCES:
        for label in ("deceptive", "truthful"):
            try:
                vec = cio.report_vector(rows, label, "est", "clip_mean", source)
            except KeyError:
                continue
            tops = ", ".join(f"{a}->{b} {v:.3f}" for a, b, v in top_transitions(vec, 5))
            print(f"{source:<8} {label:<10} top EST: {tops}")
    return 0


# ------------------------------------------------------------------ parser


def _add_corpus(p, visual_required: bool):
    p.add_argument("--manifest", required=True)
    p.add_argument("--visual", required=visual_required)
    p.add_argument("--audio")
    p.add_argument("--aux", action="append", default=[], metavar="NAME=PATH")
    p.add_argument("--audio-factor", type=int, default=AUDIO_EXPANSION)


def _add_selection(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--select-ratio", type=float, default=DEFAULT_SELECT_RATIO,
                   help="keep round(ratio * dimension) features; 0 disables selection")
    g.add_argument("--select-k", type=int)
    p.add_argument("--select-method", choices=("pearson", "anova"), default="pearson")
    p.add_argument("--select-global", action="store_true",
                   help="fit selection on the whole data set instead of each training split")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="estdetect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a seeded synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clips-per-class", type=int, default=100)
    p.add_argument("--frames-min", type=int, default=150)
    p.add_argument("--frames-max", type=int, default=1500)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--audio-noise", type=float, default=0.1)
    p.add_argument("--identities", type=int, default=58)
    p.add_argument("--aux-dim", action="append", default=[], metavar="NAME=DIM",
                   help="add a Gaussian auxiliary block of this dimension")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="compute the EST block and class aggregates")
    _add_corpus(p, visual_required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fuse", help="concatenate feature blocks into fused.csv")
    _add_corpus(p, visual_required=False)
    p.add_argument("--blocks", help="comma-separated block order, e.g. est,me,is13")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("select", help="whole-data filter selection mask (selection.json)")
    _add_corpus(p, visual_required=False)
    p.add_argument("--blocks")
    _add_selection(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="repeated K-fold evaluation of the classifiers")
    _add_corpus(p, visual_required=False)
    p.add_argument("--blocks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--trials", type=int, default=100)
    _add_selection(p)
    folds = p.add_mutually_exclusive_group()
    folds.add_argument("--identity-grouped", action="store_true")
    folds.add_argument("--shuffled", action="store_true", help="unstratified shuffled folds")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--classifiers", help=f"comma-separated subset of {','.join(KINDS)}")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="class aggregate report, or summarise an eval JSON")
    p.add_argument("--manifest")
    p.add_argument("--visual")
    p.add_argument("--audio")
    p.add_argument("--audio-factor", type=int, default=AUDIO_EXPANSION)
    p.add_argument("--eval-report")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except (EstDetectError, ValueError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
