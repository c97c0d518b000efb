"""Command-line pipeline: simulate, train, parse, eval, keyframes.

Every subcommand is driven by a strict YAML config and a single seed, so
rerunning with the same inputs produces byte-identical artifacts.  Exit
codes: 0 ok, 2 config error, 3 data error, 4 model error, 5 internal.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import traceback
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from . import config as cfg
from .corpus import build_corpus
from .errors import ConfigError, DataError, ModelError
from .evaluation import (chance_baseline, dense_keys, gt_change_frames,
                         keyframe_scores, macro_metrics, select_keyframes)
from .fileio import (read_ground_truth, read_model, read_parse_dump,
                     read_trace, write_feature_dump, write_ground_truth,
                     write_keyframes, write_metrics_report, write_model,
                     write_parse_graph, write_trace)
from .parsing import FitConfig, fit, parse
from .worldsim import ScenarioSpec, simulate, validate_spec

log = logging.getLogger("fiveminds")


# ---------------------------------------------------------------------------
# Workers (module level so the process pool can pickle them)
# ---------------------------------------------------------------------------


def _simulate_one(args: tuple[ScenarioSpec, str, str]) -> str:
    spec, traces_dir, gt_dir = args
    trace, gt = simulate(spec)
    write_trace(trace, Path(traces_dir) / f"{spec.trace_id}.jsonl")
    write_ground_truth(gt, Path(gt_dir) / f"{spec.trace_id}.txt")
    return spec.trace_id


def _parse_one(args: tuple[str, str, str, bool]) -> str:
    trace_path, model_path, out_dir, dump_features = args
    model = read_model(model_path)
    trace = read_trace(trace_path)
    pg = parse(trace, model)
    write_parse_graph(pg, Path(out_dir) / f"{trace.trace_id}.parse.txt")
    if dump_features:
        from .features import trace_features
        write_feature_dump(trace_features(trace).features,
                           Path(out_dir) / f"{trace.trace_id}.features.bin")
    return trace.trace_id


def _eval_one(args: tuple[str, str]) -> tuple[str, dict, dict]:
    parse_path, gt_path = args
    summary = read_parse_dump(parse_path)
    gt = read_ground_truth(gt_path)
    if (gt.n_frames, gt.n_objects) != (summary.n_frames, summary.n_objects):
        raise DataError(f"parse dump and ground truth disagree on shape "
                        f"for {summary.trace_id}")
    truth = dense_keys(gt)
    predicted = {k: 3 for k in truth}
    predicted.update(summary.deltas)
    return summary.trace_id, predicted, truth


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _run_pool(worker, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [worker(it) for it in items]
    with Pool(processes=jobs) as pool:
        return pool.map(worker, items)


def cmd_simulate(conf: cfg.SimulateConfig, jobs: int) -> None:
    jobs_specs: list[tuple[ScenarioSpec, str]] = []
    if conf.corpus is not None:
        train, test = build_corpus(n_train=conf.corpus.n_train,
                                   n_test=conf.corpus.n_test,
                                   n_objects=conf.corpus.n_objects,
                                   seed=conf.corpus.seed)
        jobs_specs += [(s, "train") for s in train]
        jobs_specs += [(s, "test") for s in test]
    jobs_specs += [(s, "demo") for s in conf.scenarios]
    # validate everything up front: a broken script is a config problem
    # and must abort before any file is written
    try:
        for spec, _ in jobs_specs:
            validate_spec(spec)
    except DataError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from None
    ids = [spec.trace_id for spec, _ in jobs_specs]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate trace ids in simulate config")

    traces_dir = conf.out / "traces"
    gt_dir = conf.out / "gt"
    traces_dir.mkdir(parents=True, exist_ok=True)
    gt_dir.mkdir(parents=True, exist_ok=True)
    _run_pool(_simulate_one,
              [(spec, str(traces_dir), str(gt_dir)) for spec, _ in jobs_specs],
              jobs)
    manifest = "\n".join(f"{spec.trace_id} {split}"
                         for spec, split in jobs_specs) + "\n"
    (conf.out / "manifest.txt").write_text(manifest)
    log.info("simulated %d traces into %s", len(jobs_specs), conf.out)


def _read_manifest(data: Path) -> list[tuple[str, str]]:
    path = data / "manifest.txt"
    if not path.exists():
        raise DataError(f"no manifest at {path}")
    out = []
    for line in path.read_text().splitlines():
        if line.strip():
            tid, split = line.split()
            out.append((tid, split))
    return out


def _load_split(data: Path, split: str) -> list:
    pairs = []
    for tid, sp in _read_manifest(data):
        if sp != split:
            continue
        trace = read_trace(data / "traces" / f"{tid}.jsonl")
        gt = read_ground_truth(data / "gt" / f"{tid}.txt")
        pairs.append((trace, gt))
    if not pairs:
        raise DataError(f"no {split!r} traces under {data}")
    return pairs


def cmd_train(conf: cfg.TrainConfig, jobs: int) -> None:
    corpus = _load_split(conf.data, "train")
    fit_cfg = FitConfig(grid=conf.grid, max_theta1=conf.max_theta1,
                        seed=conf.seed, window=conf.window, tau=conf.tau,
                        beam_n=conf.beam_n, beam_m=conf.beam_m,
                        marg_every=conf.marg_every, l2=conf.l2,
                        belief_l2=conf.belief_l2)
    result = fit(corpus, fit_cfg)
    conf.out.mkdir(parents=True, exist_ok=True)
    extra = {"loss_events": result.loss_events,
             "loss_beliefs": result.loss_beliefs,
             "n_theta1": result.n_theta1, "n_theta2": result.n_theta2,
             "grid": list(conf.grid), "max_theta1": conf.max_theta1,
             "seed": conf.seed}
    write_model(result.model, conf.out / "model.json", extra=extra)
    t1, t2 = result.model.theta1, result.model.theta2
    report = "\n".join([
        f"traces {len(corpus)}",
        f"tau_s {result.tau_s!r}",
        f"theta1 {t1.lam1!r} {t1.lam2!r} {t1.lam3!r} {t1.lam5!r} "
        f"{t1.lam6!r} {t1.lam7!r} {t1.lam8!r}",
        f"theta2 {t2.lam4!r} {t2.lam9!r}",
        f"loss_events {result.loss_events!r}",
        f"loss_beliefs {result.loss_beliefs!r}",
        f"candidates_theta1 {result.n_theta1}",
        f"candidates_theta2 {result.n_theta2}",
    ]) + "\n"
    (conf.out / "report.txt").write_text(report)
    log.info("trained on %d traces, L1*=%g L2*=%g", len(corpus),
             result.loss_events, result.loss_beliefs)


def _select_ids(conf_traces: tuple[str, ...], data: Path) -> list[str]:
    manifest_ids = [tid for tid, _ in _read_manifest(data)]
    if not conf_traces:
        return manifest_ids
    missing = [t for t in conf_traces if t not in manifest_ids]
    if missing:
        raise DataError(f"traces not in manifest: {missing}")
    return list(conf_traces)


def cmd_parse(conf: cfg.ParseConfig, jobs: int) -> None:
    if not conf.model.exists():
        raise ModelError(f"no model file at {conf.model}")
    read_model(conf.model)   # fail fast on schema problems
    ids = _select_ids(conf.traces, conf.data)
    conf.out.mkdir(parents=True, exist_ok=True)
    items = [(str(conf.data / "traces" / f"{tid}.jsonl"), str(conf.model),
              str(conf.out), conf.dump_features) for tid in ids]
    for tid in ids:
        if not (conf.data / "traces" / f"{tid}.jsonl").exists():
            raise DataError(f"missing trace file for {tid}")
    _run_pool(_parse_one, items, jobs)
    log.info("parsed %d traces into %s", len(ids), conf.out)


def cmd_eval(conf: cfg.EvalConfig, jobs: int) -> None:
    dumps = sorted(conf.parses.glob("*.parse.txt"))
    if not dumps:
        raise DataError(f"no parse dumps under {conf.parses}")
    items = []
    for dump in dumps:
        tid = dump.name[:-len(".parse.txt")]
        gt_path = conf.data / "gt" / f"{tid}.txt"
        if not gt_path.exists():
            raise DataError(f"no ground truth for parsed trace {tid}")
        items.append((str(dump), str(gt_path)))
    results = _run_pool(_eval_one, items, jobs)

    # pool across traces under distinct keys: offset frames per trace
    predicted: dict = {}
    truth: dict = {}
    offset = 0
    for tid, pred, tru in results:
        max_t = max(t for _, t, _ in tru) + 1
        for (m, t, o), v in pred.items():
            predicted[(m, offset + t, o)] = v
        for (m, t, o), v in tru.items():
            truth[(m, offset + t, o)] = v
        offset += max_t
    model_report = macro_metrics(predicted, truth)
    chance = chance_baseline(truth, seed=conf.chance_seed)
    chance_report = macro_metrics(chance, truth)
    conf.out.parent.mkdir(parents=True, exist_ok=True)
    write_metrics_report({"chance": chance_report, "model": model_report},
                         conf.out)
    log.info("model macro F1 %.3f vs chance %.3f over %d traces",
             model_report.macro_f1, chance_report.macro_f1, len(results))


def cmd_keyframes(conf: cfg.KeyframesConfig, jobs: int) -> None:
    if not conf.model.exists():
        raise ModelError(f"no model file at {conf.model}")
    model = read_model(conf.model)
    ids = _select_ids(conf.traces, conf.data)
    conf.out.mkdir(parents=True, exist_ok=True)
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    for tid in ids:
        trace = read_trace(conf.data / "traces" / f"{tid}.jsonl")
        pg = parse(trace, model)
        scores = keyframe_scores(pg, source=conf.source)
        chosen, truncated = select_keyframes(scores, conf.k, w=conf.window)
        write_keyframes(chosen, truncated, conf.out / f"{tid}.keyframes.txt")

        fig, ax = plt.subplots(figsize=(8.0, 3.0))
        ax.plot(np.arange(len(scores)), scores, lw=1.0, color="#336699")
        for c in chosen:
            ax.axvline(c, color="#cc3333", lw=0.8, alpha=0.8)
        gt_path = conf.data / "gt" / f"{tid}.txt"
        if gt_path.exists():
            for t in gt_change_frames(read_ground_truth(gt_path)):
                ax.axvline(t, color="#339944", lw=0.8, ls=":", alpha=0.8)
        ax.set_xlabel("frame")
        ax.set_ylabel("belief change score")
        ax.set_title(tid)
        fig.tight_layout()
        fig.savefig(conf.out / f"{tid}.scores.png", dpi=100,
                    metadata={"Software": "fiveminds"})
        plt.close(fig)
    log.info("keyframes for %d traces into %s", len(ids), conf.out)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_LOADERS = {"simulate": cfg.load_simulate_config,
            "train": cfg.load_train_config,
            "parse": cfg.load_parse_config,
            "eval": cfg.load_eval_config,
            "keyframes": cfg.load_keyframes_config}

_HANDLERS = {"simulate": cmd_simulate, "train": cmd_train,
             "parse": cmd_parse, "eval": cmd_eval,
             "keyframes": cmd_keyframes}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiveminds",
        description="Simulate, learn, and parse nonverbal communication "
                    "events and belief dynamics from dyadic traces.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"simulate": "run scenario scripts into traces + ground truth",
             "train": "fit classifier, priors, and energy weights",
             "parse": "parse traces into event/belief graphs",
             "eval": "score parses against ground truth",
             "keyframes": "extract belief-change keyframes and score plots"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, metavar="PATH",
                       help="YAML run configuration")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="worker processes for per-trace work")
        p.add_argument("--seed", type=int, default=None, metavar="S",
                       help="override the config seed")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="override the config output path")
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("FMP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        conf = _LOADERS[args.command](args.config)
        if args.seed is not None:
            conf = dataclasses.replace(conf, seed=args.seed)
        if args.out is not None:
            conf = dataclasses.replace(conf, out=Path(args.out))
        _HANDLERS[args.command](conf, max(1, args.jobs))
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except DataError as exc:
        log.error("data error: %s", exc)
        return 3
    except ModelError as exc:
        log.error("model error: %s", exc)
        return 4
    except Exception:
        log.error("internal error:\n%s", traceback.format_exc())
        return 5
    return 0


if __name__ == "__main__":
    sys.exit(main())
