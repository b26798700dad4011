"""Command-line front end: ``sailtour <subcommand> [flags]``.

Every subcommand reads a preset, an optional JSON config file and explicit
flags (flags win), writes its artifacts with the producing config embedded
and prints a one-line JSON summary.  Exit status is 0 on success and 2 on
bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import catalog as cat
from . import dataset as ds
from . import mcts
from . import net
from . import verify as ver
from .astro import FEATURE_KINDS, sample_pseudo_neas
from .config import ConfigError, RunConfig, artifact_stamp, build_config
from .units import CANONICAL

log = logging.getLogger("sailtour")


class CliError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# flag plumbing: (flag, config path, type, help)

COMMON = [
    ("--seed", "seed", int, "master seed; every stochastic stage derives its own seed from it"),
    ("--jobs", "jobs", int, "worker processes for data generation and MCTS restarts (results do not depend on it)"),
]
DATA_FLAGS = [
    ("--count", "data.count", int, "number of random departure/arrival pairs"),
    ("--beta", "data.beta", float, "sail lightness number (dimensionless)"),
    ("--epoch-mjd", "data.epoch_mjd", float, "departure epoch of every pair [MJD]"),
    ("--best-of", "data.best_of", int, "independent multistart runs per pair; the shortest converged TOF is kept"),
    ("--max-guesses", "data.max_guesses", int, "random initial guesses per multistart run"),
    ("--tof-min", "data.tof_min_days", float, "lower end of the initial time-of-flight guesses [days]"),
    ("--tof-max", "data.tof_max_days", float, "upper end of the initial time-of-flight guesses [days]"),
]
SPLIT_FLAGS = [
    ("--split", "data.split_ratio", float, "training share of the shuffled corpus (rest is validation)"),
]
NET_FLAGS = [
    ("--layers", "net.hidden", net.parse_layers, "hidden layers, e.g. 3x60 or 60,40 [units per layer]"),
    ("--activation", "net.activation", str, "hidden activation: sigmoid, tanh or relu"),
    ("--feature-kind", "net.feature_kind", str, "input description: COE, RV or MOE"),
    ("--batch", "net.batch_size", int, "mini-batch size [samples]"),
    ("--epochs", "net.epochs", int, "training epochs (full passes over the training set)"),
    ("--lr", "net.initial_lr", float, "initial learning rate"),
    ("--decay", "net.decay", float, "learning-rate decay per 200 epochs"),
]
SEARCH_FLAGS = [
    ("--catalog-size", "search.catalog_size", int, "bodies in the generated pseudo catalog"),
    ("--start-mjd", "search.start_mjd", float, "launch epoch from Earth [MJD]"),
    ("--horizon", "search.horizon_days", float, "mission duration limit for target selection [days]"),
    ("--cp", "search.cp", float, "UCT exploration constant for sequence planning"),
    ("--select-cp", "search.select_cp", float, "UCT exploration constant for target selection"),
    ("--sims", "search.sims_per_layer", int, "MCTS simulations before committing each layer"),
    ("--restarts", "search.restarts", int, "independent MCTS runs; the best is kept"),
    ("--start-depth", "search.start_depth", int, "first sequence length tried by target selection [targets]"),
    ("--max-depth", "search.max_depth", int, "longest sequence considered [targets]"),
    ("--stay", "search.stay_days", float, "time spent at each target before departing [days]"),
    ("--dt-max", "search.dt_max_days", float,
     "longest acceptable sequence time, the reward scale of search and tune-cp (default depth x 365) [days]"),
]
VERIFY_FLAGS = [
    ("--verify-best-of", "verify.best_of", int, "multistart runs per verified leg"),
    ("--verify-guesses", "verify.max_guesses", int, "random guesses per verification run"),
    ("--margin", "verify.margin_days", float, "half-width of the initial TOF window around a prediction [days]"),
]


def _add_flags(p, table):
    for flag, path, typ, text in table:
        p.add_argument(flag, dest=path.replace(".", "__"), type=typ, default=None, help=text,
                       metavar=flag.lstrip("-").upper().replace("-", "_"))


def _overrides(args, tables) -> dict:
    out: dict = {}
    for table in tables:
        for _, path, _, _ in table:
            val = getattr(args, path.replace(".", "__"), None)
            if val is None:
                continue
            node = out
            parts = path.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
            node[parts[-1]] = val
    return out


def _config(args, tables) -> RunConfig:
    cfg = build_config(args.preset, args.config, _overrides(args, [COMMON, *tables]))
    return cfg


def _need(path, what):
    if path is None:
        raise CliError(f"missing {what}")
    p = Path(path)
    if not p.exists():
        raise CliError(f"{what} {p} does not exist")
    return p


def _emit(summary: dict):
    print(json.dumps(summary, default=_jsonable))
    return 0


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and math.isnan(x):
        return None
    return str(x)


def _progress(label, every):
    t0 = time.time()

    def report(k, n, *_):
        if k % every == 0 or k == n:
            log.info("%s %d/%d (%.0f s)", label, k, n, time.time() - t0)
    return report


# ---------------------------------------------------------------------------
# stages shared by subcommands and the pipeline


def stage_data(cfg: RunConfig, out: Path, extra: dict | None = None) -> ds.Dataset:
    d = cfg.data
    dataset = ds.generate_dataset(d.count, cfg.seed_for("data"), d.beta, d.epoch_mjd, d.best_of, d.max_guesses,
                                  jobs=cfg.jobs, tof_min_days=d.tof_min_days, tof_max_days=d.tof_max_days,
                                  progress=_progress("labelled pairs", 50))
    ds.save_dataset(dataset, out, extra=extra or artifact_stamp(cfg, "gen-data"))
    return dataset


def _split(cfg: RunConfig, dataset: ds.Dataset):
    return ds.split_dataset(dataset, cfg.data.split_ratio, cfg.seed_for("split"))


def stage_train(cfg: RunConfig, dataset: ds.Dataset, model_path: Path, history_path: Path):
    n = cfg.net
    train_set, val_set = _split(cfg, dataset)
    kind = n.feature_kind
    Xt, yt = train_set.features(kind), train_set.labels()
    Xv, yv = val_set.features(kind), val_set.labels()
    model = net.init_model(Xt.shape[1], n.hidden, n.activation, cfg.seed_for("init"), kind)
    tc = net.TrainConfig(n.batch_size, n.initial_lr, n.decay, n.epochs, cfg.seed_for("shuffle"),
                         eval_every=1)
    every = max(1, n.epochs // 10)

    def cb(epoch, tr, va):
        if epoch % every == 0:
            log.info("epoch %d: train loss %.1f, val accuracy %.4f, val MAE %.2f d", epoch, tr.loss, va.accuracy,
                     va.mae_days)

    model, hist = net.train(model, Xt, yt, Xv, yv, tc, callback=cb)
    net.save_model(model, model_path, extra=artifact_stamp(cfg, "train"))
    hist.save_csv(history_path)
    return model, net.evaluate(model, Xt, yt), net.evaluate(model, Xv, yv)


def stage_baseline(cfg: RunConfig, dataset: ds.Dataset):
    train_set, val_set = _split(cfg, dataset)
    kind = cfg.net.feature_kind
    lin, tr = net.train_linear_baseline(train_set.features(kind), train_set.labels(), kind)
    va = net.evaluate_linear(lin, val_set.features(kind), val_set.labels())
    return lin, tr, va


def make_catalog(cfg: RunConfig) -> cat.BodyCatalog:
    s = cfg.search
    samples = sample_pseudo_neas(s.catalog_size, cfg.seed_for("catalog"), CANONICAL.mjd_to_tu(s.start_mjd))
    return cat.catalog_from_samples(samples)


def _bodies(catalog: cat.BodyCatalog) -> dict:
    bodies = catalog.as_dict()
    bodies["Earth"] = cat.earth_elements()
    return bodies


def _problem(cfg: RunConfig, catalog: cat.BodyCatalog, model: net.MlpModel, ids=None) -> mcts.SequenceProblem:
    targets = catalog.as_dict()
    if ids:
        missing = [t for t in ids if t not in targets]
        if missing:
            raise CliError(f"targets not in the catalog: {missing}")
        targets = {t: targets[t] for t in ids}
    return mcts.SequenceProblem("Earth", cat.earth_elements(), CANONICAL.mjd_to_tu(cfg.search.start_mjd), targets,
                                mcts.SurrogateOracle(model))


def _uct(cfg: RunConfig, cp: float, stage: str, depth: int, dt_max=None) -> mcts.UctConfig:
    s = cfg.search
    return mcts.UctConfig(cp=cp, sims_per_layer=s.sims_per_layer, restarts=s.restarts, max_depth=depth,
                          dt_max_days=dt_max, stay_days=s.stay_days, seed=cfg.seed_for(stage))


def stage_select(cfg: RunConfig, catalog, model, out: Path):
    s = cfg.search
    problem = _problem(cfg, catalog, model)
    uct = _uct(cfg, s.select_cp, "select", s.start_depth, s.horizon_days)
    seq, attempts = mcts.select_targets(problem, s.horizon_days, uct, s.start_depth, s.max_depth, cfg.jobs)
    doc = {"mode": "select", "best": seq.to_dict(), "attempts": attempts, "horizon_days": s.horizon_days,
           "run": artifact_stamp(cfg, "select")}
    out.write_text(json.dumps(doc, indent=1))
    mcts.save_legs_csv(seq, out.with_suffix(".legs.csv"))
    return seq, attempts


def verify_config(cfg: RunConfig) -> ver.VerifyConfig:
    v = cfg.verify
    return ver.VerifyConfig(beta=cfg.data.beta, best_of=v.best_of, max_guesses=v.max_guesses,
                            margin_days=v.margin_days, free_t0=v.free_t0, seed=cfg.seed_for("verify"))


def stage_verify(cfg: RunConfig, seq: mcts.MissionSequence, bodies: dict, out_json: Path, out_csv: Path):
    report = ver.verify_sequence(seq, bodies, verify_config(cfg), progress=_leg_progress)
    ver.save_report_json(report, out_json, extra=artifact_stamp(cfg, "verify"))
    ver.save_report_csv(report, out_csv)
    return report


def _leg_progress(k, n, rec):
    log.info("leg %d/%d %s -> %s: predicted %.1f d, verified %s", k, n, rec.from_id, rec.target_id,
             rec.predicted_days, "failed" if not rec.converged else f"{rec.verified_days:.1f} d")


def _load_catalog_arg(args, cfg) -> cat.BodyCatalog:
    if getattr(args, "catalog", None):
        return cat.load_catalog(_need(args.catalog, "catalog file"))
    return make_catalog(cfg)


def _load_sequence(path) -> mcts.MissionSequence:
    doc = json.loads(_need(path, "search report").read_text())
    best = doc.get("best")
    if best is None:
        raise CliError(f"{path} holds no 'best' sequence")
    return mcts.MissionSequence.from_dict(best)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_data(args):
    cfg = _config(args, [DATA_FLAGS])
    out = Path(args.out)
    dataset = stage_data(cfg, out)
    if args.csv:
        ds.export_dataset_csv(dataset, args.csv)
    return _emit({"dataset": str(out), "samples": len(dataset), "dropped": len(dataset.dropped),
                  "drop_rate": ds.drop_rate(dataset)})


def cmd_train(args):
    cfg = _config(args, [NET_FLAGS, SPLIT_FLAGS])
    dataset = ds.load_dataset(_need(args.data, "dataset"))
    model, tr, va = stage_train(cfg, dataset, Path(args.out), Path(args.history))
    return _emit({"model": args.out, "history": args.history, "train": tr.as_dict(), "validation": va.as_dict()})


def cmd_eval(args):
    cfg = _config(args, [SPLIT_FLAGS])
    model = net.load_model(_need(args.model, "model file"))
    dataset = ds.load_dataset(_need(args.data, "dataset"))
    if args.subset == "all":
        subset = dataset
    else:
        tr, va = _split(cfg, dataset)
        subset = tr if args.subset == "train" else va
    m = net.evaluate(model, subset.features(model.feature_kind), subset.labels())
    return _emit({"subset": args.subset, "metrics": m.as_dict()})


def cmd_baseline(args):
    cfg = _config(args, [SPLIT_FLAGS, NET_FLAGS])
    dataset = ds.load_dataset(_need(args.data, "dataset"))
    lin, tr, va = stage_baseline(cfg, dataset)
    doc = {"coef": lin.coef.tolist(), "intercept": lin.intercept, "feature_kind": lin.feature_kind,
           "train": tr.as_dict(), "validation": va.as_dict(), "run": artifact_stamp(cfg, "baseline")}
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=1))
    return _emit({"train": tr.as_dict(), "validation": va.as_dict()})


def cmd_tune_net(args):
    """Train one model per variant on the same split and tabulate validation metrics."""
    cfg = _config(args, [NET_FLAGS, SPLIT_FLAGS])
    dataset = ds.load_dataset(_need(args.data, "dataset"))
    variants = []
    for kind in (args.kinds.split(",") if args.kinds else [cfg.net.feature_kind]):
        if kind not in FEATURE_KINDS:
            raise CliError(f"unknown feature kind {kind!r}")
        for act in (args.activations.split(",") if args.activations else [cfg.net.activation]):
            for layers in (args.layer_grid.split(";") if args.layer_grid else [None]):
                variants.append((kind, act, cfg.net.hidden if layers is None else net.parse_layers(layers)))
    rows = []
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for kind, act, hidden in variants:
        cfg.net.feature_kind, cfg.net.activation, cfg.net.hidden = kind, act, list(hidden)
        tag = f"{kind}_{act}_{'x'.join(map(str, hidden))}"
        _, tr, va = stage_train(cfg, dataset, out_dir / f"model_{tag}.json", out_dir / f"history_{tag}.csv")
        rows.append({"feature_kind": kind, "activation": act, "hidden": "x".join(map(str, hidden)),
                     "val_accuracy": va.accuracy, "val_local_accuracy": va.local_accuracy,
                     "val_mae_days": va.mae_days, "val_loss": va.loss})
    with (out_dir / "tuning.csv").open("w") as fh:
        fh.write("feature_kind,activation,hidden,val_accuracy,val_local_accuracy,val_mae_days,val_loss\n")
        for r in rows:
            fh.write(",".join(str(r[k]) for k in ("feature_kind", "activation", "hidden", "val_accuracy",
                                                   "val_local_accuracy", "val_mae_days", "val_loss")) + "\n")
    return _emit({"variants": rows})


def cmd_search(args):
    cfg = _config(args, [SEARCH_FLAGS])
    model = net.load_model(_need(args.model, "model file"))
    catalog = _load_catalog_arg(args, cfg)
    ids = args.targets.split(",") if args.targets else None
    problem = _problem(cfg, catalog, model, ids)
    depth = args.depth or min(len(problem.targets), cfg.search.max_depth)
    result = mcts.search_sequence(problem, _uct(cfg, cfg.search.cp, "search", depth, cfg.search.dt_max_days), cfg.jobs)
    mcts.save_search_report(result, args.out, extra=artifact_stamp(cfg, "search"))
    mcts.save_legs_csv(result.best, Path(args.out).with_suffix(".legs.csv"))
    return _emit({"search": args.out, "targets": result.best.target_ids, "total_days": result.best.total_days})


def cmd_select(args):
    cfg = _config(args, [SEARCH_FLAGS])
    model = net.load_model(_need(args.model, "model file"))
    catalog = _load_catalog_arg(args, cfg)
    seq, attempts = stage_select(cfg, catalog, model, Path(args.out))
    return _emit({"search": args.out, "targets": seq.target_ids, "total_days": seq.total_days,
                  "depths_tried": [a["depth"] for a in attempts]})


def cmd_tune_cp(args):
    cfg = _config(args, [SEARCH_FLAGS])
    model = net.load_model(_need(args.model, "model file"))
    catalog = _load_catalog_arg(args, cfg)
    ids = args.targets.split(",") if args.targets else catalog.ids[:args.n_targets]
    problem = _problem(cfg, catalog, model, ids)
    grid = [float(x) for x in args.grid.split(",")]
    depth = args.depth or len(ids)
    rows = mcts.tune_cp(problem, grid, args.runs, _uct(cfg, grid[0], "tune-cp", depth, cfg.search.dt_max_days), cfg.jobs)
    mcts.save_tuning_csv(rows, args.out)
    keys = ("cp", "min_days", "mean_days", "max_days", "committed_mean_days")
    return _emit({"tuning": args.out, "rows": [{k: r[k] for k in keys}
                                                for r in rows]})


def cmd_verify(args):
    cfg = _config(args, [VERIFY_FLAGS, DATA_FLAGS, SEARCH_FLAGS])
    seq = _load_sequence(args.search)
    catalog = _load_catalog_arg(args, cfg)
    report = stage_verify(cfg, seq, _bodies(catalog), Path(args.out), Path(args.out).with_suffix(".csv"))
    return _emit({"report": args.out, "predicted_total_days": report.predicted_total_days,
                  "verified_total_days": report.verified_total_days,
                  "relative_deviation": report.relative_deviation,
                  "converged_fraction": report.converged_fraction})


def _stage_key(cfg: RunConfig, stage: str) -> dict:
    c = cfg.to_dict()
    key = {"seed": cfg.seed, "data": c["data"]}
    if stage in ("train", "select", "verify"):
        key["net"] = c["net"]
    if stage in ("select", "verify"):
        key["search"] = c["search"]
    if stage == "verify":
        key["verify"] = c["verify"]
    return key


def _reusable(path: Path, key: dict, reader) -> bool:
    if not path.exists():
        return False
    try:
        run = reader(path)
    except Exception:  # unreadable artifacts are simply rebuilt
        return False
    return run.get("stage_key") == key


def _header_run(path: Path) -> dict:
    with path.open() as fh:
        return json.loads(fh.readline()).get("run", {})


def _json_run(path: Path) -> dict:
    return json.loads(path.read_text()).get("run", {})


def cmd_pipeline(args):
    """gen-data -> train -> baseline -> catalog -> select -> verify, each stage feeding the next via files."""
    cfg = _config(args, [DATA_FLAGS, NET_FLAGS, SPLIT_FLAGS, SEARCH_FLAGS, VERIFY_FLAGS])
    out = Path(args.out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {k: out / v for k, v in {
        "dataset": "dataset.jsonl", "model": "model.json", "history": "history.csv", "metrics": "metrics.json",
        "catalog": "catalog.csv", "search": "search.json", "verify": "verification.json",
        "verify_csv": "verification.csv", "summary": "summary.json", "config": "config.json"}.items()}
    paths["config"].write_text(json.dumps(artifact_stamp(cfg, "pipeline"), indent=1))
    timings = {}

    def stamp(stage):
        s = artifact_stamp(cfg, stage)
        s["stage_key"] = _stage_key(cfg, stage)
        return s

    t = time.time()
    if args.resume and _reusable(paths["dataset"], _stage_key(cfg, "gen-data"), _header_run):
        log.info("reusing %s", paths["dataset"])
    else:
        stage_data(cfg, paths["dataset"], stamp("gen-data"))
    dataset = ds.load_dataset(paths["dataset"])
    timings["gen-data"] = time.time() - t

    t = time.time()
    if args.resume and _reusable(paths["model"], _stage_key(cfg, "train"), _json_run):
        log.info("reusing %s", paths["model"])
        model = net.load_model(paths["model"])
    else:
        stage_train(cfg, dataset, paths["model"], paths["history"])
        doc = json.loads(paths["model"].read_text())
        doc["run"] = stamp("train")
        paths["model"].write_text(json.dumps(doc))
        model = net.load_model(paths["model"])
    train_set, val_set = _split(cfg, dataset)
    kind = model.feature_kind
    m_tr = net.evaluate(model, train_set.features(kind), train_set.labels())
    m_va = net.evaluate(model, val_set.features(kind), val_set.labels())
    _, l_tr, l_va = stage_baseline(cfg, dataset)
    metrics = {"network": {"train": m_tr.as_dict(), "validation": m_va.as_dict()},
               "linear": {"train": l_tr.as_dict(), "validation": l_va.as_dict()},
               "dataset": {"samples": len(dataset), "dropped": len(dataset.dropped),
                           "drop_rate": ds.drop_rate(dataset)},
               "run": artifact_stamp(cfg, "metrics")}
    paths["metrics"].write_text(json.dumps(metrics, indent=1))
    timings["train"] = time.time() - t

    t = time.time()
    catalog = make_catalog(cfg)
    cat.save_catalog(catalog, paths["catalog"])
    catalog = cat.load_catalog(paths["catalog"])
    if args.resume and _reusable(paths["search"], _stage_key(cfg, "select"), _json_run):
        log.info("reusing %s", paths["search"])
    else:
        stage_select(cfg, catalog, model, paths["search"])
        doc = json.loads(paths["search"].read_text())
        doc["run"] = stamp("select")
        paths["search"].write_text(json.dumps(doc, indent=1))
    seq = _load_sequence(paths["search"])
    timings["select"] = time.time() - t

    t = time.time()
    if seq.target_ids:
        report = ver.verify_sequence(seq, _bodies(catalog), verify_config(cfg), progress=_leg_progress)
        ver.save_report_json(report, paths["verify"], extra=stamp("verify"))
        ver.save_report_csv(report, paths["verify_csv"])
        rows = ver.deviation_summary([report])
        ver.save_summary_csv(rows, out / "deviation_summary.csv")
    else:
        report = None
    timings["verify"] = time.time() - t

    summary = {
        "out_dir": str(out),
        "samples": len(dataset),
        "network_validation": m_va.as_dict(),
        "linear_validation": l_va.as_dict(),
        "sequence": seq.target_ids,
        "predicted_total_days": seq.total_days,
        "verified_total_days": None if report is None else report.verified_total_days,
        "relative_deviation": None if report is None else report.relative_deviation,
        "converged_fraction": None if report is None else report.converged_fraction,
        "timings_s": timings,
        "run": artifact_stamp(cfg, "pipeline"),
    }
    paths["summary"].write_text(json.dumps(summary, indent=1, default=_jsonable))
    return _emit({k: summary[k] for k in ("out_dir", "sequence", "predicted_total_days", "verified_total_days",
                                            "relative_deviation", "converged_fraction")})


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sailtour", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="progress logging")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, func, help_text, tables):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--preset", default="desk", help="base configuration: desk or paper")
        sp.add_argument("--config", default=None, help="JSON config file (overrides the preset)")
        _add_flags(sp, COMMON)
        for tab in tables:
            _add_flags(sp, tab)
        sp.set_defaults(func=func)
        return sp

    sp = add("gen-data", cmd_gen_data, "label random pseudo-NEA pairs with optimal transfer times", [DATA_FLAGS])
    sp.add_argument("--out", default="dataset.jsonl", help="dataset file (JSON lines)")
    sp.add_argument("--csv", default=None, help="optional flat CSV export for plotting")

    sp = add("train", cmd_train, "train the transfer-time network", [NET_FLAGS, SPLIT_FLAGS])
    sp.add_argument("--data", required=True, help="dataset file")
    sp.add_argument("--out", default="model.json", help="model file")
    sp.add_argument("--history", default="history.csv", help="per-epoch history CSV")

    sp = add("eval", cmd_eval, "evaluate a model on a dataset", [SPLIT_FLAGS])
    sp.add_argument("--model", required=True, help="model file")
    sp.add_argument("--data", required=True, help="dataset file")
    sp.add_argument("--subset", choices=("validation", "train", "all"), default="validation",
                    help="which part of the seeded split to score")

    sp = add("baseline", cmd_baseline, "ordinary-least-squares baseline on the same split", [SPLIT_FLAGS, NET_FLAGS])
    sp.add_argument("--data", required=True, help="dataset file")
    sp.add_argument("--out", default=None, help="optional JSON with coefficients and metrics")

    sp = add("tune-net", cmd_tune_net, "compare feature kinds, activations or layer shapes", [NET_FLAGS, SPLIT_FLAGS])
    sp.add_argument("--data", required=True, help="dataset file")
    sp.add_argument("--kinds", default=None, help="comma list of feature kinds, e.g. COE,RV,MOE")
    sp.add_argument("--activations", default=None, help="comma list, e.g. sigmoid,tanh,relu")
    sp.add_argument("--layer-grid", default=None, help="semicolon list of layer specs, e.g. '3x36;3x60'")
    sp.add_argument("--out-dir", default="tune-net", help="directory for models, histories and tuning.csv")

    for name, func, text in (("search", cmd_search, "plan the visiting order of given targets"),
                             ("select", cmd_select, "select the longest target sequence within the horizon"),
                             ("tune-cp", cmd_tune_cp, "tabulate total TOF against the UCT constant")):
        sp = add(name, func, text, [SEARCH_FLAGS])
        sp.add_argument("--model", required=True, help="model file")
        sp.add_argument("--catalog", default=None, help="catalog CSV (default: generated pseudo catalog)")
        if name != "select":
            sp.add_argument("--targets", default=None, help="comma list of target ids")
            sp.add_argument("--depth", type=int, default=None, help="sequence length [targets]")
        sp.add_argument("--out", default=f"{name}.json" if name != "tune-cp" else "tune-cp.csv", help="output file")
        if name == "tune-cp":
            sp.add_argument("--grid", default="0.01,0.1,0.3,0.5,0.7,1,2,5", help="comma list of cp values")
            sp.add_argument("--runs", type=int, default=100, help="searches per cp value")
            sp.add_argument("--n-targets", type=int, default=6, help="catalog entries used when --targets is absent")

    sp = add("verify", cmd_verify, "re-solve every leg of a planned sequence", [VERIFY_FLAGS, DATA_FLAGS, SEARCH_FLAGS])
    sp.add_argument("--search", required=True, help="search or select report (JSON)")
    sp.add_argument("--catalog", default=None, help="catalog CSV used for the search")
    sp.add_argument("--out", default="verification.json", help="report JSON (a CSV is written alongside)")

    sp = add("pipeline", cmd_pipeline, "gen-data, train, select and verify end to end",
             [DATA_FLAGS, NET_FLAGS, SPLIT_FLAGS, SEARCH_FLAGS, VERIFY_FLAGS])
    sp.add_argument("--out-dir", default=None, help="directory for every artifact (default from config)")
    sp.add_argument("--resume", action="store_true",
                    help="reuse stage artifacts whose embedded configuration matches")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (CliError, ConfigError, ds.DatasetFormatError, net.ModelFormatError, cat.CatalogError) as exc:
        print(f"sailtour {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except net.TrainingDiverged as exc:
        print(f"sailtour {args.command}: training diverged: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
