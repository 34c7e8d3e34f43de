"""Command-line entry point.

Subcommands: construct, fit, benchmark, sweep, report, synth. Global
flags on every subcommand: --seed, --jobs, --out, --config. A config file
is a JSON object of option values; explicit flags win over it. Every run
writes a manifest.json into the output directory recording the resolved
configuration, input file hashes, and outputs; passing a manifest back
via --config re-runs the command (all report/tensor/model outputs are
byte-identical given identical inputs; only the manifest's timestamps
differ).

Exit codes: 0 success, 2 usage or invalid option values, 3 input/schema
errors (missing or malformed files), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import baselines as bl
from . import data_io as dio
from . import protocol as proto
from . import regression as reg
from .graphs import MODALITIES, N_ROI, REPRESENTATIONS, GraphConfig
from .protocol import METHODS, ProtocolConfig
from .regression import FitConfig

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCHEMA = 3
EXIT_NUMERIC = 4


# ---------------------------------------------------------------------------
# manifest plumbing
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> dict:
    h = hashlib.sha256()
    data = Path(path).read_bytes()
    h.update(data)
    return {"sha256": h.hexdigest(), "bytes": len(data)}


def _write_manifest(out_dir: Path, command: str, config: dict, inputs, outputs, t0):
    doc = {
        "tool": "roitensor",
        "version": __version__,
        "command": command,
        "seed": config.get("seed"),
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": sorted(str(Path(o).name) for o in outputs),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "duration_s": round(time.time() - t0, 3),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, sort_keys=True, indent=1), encoding="utf-8")
    return path


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit flags."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise dio.SchemaError(f"config file is not valid JSON: {e}") from None
        if isinstance(loaded, dict) and isinstance(loaded.get("config"), dict):
            loaded = loaded["config"]  # accept a previous manifest
        for k, v in loaded.items():
            if k in cfg:
                cfg[k] = v
    for k in cfg:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_values(text: str) -> list[int]:
    vals = []
    for part in str(text).split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":", 1)
            vals.extend(range(int(lo), int(hi) + 1))
        elif part:
            vals.append(int(part))
    if not vals:
        raise ValueError(f"no values parsed from {text!r}")
    return vals


def _parse_shape(text: str) -> tuple[int, ...]:
    dims = tuple(int(p) for p in str(text).lower().replace("x", " ").split())
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"invalid shape {text!r}")
    return dims


def _fit_config(cfg: dict, seed: int) -> FitConfig:
    return FitConfig(
        max_rank=int(cfg["max_rank"]),
        inner_max_iters=int(cfg["inner_max_iters"]),
        convergence_tol=float(cfg["convergence_tol"]),
        lambda_grid_size=int(cfg["lambda_grid_size"]),
        seed=seed,
    )


def _load_input_dataset(cfg: dict):
    """Dataset from either a tensor dump (--data) or a cohort CSV (--input)."""
    inputs = []
    if cfg.get("data"):
        ds, meta = dio.load_tensor_dump(cfg["data"])
        inputs.append(cfg["data"])
        return ds, meta.get("representation", "precomputed"), inputs
    if not cfg.get("input"):
        raise ValueError("either --data or --input is required")
    cohort = dio.load_cohort(cfg["input"])
    inputs.append(cfg["input"])
    gcfg = GraphConfig(k=int(cfg["k"]), sigma=float(cfg["sigma"]))
    ds = cohort.dataset(cfg["score"], cfg["representation"], gcfg, cfg["norm_mode"])
    label = cfg["representation"]
    if label != "concat":
        label = f"{label}(k={int(cfg['k'])})"
    return ds, label, inputs


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

_CONSTRUCT_DEFAULTS = dict(input=None, representation="concat", k=N_ROI, sigma=1.0,
                           score="DSS", norm_mode="instrument", verify=False,
                           seed=0, jobs=1, out="out")


def _cmd_construct(args) -> int:
    t0 = time.time()
    cfg = _resolve(args, _CONSTRUCT_DEFAULTS)
    if not cfg["input"]:
        raise ValueError("--input is required")
    cohort = dio.load_cohort(cfg["input"])
    gcfg = GraphConfig(k=int(cfg["k"]), sigma=float(cfg["sigma"]))
    ds = cohort.dataset(cfg["score"], cfg["representation"], gcfg, cfg["norm_mode"])
    if cfg["verify"] and cfg["representation"] in ("connectivity", "stack"):
        mats = ds.tensors if cfg["representation"] == "connectivity" \
            else ds.tensors.reshape(len(ds), N_ROI, N_ROI, -1).transpose(0, 3, 1, 2).reshape(-1, N_ROI, N_ROI)
        for m in mats:
            if not np.array_equal(m, m.T):
                raise FloatingPointError("connectivity matrix is not symmetric")
            if not np.all(np.diag(m) == 1.0):
                raise FloatingPointError("connectivity diagonal is not 1")
        print(f"verified: {len(mats)} matrices symmetric with unit diagonal")
    out = _out_dir(cfg)
    dump = out / "tensors.json"
    dio.save_tensor_dump(dump, ds, meta={
        "representation": cfg["representation"], "k": int(cfg["k"]),
        "sigma": float(cfg["sigma"]), "score": cfg["score"],
        "norm_mode": cfg["norm_mode"],
    })
    _write_manifest(out, "construct", cfg, [cfg["input"]], [dump], t0)
    print(f"wrote {dump} ({len(ds)} subjects, shape {ds.shape})")
    return EXIT_OK


_FIT_DEFAULTS = dict(data=None, input=None, representation="concat", k=N_ROI,
                     sigma=1.0, score="DSS", norm_mode="instrument",
                     method="proposed", max_rank=10, inner_max_iters=200,
                     convergence_tol=1e-7, lambda_grid_size=16,
                     lam=0.1, alpha=0.5, lam_g=0.01, lam_1=0.0,
                     grouping="by-roi", fraction=1.0,
                     seed=0, jobs=1, out="out")


def _serialize_fitted(method: str, model, shape) -> str:
    if isinstance(model, reg.RegressionModel):
        doc = json.loads(reg.model_to_json(model))
        doc["method"] = method
        return json.dumps(doc, sort_keys=True, indent=1)
    doc = {
        "method": method,
        "input_shape": list(shape),
        "weights": model.weights.tolist(),
        "intercept": model.intercept,
        "meta": model.meta,
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def _cmd_fit(args) -> int:
    t0 = time.time()
    cfg = _resolve(args, _FIT_DEFAULTS)
    ds, representation, inputs = _load_input_dataset(cfg)
    name = cfg["method"]
    if name not in METHODS:
        raise ValueError(f"unknown method {name!r}; expected one of {sorted(METHODS)}")
    X = ds.tensors.reshape(len(ds), -1)
    if name == "proposed":
        model = reg.fit(ds, _fit_config(cfg, int(cfg["seed"])))
        train_rmse = model.train_rmse_path[-1] if model.train_rmse_path \
            else float(np.sqrt(np.mean(ds.y**2)))
        extras = {"rank": model.rank, "train_rmse_path": model.train_rmse_path}
    elif name == "lasso":
        model = bl.lasso_fit(X, ds.y, float(cfg["lam"]))
    elif name == "enet":
        model = bl.enet_fit(X, ds.y, float(cfg["lam"]), float(cfg["alpha"]))
    elif name == "glasso":
        groups = proto.GroupLassoMethod._groups(ds.shape, cfg["grouping"])
        model = bl.glasso_fit(X, ds.y, groups, float(cfg["lam_g"]), float(cfg["lam_1"]))
    else:
        model = bl.pca_lr_fit(X, ds.y, float(cfg["fraction"]))
    if name != "proposed":
        train_rmse = proto.rmse(ds.y, bl.predict_linear(model, X))
        extras = {"nonzero_weights": int(np.sum(model.weights != 0))}

    out = _out_dir(cfg)
    model_path = out / "model.json"
    model_path.write_text(_serialize_fitted(name, model, ds.shape), encoding="utf-8")
    diag_path = out / "diagnostics.json"
    diag_path.write_text(json.dumps({
        "method": name, "representation": representation,
        "n_subjects": len(ds), "train_rmse": train_rmse, **extras,
    }, sort_keys=True, indent=1), encoding="utf-8")
    _write_manifest(out, "fit", cfg, inputs, [model_path, diag_path], t0)
    print(f"wrote {model_path} (train RMSE {train_rmse:.6f})")
    return EXIT_OK


_BENCH_DEFAULTS = dict(data=None, input=None, representations="concat", k=N_ROI,
                       sigma=1.0, scores="DSS", norm_mode="instrument",
                       methods="proposed,lasso,enet,glasso,pca_lr",
                       trials=5, folds=5, max_rank=10, inner_max_iters=200,
                       convergence_tol=1e-7, lambda_grid_size=16,
                       seed=0, jobs=1, out="out")


def _protocol_config(cfg: dict) -> ProtocolConfig:
    return ProtocolConfig(
        cv_folds=int(cfg["folds"]),
        n_trials=int(cfg["trials"]),
        seed=int(cfg["seed"]),
        fit=_fit_config(cfg, int(cfg["seed"])),
        n_jobs=int(cfg["jobs"]),
    )


def _cmd_benchmark(args) -> int:
    t0 = time.time()
    cfg = _resolve(args, _BENCH_DEFAULTS)
    pcfg = _protocol_config(cfg)
    methods = [m.strip() for m in str(cfg["methods"]).split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {sorted(METHODS)}")

    all_records, roi_rank, mod_rank = [], None, None
    inputs = []
    if cfg.get("data"):
        ds, meta = dio.load_tensor_dump(cfg["data"])
        inputs.append(cfg["data"])
        rep = proto.run_benchmark(ds, methods, pcfg,
                                  representation=meta.get("representation", "precomputed"),
                                  score=meta.get("score", "y"))
        all_records = rep.records
        roi_rank, mod_rank = rep.roi_ranking, rep.modality_ranking
    else:
        if not cfg.get("input"):
            raise ValueError("either --data or --input is required")
        cohort = dio.load_cohort(cfg["input"])
        inputs.append(cfg["input"])
        gcfg = GraphConfig(k=int(cfg["k"]), sigma=float(cfg["sigma"]))
        reps = [r.strip() for r in str(cfg["representations"]).split(",") if r.strip()]
        scores = [s.strip() for s in str(cfg["scores"]).split(",") if s.strip()]
        for rname in reps:
            if rname not in REPRESENTATIONS:
                raise ValueError(f"unknown representation {rname!r}")
            for sname in scores:
                ds = cohort.dataset(sname, rname, gcfg, cfg["norm_mode"])
                label = rname if rname == "concat" else f"{rname}(k={int(cfg['k'])})"
                rep = proto.run_benchmark(ds, methods, pcfg, representation=label,
                                          score=sname)
                all_records.extend(rep.records)
                roi_rank = rep.roi_ranking or roi_rank
                mod_rank = rep.modality_ranking or mod_rank

    report = proto.EvalReport(records=all_records,
                              aggregates=proto.aggregate_records(all_records),
                              roi_ranking=roi_rank, modality_ranking=mod_rank)
    out = _out_dir(cfg)
    json_path = out / "report.json"
    json_path.write_text(report.to_json(), encoding="utf-8")
    csv_path = out / "report.csv"
    proto.records_to_csv(report, csv_path)
    _write_manifest(out, "benchmark", cfg, inputs, [json_path, csv_path], t0)
    for agg in report.aggregates:
        print(f"{agg['method']:>9s} {agg['representation']:>20s} {agg['score']:>8s}  "
              f"RMSE {agg['rmse_mean']:.4f} +- {agg['rmse_std']:.4f}  "
              f"sparsity {agg['sparsity_mean']:.2f} +- {agg['sparsity_std']:.2f}")
    return EXIT_OK


_SWEEP_DEFAULTS = dict(sweep="rank", values="1:10", data=None, input=None,
                       representation="connectivity", kind="connectivity",
                       k=N_ROI, sigma=1.0, scores="DSS", norm_mode="instrument",
                       trials=5, folds=5, max_rank=10, inner_max_iters=200,
                       convergence_tol=1e-7, lambda_grid_size=16,
                       seed=0, jobs=1, out="out")


def _cmd_sweep(args) -> int:
    t0 = time.time()
    cfg = _resolve(args, _SWEEP_DEFAULTS)
    pcfg = _protocol_config(cfg)
    values = _parse_values(cfg["values"])
    score = str(cfg["scores"]).split(",")[0].strip()
    inputs = []

    if cfg["sweep"] == "k":
        if not cfg.get("input"):
            raise ValueError("sweep over k needs --input (raw features are rebuilt per k)")
        cohort = dio.load_cohort(cfg["input"])
        inputs.append(cfg["input"])
        y = dio.normalize_scores(score, cohort.scores[score], cfg["norm_mode"])
        rows = proto.sweep_k(cohort.features, y, values, pcfg, kind=cfg["kind"],
                             sigma=float(cfg["sigma"]), score=score, ids=cohort.ids)
        name = "sweep_k.csv"
    elif cfg["sweep"] == "rank":
        ds, _, inputs = _load_input_dataset({**cfg, "score": score,
                                             "representation": cfg["representation"]})
        rows = proto.sweep_rank(ds, values, pcfg, score=score)
        name = "sweep_rank.csv"
    else:
        raise ValueError(f"unknown sweep {cfg['sweep']!r}; expected 'k' or 'rank'")

    out = _out_dir(cfg)
    curve_path = out / name
    proto.curve_to_csv(rows, curve_path)
    _write_manifest(out, "sweep", cfg, inputs, [curve_path], t0)
    print(f"wrote {curve_path} ({len(rows)} rows)")
    return EXIT_OK


_REPORT_DEFAULTS = dict(models=None, top_n=10, seed=0, jobs=1, out="out")


def _cmd_report(args) -> int:
    t0 = time.time()
    cfg = _resolve(args, _REPORT_DEFAULTS)
    if not cfg.get("models"):
        raise ValueError("--models directory is required")
    model_dir = Path(cfg["models"])
    paths = sorted(p for p in model_dir.glob("*.json")
                   if p.name not in ("manifest.json", "diagnostics.json"))
    models = []
    for p in paths:
        doc = json.loads(p.read_text(encoding="utf-8"))
        if "components" in doc:
            models.append(reg.model_from_json(p.read_text(encoding="utf-8")))
    if not models:
        raise dio.SchemaError(f"no tensor models found under {model_dir}")

    out = _out_dir(cfg)
    outputs = []
    ranking = proto.roi_ranking(models, top_n=int(cfg["top_n"]))
    labels = dio.aal116_labels()
    roi_path = out / "roi_ranking.csv"
    with open(roi_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("rank,roi_index,roi_label,frequency,mean_abs_mass\n")
        for rank_i, row in enumerate(ranking, start=1):
            label = labels[row["roi_index"] - 1] if len(labels) >= row["roi_index"] \
                and models[0].input_shape.count(N_ROI) else f"roi_{row['roi_index']}"
            fh.write(f"{rank_i},{row['roi_index']},{label},{row['frequency']},"
                     f"{row['mean_abs_mass']!r}\n")
    outputs.append(roi_path)

    shape = models[0].input_shape
    if shape[-1] == 3:
        totals = dict.fromkeys(MODALITIES, 0.0)
        for m in models:
            for lab, s in reg.modality_contribution(m, len(shape) - 1):
                totals[lab] += s
        mod_path = out / "modality_contribution.csv"
        with open(mod_path, "w", encoding="utf-8", newline="") as fh:
            fh.write("rank,modality,score\n")
            ranked = sorted(totals, key=lambda lab: (-totals[lab],
                                                     MODALITIES.index(lab)))
            for rank_i, lab in enumerate(ranked, start=1):
                fh.write(f"{rank_i},{lab},{totals[lab] / len(models)!r}\n")
        outputs.append(mod_path)

    _write_manifest(out, "report", cfg, paths, outputs, t0)
    print(f"wrote {', '.join(str(o) for o in outputs)} from {len(models)} models")
    return EXIT_OK


_SYNTH_DEFAULTS = dict(n=200, shape="20x20x3", rank=3, density=0.1, noise=0.05,
                       format="json", seed=0, jobs=1, out="out")


def _cmd_synth(args) -> int:
    t0 = time.time()
    cfg = _resolve(args, _SYNTH_DEFAULTS)
    shape = _parse_shape(cfg["shape"])
    synth = dio.generate_synthetic(dio.SynthConfig(
        n_subjects=int(cfg["n"]), shape=shape, true_rank=int(cfg["rank"]),
        support_density=float(cfg["density"]), noise_std=float(cfg["noise"]),
        seed=int(cfg["seed"])))
    out = _out_dir(cfg)
    outputs = []
    if cfg["format"] == "csv":
        if shape != (N_ROI, 3):
            raise ValueError(f"CSV export requires shape {N_ROI}x3, got {cfg['shape']}")
        y = synth.dataset.y
        cohort = dio.Cohort(synth.dataset.ids, synth.dataset.tensors, {
            "DSS": np.floor(y * 4.0 + 0.5) + 1.0,
            "ADAS13": y * 85.0,
            "MMSE": 30.0 - y * 30.0,
        })
        path = out / "cohort.csv"
        dio.write_cohort(path, cohort)
        outputs.append(path)
    else:
        path = out / "dataset.json"
        dio.save_tensor_dump(path, synth.dataset, meta={
            "representation": "synthetic", "score": "y",
            "offset": synth.offset, "scale": synth.scale,
        })
        outputs.append(path)
    truth_path = out / "ground_truth.json"
    truth_path.write_text(json.dumps({
        "shape": list(shape),
        "components": [[f.tolist() for f in w.factors] for w in synth.components],
        "offset": synth.offset, "scale": synth.scale,
    }, sort_keys=True, indent=1), encoding="utf-8")
    outputs.append(truth_path)
    _write_manifest(out, "synth", cfg, [], outputs, t0)
    print(f"wrote {', '.join(str(o) for o in outputs)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="base RNG seed")
    p.add_argument("--jobs", type=int, default=None, help="worker pool size")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--config", type=str, default=None,
                   help="JSON config file or a previous manifest.json; flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roitensor",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build per-subject tensors from a cohort CSV")
    p.add_argument("--input", type=str)
    p.add_argument("--representation", choices=REPRESENTATIONS, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--score", choices=dio.SCORE_NAMES, default=None)
    p.add_argument("--norm-mode", dest="norm_mode", choices=("instrument", "cohort"),
                   default=None)
    p.add_argument("--verify", action="store_true", default=None,
                   help="check symmetry/diagonal of graph representations")
    _add_common(p)
    p.set_defaults(func=_cmd_construct)

    p = sub.add_parser("fit", help="fit one model on a dataset")
    p.add_argument("--data", type=str, help="tensor dump from construct/synth")
    p.add_argument("--input", type=str, help="cohort CSV (built on the fly)")
    p.add_argument("--representation", choices=REPRESENTATIONS, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--score", choices=dio.SCORE_NAMES, default=None)
    p.add_argument("--norm-mode", dest="norm_mode", choices=("instrument", "cohort"),
                   default=None)
    p.add_argument("--method", choices=sorted(METHODS), default=None)
    p.add_argument("--max-rank", dest="max_rank", type=int, default=None)
    p.add_argument("--inner-max-iters", dest="inner_max_iters", type=int, default=None)
    p.add_argument("--convergence-tol", dest="convergence_tol", type=float, default=None)
    p.add_argument("--lambda-grid-size", dest="lambda_grid_size", type=int, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lam-g", dest="lam_g", type=float, default=None)
    p.add_argument("--lam-1", dest="lam_1", type=float, default=None)
    p.add_argument("--grouping", choices=("by-modality", "by-roi"), default=None)
    p.add_argument("--fraction", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("benchmark", help="methods x representations x scores protocol")
    p.add_argument("--data", type=str)
    p.add_argument("--input", type=str)
    p.add_argument("--representations", type=str, default=None,
                   help="comma list from: " + ",".join(REPRESENTATIONS))
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--scores", type=str, default=None, help="comma list of score names")
    p.add_argument("--norm-mode", dest="norm_mode", choices=("instrument", "cohort"),
                   default=None)
    p.add_argument("--methods", type=str, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--max-rank", dest="max_rank", type=int, default=None)
    p.add_argument("--inner-max-iters", dest="inner_max_iters", type=int, default=None)
    p.add_argument("--convergence-tol", dest="convergence_tol", type=float, default=None)
    p.add_argument("--lambda-grid-size", dest="lambda_grid_size", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("sweep", help="k or rank hyperparameter sweep")
    p.add_argument("--sweep", choices=("k", "rank"), default=None)
    p.add_argument("--values", type=str, default=None,
                   help="comma list and lo:hi ranges, e.g. 1,5,10:12,116")
    p.add_argument("--data", type=str)
    p.add_argument("--input", type=str)
    p.add_argument("--representation", choices=REPRESENTATIONS, default=None)
    p.add_argument("--kind", choices=("connectivity", "stack"), default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--scores", type=str, default=None)
    p.add_argument("--norm-mode", dest="norm_mode", choices=("instrument", "cohort"),
                   default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--folds", type=int, default=None)
    p.add_argument("--max-rank", dest="max_rank", type=int, default=None)
    p.add_argument("--inner-max-iters", dest="inner_max_iters", type=int, default=None)
    p.add_argument("--convergence-tol", dest="convergence_tol", type=float, default=None)
    p.add_argument("--lambda-grid-size", dest="lambda_grid_size", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="ROI ranking and modality contributions")
    p.add_argument("--models", type=str, help="directory of fitted model JSON files")
    p.add_argument("--top-n", dest="top_n", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic planted-signal dataset")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--shape", type=str, default=None, help="e.g. 20x20x3 or 116x3")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--density", type=float, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--format", choices=("json", "csv"), default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except dio.SchemaError as e:
        print(f"error [input-schema]: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except (OSError, json.JSONDecodeError) as e:
        print(f"error [input]: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except (np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"error [numerical]: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"error [usage]: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
