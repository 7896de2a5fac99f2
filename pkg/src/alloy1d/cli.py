"""Command-line driver for the statistical experiments.

Each run is described by a manifest (kind + model + params + seed).  The
manifest is canonicalized and hashed; artifact file names carry the hash,
and the summary JSON embeds the manifest together with a reproducibility
block, so any summary can be replayed bit-for-bit later.  Replicas are
independent work items fanned out to a process pool; aggregation happens
in replica order, making the output independent of the worker count.

Exit codes: 0 success, 2 configuration/validation refusal, 3 numerical
failure during the run.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import floquet as fl
from . import perturbation as pt
from . import spectral_stats as st
from .eigensolve import eigenvalues_in_window, eigenvector
from .errors import Alloy1dError, ReplayError, ValidationError
from .hamiltonian import assemble_continuum, assemble_discrete, check_mesh
from .model import ModelSpec, sample_disorder, unit_bump_model, validate_model
from .rng import derive_seed

KINDS = ("ids", "levelstats", "joint", "wegner", "minami", "decorrelate",
         "floquet", "validate", "gradients")

_DEFAULT_PARAMS: dict = {
    "ids": {"box": 400, "replicas": 192, "grid": [0.0, 3.0, 601],
            "mesh": 0.05},
    "levelstats": {"box": 400, "replicas": 1000, "energy": 0.3, "w": 10.0,
                   "intervals": [[-5.0, 0.0], [0.0, 5.0]], "mesh": 0.05,
                   "nu_min": 1e-3,
                   "ids": {"box": 400, "replicas": 192, "grid": [0.0, 3.0, 601]}},
    "joint": {"box": 100, "replicas": 500, "energy": 0.3, "energy2": 0.8,
              "u_plus": [[-3.0, 3.0]], "u_minus": [[-3.0, 3.0]],
              "mesh": 0.05, "nu_min": 1e-3,
              "ids": {"box": 400, "replicas": 192, "grid": [0.0, 3.0, 601]}},
    "wegner": {"box": 100, "replicas": 500, "energy": 0.3, "width": 0.02,
               "mesh": 0.05},
    "minami": {"box": 100, "replicas": 2000, "energy": 0.3, "eps": 0.004,
               "rho": 0.5, "mesh": 0.05},
    "decorrelate": {"window_scale": 400, "box": 66, "replicas": 2000,
                    "energy": 0.3, "energy2": 0.8, "alpha": 0.7, "k": 0.8,
                    "mesh": 0.05},
    "gradients": {"box": 20, "replicas": 50, "energy": 0.5, "delta": 1e-5,
                  "window": 0.3, "mesh": 0.05},
    "floquet": {"energy": 0.3, "energy2": 0.8, "lam_lo": -20.0,
                "lam_hi": 20.0, "points": 2001, "samples": 1024},
    "validate": {},
}


# ---------------------------------------------------------------------------
# manifest


def _canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def manifest_hash(manifest: dict) -> str:
    return hashlib.sha256(_canonical_json(manifest).encode()).hexdigest()[:16]


def build_manifest(kind: str, model_doc, params: dict, seed: int) -> dict:
    if kind not in KINDS:
        raise ValidationError(f"unknown experiment kind {kind!r}")
    merged = dict(_DEFAULT_PARAMS[kind])
    for key, val in params.items():
        if key not in merged and kind != "validate":
            raise ValidationError(f"unknown parameter {key!r} for {kind}")
        merged[key] = val
    if model_doc in (None, "unit-bump"):
        model_doc = unit_bump_model().to_json_dict()
    return {"kind": kind, "seed": int(seed), "model": model_doc,
            "params": merged}


def load_spec(manifest: dict) -> ModelSpec:
    return ModelSpec.from_json_dict(manifest["model"])


# ---------------------------------------------------------------------------
# replica jobs (module level so they pickle into worker processes)


def _ids_grid(p: dict) -> np.ndarray:
    lo, hi, n = p["grid"]
    return np.linspace(float(lo), float(hi), int(n))


def _check_ids_mesh(spec: ModelSpec, p: dict) -> None:
    if spec.variant == "continuum":
        check_mesh(float(p["mesh"]), float(np.max(np.abs(_ids_grid(p)))),
                   spec.potential_sup_bound(), window_scale=1.0)


def _replica_job(job):
    kind, spec, params, seed, replica, extra = job
    p = params
    if kind == "ids":
        return st.ids_replica(spec, int(p["box"]), _ids_grid(p), seed,
                              replica, p.get("mesh"))
    if kind == "levelstats":
        cfg = st.ExperimentConfig(l=int(p["box"]), replicas=1, seed=seed,
                                  h=p.get("mesh"), w=float(p["w"]),
                                  u_plus=tuple(tuple(u) for u in p["intervals"]),
                                  nu_min=float(p["nu_min"]))
        rec, sample, gaps = st.levelstats_replica(spec, extra, float(p["energy"]),
                                                  cfg, replica)
        return rec.counts_plus, sample.xi, gaps
    if kind == "joint":
        cfg = st.ExperimentConfig(l=int(p["box"]), replicas=1, seed=seed,
                                  h=p.get("mesh"),
                                  u_plus=tuple(tuple(u) for u in p["u_plus"]),
                                  u_minus=tuple(tuple(u) for u in p["u_minus"]),
                                  nu_min=float(p["nu_min"]))
        rec = st.joint_counts_replica(spec, extra, float(p["energy"]),
                                      float(p["energy2"]), cfg, replica)
        return rec.counts_plus, rec.counts_minus
    if kind == "wegner":
        return st.wegner_replica(spec, float(p["energy"]), float(p["width"]),
                                 int(p["box"]), seed, replica, p.get("mesh"))
    if kind == "minami":
        return st.minami_replica(spec, float(p["energy"]), float(p["eps"]),
                                 int(p["box"]), seed, replica, p.get("mesh"))
    if kind == "decorrelate":
        halfwidth = 1.0 / float(p["window_scale"])
        return st.joint_replica(spec, float(p["energy"]), float(p["energy2"]),
                                halfwidth, int(p["box"]), seed, replica,
                                p.get("mesh"))
    if kind == "gradients":
        return _gradient_replica(spec, p, seed, replica)
    raise ValidationError(f"kind {kind!r} has no replica job")


def _gradient_replica(spec: ModelSpec, p: dict, seed: int, replica: int):
    cfg = sample_disorder(spec, int(p["box"]), seed, replica)
    if spec.variant == "continuum":
        ham = assemble_continuum(spec, cfg, int(p["box"]), float(p["mesh"]))
    else:
        ham = assemble_discrete(spec, cfg, int(p["box"]))
    e0, w = float(p["energy"]), float(p["window"])
    eigs = eigenvalues_in_window(ham, e0 - w, e0 + w)
    if len(eigs) == 0:
        return None
    target = float(eigs[np.argmin(np.abs(eigs - e0))])
    pair = eigenvector(ham, target)
    grad = pt.grad_hellmann_feynman(spec, cfg, pair)
    return target, grad.l1, grad.sites, grad.components


def _map_replicas(kind: str, spec: ModelSpec, params: dict, seed: int,
                  replicas: int, workers: int, extra=None) -> list:
    jobs = [(kind, spec, params, seed, r, extra) for r in range(replicas)]
    if workers <= 1:
        return [_replica_job(j) for j in jobs]
    chunk = max(1, replicas // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replica_job, jobs, chunksize=chunk))


def _compute_ids(spec: ModelSpec, params: dict, seed: int,
                 workers: int) -> st.IDSTable:
    """IDS table for an experiment, seeded on a derived stream."""
    p = dict(params)
    _check_ids_mesh(spec, p)
    ids_seed = derive_seed(seed, "ids")
    grid = _ids_grid(p)
    counts = _map_replicas("ids", spec, p, ids_seed, int(p["replicas"]),
                           workers)
    return st.aggregate_ids(counts, spec, int(p["box"]), grid)


# ---------------------------------------------------------------------------
# experiment drivers: produce (rows_schema, header, rows, results_dict)


def _fmt(x) -> str:
    return repr(float(x))


def _run_ids(spec, manifest, seed, workers):
    p = manifest["params"]
    _check_ids_mesh(spec, p)
    grid = _ids_grid(p)
    counts = _map_replicas("ids", spec, p, seed, int(p["replicas"]), workers)
    table = st.aggregate_ids(counts, spec, int(p["box"]), grid)
    rows = [[r, " ".join(str(int(c)) for c in counts[r])]
            for r in range(len(counts))]
    results = {
        "grid": [_fmt(g) for g in grid],
        "N": [_fmt(v) for v in table.N],
        "nu": [_fmt(v) for v in table.nu],
        "lipschitz": _fmt(table.lipschitz_constant()),
    }
    return "alloy1d.ids.rows.v1", ["replica", "counts"], rows, results


def _run_levelstats(spec, manifest, seed, workers):
    p = manifest["params"]
    ids = _compute_ids(spec, {**p["ids"], "mesh": p.get("mesh")}, seed, workers)
    out = _map_replicas("levelstats", spec, p, seed, int(p["replicas"]),
                        workers, extra=ids)
    rows = []
    all_gaps = []
    for r, (counts, xi, gaps) in enumerate(out):
        rows.append([r, " ".join(str(c) for c in counts),
                     " ".join(_fmt(x) for x in xi),
                     " ".join(_fmt(g) for g in gaps)])
        all_gaps.append(gaps)
    gaps = np.concatenate(all_gaps) if all_gaps else np.empty(0)
    ks, kp = st.exponential_ks(gaps)
    mean_counts = np.mean([[int(c) for c in row[1].split()] for row in rows],
                          axis=0)
    results = {
        "energy": p["energy"],
        "gap_count": int(len(gaps)),
        "ks_statistic": _fmt(ks),
        "ks_pvalue": _fmt(kp),
        "mean_counts": [_fmt(c) for c in mean_counts],
        "intervals": p["intervals"],
        "nu_at_energy": _fmt(ids.nu_at(float(p["energy"]))),
    }
    return ("alloy1d.levelstats.rows.v1",
            ["replica", "counts", "xi", "gaps"], rows, results)


def _run_joint(spec, manifest, seed, workers):
    p = manifest["params"]
    if float(p["energy"]) == float(p["energy2"]):
        raise ValidationError("joint experiment needs two distinct energies")
    ids = _compute_ids(spec, {**p["ids"], "mesh": p.get("mesh")}, seed, workers)
    out = _map_replicas("joint", spec, p, seed, int(p["replicas"]), workers,
                        extra=ids)
    records = [st.CountRecord(r, cp, cm) for r, (cp, cm) in enumerate(out)]
    agg = st.aggregate_joint_counts(records)
    rows = [[r.replica, " ".join(str(c) for c in r.counts_plus),
             " ".join(str(c) for c in r.counts_minus)] for r in records]
    results = {
        "correlation": _fmt(agg.correlation),
        "corr_stderr": _fmt(agg.corr_stderr),
        "chi2_statistic": _fmt(agg.chi2_stat),
        "chi2_pvalue": _fmt(agg.chi2_pvalue),
        "chi2_dof": agg.chi2_dof,
        "table": [[int(v) for v in row] for row in agg.table],
    }
    return ("alloy1d.jointcounts.rows.v1",
            ["replica", "counts_plus", "counts_minus"], rows, results)


def _run_wegner(spec, manifest, seed, workers):
    p = manifest["params"]
    hits = _map_replicas("wegner", spec, p, seed, int(p["replicas"]), workers)
    rep = st.aggregate_wegner(hits, spec, float(p["width"]), int(p["box"]))
    rows = [[r, int(h)] for r, h in enumerate(hits)]
    results = {
        "probability": _fmt(rep.probability),
        "ci": [_fmt(rep.ci[0]), _fmt(rep.ci[1])],
        "ratio": _fmt(rep.ratio),
        "ratio_ci": [_fmt(rep.ratio_ci[0]), _fmt(rep.ratio_ci[1])],
        "interval_width": _fmt(rep.interval_width),
        "box_measure": _fmt(rep.measure),
    }
    return "alloy1d.wegner.rows.v1", ["replica", "indicator"], rows, results


def _run_minami(spec, manifest, seed, workers):
    p = manifest["params"]
    counts = _map_replicas("minami", spec, p, seed, int(p["replicas"]), workers)
    rep = st.aggregate_minami(counts, spec, float(p["eps"]), int(p["box"]),
                              float(p["rho"]))
    rows = [[r, int(c)] for r, c in enumerate(counts)]
    results = {
        "sum_tail": _fmt(rep.sum_tail),
        "ratio": _fmt(rep.ratio),
        "eps": _fmt(rep.eps),
        "rho": _fmt(rep.rho),
        "box_measure": _fmt(rep.measure),
        "count_histogram": [int(c) for c in rep.count_histogram],
    }
    return "alloy1d.minami.rows.v1", ["replica", "count"], rows, results


def _run_decorrelate(spec, manifest, seed, workers):
    p = manifest["params"]
    if float(p["energy"]) == float(p["energy2"]):
        raise ValidationError("decorrelation needs two distinct energies")
    inds = _map_replicas("decorrelate", spec, p, seed, int(p["replicas"]),
                         workers)
    rep = st.aggregate_joint(inds, 1.0 / float(p["window_scale"]))
    rows = [[r, int(a), int(b)] for r, (a, b) in enumerate(inds)]
    results = {
        "p_joint": _fmt(rep.p_joint),
        "p_f": _fmt(rep.p_f),
        "p_g": _fmt(rep.p_g),
        "ci_joint": [_fmt(rep.ci_joint[0]), _fmt(rep.ci_joint[1])],
        "ci_f": [_fmt(rep.ci_f[0]), _fmt(rep.ci_f[1])],
        "ci_g": [_fmt(rep.ci_g[0]), _fmt(rep.ci_g[1])],
        "defect": _fmt(rep.defect),
        "window_halfwidth": _fmt(rep.window_halfwidth),
        "box": int(p["box"]),
        "window_scale": int(p["window_scale"]),
    }
    return ("alloy1d.decorrelate.rows.v1",
            ["replica", "hit_f", "hit_g"], rows, results)


def _run_gradients(spec, manifest, seed, workers):
    p = manifest["params"]
    out = _map_replicas("gradients", spec, p, seed, int(p["replicas"]), workers)
    rows = []
    norms = []
    for r, item in enumerate(out):
        if item is None:
            rows.append([r, "", "", "", ""])
            continue
        value, l1, sites, comps = item
        norms.append(l1)
        rows.append([r, _fmt(value), _fmt(l1),
                     " ".join(str(int(s)) for s in sites),
                     " ".join(_fmt(c) for c in comps)])
    if not norms:
        raise ValidationError("no eigenvalues found in the gradient window")
    results = {
        "min_l1": _fmt(min(norms)),
        "max_l1": _fmt(max(norms)),
        "found": len(norms),
        "replicas": int(p["replicas"]),
    }
    return ("alloy1d.gradients.rows.v1",
            ["replica", "value", "l1", "sites", "components"], rows, results)


def _run_floquet(spec, manifest, seed, workers):
    p = manifest["params"]
    if spec.variant != "continuum":
        raise ValidationError("the floquet experiment needs a continuum model")
    weight = fl.periodized_weight(spec, int(p["samples"]))
    problem = fl.hill_for_model(spec, float(p["energy"]), int(p["samples"]))
    lams = np.linspace(float(p["lam_lo"]), float(p["lam_hi"]),
                       int(p["points"]))
    rows = []
    for lam in lams:
        data = fl.monodromy(problem, lam=float(lam))
        rows.append([_fmt(lam), _fmt(data.D), data.regime])
    sep = fl.separate_discriminants(
        float(p["energy"]), float(p["energy2"]), weight,
        background=None if spec.q_per.is_zero else spec.q_per.samples,
        bracket=(float(p["lam_lo"]), float(p["lam_hi"])))
    results = {
        "separation_status": sep.status,
        "lambda_star": None if sep.lambda_star is None else _fmt(sep.lambda_star),
        "margin": _fmt(sep.margin),
        "d1": _fmt(sep.d1),
        "d2": _fmt(sep.d2),
        "exceptional": list(sep.exceptional),
        "same_parity": sep.same_parity,
        "caveat": sep.caveat,
    }
    return ("alloy1d.discriminant_sweep.v1",
            ["lam", "D", "regime"], rows, results)


_RUNNERS = {
    "ids": _run_ids,
    "levelstats": _run_levelstats,
    "joint": _run_joint,
    "wegner": _run_wegner,
    "minami": _run_minami,
    "decorrelate": _run_decorrelate,
    "gradients": _run_gradients,
    "floquet": _run_floquet,
}


# ---------------------------------------------------------------------------
# artifact writing


def _write_rows_csv(path: str, schema: str, header: list, rows: list) -> None:
    buf = io.StringIO()
    buf.write(f"#schema={schema}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def run_manifest(manifest: dict, out_dir: str, workers: int = 1,
                 stdout_json: bool = False) -> dict:
    """Execute a manifest and write its artifacts; returns the summary."""
    spec = load_spec(manifest)
    report = validate_model(spec)
    kind = manifest["kind"]
    seed = int(manifest["seed"])
    chash = manifest_hash(manifest)
    if kind == "validate":
        summary = {
            "tool": "alloy1d", "tool_version": __version__, "kind": kind,
            "config_hash": chash, "seed": seed, "manifest": manifest,
            "artifacts": {}, "results": {"checks": report.lines(),
                                         "ok": report.ok},
        }
        if stdout_json:
            print(json.dumps(summary, indent=2, sort_keys=True))
        else:
            for line in report.lines():
                print(line)
        return summary
    if not report.ok:
        raise ValidationError("model failed validation:\n"
                              + "\n".join(report.lines()))

    os.makedirs(out_dir, exist_ok=True)
    csv_name = f"{kind}-{chash}.csv"
    json_name = f"{kind}-{chash}.json"
    csv_path = os.path.join(out_dir, csv_name)
    json_path = os.path.join(out_dir, json_name)
    created: list = []
    try:
        print(f"[{kind}] running {manifest['params'].get('replicas', 1)} "
              f"replicas on {workers} worker(s)", file=sys.stderr)
        schema, header, rows, results = _RUNNERS[kind](spec, manifest, seed,
                                                       workers)
        created.append(csv_path)
        _write_rows_csv(csv_path, schema, header, rows)
        summary = {
            "tool": "alloy1d", "tool_version": __version__, "kind": kind,
            "config_hash": chash, "seed": seed, "manifest": manifest,
            "artifacts": {"rows_csv": csv_name}, "results": results,
        }
        created.append(json_path)
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except BaseException:
        for path in created:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise
    print(f"[{kind}] wrote {csv_path} and {json_path}", file=sys.stderr)
    if stdout_json:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return summary


def replay_summary(summary_path: str, out_dir: str, workers: int = 1,
                   stdout_json: bool = False) -> dict:
    """Re-run the manifest embedded in a summary, refusing on mismatch."""
    with open(summary_path) as fh:
        doc = json.load(fh)
    for key in ("tool_version", "config_hash", "manifest"):
        if key not in doc:
            raise ReplayError(f"summary lacks the {key!r} field")
    if doc["tool_version"] != __version__:
        raise ReplayError(
            f"summary was produced by version {doc['tool_version']}, this "
            f"tool is {__version__}; refusing to replay")
    recomputed = manifest_hash(doc["manifest"])
    if recomputed != doc["config_hash"]:
        raise ReplayError(
            f"manifest hash {recomputed} does not match the recorded "
            f"{doc['config_hash']}; summary was modified, refusing")
    print(f"[replay] hash {recomputed} verified, re-running", file=sys.stderr)
    return run_manifest(doc["manifest"], out_dir, workers, stdout_json)


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="manifest JSON file")
    sub.add_argument("--seed", type=int, help="override the manifest seed")
    sub.add_argument("--workers", type=int, default=1,
                     help="process pool size (default 1)")
    sub.add_argument("--out", default="alloy1d-out",
                     help="artifact directory (default ./alloy1d-out)")
    sub.add_argument("--stdout-json", action="store_true",
                     help="print the summary JSON to stdout")


_OVERRIDE_FLAGS = {
    "box": int, "replicas": int, "energy": float, "energy2": float,
    "mesh": float, "width": float, "eps": float, "rho": float, "w": float,
    "delta": float, "window": float, "window_scale": int, "alpha": float,
    "k": float, "lam_lo": float, "lam_hi": float, "points": int,
    "samples": int,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alloy1d",
        description="Monte Carlo experiments for 1d random alloy operators")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sub = subs.add_parser(kind, help=f"run the {kind} experiment")
        _add_common(sub)
        for flag, typ in _OVERRIDE_FLAGS.items():
            if flag in _DEFAULT_PARAMS[kind]:
                sub.add_argument(f"--{flag.replace('_', '-')}", type=typ,
                                 dest=f"param_{flag}")
    replay = subs.add_parser("replay", help="re-run a recorded summary")
    replay.add_argument("summary", help="summary JSON from a previous run")
    _add_common(replay)
    return parser


def _manifest_from_args(args) -> dict:
    config_doc: dict = {}
    if args.config:
        with open(args.config) as fh:
            config_doc = json.load(fh)
        if "kind" in config_doc and config_doc["kind"] != args.command:
            raise ValidationError(
                f"config file is for kind {config_doc['kind']!r}, "
                f"subcommand is {args.command!r}")
    params = dict(config_doc.get("params", {}))
    for flag in _OVERRIDE_FLAGS:
        val = getattr(args, f"param_{flag}", None)
        if val is not None:
            params[flag] = val
    seed = config_doc.get("seed", 0)
    if args.seed is not None:
        seed = args.seed
    return build_manifest(args.command, config_doc.get("model"), params, seed)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            replay_summary(args.summary, args.out, args.workers,
                           args.stdout_json)
            return 0
        manifest = _manifest_from_args(args)
        if args.command == "validate":
            summary = run_manifest(manifest, args.out, args.workers,
                                   args.stdout_json)
            return 0 if summary["results"]["ok"] else 2
        run_manifest(manifest, args.out, args.workers, args.stdout_json)
        return 0
    except (ValidationError, ReplayError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Alloy1dError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
