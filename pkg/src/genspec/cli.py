"""``genspec`` command line: simulate, fit, compare, forecast, oracle.

Exit codes: 0 success, 1 numerical failure, 2 input or usage error.
"""
from __future__ import annotations

import argparse
import csv
import glob
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import config as C
from . import estimator as E
from . import oracle as O
from . import simulate as S
from .trajectory import TrajectoryBundle, is_uniform, load_csv, save_csv, subsample

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def _out_dir(args, cfg) -> Path:
    out = Path(args.out or cfg.get("output", {}).get("directory", "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    return out


def _seed(args, cfg) -> int:
    return int(args.seed if args.seed is not None else cfg.get("seed", 0))


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _write_text(path: Path, text: str):
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# simulate -------------------------------------------------------------------

def _simulate_one(job):
    proc, seed = job
    spec = C.process_spec(proc, seed)
    return S.euler_maruyama(spec, proc.get("n_samples", 10_000), C.out_stride(proc))


def _simulate(proc, seed, jobs):
    """List of trajectories (seeds ``seed + i``) or one bundle for a grid section."""
    if proc["kind"] == "csv":
        raise UsageError("process kind 'csv' cannot be simulated")
    count = proc.get("n_trajectories", 1)
    if "bundle" in proc:
        spec = C.process_spec(proc, seed)
        times = C.bundle_times(proc["bundle"], spec.h)
        return S.simulate_bundle(spec, times, count)
    return _map(_simulate_one, [(proc, seed + i) for i in range(count)], jobs)


def cmd_simulate(args, cfg) -> int:
    if "process" not in cfg:
        raise UsageError("simulate needs a 'process' section")
    proc = cfg["process"]
    seed = _seed(args, cfg)
    out = _out_dir(args, cfg)
    result = _simulate(proc, seed, args.jobs)
    trajs = result.trajectories if isinstance(result, TrajectoryBundle) else result
    for i, tr in enumerate(trajs):
        save_csv(tr, out / f"traj_{i:03d}.csv")
    tr = trajs[0]
    uniform, dt = is_uniform(tr)
    print(f"wrote {len(trajs)} trajectories to {out}")
    print(f"n={tr.n} d={tr.d} dt={dt if uniform else 'non-uniform'} "
          f"burn_in={proc.get('burn_in', 'default')} seeds={seed}..{seed + len(trajs) - 1}")
    return EXIT_OK


# fit ------------------------------------------------------------------------

def _load_inputs(args, cfg):
    paths = list(args.paths or [])
    proc = cfg.get("process", {})
    if not paths and proc.get("kind") == "csv":
        paths = list(proc.get("paths", []))
    if paths:
        trajs = []
        for p in paths:
            if not Path(p).is_file():
                raise FileNotFoundError(f"trajectory file not found: {p}")
            trajs.append(load_csv(p))
        return trajs, [{"path": str(p)} for p in paths], [Path(p).stem for p in paths]
    if not proc:
        raise UsageError("fit needs trajectory CSV paths or a simulated 'process' section")
    seed = _seed(args, cfg)
    sim = _simulate(proc, seed, args.jobs)
    spec = C.process_spec(proc, seed)
    if isinstance(sim, TrajectoryBundle):
        refs = [{"simulated": spec.describe(), "seed": seed, "bundle_count": sim.count}]
        return sim, refs, ["bundle"]
    refs = [{"simulated": {**spec.describe(), "seed": seed + i}} for i in range(len(sim))]
    return sim, refs, [f"model_{i:03d}" for i in range(len(sim))]


def _fit_one(job):
    data, cfg = job
    est = cfg["estimator"]
    feats_sec = cfg.get("features", {"kind": "gaussian"})
    mode = est.get("mode")
    if isinstance(data, TrajectoryBundle):
        fit_cfg = C.build_fit_config(est, bundle_grid=data.times)
        feats = C.build_features(feats_sec, data.stacked_states())
        return E.fit_bundle(data, fit_cfg, feats, mode)
    stride = est.get("subsample", 1)
    if stride > 1:
        data = subsample(data, stride)
    uniform, dt = is_uniform(data)
    if not uniform:
        raise UsageError("non-uniform single trajectory: set estimator.bundle to fit a bundle")
    fit_cfg = C.build_fit_config(est, dt=dt)
    feats = C.build_features(feats_sec, data.states)
    return E.fit(data, fit_cfg, feats, mode)


def _table(name, model) -> str:
    lines = [f"# {name} ({model.mode}, r={model.r})",
             f"{'i':>3} {'Re lambda':>14} {'Im lambda':>12} {'sigma':>12} {'eta':>10}"]
    for i in range(model.r):
        lam = model.eigenvalues[i]
        lines.append(f"{i + 1:>3} {lam.real:>14.6g} {lam.imag:>12.4g} "
                     f"{model.singular_values[i]:>12.6g} {model.metric_distortions[i]:>10.4g}")
    lines.append(f"    sigma_(r+1) = {E.singular_tail(model):.6g}")
    return "\n".join(lines)


def cmd_fit(args, cfg) -> int:
    if "estimator" not in cfg:
        raise UsageError("fit needs an 'estimator' section")
    data, refs, names = _load_inputs(args, cfg)
    out = _out_dir(args, cfg)
    est = cfg["estimator"]
    if isinstance(data, TrajectoryBundle):
        units = [data]
    elif est.get("bundle", False):
        units = [TrajectoryBundle(tuple(data))]
        refs, names = [{"bundle": refs}], ["bundle"]
    else:
        units = list(data)
    models = _map(_fit_one, [(u, cfg) for u in units], args.jobs)
    for name, ref, model in zip(names, refs, models):
        path = out / f"{name}.json"
        _write_text(path, model.to_json(training_reference=ref) + "\n")
        print(_table(name, model))
        print(f"    -> {path}")
    return EXIT_OK


# compare --------------------------------------------------------------------

def _reference(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "eigenvalues" in doc:
        ev = np.asarray(doc["eigenvalues"], dtype=np.complex128)
        return ev, doc.get("potential")
    model = E.SpectralModel.from_json(json.dumps(doc))
    return model.eigenvalues, _model_potential(model)


def _model_potential(model):
    src = model.source or {}
    sim = src.get("simulated") if isinstance(src, dict) else None
    return sim.get("potential") if isinstance(sim, dict) else None


def _error(est, ref, absolute):
    if absolute:
        return float(abs(est - ref)) if (est.imag or ref.imag) else float(est.real - ref.real), "absolute"
    if est.imag == 0 and ref.imag == 0:
        return float((est.real - ref.real) / ref.real), "relative"
    return float(abs(est - ref) / abs(ref)), "relative"


def compare_rows(models, names, ref, k):
    """Tidy error rows for both indexings; ``all`` uses absolute error at index 1."""
    rows = []
    need = k + 1
    if ref.shape[0] < need:
        raise UsageError(f"eigenvalue-count mismatch: reference has {ref.shape[0]}, need {need}")
    for name, m in zip(names, models):
        if m.r < need:
            raise UsageError(f"eigenvalue-count mismatch: {name} has r={m.r}, need {need}")
        label = "TO" if m.config.weights.is_transfer_operator else "IG"
        lam = m.eigenvalues
        for indexing, offset in (("all", 0), ("nontrivial", 1)):
            for i in range(1, k + 1):
                j = i - 1 + offset
                absolute = indexing == "all" and i == 1
                err, kind = _error(lam[j], ref[j], absolute)
                rows.append([name, label, indexing, i, repr(float(lam[j].real)), repr(float(lam[j].imag)),
                             repr(float(ref[j].real)), repr(err), kind])
    return rows


def summarize(rows):
    groups = {}
    for name, label, indexing, i, _, _, _, err, kind in rows:
        groups.setdefault((label, indexing, i, kind), []).append(float(err))
    out = []
    for (label, indexing, i, kind), errs in sorted(groups.items()):
        e = np.asarray(errs)
        q = np.quantile(e, [0.1, 0.25, 0.5, 0.75, 0.9])
        out.append([label, indexing, i, kind, len(e), repr(float(e.mean())), *[repr(float(v)) for v in q],
                    repr(float(np.median(np.abs(e))))])
    return out


ERROR_HEADER = ["model", "estimator", "indexing", "index", "estimate_re", "estimate_im", "reference",
                "error", "error_kind"]
SUMMARY_HEADER = ["estimator", "indexing", "index", "error_kind", "count", "mean", "q10", "q25",
                  "median", "q75", "q90", "median_abs"]


def cmd_compare(args, cfg) -> int:
    sec = cfg.get("compare", {})
    ref_path = sec.get("reference")
    if not ref_path:
        raise UsageError("compare needs compare.reference (oracle fixture or model JSON)")
    if not Path(ref_path).is_file():
        raise FileNotFoundError(f"reference file not found: {ref_path}")
    paths = list(args.paths or [])
    if not paths:
        for pattern in sec.get("models", []):
            hits = sorted(glob.glob(pattern))
            if not hits:
                raise FileNotFoundError(f"no model files match {pattern}")
            paths.extend(hits)
    if not paths:
        raise UsageError("compare needs model JSON paths")
    ref, ref_pot = _reference(ref_path)
    models, names = [], []
    for p in paths:
        if not Path(p).is_file():
            raise FileNotFoundError(f"model file not found: {p}")
        m = E.SpectralModel.from_json(Path(p).read_text(encoding="utf-8"))
        pot = _model_potential(m)
        if ref_pot is not None and pot is not None and pot != ref_pot:
            raise UsageError(f"{p}: model process does not match the reference potential")
        models.append(m)
        names.append(Path(p).stem)
    rows = compare_rows(models, names, ref, sec.get("k", 3))
    out = _out_dir(args, cfg)
    _write_text(out / "errors.csv", _csv_text(ERROR_HEADER, rows))
    summary = summarize(rows)
    _write_text(out / "summary.csv", _csv_text(SUMMARY_HEADER, summary))
    print(f"{len(models)} models x {sec.get('k', 3)} eigenvalues -> {out / 'errors.csv'}")
    for row in summary:
        print(f"{row[0]:>3} {row[1]:>10} i={row[2]} {row[3]:>8} median={float(row[8]):+.4f} "
              f"median_abs={float(row[11]):.4f}")
    return EXIT_OK


# forecast -------------------------------------------------------------------

def cmd_forecast(args, cfg) -> int:
    if "forecast" not in cfg:
        raise UsageError("forecast needs a 'forecast' section")
    sec = cfg["forecast"]
    path = Path(sec["model"])
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    model = E.SpectralModel.from_json(path.read_text(encoding="utf-8"))
    if model.states is None:
        raise UsageError("model JSON carries no training states")
    d = model.states.shape[1]
    x0 = np.asarray(sec["x0"], dtype=np.float64)
    if x0.shape[0] != d:
        raise UsageError(f"x0 has {x0.shape[0]} coordinates, model state dimension is {d}")
    h = C.build_observable(sec["observable"], d)
    t = np.asarray(sec["times"], dtype=np.float64)
    pred = E.forecast(model, h, x0, t)
    out = _out_dir(args, cfg)
    rows = [[repr(float(a)), repr(float(b))] for a, b in zip(t, np.atleast_1d(pred))]
    _write_text(out / "forecast.csv", _csv_text(["t", "prediction"], rows))
    print(f"{len(rows)} predictions -> {out / 'forecast.csv'}")
    return EXIT_OK


# oracle ---------------------------------------------------------------------

def cmd_oracle(args, cfg) -> int:
    if "oracle" not in cfg:
        raise UsageError("oracle needs an 'oracle' section")
    sec = cfg["oracle"]
    pot = dict(sec["potential"])
    name = pot.pop("name")
    potential = S.get_potential(name, **pot)
    kw = dict(gamma=sec.get("gamma", 1.0), kT=sec.get("kT", 1.0), a=sec.get("a", -1.2),
              b=sec.get("b", 1.2), G=sec.get("G", 2000))
    k = sec.get("k", 6)
    gen = O.discretize_langevin_1d(potential, **kw)
    extra = {}
    if sec.get("refine_check", False):
        fine = O.discretize_langevin_1d(potential, **{**kw, "G": 2 * kw["G"]})
        e1, e2 = O.spectrum(gen, k)[0], O.spectrum(fine, k)[0]
        rel = np.abs(e2[1:] - e1[1:]) / np.abs(e2[1:])
        extra["refinement"] = {"G": 2 * kw["G"], "eigenvalues": e2.tolist(),
                               "max_rel_change_nontrivial": float(rel.max()) if rel.size else 0.0}
    out = _out_dir(args, cfg)
    path = out / f"oracle_{potential.name}.json"
    command = f"genspec oracle --config {args.config}"
    doc = O.write_fixture(path, gen, k, command=command, extra=extra)
    print(f"eigenvalues: {', '.join(f'{v:.6g}' for v in doc['eigenvalues'])}")
    if extra:
        print(f"G->2G max relative change: {extra['refinement']['max_rel_change_nontrivial']:.3e}")
    print(f"-> {path}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "compare": cmd_compare,
            "forecast": cmd_forecast, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="genspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"genspec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML run configuration")
        sp.add_argument("--out", help="output directory (overrides output.directory)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp.add_argument("--seed", type=int, help="base seed (overrides config seed)")
        if name in ("fit", "compare"):
            sp.add_argument("paths", nargs="*",
                            help="trajectory CSVs (fit) or model JSONs (compare)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        parser.error("--seed must be an unsigned 64-bit integer")
    try:
        cfg = C.load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (ArithmeticError, np.linalg.LinAlgError, S.SimulationError) as exc:
        print(f"genspec {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"genspec {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
