"""Acceptance suite: one test per criterion, summarized in the terminal report.

Run alone with ``pytest tests/test_acceptance.py -v``; the "acceptance
criteria" section at the end lists PASS/FAIL per criterion.
"""
import csv
import json
import math

import numpy as np
import pytest
import yaml

from genspec import cli
from genspec import config as C
from genspec import estimator as E
from genspec import features as F
from genspec import oracle as O
from genspec import quadrature as Q
from genspec import simulate as S
from genspec.trajectory import TrajectoryBundle, subsample

from conftest import FIXTURES, ROOT, SQRT2, ou_path, triple_well_path

CONFIGS = ROOT / "configs"
C3_SEEDS = range(10)


def note(request, text):
    request.node.acceptance_detail = text


def coefficient_of_variation(values):
    v = np.asarray(values)
    return float(np.std(v) / abs(np.mean(v)))


def constant_mode(model):
    """Index of the eigenfunction that is closest to constant on the training points."""
    return int(np.argmin([coefficient_of_variation(model.train_values[:, i]) for i in range(model.r)]))


def fit_with_cli(config, out, *extra):
    assert cli.main(["fit", "--config", str(config), "--out", str(out), *map(str, extra)]) == 0


def strip_timestamp(text):
    doc = json.loads(text)
    doc.pop("timestamp")
    return doc


@pytest.fixture(scope="module")
def c3_runs(tmp_path_factory):
    """Two independent runs of the OU dual config for every seed."""
    base = tmp_path_factory.mktemp("c3")
    for run in ("a", "b"):
        for s in C3_SEEDS:
            fit_with_cli(CONFIGS / "fit_ou_dual.yaml", base / run / f"seed{s}", "--seed", s)
    return base


@pytest.fixture(scope="module")
def c4_runs(tmp_path_factory):
    """Two runs of the 20-trajectory triple-well config and the comparison of the first."""
    base = tmp_path_factory.mktemp("c4")
    for run in ("a", "b"):
        fit_with_cli(CONFIGS / "fit_triple_well.yaml", base / run)
    cmp_cfg = base / "compare.yaml"
    cmp_cfg.write_text(yaml.safe_dump({"compare": {
        "reference": str(FIXTURES / "oracle_triple_well.json"),
        "models": [str(base / "a" / "model_*.json")], "k": 3}}))
    assert cli.main(["compare", "--config", str(cmp_cfg), "--out", str(base / "cmp")]) == 0
    return base


@pytest.mark.criterion("C1", "quadrature bound and first-order decay")
def test_c1_quadrature_bound(request):
    mu, t_end = 1.0, 20.0
    lambdas = [0.0, -0.5, -1.0, -2.0, -5.0, -10.0, -1 + 2j, -1 - 2j]
    steps = [0.1, 0.05, 0.025, 0.0125]
    errors = {}
    for lam in lambdas:
        errors[lam] = [Q.scalar_quadrature_check(Q.trapezoid_weights(mu, dt, round(t_end / dt)), lam)[2]
                       for dt in steps]
    bound_ok = all(e <= 5 * dt + math.exp(-20.0) for errs in errors.values() for e, dt in zip(errs, steps))
    ratios = [a / b for errs in errors.values() for a, b in zip(errs, errs[1:])]
    note(request, f"bound {'holds' if bound_ok else 'violated'}; "
                  f"ratios in [{min(ratios):.2f}, {max(ratios):.2f}], required [1.5, 3]")
    assert bound_ok
    assert all(1.5 <= r <= 3 for r in ratios)


def _c2_fits():
    ou_long = ou_path(10_000, 0.01, seed=0)
    ou = ou_path(2000, 0.01, seed=7)
    tw = triple_well_path(1000, 0.05, seed=3)
    lap = lambda mu, dt, **kw: Q.trapezoid_weights(mu, dt, Q.horizon_for(mu, dt))
    yield "OU primal {1,x}", E.fit(ou_long, E.FitConfig(1.0, 1e-8, 2, lap(1.0, 0.01)), F.monomials(1))
    yield "OU primal cubic", E.fit(ou, E.FitConfig(1.0, 1e-6, 3, lap(1.0, 0.01)), F.monomials(3))
    yield "OU primal TO", E.fit(ou, E.FitConfig(1.0, 1e-4, 2, Q.transfer_operator_weights(0.01)),
                                F.monomials(1))
    yield "OU dual gaussian", E.fit(ou, E.FitConfig(1.0, 1e-6, 3, lap(1.0, 0.01)),
                                    F.KernelSpec(length_scale=F.median_length_scale(ou.states)), "dual")
    yield "triple-well dual SA", E.fit(tw, E.FitConfig(2.0, 1e-6, 4, lap(2.0, 0.05), self_adjoint=True),
                                       F.KernelSpec(length_scale=0.5), "dual")
    yield "triple-well dual", E.fit(tw, E.FitConfig(2.0, 1e-4, 3, lap(2.0, 0.05)),
                                    F.KernelSpec(length_scale=0.5), "dual")
    yield "triple-well primal quartic", E.fit(tw, E.FitConfig(2.0, 1e-6, 3, lap(2.0, 0.05)), F.monomials(4))
    yield "triple-well primal RFF", E.fit(
        tw, E.FitConfig(2.0, 1e-6, 3, lap(2.0, 0.05)),
        F.rff_dictionary(F.KernelSpec(length_scale=0.5), 200, 1, seed=0))


@pytest.mark.criterion("C2", "trivial eigenvalue with constant eigenfunction")
def test_c2_trivial_eigenvalue(request):
    bad = []
    for name, m in _c2_fits():
        cv = [coefficient_of_variation(m.train_values[:, i]) for i in range(m.r)]
        ok = any(abs(m.eigenvalues[i]) <= 0.05 and cv[i] <= 0.1 for i in range(m.r))
        if not ok:
            i = int(np.argmin(cv))
            bad.append(f"{name}: lambda={m.eigenvalues[i].real:.4f} cv={cv[i]:.3f}")
    note(request, "all 8 fits" if not bad else f"missing in {bad}")
    assert not bad


@pytest.mark.criterion("C3", "OU spectrum recovery on >= 8 of 10 seeds")
def test_c3_ou_recovery(request, c3_runs):
    truth = np.array([0.0, -1.0, -2.0, -3.0])
    limits = [0.10, 0.15, 0.15]
    good, worst = 0, []
    for s in C3_SEEDS:
        m = E.SpectralModel.from_json((c3_runs / "a" / f"seed{s}" / "model_000.json").read_text())
        lam = m.eigenvalues.real
        rel = np.abs(lam[1:] - truth[1:]) / np.abs(truth[1:])
        worst.append(float(rel[0]))
        if abs(lam[0]) <= 0.05 and np.all(rel <= limits):
            good += 1
    note(request, f"{good}/10 seeds pass; lambda=-1 relative errors median {np.median(worst):.3f}")
    assert good >= 8


@pytest.mark.criterion("C4", "triple-well lambda_2, lambda_3 vs oracle, median error <= 15%")
def test_c4_triple_well(request, c4_runs):
    with open(c4_runs / "cmp" / "errors.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0].keys()) == cli.ERROR_HEADER
    models = {r["model"] for r in rows}
    assert len(models) == 20
    med = {}
    for i in (1, 2):
        errs = [abs(float(r["error"])) for r in rows
                if r["indexing"] == "nontrivial" and int(r["index"]) == i and r["error_kind"] == "relative"]
        assert len(errs) == 20
        med[i + 1] = float(np.median(errs))
    assert (c4_runs / "cmp" / "summary.csv").is_file()
    note(request, f"median |rel err| lambda_2={med[2]:.3f}, lambda_3={med[3]:.3f}")
    assert med[2] <= 0.15 and med[3] <= 0.15


def _c5_errors(seeds=range(5), T=100.0, h=1e-3):
    steps = [0.1, 0.01, 0.001]
    ig = {dt: [] for dt in steps}
    to = {dt: [] for dt in steps}
    gamma = 1.0 / T
    for seed in seeds:
        spec = S.OUSpec([[-1.0]], [[SQRT2]], h=h, burn_in=0, seed=seed)
        fine = S.euler_maruyama(spec, int(round(T / h)), 1)
        for dt in steps:
            tr = subsample(fine, int(round(dt / h)))
            for weights, store in ((Q.trapezoid_weights(1.0, dt, Q.horizon_for(1.0, dt)), ig),
                                   (Q.transfer_operator_weights(dt), to)):
                m = E.fit(tr, E.FitConfig(1.0, gamma, 2, weights), F.monomials(1))
                lam = m.eigenvalues[1 - constant_mode(m)]
                store[dt].append(abs(lam - (-1.0)))
    return ({dt: float(np.mean(v)) for dt, v in ig.items()},
            {dt: float(np.mean(v)) for dt, v in to.items()})


@pytest.mark.criterion("C5", "IG robust to small time lag, TO degrades")
def test_c5_time_lag(request):
    ig, to = _c5_errors()
    spread = max(ig.values()) / min(ig.values())
    to_ok = to[0.001] >= 2 * to[0.1] or to[0.001] > 0.5
    note(request, "IG " + ", ".join(f"{dt:g}:{e:.3f}" for dt, e in ig.items())
         + f" (spread {spread:.2f}); TO " + ", ".join(f"{dt:g}:{e:.3f}" for dt, e in to.items()))
    assert spread <= 3
    assert to_ok


@pytest.mark.criterion("C6", "primal/dual equivalence within 1e-6")
def test_c6_primal_dual(request):
    tr = ou_path(2000, 0.01, seed=7)
    dic = F.monomials(2)
    cfg = E.FitConfig(1.0, 1e-6, 3, Q.trapezoid_weights(1.0, 0.01, Q.horizon_for(1.0, 0.01)))
    p = E.fit(tr, cfg, dic, "primal")
    d = E.fit(tr, cfg, F.DictionaryKernel(dic), "dual")
    remaining = list(d.eigenvalues)
    gap = 0.0
    for lam in p.eigenvalues:
        j = int(np.argmin([abs(lam - x) for x in remaining]))
        gap = max(gap, abs(lam - remaining.pop(j)))
    note(request, f"max eigenvalue gap {gap:.2e}")
    assert gap <= 1e-6


@pytest.mark.criterion("C7", "self-adjoint mode gives an exactly real spectrum")
def test_c7_self_adjoint(request):
    tw = triple_well_path(1000, 0.05, seed=3)
    cfg = E.FitConfig(2.0, 1e-6, 4, Q.trapezoid_weights(2.0, 0.05, Q.horizon_for(2.0, 0.05)),
                      self_adjoint=True)
    fits = [E.fit(tw, cfg, F.KernelSpec(length_scale=0.5), "dual"), E.fit(tw, cfg, F.monomials(4), "primal")]
    for m in fits:
        assert np.all(m.eigenvalues.imag == 0)
        assert m.diagnostics["line5_symmetric"] and m.diagnostics["reduced_symmetric"]
    note(request, "dual and primal")


@pytest.mark.criterion("C8", "non-uniform bundle of 500 OU trajectories")
def test_c8_bundle(request):
    cfg = C.load_config(CONFIGS / "fit_ou_bundle.yaml")
    proc, est = cfg["process"], cfg["estimator"]
    spec = C.process_spec(proc, cfg["seed"])
    times = C.bundle_times(proc["bundle"], spec.h)
    assert times.shape == (51,)
    bundle = S.simulate_bundle(spec, times, proc["n_trajectories"])
    fit_cfg = C.build_fit_config(est, bundle_grid=bundle.times)
    m = E.fit_bundle(bundle, fit_cfg, C.build_features(cfg["features"], bundle.stacked_states()))
    lam = m.eigenvalues.real

    single = TrajectoryBundle((bundle.trajectories[0],))
    one_cfg = E.bundle_config(single, 1.0, 1e-6, 1)
    via = E.fit_bundle(single, one_cfg, F.monomials(1))
    g = single.grid_size
    M = np.zeros((g, g))
    M[0, :] = g * one_cfg.weights.weights
    direct = E.fit_primal(F.evaluate_dictionary(F.monomials(1), single.stacked_states()), one_cfg, M=M)
    gap = float(np.max(np.abs(via.eigenvalues - direct.eigenvalues)))

    note(request, f"lambda = {lam[0]:.3f}, {lam[1]:.3f}; single-trajectory gap {gap:.1e}")
    assert gap <= 1e-9
    # 15% of the unit rate as the absolute allowance for the zero eigenvalue
    assert abs(lam[0]) <= 0.15
    assert abs(lam[1] + 1.0) <= 0.15


@pytest.mark.criterion("C9", "oracle self-certification")
def test_c9_oracle(request):
    a, b = 0.0, 1.0
    free, _ = O.spectrum(O.discretize_langevin_1d(S.free(), a=a, b=b, G=200), 5)
    exact = np.array([-(k * math.pi / (b - a)) ** 2 for k in range(1, 5)])
    free_err = float(np.max(np.abs(free[1:] - exact) / np.abs(exact)))

    quad, _ = O.spectrum(O.discretize_langevin_1d(S.quadratic(), a=-8.0, b=8.0, G=800), 4)
    ref = O.ou_spectrum([[-1.0]], 4)
    quad_err = float(np.max(np.abs(quad[1:] - ref[1:]) / np.abs(ref[1:])))

    doc = O.read_fixture(FIXTURES / "oracle_triple_well.json")
    pot = O.potential_from_dict(doc["potential"])
    grid = doc["grid"]
    fine, _ = O.spectrum(O.discretize_langevin_1d(pot, doc["gamma"], doc["kT"], grid["a"], grid["b"],
                                                  2 * grid["G"]), len(doc["eigenvalues"]))
    frozen = np.array(doc["eigenvalues"])
    tw_err = float(np.max(np.abs(fine[1:] - frozen[1:]) / np.abs(fine[1:])))

    note(request, f"free {free_err:.1e}, quadratic {quad_err:.1e}, triple-well G->2G {tw_err:.1e}")
    assert abs(free[0]) <= 1e-6 and abs(quad[0]) <= 1e-6
    assert free_err <= 0.01 and quad_err <= 0.01 and tw_err <= 0.005


@pytest.mark.criterion("C10", "byte-identical model JSON on repeat runs")
def test_c10_determinism(request, c3_runs, c4_runs):
    pairs = [(c3_runs / "a" / f"seed{s}" / "model_000.json", c3_runs / "b" / f"seed{s}" / "model_000.json")
             for s in C3_SEEDS]
    pairs += [(p, c4_runs / "b" / p.name) for p in sorted((c4_runs / "a").glob("model_*.json"))]
    assert len(pairs) == 30
    differ = []
    for x, y in pairs:
        tx, ty = x.read_text(), y.read_text()
        same_lines = ([ln for ln in tx.splitlines() if '"timestamp"' not in ln]
                      == [ln for ln in ty.splitlines() if '"timestamp"' not in ln])
        if not (same_lines and strip_timestamp(tx) == strip_timestamp(ty)):
            differ.append(x.name)
    note(request, f"{len(pairs) - len(differ)}/{len(pairs)} identical")
    assert not differ
