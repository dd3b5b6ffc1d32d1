"""Run configuration: YAML documents validated against ``config_schema.json``."""
from __future__ import annotations

import ast
import json
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import features as F
from . import quadrature as Q
from . import simulate as S
from .estimator import FitConfig

__all__ = [
    "ConfigError",
    "load_config",
    "validate",
    "schema",
    "process_spec",
    "bundle_times",
    "build_features",
    "build_fit_config",
    "build_observable",
]


class ConfigError(ValueError):
    pass


def schema() -> dict:
    text = resources.files("genspec").joinpath("config_schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(doc) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping")
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {e.message}")
    return doc


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML parse error: {exc}") from None
    return validate(doc)


def _require(section: dict, keys, where: str):
    missing = [k for k in keys if k not in section]
    if missing:
        raise ConfigError(f"{where}: missing required key(s) {', '.join(missing)}")


def process_spec(proc: dict, seed: int):
    """Simulation spec for a ``langevin`` or ``ou`` process section."""
    kind = proc["kind"]
    h = proc.get("h", 1e-3)
    burn = proc.get("burn_in", 100_000 if kind == "langevin" else 0)
    try:
        if kind == "langevin":
            _require(proc, ["potential"], "process")
            pot = dict(proc["potential"])
            pot_obj = S.get_potential(pot.pop("name"), **pot)
            return S.LangevinSpec(pot_obj, proc.get("gamma", 1.0), proc.get("kT", 1.0), h, burn, seed)
        if kind == "ou":
            _require(proc, ["A", "B"], "process")
            return S.OUSpec(np.array(proc["A"], dtype=float), np.array(proc["B"], dtype=float),
                            h, burn, seed)
    except ValueError as exc:
        raise ConfigError(f"process: {exc}") from None
    raise ConfigError(f"process kind {kind!r} cannot be simulated")


def out_stride(proc: dict) -> int:
    h = proc.get("h", 1e-3)
    dt = proc.get("dt", h)
    k = int(round(dt / h))
    if k < 1 or abs(k * h - dt) > 1e-9 * dt:
        raise ConfigError(f"process: dt={dt} is not a positive multiple of h={h}")
    return k


def bundle_times(grid: dict, h: float) -> np.ndarray:
    """Observation grid of a bundle, rounded onto the integration lattice."""
    if "times" in grid:
        t = np.asarray(grid["times"], dtype=np.float64)
    elif "geometric" in grid:
        g = grid["geometric"]
        t = np.concatenate([[0.0], np.geomspace(g["first"], g["last"], g["count"])])
    else:
        raise ConfigError("bundle grid needs 'times' or 'geometric'")
    t = np.rint(t / h) * h
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ConfigError("bundle grid must start at 0 and stay strictly increasing on the h lattice")
    return t


def build_features(sec: dict, states: np.ndarray):
    """Dictionary or kernel for the feature section; resolves ``length_scale: median``."""
    kind = sec["kind"]
    d = states.shape[1]
    if kind in ("monomials", "linear"):
        dic = F.monomials(sec.get("degree", 1), d)
        return dic if kind == "monomials" else F.DictionaryKernel(dic)
    ls = sec.get("length_scale", "median")
    if ls == "median":
        ls = F.median_length_scale(states)
    kern = F.KernelSpec("gaussian_rbf", float(ls))
    if kind == "gaussian":
        return kern
    if kind == "rff":
        return F.rff_dictionary(kern, sec.get("n_features", 512), d, sec.get("seed", 0))
    raise ConfigError(f"unknown feature kind {kind!r}")


def build_fit_config(est: dict, dt: float | None = None, bundle_grid=None) -> FitConfig:
    mu, gamma, r = est["mu"], est["gamma"], est["r"]
    sa, jitter = est.get("self_adjoint", False), est.get("jitter", 0.0)
    try:
        if bundle_grid is not None:
            w = Q.nonuniform_weights(mu, np.asarray(bundle_grid) - bundle_grid[0])
        elif est.get("weights", "laplace") == "transfer_operator":
            w = Q.transfer_operator_weights(dt)
        else:
            w = Q.trapezoid_weights(mu, dt, est.get("ell") or Q.horizon_for(mu, dt))
        return FitConfig(mu, gamma, r, w, sa, jitter)
    except ValueError as exc:
        raise ConfigError(f"estimator: {exc}") from None


_SAFE_FUNCS = {name: getattr(np, name) for name in
               ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "arctan", "sign")}
_SAFE_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Compare, ast.Call, ast.Name, ast.Load,
               ast.Constant, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
               ast.Gt, ast.Lt, ast.GtE, ast.LtE, ast.Mod)


def compile_expression(expr: str, d: int):
    """Vectorized observable from an arithmetic expression in ``x1..xd``."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"observable expression: {exc.msg}") from None
    names = {f"x{i + 1}" for i in range(d)} | set(_SAFE_FUNCS) | {"pi"}
    for node in ast.walk(tree):
        if not isinstance(node, _SAFE_NODES):
            raise ConfigError(f"observable expression: unsupported syntax {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in names:
            raise ConfigError(f"observable expression: unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name)
                                               and node.func.id in _SAFE_FUNCS):
            raise ConfigError("observable expression: only elementary functions may be called")
    code = compile(tree, "<observable>", "eval")

    def h(X):
        X = np.atleast_2d(X)
        env = {f"x{i + 1}": X[:, i] for i in range(d)}
        env.update(_SAFE_FUNCS, pi=np.pi)
        val = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(val, dtype=np.float64), (X.shape[0],))

    return h


def build_observable(sec: dict, d: int):
    name = sec["name"]
    c = sec.get("coordinate", 1)
    if c > d:
        raise ConfigError(f"observable coordinate {c} exceeds state dimension {d}")
    if name == "identity":
        return lambda X: np.atleast_2d(X)[:, c - 1]
    if name == "half_line":
        thr = sec.get("threshold", 0.0)
        if sec.get("side", "above") == "above":
            return lambda X: (np.atleast_2d(X)[:, c - 1] > thr).astype(np.float64)
        return lambda X: (np.atleast_2d(X)[:, c - 1] < thr).astype(np.float64)
    if name == "expression":
        if "expression" not in sec:
            raise ConfigError("observable 'expression' needs an 'expression' string")
        return compile_expression(sec["expression"], d)
    raise ConfigError(f"unknown observable {name!r}")
