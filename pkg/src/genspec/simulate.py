"""Euler-Maruyama simulation of overdamped Langevin and Ornstein-Uhlenbeck processes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from . import _backend
from .trajectory import Trajectory, TrajectoryBundle

__all__ = [
    "Potential",
    "triple_well",
    "quadratic",
    "free",
    "get_potential",
    "LangevinSpec",
    "OUSpec",
    "SimulationError",
    "euler_maruyama",
    "simulate_bundle",
    "stationary_covariance",
    "sample_stationary",
    "make_rng",
    "RNG_NAME",
]

RNG_NAME = "numpy.random.Generator(PCG64).standard_normal"
_CHUNK = 1 << 16


class SimulationError(RuntimeError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class Potential:
    """1D potential ``V(x) = sum_k poly[k] x**k + sum_g amp_g exp(-rate_g (x - center_g)**2)``.

    ``poly`` lists coefficients in ascending powers; ``gaussians`` holds
    ``(amp, rate, center)`` triples.
    """

    name: str
    poly: tuple = ()
    gaussians: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly))
        object.__setattr__(self, "gaussians",
                           tuple(tuple(float(v) for v in g) for g in self.gaussians))
        for g in self.gaussians:
            if len(g) != 3 or g[1] <= 0:
                raise ValueError(f"gaussian term {g} must be (amp, rate>0, center)")

    @property
    def dpoly(self) -> np.ndarray:
        return np.array([k * c for k, c in enumerate(self.poly)][1:] or [0.0])

    def _gauss_arrays(self):
        g = np.array(self.gaussians, dtype=np.float64).reshape(-1, 3)
        return (np.ascontiguousarray(g[:, 0]), np.ascontiguousarray(g[:, 1]),
                np.ascontiguousarray(g[:, 2]))

    def value(self, x):
        x = np.asarray(x, dtype=np.float64)
        v = np.polynomial.polynomial.polyval(x, self.poly) if self.poly else np.zeros_like(x)
        for amp, rate, c in self.gaussians:
            v = v + amp * np.exp(-rate * (x - c) ** 2)
        return v

    def grad(self, x):
        x = np.asarray(x, dtype=np.float64)
        g = np.polynomial.polynomial.polyval(x, self.dpoly)
        for amp, rate, c in self.gaussians:
            u = x - c
            g = g + amp * (-2.0 * rate * u) * np.exp(-rate * u * u)
        return g

    def argmin(self, lo=-5.0, hi=5.0) -> float:
        grid = np.linspace(lo, hi, 20001)
        k = int(np.argmin(self.value(grid)))
        step = grid[1] - grid[0]
        res = scipy.optimize.minimize_scalar(
            lambda x: float(self.value(x)), bounds=(grid[k] - step, grid[k] + step),
            method="bounded", options={"xatol": 1e-12})
        return float(res.x)

    def to_dict(self) -> dict:
        return {"name": self.name, "poly": list(self.poly),
                "gaussians": [list(g) for g in self.gaussians]}


def triple_well() -> Potential:
    """``4 (x^8 + 0.8 e^{-80x^2} + 0.2 e^{-80(x-0.5)^2} + 0.5 e^{-40(x+0.5)^2})``."""
    return Potential(
        "triple_well",
        poly=(0, 0, 0, 0, 0, 0, 0, 0, 4.0),
        gaussians=((3.2, 80.0, 0.0), (0.8, 80.0, 0.5), (2.0, 40.0, -0.5)),
    )


def quadratic(stiffness: float = 1.0) -> Potential:
    """``stiffness * x^2 / 2``."""
    return Potential("quadratic", poly=(0.0, 0.0, 0.5 * stiffness))


def free() -> Potential:
    return Potential("free", poly=(0.0,))


def get_potential(name: str, **params) -> Potential:
    if name == "triple_well":
        return triple_well()
    if name == "quadratic":
        return quadratic(params.get("stiffness", 1.0))
    if name == "free":
        return free()
    if name == "table":
        return Potential(params.get("label", "table"), params.get("poly", ()),
                         params.get("gaussians", ()))
    raise ValueError(f"unknown potential {name!r}")


@dataclass(frozen=True)
class LangevinSpec:
    """Overdamped Langevin: drift ``-V'(x)/gamma``, noise ``sqrt(2 kT / gamma)``."""

    potential: Potential
    gamma: float = 1.0
    kT: float = 1.0
    h: float = 1e-3
    burn_in: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("friction gamma must be positive")
        if not self.kT > 0:
            raise ValueError("kT must be positive")
        if not self.h > 0:
            raise ValueError("integration step h must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")

    @property
    def d(self) -> int:
        return 1

    @property
    def noise_amplitude(self) -> float:
        return float(np.sqrt(2.0 * self.kT / self.gamma))

    def describe(self) -> dict:
        return {"process": "langevin", "potential": self.potential.to_dict(), "gamma": self.gamma,
                "kT": self.kT, "h": self.h, "burn_in": self.burn_in, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class OUSpec:
    """Ornstein-Uhlenbeck ``dX = A X dt + B dW`` with stable ``A``."""

    A: np.ndarray
    B: np.ndarray
    h: float = 1e-3
    burn_in: int = 100_000
    seed: int = 0

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        B = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
        if A.shape[0] != A.shape[1]:
            raise ValueError("drift A must be square")
        if B.shape[0] != A.shape[0]:
            raise ValueError(f"diffusion B must have {A.shape[0]} rows")
        if not np.all(np.linalg.eigvals(A).real < 0):
            raise ValueError("drift A is not stable (eigenvalue with non-negative real part)")
        if not self.h > 0:
            raise ValueError("integration step h must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def describe(self) -> dict:
        return {"process": "ou", "A": self.A.tolist(), "B": self.B.tolist(), "h": self.h,
                "burn_in": self.burn_in, "seed": self.seed}


def stationary_covariance(spec: OUSpec) -> np.ndarray:
    """Solve ``A S + S A^T = -B B^T`` for the stationary covariance."""
    A, B = spec.A, spec.B
    Q = B @ B.T
    S = scipy.linalg.solve_continuous_lyapunov(A, -Q)
    S = 0.5 * (S + S.T)
    resid = np.abs(A @ S + S @ A.T + Q).max()
    scale = max(np.abs(Q).max(), np.finfo(float).tiny)
    if resid > 1e-10 * scale:
        raise SimulationError(f"Lyapunov residual {resid:.3e} exceeds tolerance")
    return S


def _psd_factor(S):
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(S)
        return V * np.sqrt(np.clip(w, 0.0, None))


def sample_stationary(spec: OUSpec, count: int, rng: np.random.Generator | None = None):
    """Draw ``count`` i.i.d. states from ``N(0, Sigma_inf)``; shape (count, d)."""
    rng = make_rng(spec.seed) if rng is None else rng
    L = _psd_factor(stationary_covariance(spec))
    if count == 0:
        return np.empty((0, spec.d))
    return rng.standard_normal((count, spec.d)) @ L.T


def _run_chunks(advance, n_steps, stride, rng, p, out=None):
    """Feed ``n_steps`` of noise to ``advance`` in blocks aligned to ``stride``.

    With ``out=None`` (burn-in) only the final state matters.
    """
    chunk = max(stride, (_CHUNK // stride) * stride)
    done, row = 0, 0
    while done < n_steps:
        m = min(chunk, n_steps - done)
        noise = rng.standard_normal((m, p)) if p > 1 else rng.standard_normal(m)
        if out is None:
            k = advance(noise, None, m)
        else:
            k = advance(noise, out[row:row + m // stride], stride)
        if k >= 0:
            raise SimulationError(f"blow-up at step {done + k} (integration step h too large?)")
        done += m
        row += m // stride


def euler_maruyama(spec, n_out: int, out_stride: int = 1, x0=None) -> Trajectory:
    """Simulate ``n_out`` samples spaced ``h * out_stride`` apart.

    The initial state (row 0) is taken after ``spec.burn_in`` integration
    steps started from ``x0``, or from the potential minimum (Langevin) or a
    stationary draw (OU) when ``x0`` is None.
    """
    if n_out < 2:
        raise ValueError("n_out must be >= 2")
    if out_stride < 1:
        raise ValueError("out_stride must be >= 1")
    k = _backend.kernels
    rng = make_rng(spec.seed)
    h = float(spec.h)

    if isinstance(spec, LangevinSpec):
        pot = spec.potential
        amp, rate, center = pot._gauss_arrays()
        dpoly = np.ascontiguousarray(pot.dpoly)
        scale = spec.noise_amplitude * np.sqrt(h)
        state = np.array([pot.argmin() if x0 is None else float(np.ravel(x0)[0])])
        out = np.empty(n_out, dtype=np.float64)

        def advance(noise, block, stride):
            return k.em_langevin_1d(state, np.ascontiguousarray(noise), h, 1.0 / spec.gamma, scale,
                                    dpoly, amp, rate, center, stride, block)
        p = 1
    elif isinstance(spec, OUSpec):
        A = np.ascontiguousarray(spec.A)
        sB = np.ascontiguousarray(np.sqrt(h) * spec.B)
        p = spec.B.shape[1]
        if x0 is None:
            state = sample_stationary(spec, 1, rng)[0].copy()
        else:
            state = np.array(np.ravel(x0), dtype=np.float64)
            if state.shape[0] != spec.d:
                raise ValueError(f"x0 must have {spec.d} entries")
        out = np.empty((n_out, spec.d), dtype=np.float64)

        def advance(noise, block, stride):
            noise = np.ascontiguousarray(noise.reshape(-1, p))
            return k.em_linear(state, noise, h, A, sB, stride, block)
    else:
        raise TypeError(f"unsupported process spec {type(spec).__name__}")

    sink = np.empty((1,) + out.shape[1:])

    def run(noise, block, stride):
        return advance(noise, sink if block is None else block, stride)

    _run_chunks(run, spec.burn_in, 1, rng, p)
    out[0] = state if out.ndim == 2 else state[0]
    _run_chunks(run, (n_out - 1) * out_stride, out_stride, rng, p, out[1:])

    meta = spec.describe()
    meta.update(rng=RNG_NAME, out_stride=out_stride, backend=_backend.BACKEND,
                dt=h * out_stride)
    times = np.arange(n_out) * (h * out_stride)
    return Trajectory(out.reshape(n_out, -1), times, meta)


def _lattice_steps(times, h):
    times = np.asarray(times, dtype=np.float64)
    if times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ValueError("bundle times must start at 0 and increase strictly")
    steps = np.rint(times / h).astype(np.int64)
    if np.any(np.abs(steps * h - times) > 1e-9 * np.maximum(1.0, times)):
        raise ValueError("bundle times must be integer multiples of the integration step h")
    return steps


def simulate_bundle(spec, times, count: int) -> TrajectoryBundle:
    """Simulate ``count`` independent stationary paths observed at ``times``.

    Paths are advanced together (vectorized over trajectories); ``times``
    must lie on the integration lattice ``h * k``.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    steps = _lattice_steps(times, spec.h)
    rng = make_rng(spec.seed)
    h = float(spec.h)
    if isinstance(spec, LangevinSpec):
        pot = spec.potential
        scale = spec.noise_amplitude * np.sqrt(h)
        x = np.full((count, 1), pot.argmin())

        def step(x):
            return x - pot.grad(x) / spec.gamma * h + scale * rng.standard_normal(x.shape)
        burn = spec.burn_in
    elif isinstance(spec, OUSpec):
        sB = np.sqrt(h) * spec.B
        x = sample_stationary(spec, count, rng)

        def step(x):
            return x + h * (x @ spec.A.T) + rng.standard_normal((count, sB.shape[1])) @ sB.T
        burn = 0
    else:
        raise TypeError(f"unsupported process spec {type(spec).__name__}")

    for _ in range(burn):
        x = step(x)
    out = np.empty((steps.shape[0], count, x.shape[1]))
    out[0] = x
    cur = 0
    for j, s in enumerate(steps[1:], start=1):
        for _ in range(s - cur):
            x = step(x)
        if not np.all(np.isfinite(x)):
            raise SimulationError(f"blow-up before step {s}")
        out[j] = x
        cur = s
    meta = spec.describe()
    meta.update(rng=RNG_NAME, bundle=True)
    grid = steps * h
    return TrajectoryBundle(tuple(Trajectory(out[:, i], grid, dict(meta, index=i))
                                  for i in range(count)))
