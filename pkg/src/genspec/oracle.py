"""Reference generator spectra: OU lattice formula and a 1D grid discretization.

The 1D overdamped Langevin generator ``L f = -V' f' / gamma + (kT / gamma) f''``
is discretized on a cell-centred grid with detailed-balance fluxes
``L[i, i+-1] = (D / dx^2) exp(-(V[i+-1] - V[i]) / (2 kT))``, ``D = kT / gamma``,
and no-flux boundaries. Rows sum to zero and ``diag(pi) L`` is symmetric for
the discrete Boltzmann weight ``pi ~ exp(-V / kT)``; the scheme is second-order
accurate.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .simulate import Potential

__all__ = [
    "OracleError",
    "GridGenerator1D",
    "discretize_langevin_1d",
    "spectrum",
    "ou_spectrum",
    "write_fixture",
    "read_fixture",
    "potential_from_dict",
]

MIN_GRID = 50
EIGVEC_COND_MAX = 1e8


class OracleError(ValueError):
    pass


def _tool_version() -> str:
    from . import __version__
    return __version__


def potential_from_dict(d: dict) -> Potential:
    return Potential(d["name"], tuple(d.get("poly", ())), tuple(tuple(g) for g in d.get("gaussians", ())))


@dataclass(frozen=True, eq=False)
class GridGenerator1D:
    """Assembled tridiagonal generator on ``G`` cell centres of ``[a, b]``.

    ``lower``, ``diag`` and ``upper`` are the three diagonals of ``L``;
    ``sym_off`` is the constant off-diagonal of the Boltzmann-symmetrized form.
    """

    potential: Potential
    gamma: float
    kT: float
    a: float
    b: float
    x: np.ndarray
    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    log_weight: np.ndarray

    @property
    def G(self) -> int:
        return self.x.shape[0]

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.G

    @property
    def boltzmann(self) -> np.ndarray:
        """Discrete invariant weights ``pi_i``, summing to one."""
        w = np.exp(self.log_weight - self.log_weight.max())
        return w / w.sum()

    @property
    def sym_off(self) -> float:
        return (self.kT / self.gamma) / self.dx ** 2

    def matrix(self) -> np.ndarray:
        """Dense ``L`` (G x G)."""
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)


def discretize_langevin_1d(potential: Potential, gamma: float = 1.0, kT: float = 1.0,
                           a: float = -1.2, b: float = 1.2, G: int = 2000) -> GridGenerator1D:
    if G < MIN_GRID:
        raise OracleError(f"grid too small: G={G} < {MIN_GRID}")
    if not b > a:
        raise OracleError("interval must satisfy b > a")
    if not (gamma > 0 and kT > 0):
        raise OracleError("gamma and kT must be positive")
    dx = (b - a) / G
    x = a + (np.arange(G) + 0.5) * dx
    V = potential.value(x) / kT
    rate = (kT / gamma) / dx ** 2
    dV = np.diff(V)
    upper = rate * np.exp(-0.5 * dV)
    lower = rate * np.exp(0.5 * dV)
    diag = np.zeros(G)
    diag[:-1] -= upper
    diag[1:] -= lower
    return GridGenerator1D(potential, float(gamma), float(kT), float(a), float(b),
                           x, diag, lower, upper, -V)


def spectrum(gen: GridGenerator1D, k: int):
    """Top-``k`` eigenvalues (descending) and L2(pi)-normalized eigenfunctions.

    Returns ``(eigenvalues, functions)`` with ``functions`` of shape (G, k).
    Sign convention: positive ``pi``-mean, or a positive value at the largest
    magnitude entry when the mean vanishes.
    """
    G = gen.G
    if not 1 <= k <= G:
        raise OracleError(f"k must lie in 1..{G}")
    off = np.full(G - 1, gen.sym_off)
    try:
        ev, Y = scipy.linalg.eigh_tridiagonal(gen.diag, off, select="i",
                                              select_range=(G - k, G - 1))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise OracleError(f"tridiagonal eigensolver failed: {exc}") from None
    ev, Y = ev[::-1], Y[:, ::-1]
    pi = gen.boltzmann
    F = Y / np.sqrt(pi)[:, None]
    for j in range(k):
        f = F[:, j]
        mean = float(pi @ f)
        s = np.sign(mean) if abs(mean) > 1e-8 else np.sign(f[np.argmax(np.abs(f))])
        F[:, j] = f * (s if s != 0 else 1.0)
    return ev, F


def ou_spectrum(A, k: int) -> np.ndarray:
    """The ``k`` largest (by real part) values of ``sum_i n_i alpha_i``, ``n_i >= 0``.

    ``alpha_i`` are the eigenvalues of the stable, diagonalizable drift ``A``.
    Multiplicities are kept; ties are broken by descending imaginary part.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if k < 1:
        raise OracleError("k must be >= 1")
    alpha, vecs = np.linalg.eig(A)
    if np.any(alpha.real >= 0):
        raise OracleError("drift matrix A must be stable")
    if np.linalg.cond(vecs) > EIGVEC_COND_MAX:
        raise OracleError("Jordan-block case unsupported")
    slowest = float(np.max(alpha.real))
    degree = 0
    while True:
        vals = []
        for ns in itertools.product(range(degree + 1), repeat=alpha.shape[0]):
            if sum(ns) <= degree:
                vals.append(complex(np.dot(ns, alpha)))
        vals = np.array(vals)
        vals = vals[np.lexsort((-vals.imag, -vals.real))]
        # anything beyond this degree has real part <= (degree + 1) * slowest
        if vals.shape[0] >= k and vals[k - 1].real > (degree + 1) * slowest:
            out = vals[:k]
            break
        degree += 1
    out = out + 0.0  # drop signed zeros
    if np.all(out.imag == 0):
        return out.real
    return out


def write_fixture(path, gen: GridGenerator1D, k: int, command: str = "", extra: dict | None = None) -> dict:
    """Compute the top-``k`` spectrum and freeze it as JSON."""
    ev, _ = spectrum(gen, k)
    doc = {
        "grid": {"a": gen.a, "b": gen.b, "G": gen.G},
        "potential": gen.potential.to_dict(),
        "gamma": gen.gamma,
        "kT": gen.kT,
        "eigenvalues": ev.tolist(),
        "tool_version": _tool_version(),
        "command": command,
    }
    doc.update(extra or {})
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return doc


def read_fixture(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("grid", "potential", "eigenvalues"):
        if key not in doc:
            raise OracleError(f"{path}: fixture lacks {key!r}")
    return doc
