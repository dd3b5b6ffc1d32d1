"""Laplace-transform quadrature weights and the sample combination matrix.

The resolvent ``(mu - L)^{-1} = int_0^inf e^{-mu t} A_t dt`` is replaced by
``sum_j m_j A_{t_j}``; the combination matrix ``M`` then maps lagged sample
pairs to the aggregated cross-covariance ``S* M S``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from . import _backend

__all__ = [
    "LaplaceWeights",
    "CombinationMatrix",
    "QuadratureError",
    "trapezoid_weights",
    "nonuniform_weights",
    "transfer_operator_weights",
    "horizon_for",
    "toeplitz_matrix",
    "bundle_matrix",
    "as_combination",
    "scalar_quadrature_check",
]

UNIFORM = "uniform"
NON_UNIFORM = "non_uniform"
TRANSFER = "transfer_operator"
MAX_DENSE = 2000


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LaplaceWeights:
    """Quadrature nodes ``t_j`` and weights ``m_j`` for shift ``mu``.

    ``mode`` is ``"uniform"`` (``t_j = j * step``), ``"non_uniform"`` or
    ``"transfer_operator"`` (single node ``t_0 = step`` with ``m_0 = 1``; the
    eigenvalue map is then ``log(nu) / step``).
    """

    mu: float | None
    nodes: np.ndarray
    weights: np.ndarray
    mode: str
    step: float

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=np.float64).ravel()
        weights = np.array(self.weights, dtype=np.float64).ravel()
        if nodes.shape != weights.shape:
            raise QuadratureError("nodes and weights differ in length")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise QuadratureError("weights must be finite and non-negative")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def ell(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def is_transfer_operator(self) -> bool:
        return self.mode == TRANSFER

    @property
    def lags(self) -> np.ndarray:
        """Integer sample offsets of the nodes (uniform and transfer modes)."""
        if self.mode == NON_UNIFORM:
            raise QuadratureError("non-uniform nodes have no single-trajectory lag structure")
        return np.rint(self.nodes / self.step).astype(np.int64)

    @property
    def kappa(self) -> float:
        """Ratio of largest to smallest time step (1 for uniform grids)."""
        if self.nodes.shape[0] < 2:
            return 1.0
        gaps = np.diff(self.nodes)
        return float(gaps.max() / gaps.min())

    def to_dict(self) -> dict:
        return {"mu": self.mu, "mode": self.mode, "step": self.step,
                "nodes": self.nodes.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LaplaceWeights":
        return cls(d["mu"], d["nodes"], d["weights"], d["mode"], d["step"])


def trapezoid_weights(mu: float, dt: float, ell: int) -> LaplaceWeights:
    """Trapezoid rule on ``t_j = j * dt``, ``j = 0..ell``."""
    if not mu > 0:
        raise QuadratureError("shift mu must be positive")
    if not dt > 0:
        raise QuadratureError("time step dt must be positive")
    if ell < 1:
        raise QuadratureError("ell must be >= 1 (use transfer_operator_weights for a single lag)")
    t = np.arange(ell + 1) * dt
    m = dt * np.exp(-mu * t)
    m[0] *= 0.5
    m[-1] *= 0.5
    return LaplaceWeights(float(mu), t, m, UNIFORM, float(dt))


def nonuniform_weights(mu: float, times) -> LaplaceWeights:
    """Trapezoid rule on an arbitrary grid ``0 = t_0 < ... < t_ell``."""
    t = np.asarray(times, dtype=np.float64).ravel()
    if mu < 0:
        raise QuadratureError("shift mu must be non-negative")
    if t.shape[0] < 2:
        raise QuadratureError("need at least two nodes")
    if t[0] != 0.0:
        raise QuadratureError("first node must be t_0 = 0")
    gaps = np.diff(t)
    if np.any(gaps <= 0):
        raise QuadratureError("nodes must be strictly increasing (duplicate or decreasing time)")
    span = np.empty_like(t)
    span[0] = gaps[0]
    span[-1] = gaps[-1]
    span[1:-1] = t[2:] - t[:-2]
    m = 0.5 * span * np.exp(-mu * t)
    uniform = gaps.max() / gaps.min() - 1.0 <= 1e-12
    if uniform:
        # bitwise agreement with trapezoid_weights on exact uniform grids
        dt = gaps[0]
        ref = np.arange(t.shape[0]) * dt
        if np.array_equal(ref, t):
            return trapezoid_weights(mu, dt, t.shape[0] - 1) if mu > 0 else \
                LaplaceWeights(0.0, t, m, UNIFORM, float(dt))
    return LaplaceWeights(float(mu), t, m, NON_UNIFORM, float(gaps.max()))


def transfer_operator_weights(dt: float) -> LaplaceWeights:
    """Degenerate weights selecting the single-lag transfer operator ``A_dt``."""
    if not dt > 0:
        raise QuadratureError("time lag dt must be positive")
    return LaplaceWeights(None, [dt], [1.0], TRANSFER, float(dt))


def horizon_for(mu: float, dt: float, min_product: float = 10.0) -> int:
    """Smallest ``ell`` with ``mu * ell * dt >= min_product``."""
    return max(1, int(math.ceil(min_product / (mu * dt) - 1e-9)))


class CombinationMatrix:
    """Structured ``M``: banded Toeplitz (single trajectory) or sparse (bundle).

    Only products are exposed for large ``n``; ``toarray`` refuses to
    materialize beyond ``MAX_DENSE`` rows unless forced.
    """

    def __init__(self, n, offsets=None, values=None, sparse=None, symmetrized=False):
        self.n = int(n)
        self.symmetrized = bool(symmetrized)
        if sparse is not None:
            self._sparse = scipy.sparse.csr_matrix(sparse)
            self.offsets = self.values = None
        else:
            self._sparse = None
            self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
            self.values = np.ascontiguousarray(values, dtype=np.float64)

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def is_banded(self) -> bool:
        return self._sparse is None

    @property
    def T(self) -> "CombinationMatrix":
        if self._sparse is not None:
            return CombinationMatrix(self.n, sparse=self._sparse.T, symmetrized=self.symmetrized)
        return CombinationMatrix(self.n, -self.offsets, self.values, symmetrized=self.symmetrized)

    def dot(self, X) -> np.ndarray:
        """``M @ X`` for a vector or an (n, k) array."""
        X = np.asarray(X, dtype=np.float64)
        vec = X.ndim == 1
        X2 = np.ascontiguousarray(X.reshape(self.n, -1))
        if self._sparse is not None:
            out = np.asarray(self._sparse @ X2)
        else:
            out = np.asarray(_backend.kernels.banded_matmul(self.offsets, self.values, X2))
        return out.ravel() if vec else out

    def rdot(self, X) -> np.ndarray:
        """``X @ M`` for an (k, n) array."""
        X = np.asarray(X, dtype=np.float64)
        return self.T.dot(X.T).T

    def symmetrize(self) -> "CombinationMatrix":
        if self.symmetrized:
            return self
        if self._sparse is not None:
            return CombinationMatrix(self.n, sparse=0.5 * (self._sparse + self._sparse.T),
                                     symmetrized=True)
        offs, vals = [], []
        for o, v in zip(self.offsets.tolist(), self.values.tolist()):
            if o == 0:
                offs.append(0)
                vals.append(v)
            else:
                offs += [o, -o]
                vals += [0.5 * v, 0.5 * v]
        return CombinationMatrix(self.n, offs, vals, symmetrized=True)

    def toarray(self, force: bool = False) -> np.ndarray:
        if self.n > MAX_DENSE and not force:
            raise QuadratureError(f"refusing to densify a {self.n}x{self.n} combination matrix")
        if self._sparse is not None:
            return self._sparse.toarray()
        return self.dot(np.eye(self.n))


def toeplitz_matrix(w: LaplaceWeights, n: int, symmetrize: bool = False) -> CombinationMatrix:
    """``M[i, i+j] = n m_j / (n - j)`` for the lag ``j`` of each node."""
    lags = w.lags
    if n <= lags.max():
        raise QuadratureError(f"trajectory shorter than quadrature horizon (n={n}, lag {lags.max()})")
    vals = n * w.weights / (n - lags)
    M = CombinationMatrix(n, lags, vals)
    return M.symmetrize() if symmetrize else M


def bundle_matrix(w: LaplaceWeights, n_traj: int, symmetrize: bool = False) -> CombinationMatrix:
    """``M[i, j n + i] = (ell + 1) m_j`` on the stacked bundle sample order."""
    if n_traj < 1:
        raise QuadratureError("need at least one trajectory")
    g = w.ell + 1
    rows = np.tile(np.arange(n_traj), g)
    cols = (np.arange(g)[:, None] * n_traj + np.arange(n_traj)[None, :]).ravel()
    vals = np.repeat(g * w.weights, n_traj)
    size = n_traj * g
    sp = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(size, size))
    M = CombinationMatrix(size, sparse=sp)
    return M.symmetrize() if symmetrize else M


def as_combination(M) -> CombinationMatrix:
    """Wrap a dense or sparse square matrix."""
    if isinstance(M, CombinationMatrix):
        return M
    return CombinationMatrix(M.shape[0], sparse=M)


def scalar_quadrature_check(w: LaplaceWeights, lam: complex):
    """Compare ``sum_j m_j e^{lam t_j}`` with the exact ``1 / (mu - lam)``.

    Returns ``(approx, exact, abs_error)``.
    """
    if w.is_transfer_operator:
        raise QuadratureError("transfer-operator weights do not approximate the resolvent")
    approx = complex(np.sum(w.weights * np.exp(complex(lam) * w.nodes)))
    exact = 1.0 / (w.mu - complex(lam))
    if approx.imag == 0 and exact.imag == 0:
        approx, exact = approx.real, exact.real
    return approx, exact, abs(approx - exact)
