"""Feature maps and kernels.

Explicit dictionaries feed the primal estimator, Gram matrices feed the dual
estimator, and random Fourier features bridge the two.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

__all__ = [
    "FeatureError",
    "KernelSpec",
    "Dictionary",
    "MonomialDictionary",
    "RFFDictionary",
    "DictionaryKernel",
    "gram_matrix",
    "cross_gram",
    "evaluate_dictionary",
    "monomials",
    "constant",
    "rff_dictionary",
    "median_length_scale",
]

KERNEL_FAMILIES = ("gaussian_rbf",)


class FeatureError(ValueError):
    pass


def _states(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise FeatureError("states must be an (n, d) array")
    if not np.all(np.isfinite(X)):
        raise FeatureError("states contain non-finite entries")
    return X


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian RBF ``k(x, y) = exp(-|x - y|^2 / l^2)``."""

    family: str = "gaussian_rbf"
    length_scale: float = 1.0

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise FeatureError(f"unknown kernel family {self.family!r}")
        if not (np.isfinite(self.length_scale) and self.length_scale > 0):
            raise FeatureError("length_scale must be positive")

    def __call__(self, X, Y) -> np.ndarray:
        X, Y = _states(X), _states(Y)
        d2 = cdist(X, Y, "sqeuclidean")
        return np.exp(-d2 / self.length_scale ** 2)

    def to_dict(self) -> dict:
        return {"family": self.family, "length_scale": float(self.length_scale)}


@dataclass(frozen=True)
class DictionaryKernel:
    """Linear kernel ``k(x, y) = z(x)^T z(y)`` induced by a dictionary."""

    dictionary: "Dictionary"

    def __call__(self, X, Y) -> np.ndarray:
        return evaluate_dictionary(self.dictionary, X).T @ evaluate_dictionary(self.dictionary, Y)

    def to_dict(self) -> dict:
        return {"family": "dictionary", "dictionary": self.dictionary.to_dict()}


class Dictionary:
    """Finite set of basis functions ``z: R^d -> R^N``."""

    N: int
    description: tuple

    def __call__(self, X) -> np.ndarray:
        """Return the (N, n) feature matrix."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class MonomialDictionary(Dictionary):
    """Monomials ``prod_k x_k^{p_k}``; ``powers`` is an (N, d) integer table."""

    powers: tuple

    def __post_init__(self):
        if len(self.powers) < 1:
            raise FeatureError("dictionary must contain at least one function")

    @property
    def N(self) -> int:
        return len(self.powers)

    @property
    def d(self) -> int:
        return len(self.powers[0])

    @property
    def description(self) -> tuple:
        out = []
        for p in self.powers:
            terms = [f"x{k + 1}" + (f"^{e}" if e > 1 else "") for k, e in enumerate(p) if e]
            out.append("*".join(terms) if terms else "1")
        return tuple(out)

    def __call__(self, X) -> np.ndarray:
        X = _states(X)
        if X.shape[1] != self.d:
            raise FeatureError(f"dictionary expects d={self.d}, got {X.shape[1]}")
        P = np.asarray(self.powers, dtype=np.int64)
        Z = np.ones((P.shape[0], X.shape[0]))
        for k in range(self.d):
            for i in range(P.shape[0]):
                if P[i, k]:
                    Z[i] *= X[:, k] ** P[i, k]
        return Z

    def to_dict(self) -> dict:
        return {"family": "monomials", "powers": [list(p) for p in self.powers]}


@dataclass(frozen=True, eq=False)
class RFFDictionary(Dictionary):
    """``z_k(x) = sqrt(2/N) cos(w_k^T x + b_k)`` with Gaussian frequencies."""

    frequencies: np.ndarray
    phases: np.ndarray
    kernel: KernelSpec
    seed: int
    description: tuple = field(default=(), repr=False)

    def __post_init__(self):
        w = np.array(self.frequencies, dtype=np.float64)
        b = np.array(self.phases, dtype=np.float64).ravel()
        if w.ndim != 2 or w.shape[0] != b.shape[0] or w.shape[0] < 1:
            raise FeatureError("frequencies must be (N, d) with N phases, N >= 1")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "phases", b)
        object.__setattr__(self, "description", tuple(f"rff{k}" for k in range(w.shape[0])))

    @property
    def N(self) -> int:
        return self.frequencies.shape[0]

    @property
    def d(self) -> int:
        return self.frequencies.shape[1]

    def __call__(self, X) -> np.ndarray:
        X = _states(X)
        if X.shape[1] != self.d:
            raise FeatureError(f"dictionary expects d={self.d}, got {X.shape[1]}")
        return np.sqrt(2.0 / self.N) * np.cos(self.frequencies @ X.T + self.phases[:, None])

    def to_dict(self) -> dict:
        return {"family": "rff", "N": self.N, "d": self.d, "seed": self.seed,
                "kernel": self.kernel.to_dict()}


def monomials(degree: int, d: int = 1) -> MonomialDictionary:
    """All monomials of total degree ``<= degree`` in ``d`` variables."""
    if degree < 0 or d < 1:
        raise FeatureError("degree must be >= 0 and d >= 1")
    powers = [()]
    for _ in range(d):
        powers = [p + (e,) for p in powers for e in range(degree + 1)]
    powers = sorted((p for p in powers if sum(p) <= degree), key=lambda p: (sum(p), [-e for e in p]))
    return MonomialDictionary(tuple(powers))


def constant(d: int = 1) -> MonomialDictionary:
    return MonomialDictionary(((0,) * d,))


def rff_dictionary(k: KernelSpec, N: int, d: int, seed: int) -> RFFDictionary:
    """Random Fourier features for the Gaussian kernel (Bochner sampling)."""
    if N < 1:
        raise FeatureError("N must be >= 1")
    if k.family != "gaussian_rbf":
        raise FeatureError("random Fourier features need a gaussian_rbf kernel")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((N, d)) * (np.sqrt(2.0) / k.length_scale)
    b = rng.uniform(0.0, 2.0 * np.pi, size=N)
    return RFFDictionary(w, b, k, int(seed))


def evaluate_dictionary(dictionary: Dictionary, X) -> np.ndarray:
    """``Z = [z(x_0) | ... | z(x_{n-1})]`` of shape (N, n)."""
    Z = dictionary(_states(X))
    if not np.all(np.isfinite(Z)):
        raise FeatureError("dictionary produced non-finite values")
    return Z


def gram_matrix(k, X, scale_by_n: bool = True) -> np.ndarray:
    """Symmetric Gram matrix ``[k(x_i, x_j)]``, divided by ``n`` if requested."""
    X = _states(X)
    n = X.shape[0]
    if n < 1:
        raise FeatureError("need at least one state")
    if isinstance(k, KernelSpec):
        G = np.exp(-squareform(pdist(X, "sqeuclidean")) / k.length_scale ** 2)
        np.fill_diagonal(G, 1.0)
    else:
        G = np.asarray(k(X, X), dtype=np.float64)
        G = 0.5 * (G + G.T)
    if scale_by_n:
        G /= n
    return G


def cross_gram(k, X, Y) -> np.ndarray:
    """Unscaled ``[k(x_i, y_j)]``."""
    return np.asarray(k(_states(X), _states(Y)), dtype=np.float64)


def median_length_scale(X, max_points: int = 2000) -> float:
    """Median pairwise distance of (up to ``max_points`` evenly spaced) states."""
    X = _states(X)
    if X.shape[0] > max_points:
        idx = np.linspace(0, X.shape[0] - 1, max_points).astype(np.int64)
        X = X[idx]
    dist = pdist(X)
    dist = dist[dist > 0]
    if dist.size == 0:
        raise FeatureError("all states coincide; median heuristic undefined")
    return float(np.median(dist))
