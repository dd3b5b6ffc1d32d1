"""Reduced-rank estimation of the generator's resolvent (primal and dual).

The estimator regresses the quadrature-weighted combination of lagged
feature pairs onto the features, restricted to rank ``r``. The eigenvalues
``nu`` of the fitted resolvent are mapped back to generator eigenvalues by
``lambda = mu - 1/nu`` (or ``log(nu)/dt`` for transfer-operator weights).

Conventions
-----------
The sampling operator is ``S f = n^{-1/2} (f(x_0), ..., f(x_{n-1}))`` so that
``S S* = K`` with the Gram matrix scaled by ``1/n``. In dual mode the right
eigenfunction is ``h(x) = n^{-1/2} sum_k A_k k(x_k, x)`` and its RKHS norm is
``sqrt(A^H K A)``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
import scipy.linalg

from . import features as _features
from .quadrature import (
    CombinationMatrix,
    LaplaceWeights,
    as_combination,
    bundle_matrix,
    nonuniform_weights,
    toeplitz_matrix,
)
from .trajectory import Trajectory, TrajectoryBundle, data_sha256, is_uniform

__all__ = [
    "FitConfig",
    "SpectralModel",
    "NumericalError",
    "EstimatorError",
    "fit_primal",
    "fit_dual",
    "fit_bundle",
    "fit",
    "eigenvalue_map",
    "metric_distortion",
    "forecast",
    "singular_tail",
]

NU_ZERO = 1e-14
IMAG_TOL = 1e-10
JITTER_LADDER = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8)
FORMAT_VERSION = 1


class EstimatorError(ValueError):
    """Invalid input or configuration."""


class NumericalError(ArithmeticError):
    """Numerical failure during the fit."""


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameters of one fit.

    Parameters
    ----------
    mu : float
        Resolvent shift, positive. Must equal ``weights.mu`` for quadrature
        weights; ignored by the eigenvalue map for transfer-operator weights.
    gamma : float
        Tikhonov regularization, positive.
    r : int
        Rank of the estimator.
    weights : LaplaceWeights
    self_adjoint : bool
        Symmetrize ``M`` and the reduced problems; the spectrum is then real.
    jitter : float
        Extra diagonal shift (relative to ``trace/N``) added before factorizing.
    """

    mu: float
    gamma: float
    r: int
    weights: LaplaceWeights
    self_adjoint: bool = False
    jitter: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise EstimatorError("mu must be positive")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise EstimatorError("gamma must be positive")
        if int(self.r) != self.r or self.r < 1:
            raise EstimatorError("rank r must be a positive integer")
        if self.jitter < 0:
            raise EstimatorError("jitter must be non-negative")
        if not self.weights.is_transfer_operator and not np.isclose(self.weights.mu, self.mu,
                                                                   rtol=1e-12, atol=0):
            raise EstimatorError(f"weights built for mu={self.weights.mu}, config has mu={self.mu}")
        object.__setattr__(self, "r", int(self.r))

    def to_dict(self) -> dict:
        return {"mu": float(self.mu), "gamma": float(self.gamma), "r": self.r,
                "self_adjoint": bool(self.self_adjoint), "jitter": float(self.jitter),
                "weights": self.weights.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "FitConfig":
        return cls(d["mu"], d["gamma"], d["r"], LaplaceWeights.from_dict(d["weights"]),
                   d["self_adjoint"], d["jitter"])


def eigenvalue_map(nu, mu=None, *, dt=None):
    """Map resolvent eigenvalues to generator eigenvalues.

    ``mu - 1/nu`` when ``mu`` is given; ``log(nu)/dt`` (principal branch) for
    transfer-operator estimates when ``dt`` is given. ``|nu| < 1e-14`` maps to
    ``-inf`` with a warning.
    """
    if (mu is None) == (dt is None):
        raise EstimatorError("give exactly one of mu (resolvent) or dt (transfer operator)")
    scalar = np.ndim(nu) == 0
    nu = np.atleast_1d(np.asarray(nu, dtype=np.complex128))
    out = np.empty_like(nu)
    tiny = np.abs(nu) < NU_ZERO
    if np.any(tiny):
        warnings.warn("resolvent eigenvalue at numerical zero; reporting -inf", RuntimeWarning,
                      stacklevel=2)
        out[tiny] = -np.inf
    ok = ~tiny
    if dt is not None:
        branch = ok & (nu.real < 0) & (nu.imag == 0)
        if np.any(branch):
            warnings.warn("transfer-operator eigenvalue on the negative real axis; "
                          "log map gives a complex value", RuntimeWarning, stacklevel=2)
        out[ok] = np.log(nu[ok]) / dt
    else:
        out[ok] = mu - 1.0 / nu[ok]
    return out[0] if scalar else out


def _map_for(cfg: FitConfig, nu):
    if cfg.weights.is_transfer_operator:
        return eigenvalue_map(nu, dt=cfg.weights.step)
    return eigenvalue_map(nu, cfg.mu)


def _sort_order(lam) -> np.ndarray:
    return np.lexsort((-lam.imag, -lam.real))


def _sym(A):
    return 0.5 * (A + A.T)


def _pad(values, length):
    out = np.zeros(length)
    m = min(length, values.shape[0])
    out[:m] = values[:m]
    return out


def _combination(cfg: FitConfig, n: int, M) -> CombinationMatrix:
    if M is None:
        M = toeplitz_matrix(cfg.weights, n)
    else:
        M = as_combination(M)
    if M.n != n:
        raise EstimatorError(f"combination matrix is {M.n}x{M.n} for {n} samples")
    return M.symmetrize() if cfg.self_adjoint else M


def _reduced_eig(W, self_adjoint):
    """Eigen-decomposition of the r x r reduced operator with biorthogonal left vectors."""
    if self_adjoint:
        nu, wr = scipy.linalg.eigh(_sym(W))
        return nu.astype(np.complex128), wr.astype(np.complex128), wr.astype(np.complex128)
    nu, wl, wr = scipy.linalg.eig(W, left=True, right=True)
    scale = np.einsum("ij,ij->j", wl.conj(), wr)
    if np.any(np.abs(scale) < 1e-14):
        raise NumericalError("defective reduced operator: left/right eigenvectors are orthogonal")
    wl = wl / scale.conj()
    return nu, wl, wr


@dataclass(eq=False)
class SpectralModel:
    """Fitted eigentriples and the data needed to evaluate them.

    ``right``/``left`` hold expansion coefficients: feature-space vectors in
    primal mode, sample weights in dual mode. ``pairing`` maps training-sample
    values of an observable to ``<g_i, h>``.
    """

    mode: str
    config: FitConfig
    eigenvalues: np.ndarray
    nu: np.ndarray
    singular_values: np.ndarray
    metric_distortions: np.ndarray
    right: np.ndarray
    left: np.ndarray
    pairing: np.ndarray
    train_values: np.ndarray
    states: np.ndarray | None = None
    features: object = None
    data_sha256: str = ""
    diagnostics: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)

    @property
    def r(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n(self) -> int:
        return self.train_values.shape[0]

    def _feature_block(self, X):
        if self.mode == "primal":
            if self.features is None:
                raise EstimatorError("primal model has no dictionary; cannot evaluate off-sample")
            return _features.evaluate_dictionary(self.features, X).T
        if self.states is None or self.features is None:
            raise EstimatorError("dual model lacks training states or kernel")
        return _features.cross_gram(self.features, X, self.states) / np.sqrt(self.n)

    def right_eigenfunctions(self, X) -> np.ndarray:
        """Values ``h_i(x)`` as an (m, r) complex array."""
        return self._feature_block(X) @ self.right

    def left_eigenfunctions(self, X) -> np.ndarray:
        """Values ``g_i(x)`` as an (m, r) complex array."""
        return self._feature_block(X) @ self.left

    def is_real(self) -> bool:
        return bool(np.all(self.eigenvalues.imag == 0))

    def to_json(self, training_reference: dict | None = None, timestamp: str | None = None) -> str:
        def cplx(a, name):
            # null imaginary part marks a real array so reloading preserves the dtype
            im = np.imag(a).tolist() if np.iscomplexobj(a) else None
            return {f"{name}_re": np.real(a).tolist(), f"{name}_im": im}

        finite = np.isfinite(self.eigenvalues.real)
        doc = {
            "format_version": FORMAT_VERSION,
            "mode": self.mode,
            "config": self.config.to_dict(),
            "eigenvalues_re": [float(v) if f else None for v, f in zip(self.eigenvalues.real, finite)],
            "eigenvalues_im": self.eigenvalues.imag.tolist(),
            "singular_values": self.singular_values.tolist(),
            "metric_distortions": self.metric_distortions.tolist(),
            "data_sha256": self.data_sha256,
            "features": None if self.features is None else self.features.to_dict(),
            "diagnostics": self.diagnostics,
            "training": {
                "reference": training_reference or self.source,
                "sha256": self.data_sha256,
                "states": None if self.states is None else self.states.tolist(),
            },
            "coefficients": {**cplx(self.nu, "nu"), **cplx(self.right, "right"),
                             **cplx(self.left, "left"), **cplx(self.pairing, "pairing"),
                             **cplx(self.train_values, "train_values")},
            "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "SpectralModel":
        doc = json.loads(text)
        co = doc["coefficients"]

        def cplx(name):
            re_, im_ = np.asarray(co[f"{name}_re"], dtype=np.float64), co[f"{name}_im"]
            if im_ is None:
                return re_
            out = np.empty(re_.shape, dtype=np.complex128)
            # component assignment keeps signed zeros that re + 1j*im would drop
            out.real, out.imag = re_, np.asarray(im_, dtype=np.float64)
            return out

        re = np.array([-np.inf if v is None else v for v in doc["eigenvalues_re"]])
        lam = np.empty(re.shape, dtype=np.complex128)
        lam.real, lam.imag = re, np.asarray(doc["eigenvalues_im"], dtype=np.float64)
        tr = doc["training"]
        states = None if tr["states"] is None else np.asarray(tr["states"], dtype=np.float64)
        if states is not None and data_sha256(states) != doc["data_sha256"]:
            raise EstimatorError("training states do not match the recorded hash")
        nu = cplx("nu")
        r = lam.shape[0]
        return cls(
            mode=doc["mode"],
            config=FitConfig.from_dict(doc["config"]),
            eigenvalues=lam,
            nu=nu,
            singular_values=np.asarray(doc["singular_values"]),
            metric_distortions=np.asarray(doc["metric_distortions"]),
            right=cplx("right").reshape(-1, r),
            left=cplx("left").reshape(-1, r),
            pairing=cplx("pairing").reshape(-1, r),
            train_values=cplx("train_values").reshape(-1, r),
            states=states,
            features=features_from_dict(doc["features"]),
            data_sha256=doc["data_sha256"],
            diagnostics=doc["diagnostics"],
            source=tr["reference"],
        )


def features_from_dict(d):
    """Rebuild a dictionary or kernel from its ``to_dict`` form."""
    if d is None:
        return None
    fam = d["family"]
    if fam == "gaussian_rbf":
        return _features.KernelSpec(fam, d["length_scale"])
    if fam == "monomials":
        return _features.MonomialDictionary(tuple(tuple(p) for p in d["powers"]))
    if fam == "rff":
        return _features.rff_dictionary(features_from_dict(d["kernel"]), d["N"], d["d"], d["seed"])
    if fam == "dictionary":
        return _features.DictionaryKernel(features_from_dict(d["dictionary"]))
    raise EstimatorError(f"unknown feature family {fam!r}")


def _finish(mode, cfg, nu, wl, wr, sig, right_basis, left_basis, train_basis, pair_fn,
            rkhs_norm_fn, **extra) -> SpectralModel:
    """Shared post-processing: sort, phase-fix, eigenvalue map, diagnostics."""
    lam = _map_for(cfg, nu)
    if cfg.self_adjoint:
        lam = lam.real.astype(np.complex128)
    order = _sort_order(lam)
    lam, nu, wl, wr = lam[order], nu[order], wl[:, order], wr[:, order]

    train = train_basis @ wr
    idx = np.argmax(np.abs(train), axis=0)
    peak = train[idx, np.arange(train.shape[1])]
    if np.any(peak == 0):
        raise NumericalError("eigenfunction vanishes on sample")
    phase = peak.conj() / np.abs(peak)
    wr = wr * phase
    wl = wl * phase
    train = train * phase

    right = right_basis @ wr
    left = (left_basis @ wl) / nu.conj()
    rms = np.sqrt(np.mean(np.abs(train) ** 2, axis=0))
    if np.any(rms == 0):
        raise NumericalError("eigenfunction vanishes on sample")
    eta = rkhs_norm_fn(right) / rms
    if not np.all(np.isfinite(eta) & (eta > 0)):
        raise NumericalError("non-finite metric distortion")
    if cfg.self_adjoint:
        assert np.all(lam.imag == 0)
    return SpectralModel(mode=mode, config=cfg, eigenvalues=lam, nu=nu, singular_values=sig,
                         metric_distortions=eta, right=right, left=left,
                         pairing=pair_fn(wl, nu), train_values=train, **extra)


def _whitening_factor(C, base_jitter):
    N = C.shape[0]
    unit = np.trace(C) / N
    shifts = (0.0,) + JITTER_LADDER
    for s in shifts:
        Cj = C + (base_jitter + s) * unit * np.eye(N)
        try:
            return scipy.linalg.cholesky(Cj, lower=True), base_jitter + s
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(f"C_gamma numerically singular; increase gamma or jitter "
                         f"(condition estimate {np.linalg.cond(C):.3e})")


def fit_primal(Z, cfg: FitConfig, *, M=None, dictionary=None, states=None) -> SpectralModel:
    """Primal estimator on an (N, n) feature matrix ``Z``.

    ``M`` defaults to the banded Toeplitz combination matrix of ``cfg.weights``;
    ``dictionary`` and ``states`` enable off-sample evaluation and forecasting.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or not np.all(np.isfinite(Z)):
        raise EstimatorError("Z must be a finite (N, n) array")
    N, n = Z.shape
    if cfg.r > min(N, n):
        raise EstimatorError(f"rank r={cfg.r} exceeds min(N, n)={min(N, n)}")
    Mc = _combination(cfg, n, M)

    ZM = Mc.rdot(Z)
    H = ZM @ Z.T / n
    C = _sym(Z @ Z.T / n) + cfg.gamma * np.eye(N)
    if cfg.self_adjoint:
        H = _sym(H)
    L, used_jitter = _whitening_factor(C, cfg.jitter)
    B = scipy.linalg.solve_triangular(L, H, lower=True)
    try:
        Y, s, _ = scipy.linalg.svd(B, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed (cond(C_gamma)={np.linalg.cond(C):.3e}): {exc}") from None
    r = cfg.r
    V = scipy.linalg.solve_triangular(L.T, Y[:, :r], lower=False)
    V = V / np.sqrt(np.einsum("ij,ij->j", V, C @ V))
    resid = float(np.max(np.abs(np.einsum("ij,ij->j", V, C @ V) - 1.0)))
    W = V.T @ H @ V
    nu, wl, wr = _reduced_eig(W, cfg.self_adjoint)

    cond = float(np.linalg.cond(C))
    diag = {"line5_symmetric": bool(np.array_equal(H, H.T) and np.array_equal(C, C.T)),
            "reduced_symmetric": bool(cfg.self_adjoint), "cond_C_gamma": cond,
            "jitter_used": float(used_jitter), "n_samples": n, "n_features": N,
            "normalization_residual": resid}

    def pair_fn(wl_, nu_):
        return _complex_dot(Mc.T, Z.T @ (V @ wl_.conj())) / (n * nu_)

    X = None if states is None else np.asarray(states, dtype=np.float64).reshape(n, -1)
    return _finish("primal", cfg, nu, wl, wr, _pad(s, r + 1), V, H.T @ V, Z.T @ V, pair_fn,
                   lambda R: np.linalg.norm(R, axis=0), states=X, features=dictionary,
                   data_sha256=data_sha256(Z if X is None else X), diagnostics=diag)


def _complex_dot(Mc: CombinationMatrix, X):
    X = np.asarray(X)
    if np.iscomplexobj(X):
        return Mc.dot(X.real) + 1j * Mc.dot(X.imag)
    return Mc.dot(X)


def fit_dual(K, cfg: FitConfig, *, M=None, kernel=None, states=None) -> SpectralModel:
    """Dual estimator on an (n, n) Gram matrix scaled by ``1/n``.

    The generalized problem ``M K M^T K u = sigma^2 (K + gamma) u`` is whitened
    with the eigendecomposition of ``K``.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise EstimatorError("K must be square")
    if not np.all(np.isfinite(K)):
        raise EstimatorError("K contains non-finite entries")
    n = K.shape[0]
    if cfg.r > n:
        raise EstimatorError(f"rank r={cfg.r} exceeds n={n}")
    Mc = _combination(cfg, n, M)
    K = _sym(K)
    try:
        lam_k, Q = scipy.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Gram eigendecomposition failed: {exc}") from None
    keep = lam_k > 10 * n * np.finfo(float).eps * max(lam_k[-1], 0.0)
    if not np.any(keep):
        raise NumericalError("Gram matrix is numerically zero")
    lam_k, Q = lam_k[keep], Q[:, keep]
    m = lam_k.shape[0]
    if cfg.r > m:
        raise NumericalError(f"rank r={cfg.r} exceeds numerical rank {m} of the Gram matrix")
    sq = np.sqrt(lam_k)
    lg = lam_k + cfg.gamma
    P = Q.T @ Mc.dot(Q)
    T = (np.sqrt(lam_k / lg)[:, None] * P) * sq[None, :]
    S = _sym(T @ T.T)
    k = min(cfg.r + 1, m)
    try:
        ev, Bv = scipy.linalg.eigh(S, subset_by_index=(m - k, m - 1))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"whitened eigenproblem failed: {exc}") from None
    ev, Bv = ev[::-1], Bv[:, ::-1]
    sig = np.sqrt(np.clip(ev, 0.0, None))
    r = cfg.r
    a = Bv[:, :r] / np.sqrt(lg)[:, None]
    U = Q @ (a / sq[:, None])
    V = K @ U
    # u^T K K_gamma u = 1 holds by construction; renormalize against round-off
    norm = np.sqrt(np.einsum("ij,ij->j", V, V + cfg.gamma * U))
    U, V = U / norm, V / norm
    resid = float(np.max(np.abs(np.einsum("ij,ij->j", K @ U, K @ U + cfg.gamma * U) - 1.0)))
    MV = Mc.dot(V)
    W = V.T @ MV
    nu, wl, wr = _reduced_eig(W, cfg.self_adjoint)

    cond = float((lam_k[-1] + cfg.gamma) / (max(lam_k[0], 0.0) + cfg.gamma))
    diag = {"line5_symmetric": bool(np.array_equal(K, K.T) and np.array_equal(S, S.T)),
            "reduced_symmetric": bool(cfg.self_adjoint), "cond_K_gamma": cond,
            "numerical_rank": int(m), "n_samples": n, "normalization_residual": resid}
    MtV = Mc.T.dot(V)
    sqrt_n = np.sqrt(n)

    def pair_fn(wl_, nu_):
        return ((MtV @ wl_) / nu_.conj()).conj() / sqrt_n

    X = None if states is None else np.asarray(states, dtype=np.float64).reshape(n, -1)
    return _finish("dual", cfg, nu, wl, wr, _pad(sig, r + 1), U, MtV, sqrt_n * (K @ U), pair_fn,
                   lambda A: np.sqrt(np.abs(np.einsum("ij,ij->j", A.conj(), K @ A))),
                   states=X, features=kernel, data_sha256=data_sha256(K if X is None else X),
                   diagnostics=diag)


def fit_bundle(bundle: TrajectoryBundle, cfg: FitConfig, features, mode: str | None = None):
    """Fit on trajectories sharing one (possibly non-uniform) time grid.

    Samples are stacked time-major and combined by the bundle matrix; the
    weights in ``cfg`` must be built on the bundle's grid (shifted to 0).
    """
    if not isinstance(bundle, TrajectoryBundle):
        bundle = TrajectoryBundle(tuple(bundle))
    rel = bundle.times - bundle.times[0]
    w = cfg.weights
    if w.is_transfer_operator:
        raise EstimatorError("bundle fits need quadrature weights on the bundle grid")
    if w.nodes.shape != rel.shape or not np.allclose(w.nodes, rel, rtol=1e-9, atol=1e-12):
        raise EstimatorError("weights nodes do not match the bundle time grid")
    M = bundle_matrix(w, bundle.count)
    X = bundle.stacked_states()
    return _fit_states(X, cfg, features, mode, M)


def bundle_config(bundle: TrajectoryBundle, mu, gamma, r, self_adjoint=False, jitter=0.0):
    """FitConfig with non-uniform trapezoid weights on the bundle's grid."""
    w = nonuniform_weights(mu, bundle.times - bundle.times[0])
    return FitConfig(mu, gamma, r, w, self_adjoint, jitter)


def _fit_states(X, cfg, features, mode, M):
    if mode is None:
        mode = "primal" if isinstance(features, _features.Dictionary) else "dual"
    if mode == "primal":
        if not isinstance(features, _features.Dictionary):
            raise EstimatorError("primal mode needs an explicit dictionary")
        Z = _features.evaluate_dictionary(features, X)
        return fit_primal(Z, cfg, M=M, dictionary=features, states=X)
    if mode == "dual":
        kern = features
        if isinstance(features, _features.Dictionary):
            kern = _features.DictionaryKernel(features)
        K = _features.gram_matrix(kern, X, scale_by_n=True)
        return fit_dual(K, cfg, M=M, kernel=kern, states=X)
    raise EstimatorError(f"unknown mode {mode!r}")


def fit(data, cfg: FitConfig, features, mode: str | None = None) -> SpectralModel:
    """Fit on a uniformly sampled :class:`Trajectory` or a bundle."""
    if isinstance(data, TrajectoryBundle):
        model = fit_bundle(data, cfg, features, mode)
    else:
        if not isinstance(data, Trajectory):
            raise EstimatorError("data must be a Trajectory or TrajectoryBundle")
        uniform, dt = is_uniform(data)
        if not uniform:
            raise EstimatorError("single-trajectory fits need a uniform time grid; "
                                 "use a bundle with non-uniform weights")
        if not np.isclose(dt, cfg.weights.step, rtol=1e-6, atol=0):
            raise EstimatorError(f"weights step {cfg.weights.step} does not match sampling dt {dt}")
        model = _fit_states(data.states, cfg, features, mode, None)
    return model


def metric_distortion(model: SpectralModel, i: int) -> float:
    """Empirical metric distortion of the ``i``-th (1-based) eigenfunction."""
    if not 1 <= i <= model.r:
        raise EstimatorError(f"index {i} outside 1..{model.r}")
    return float(model.metric_distortions[i - 1])


def singular_tail(model: SpectralModel) -> float:
    """The (r+1)-th whitened singular value (0 when the problem has rank <= r)."""
    return float(model.singular_values[model.r])


def forecast(model: SpectralModel, observable, x0, t):
    """Predict ``E[h(X_t) | X_0 = x0]`` from the spectral expansion.

    ``observable`` is a callable on (n, d) states or the vector of its values
    on the training samples. ``t`` may be scalar or array.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(t_arr < 0) or not np.all(np.isfinite(t_arr)):
        raise EstimatorError("forecast times must be finite and non-negative")
    if callable(observable):
        if model.states is None:
            raise EstimatorError("model has no stored training states to evaluate the observable")
        hv = np.asarray(observable(model.states), dtype=np.float64).reshape(-1)
    else:
        hv = np.asarray(observable, dtype=np.float64).reshape(-1)
    if hv.shape[0] != model.n:
        raise EstimatorError(f"observable has {hv.shape[0]} sample values, model has {model.n}")
    coef = hv @ model.pairing
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    h0 = model.right_eigenfunctions(x0)[0]
    lam = model.eigenvalues
    with np.errstate(invalid="ignore", over="ignore"):
        growth = np.exp(np.outer(t_arr, lam))
    dead = ~np.isfinite(lam.real)
    growth[:, dead] = (t_arr == 0)[:, None].astype(float)
    pred = growth @ (coef * h0)
    if model.config.self_adjoint:
        bad = np.abs(pred.imag) > IMAG_TOL * np.maximum(1.0, np.abs(pred.real))
        if np.any(bad):
            raise NumericalError("self-adjoint forecast has a non-negligible imaginary part")
    out = pred.real
    return float(out[0]) if np.ndim(t) == 0 else out
