import numpy as np
import pytest
import scipy.integrate

from genspec import simulate as S

SQRT2 = np.sqrt(2.0)


def batch_se(x, batches=50):
    """Standard error of the mean of a correlated series by batch means."""
    m = len(x) // batches
    means = x[: m * batches].reshape(batches, m).mean(axis=1)
    return means.std(ddof=1) / np.sqrt(batches)


def boltzmann_cdf(pot, kT, lo, hi, G=200_001):
    x = np.linspace(lo, hi, G)
    w = np.exp(-(pot.value(x) - pot.value(x).min()) / kT)
    c = scipy.integrate.cumulative_trapezoid(w, x, initial=0.0)
    return x, c / c[-1]


def ks_distance(samples, x, cdf):
    s = np.sort(samples)
    emp_hi = np.arange(1, s.size + 1) / s.size
    emp_lo = np.arange(0, s.size) / s.size
    model = np.interp(s, x, cdf)
    return max(np.max(np.abs(emp_hi - model)), np.max(np.abs(emp_lo - model)))


class TestEulerMaruyama:
    def test_zero_noise_is_deterministic_euler(self):
        spec = S.OUSpec([[-1.0]], [[0.0]], h=0.01, burn_in=0)
        tr = S.euler_maruyama(spec, 3, 1, x0=[1.0])
        np.testing.assert_allclose(tr.states[:, 0], [1.0, 0.99, 0.9801], rtol=1e-15)
        np.testing.assert_allclose(tr.times, [0.0, 0.01, 0.02])

    def test_times_follow_stride(self):
        spec = S.OUSpec([[-1.0]], [[SQRT2]], h=0.001, burn_in=0)
        tr = S.euler_maruyama(spec, 5, 7)
        np.testing.assert_allclose(tr.times, np.arange(5) * 0.007)

    def test_quadratic_variance(self):
        spec = S.LangevinSpec(S.quadratic(), 1.0, 1.0, 1e-3, 10_000, seed=0)
        x = S.euler_maruyama(spec, 1_000_000, 1).states[:, 0]
        v = x ** 2 - x.mean() ** 2
        assert abs(x.var() - 1.0) <= 3 * batch_se(v)

    def test_bit_identical_repeat(self):
        spec = S.LangevinSpec(S.triple_well(), 1.0, 1.0, 1e-3, 1000, seed=42)
        a = S.euler_maruyama(spec, 500, 10).states
        b = S.euler_maruyama(spec, 500, 10).states
        assert a.tobytes() == b.tobytes()

    def test_seed_changes_output(self):
        a = S.euler_maruyama(S.OUSpec([[-1.0]], [[1.0]], 1e-2, 0, seed=1), 50).states
        b = S.euler_maruyama(S.OUSpec([[-1.0]], [[1.0]], 1e-2, 0, seed=2), 50).states
        assert not np.array_equal(a, b)

    def test_blow_up_reported(self):
        spec = S.LangevinSpec(S.triple_well(), 1.0, 1.0, h=0.5, burn_in=0)
        with pytest.raises(S.SimulationError, match="blow-up at step"):
            S.euler_maruyama(spec, 100, 1, x0=[2.0])

    def test_meta_pins_generator(self):
        tr = S.euler_maruyama(S.OUSpec([[-1.0]], [[1.0]], 1e-2, 0), 3)
        assert "PCG64" in tr.meta["rng"]

    @pytest.mark.parametrize("bad", [dict(gamma=0.0), dict(kT=-1.0), dict(h=0.0)])
    def test_langevin_validation(self, bad):
        kw = dict(potential=S.quadratic(), gamma=1.0, kT=1.0, h=1e-3)
        kw.update(bad)
        with pytest.raises(ValueError):
            S.LangevinSpec(**kw)

    def test_unstable_drift_rejected(self):
        with pytest.raises(ValueError, match="not stable"):
            S.OUSpec([[0.1]], [[1.0]])


class TestStationaryCovariance:
    def test_scalar(self):
        np.testing.assert_allclose(S.stationary_covariance(S.OUSpec([[-1.0]], [[SQRT2]])), [[1.0]],
                                   rtol=1e-12)

    def test_diagonal(self):
        out = S.stationary_covariance(S.OUSpec(-np.eye(2), np.eye(2)))
        np.testing.assert_allclose(out, np.eye(2) / 2, rtol=1e-12, atol=1e-15)

    def test_two_by_two_against_hand_solution(self):
        A = np.array([[-1.0, 1.0], [0.0, -2.0]])
        out = S.stationary_covariance(S.OUSpec(A, np.eye(2)))
        expected = np.array([[7 / 12, 1 / 12], [1 / 12, 1 / 4]])
        np.testing.assert_allclose(out, expected, rtol=1e-12)
        resid = np.abs(A @ out + out @ A.T + np.eye(2)).max()
        assert resid <= 1e-10


class TestSampleStationary:
    def test_empty(self):
        assert S.sample_stationary(S.OUSpec([[-1.0]], [[SQRT2]]), 0).shape == (0, 1)

    def test_variance(self):
        x = S.sample_stationary(S.OUSpec([[-1.0]], [[SQRT2]], seed=5), 100_000)[:, 0]
        se = np.sqrt(2.0 / x.size)
        assert abs(x.var() - 1.0) <= 3 * se

    def test_degenerate_noise_gives_zeros(self):
        x = S.sample_stationary(S.OUSpec([[-1.0]], [[0.0]]), 10)
        assert np.all(x == 0.0)


class TestLongRun:
    @pytest.mark.parametrize("pot", [S.quadratic(), S.triple_well()], ids=["quadratic", "triple_well"])
    def test_boltzmann_ks(self, pot):
        spec = S.LangevinSpec(pot, 1.0, 1.0, 1e-3, seed=0)
        x = S.euler_maruyama(spec, 1_000_000, 1).states[:, 0]
        lo, hi = min(x.min(), -6.0) - 1.0, max(x.max(), 6.0) + 1.0
        if pot.name == "triple_well":
            lo, hi = x.min() - 0.5, x.max() + 0.5
        grid, cdf = boltzmann_cdf(pot, 1.0, lo, hi)
        assert ks_distance(x, grid, cdf) <= 0.02

    def test_ou_second_moment(self):
        A = np.array([[-1.0, 0.5], [0.0, -2.0]])
        B = np.array([[1.0, 0.0], [0.3, 1.0]])
        spec = S.OUSpec(A, B, h=1e-3, burn_in=0, seed=3)
        X = S.euler_maruyama(spec, 200_000, 5).states
        Sig = S.stationary_covariance(spec)
        for i in range(2):
            for j in range(2):
                prod = X[:, i] * X[:, j]
                assert abs(prod.mean() - Sig[i, j]) <= 3 * batch_se(prod), (i, j)

    def test_first_order_strong_convergence(self):
        A = np.array([[-1.0]])
        errs = []
        for h in (0.02, 0.01, 0.005):
            spec = S.OUSpec(A, [[0.0]], h=h, burn_in=0)
            steps = int(round(1.0 / h))
            tr = S.euler_maruyama(spec, steps + 1, 1, x0=[1.0])
            errs.append(abs(tr.states[-1, 0] - np.exp(-1.0)))
        for a, b in zip(errs, errs[1:]):
            assert 1.8 <= a / b <= 2.2


class TestBundle:
    def test_lattice_required(self):
        spec = S.OUSpec([[-1.0]], [[SQRT2]], h=0.01)
        with pytest.raises(ValueError, match="multiples"):
            S.simulate_bundle(spec, [0.0, 0.015], 3)

    def test_shape_and_determinism(self):
        spec = S.OUSpec([[-1.0]], [[SQRT2]], h=0.01, seed=4)
        t = [0.0, 0.01, 0.05, 0.2]
        a = S.simulate_bundle(spec, t, 7)
        b = S.simulate_bundle(spec, t, 7)
        assert a.count == 7 and a.grid_size == 4
        assert a.stacked_states().tobytes() == b.stacked_states().tobytes()
        np.testing.assert_allclose(a.times, t)
