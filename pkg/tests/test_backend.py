import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genspec import _backend
from genspec import quadrature as Q
from genspec import simulate as S

try:
    CY = _backend.load("cython")
except ImportError:  # extension not built
    CY = None
PY = _backend.load("python")

needs_cython = pytest.mark.skipif(CY is None, reason="compiled kernels not built")


def langevin_args(pot, n, seed, x0=0.1, h=1e-3, stride=3):
    amp, rate, center = pot._gauss_arrays()
    noise = np.random.default_rng(seed).standard_normal(n)
    out = np.zeros(n // stride)
    return [np.array([x0]), noise, h, 1.0, np.sqrt(2 * h), np.ascontiguousarray(pot.dpoly),
            amp, rate, center, stride, out]


def run_both(name, make_args):
    a, b = make_args(), make_args()
    sa = getattr(CY, name)(*a)
    sb = getattr(PY, name)(*b)
    return sa, sb, a, b


@needs_cython
class TestBitwise:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(["triple_well", "quadratic", "free"]),
           st.floats(-1.5, 1.5), st.integers(1, 7))
    def test_langevin(self, seed, name, x0, stride):
        pot = S.get_potential(name)
        sa, sb, a, b = run_both("em_langevin_1d", lambda: langevin_args(pot, 700, seed, x0, stride=stride))
        assert sa == sb
        assert a[0].tobytes() == b[0].tobytes()
        assert a[-1].tobytes() == b[-1].tobytes()

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3), st.integers(1, 5))
    def test_linear(self, seed, d, p, stride):
        rng = np.random.default_rng(seed)
        A = -np.eye(d) + 0.3 * rng.standard_normal((d, d))
        B = rng.standard_normal((d, p)) * np.sqrt(1e-2)
        noise = rng.standard_normal((400, p))
        x0 = rng.standard_normal(d)

        def args():
            return [x0.copy(), noise, 1e-2, A, B, stride, np.zeros((400 // stride, d))]

        sa, sb, a, b = run_both("em_linear", args)
        assert sa == sb
        assert a[0].tobytes() == b[0].tobytes()
        assert a[-1].tobytes() == b[-1].tobytes()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 60), st.integers(1, 4),
           st.lists(st.integers(-8, 8), min_size=1, max_size=6, unique=True))
    def test_banded_matmul(self, seed, n, m, offsets):
        rng = np.random.default_rng(seed)
        off = np.array(sorted(offsets), dtype=np.int64)
        vals = rng.standard_normal(off.size)
        X = rng.standard_normal((n, m))
        a = np.asarray(CY.banded_matmul(off, vals, X))
        b = PY.banded_matmul(off, vals, X)
        assert a.tobytes() == b.tobytes()

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(513, 1600),
           st.lists(st.integers(-700, 700), min_size=1, max_size=12, unique=True))
    def test_banded_matmul_across_row_blocks(self, seed, n, offsets):
        rng = np.random.default_rng(seed)
        off = np.array(offsets, dtype=np.int64)
        vals = rng.standard_normal(off.size)
        X = rng.standard_normal((n, 3))
        assert np.asarray(CY.banded_matmul(off, vals, X)).tobytes() == PY.banded_matmul(off, vals, X).tobytes()

    def test_blow_up_index_agrees(self):
        pot = S.triple_well()
        sa, sb, a, b = run_both("em_langevin_1d", lambda: langevin_args(pot, 200, 0, x0=2.0, h=0.5))
        assert sa == sb and sa >= 0

    def test_simulator_end_to_end(self, monkeypatch):
        spec = S.LangevinSpec(S.triple_well(), 1.0, 1.0, 1e-3, burn_in=500, seed=3)
        ou = S.OUSpec([[-1.0, 0.2], [0.0, -0.5]], np.eye(2), h=1e-2, burn_in=50, seed=4)
        outs = {}
        for name, mod in (("cython", CY), ("python", PY)):
            monkeypatch.setattr(_backend, "kernels", mod)
            monkeypatch.setattr(_backend, "BACKEND", name)
            outs[name] = (S.euler_maruyama(spec, 300, 5).states.tobytes(),
                          S.euler_maruyama(ou, 300, 2).states.tobytes())
        assert outs["cython"] == outs["python"]

    def test_toeplitz_product_end_to_end(self, monkeypatch):
        w = Q.trapezoid_weights(1.0, 0.1, 12)
        X = np.random.default_rng(0).standard_normal((200, 3))
        res = []
        for mod in (CY, PY):
            monkeypatch.setattr(_backend, "kernels", mod)
            M = Q.toeplitz_matrix(w, 200, symmetrize=True)
            res.append(M.dot(X).tobytes())
        assert res[0] == res[1]


def test_environment_override():
    env = dict(os.environ, GENSPEC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import genspec; print(genspec.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.load("fortran")
