"""Kernel backend selection.

The compiled extension is used when importable. Setting the environment
variable ``GENSPEC_PURE_PYTHON=1`` forces the pure-Python fallback.
"""
import importlib
import os

__all__ = ["kernels", "BACKEND", "load"]


def load(name):
    """Return the kernel module for ``name`` in {"cython", "python"}."""
    if name == "cython":
        return importlib.import_module("genspec._kernels")
    if name == "python":
        return importlib.import_module("genspec._fallback")
    raise ValueError(f"unknown backend {name!r}")


def _select():
    if os.environ.get("GENSPEC_PURE_PYTHON", "").strip() not in ("", "0"):
        return "python", load("python")
    try:
        return "cython", load("cython")
    except ImportError:
        return "python", load("python")


BACKEND, kernels = _select()
