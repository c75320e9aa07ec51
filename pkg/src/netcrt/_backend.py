"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable. Setting
``NETCRT_BACKEND=python`` forces the pure-Python fallback; setting it to
``cython`` makes a missing extension an import error instead of a silent
downgrade.
"""
import importlib
import os

from . import _fallback

BACKENDS = ("cython", "python")


def load(name):
    """Return the kernel module for backend ``name``."""
    if name == "python":
        return _fallback
    if name == "cython":
        return importlib.import_module("netcrt._kernels")
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")


def available():
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


_requested = os.environ.get("NETCRT_BACKEND", "").strip().lower()
if _requested == "python":
    kernels, name = _fallback, "python"
elif _requested == "cython":
    kernels, name = load("cython"), "cython"
else:
    try:
        kernels, name = load("cython"), "cython"
    except ImportError:
        kernels, name = _fallback, "python"
