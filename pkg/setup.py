"""Build the optional Cython kernels.

If Cython or a C++ compiler is missing the package still installs; the
pure-Python kernels in ``netcrt._fallback`` are picked up at import.
"""
import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("NETCRT_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "netcrt._kernels",
                    ["src/netcrt/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    language="c++",
                    extra_compile_args=["-O3", "-std=c++17"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - build environment dependent
        print(f"netcrt: building without compiled kernels ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
