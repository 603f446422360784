# Builds the optional compiled SGD core. The package installs and works
# without it (pure-Python kernels are selected at import), so any failure
# to cythonize or compile downgrades to a warning instead of an error.

import warnings

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "recaudit.kernels._sgd",
        ["src/recaudit/kernels/_sgd.pyx"],
        include_dirs=[np.get_include()],
        # -ffp-contract=off keeps the C arithmetic bit-identical to the
        # pure-Python kernels (no FMA contraction of a*b+c).
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    try:
        ext_modules = cythonize([ext], language_level=3)
    except Exception as exc:  # pragma: no cover - build-env dependent
        warnings.warn(f"cythonize failed ({exc}); installing pure-Python kernels only")
        ext_modules = []
else:  # pragma: no cover - build-env dependent
    warnings.warn("Cython not available; installing pure-Python kernels only")

setup(ext_modules=ext_modules)
