"""Build script for the compiled sampling core.

The extension is optional at runtime: if it fails to import, the package
falls back to the pure-numpy core in ``lapd._core_py``.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import setup
from setuptools.extension import Extension

# -ffp-contract=off keeps the C arithmetic free of fused multiply-adds so
# the extension matches the numpy fallback op-for-op.
ext = Extension(
    "lapd._core",
    ["src/lapd/_core.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3", "-ffp-contract=off", "-fopenmp"],
    extra_link_args=["-fopenmp"],
)

setup(ext_modules=cythonize([ext], language_level=3))
