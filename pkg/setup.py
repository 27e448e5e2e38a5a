"""Build the optional Cython kernel; the package falls back to NumPy without it."""
import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("DFSZENO_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "dfszeno._ckernel",
                ["src/dfszeno/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
