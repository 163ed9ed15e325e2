#!/usr/bin/env python
"""Build script for the optional compiled kernel core.

The package works without the extension: sentigen.ndmath.kernels falls back
to the numpy reference implementation when `_core` is not importable.
"""
import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    USE_CYTHON = True
except Exception:
    cythonize = None
    USE_CYTHON = False

ext_suffix = ".pyx" if USE_CYTHON else ".c"

extensions = [
    Extension(
        "sentigen.ndmath.kernels._core",
        sources=[f"src/sentigen/ndmath/kernels/_core{ext_suffix}"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

if USE_CYTHON:
    ext_modules = cythonize(
        extensions, compiler_directives={"language_level": "3"}
    )
else:
    ext_modules = extensions

setup(ext_modules=ext_modules)
