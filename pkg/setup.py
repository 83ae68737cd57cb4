"""Optional compiled Langevin kernel; the package falls back to numpy without it."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("QDWELL_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("qdwell._kernels", ["src/qdwell/_kernels.pyx"], extra_compile_args=["-O3"], define_macros=[("_GNU_SOURCE", None)])],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
