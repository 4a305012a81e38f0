import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install, the fallback kernels are used
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("DEGDIFF_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "degenerate_diffusion._kernels._core",
                ["src/degenerate_diffusion/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
