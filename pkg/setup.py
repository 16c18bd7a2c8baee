"""Build the optional Cython kernel extension.

The package works without it: ``uqr_web_lab.kernels`` falls back to the
numpy implementation when the compiled module is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("UQR_WEB_LAB_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "uqr_web_lab._kernels_c",
                    ["src/uqr_web_lab/_kernels_c.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
