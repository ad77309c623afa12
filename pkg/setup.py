"""Build script: compiles the optional Cython kernel extension.

The package works without it (numpy fallback); a failed extension build
falls back to a pure-Python install.
"""
import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/liftguard/kernels/_core.pyx",
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(
    ext_modules=ext_modules,
    include_dirs=[np.get_include()],
)
