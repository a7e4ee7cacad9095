"""Build the optional compiled kernel extension.

The package works without the extension (a pure numpy/scipy fallback is
selected at import time), so a failed compile only costs speed.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "splitfeas._corekernels",
                ["src/splitfeas/_corekernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
