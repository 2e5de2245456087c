"""Build script for the compiled simplex pivot kernel.

The package works without the extension (a pure-Python kernel is selected
at import time), so failure to compile only costs speed.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "poolslp.lp._core",
        ["src/poolslp/lp/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
