"""Build script for the optional compiled kernel extension.

The package works without the extension: thermoflat.kernels falls back to
numpy implementations at import time.  Set THERMOFLAT_NO_EXT=1 to skip the
Cython build entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("THERMOFLAT_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "thermoflat.kernels._ckernels",
                    ["src/thermoflat/kernels/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
