"""Build script for the optional compiled simplex kernel.

The package is fully functional without the extension: omnical.kernels falls
back to the pure numpy implementation at import time. Building in place:

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "omnical._simplex_cy",
                sources=["src/omnical/_simplex_cy.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: the compiled kernel must be bit-identical
                # to the numpy fallback so transcripts do not depend on backend
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
