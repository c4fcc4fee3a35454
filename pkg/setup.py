"""Build script: compiles the optional Cython kernel.

The package works without the extension (a pure-Python fallback is
selected at import time), so any build failure here is non-fatal for
development installs done with --no-build-isolation.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fibreforms._kernels._speedups",
                ["src/fibreforms/_kernels/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
