"""Optional compiled kernels.  Without Cython or a compiler the package
installs anyway and runs on the pure-Python fallback."""

import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    USE_CYTHON = os.environ.get("HBSPECTRA_NO_EXT", "") in ("", "0")
except ImportError:
    USE_CYTHON = False

ext_modules = []
if USE_CYTHON:
    ext_modules = cythonize(
        [Extension("hbspectra._kernels", ["src/hbspectra/_kernels.pyx"],
                   extra_compile_args=["-O3"], optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
