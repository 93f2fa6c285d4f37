"""Build script: compiles the optional subsumption kernel.

Set LEASH_PURE=1 to skip the extension entirely; the package falls back to
the vectorized numpy implementation at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LEASH_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "leash._kernel",
                    ["src/leash/_kernel.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
