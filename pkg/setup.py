"""Build script for the optional compiled trajectory kernel.

The package works without the extension (a pure-Python kernel with the
identical RNG stream is selected at import time), so a failed compile is
downgraded to a warning rather than aborting the install.
"""

import warnings

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/fragsim/_kernels/_core.pyx"],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - only hit on broken toolchains
    warnings.warn(f"building without compiled kernel: {exc}")
    ext_modules = []

setup(ext_modules=ext_modules)
