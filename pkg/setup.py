"""Build script: compiles the optional fast stepper extension.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compilation only costs speed, not functionality.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "orlspi._stepper",
                ["src/orlspi/_stepper.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # noqa: BLE001 - extension is optional by design
    print(f"orlspi: skipping compiled stepper ({exc}); NumPy fallback will be used", file=sys.stderr)

setup(ext_modules=ext_modules)
