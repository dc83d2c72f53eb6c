"""Build script. The compiled integrator core is optional: without Cython or
a C compiler the package installs anyway and falls back to the pure-Python
kernels at import time.  Errors in the .pyx itself still fail the build."""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "shearlab._core_cy",
                ["src/shearlab/_core_cy.pyx"],
                extra_compile_args=["-O3"],
                optional=True,  # missing C compiler degrades, not fails
            )
        ],
        language_level=3,
    )
except ImportError:  # pragma: no cover - no Cython in the build env
    import sys

    sys.stderr.write(
        "shearlab: Cython unavailable; installing with pure-Python kernels\n")

setup(ext_modules=ext_modules)
