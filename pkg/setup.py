"""Build script for the optional compiled simulation kernel.

The package works without the extension (a pure-Python kernel is selected
at import time); building it makes large simulation runs roughly two
orders of magnitude faster.
"""
from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    np = None
    cythonize = None

if cythonize is not None:
    # -ffp-contract=off keeps the compiled kernel bit-identical to the
    # pure-Python one: fused multiply-adds would round differently.
    extensions = cythonize(
        [
            Extension(
                "aoiq._kernel",
                ["src/aoiq/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
else:
    extensions = []

setup(ext_modules=extensions)
