"""Build the optional compiled kernel.

    python setup.py build_ext --inplace

If Cython or a C compiler is missing the package still installs and runs
on the numpy backend.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:
    print("Cython/numpy unavailable: skipping compiled kernel", file=sys.stderr)
else:
    # no FMA contraction: results must match the numpy backend bit for bit
    flags = ["-O3", "-ffp-contract=off"] if sys.platform != "win32" else ["/fp:strict"]
    ext_modules = cythonize(
        [
            Extension(
                "greenspread._ckernel",
                ["src/greenspread/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=flags,
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
