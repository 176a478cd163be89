import os

import numpy as np
from setuptools import Extension, setup

# The compiled core is optional: without Cython the package installs the
# numpy fallback only.
try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("BANACHMC_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "banachmc._kernels",
                ["src/banachmc/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
