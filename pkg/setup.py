import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("REMDYN_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # fallback kernels cover everything
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "remdyn._ext",
            ["src/remdyn/_ext.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-ffp-contract=off"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            optional=True,
        )
        ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
