"""Build the optional compiled kernels.

Without Cython (or a C compiler) the package installs as pure Python and
falls back to ``auxbandit._pykernels`` at import time.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "auxbandit._kernels",
        ["src/auxbandit/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # No fused multiply-add: results must match the Python reference bit for bit.
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)
