"""Build script.

The compiled kernel extension is optional: when Cython or a C compiler is
unavailable the package installs anyway and falls back to the pure-Python
kernels at import time.
"""

import os

from setuptools import Extension, setup


def extension_modules():
    if os.environ.get("YOKAI_SKIP_EXT") == "1":
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "yokai._kernels._ccore",
        sources=["src/yokai/_kernels/_ccore.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extension_modules())
