import numpy
from setuptools import setup
from setuptools.extension import Extension

# The compiled kernel is optional: simcull.matcher falls back to the
# numpy implementation if the extension is missing at import time.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "simcull._kernels",
                ["src/simcull/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
