"""Build script: compiles the optional Cython integration kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so any failure here should surface at build time rather than
being silently swallowed — we only skip the extension when Cython itself is
unavailable.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "tricav._kernels",
                ["src/tricav/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
