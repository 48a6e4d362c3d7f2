"""Build the optional compiled core.

The package works without it: ``okreg._backend`` falls back to the numpy
implementation when ``okreg._core`` cannot be imported.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "okreg._core",
                ["src/okreg/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:  # no Cython or numpy at build time
    pass

setup(ext_modules=ext_modules)
