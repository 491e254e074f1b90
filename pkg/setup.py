"""Build the optional Cython kernel extension.

The extension is optional: when Cython or a compiler is unavailable the
package installs without it and ``wotkit`` falls back to the numpy kernels.
"""
from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build without the extension
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "wotkit._ckernels",
                sources=["src/wotkit/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
