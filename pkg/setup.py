import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # build the pure-Python package only
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("SUBCORPUS_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "subcorpus._kernels_ext",
                ["src/subcorpus/_kernels_ext.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
