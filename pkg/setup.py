import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_module = Extension(
    "mlsr._kernels",
    ["src/mlsr/_kernels.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    # The compiled stepper is an accelerator only; mlsr._backend falls back
    # to a pure-numpy implementation when this module is missing.
    optional=True,
)

setup(
    ext_modules=cythonize([ext_module], compiler_directives={"language_level": "3"})
    if cythonize is not None
    else [],
)
