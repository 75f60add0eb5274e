import os

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# Set LOOPDETECTOR_PURE=1 to skip the compiled kernels; the package then
# runs on the NumPy fallback selected at import time.
extensions = []
if cythonize is not None and os.environ.get("LOOPDETECTOR_PURE") != "1":
    extensions = cythonize(
        [
            Extension(
                "loopdetector._kernels",
                ["src/loopdetector/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps the float kernels' arithmetic
                # identical to the NumPy fallback (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
