import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# The simulation kernel is optional: if the C build fails the package
# falls back to the pure-Python backend at import time.
ext_modules = [
    Extension(
        "snlevy._simkernel",
        ["src/snlevy/_simkernel.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off keeps the compiled kernel bit-identical to the
        # pure-Python backend (no FMA contraction of a*b+c)
        extra_compile_args=["-O3", "-ffp-contract=off"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(ext_modules, compiler_directives={"language_level": "3"}),
)
