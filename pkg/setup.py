import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "mfcontract._kernels",
        ["src/mfcontract/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # no fused multiply-add: results must match the numpy backend bit for bit
        extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
