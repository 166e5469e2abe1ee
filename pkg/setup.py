import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "jcsqueeze._kernel",
    ["src/jcsqueeze/_kernel.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3"],
)

setup(ext_modules=cythonize([ext], language_level=3))
