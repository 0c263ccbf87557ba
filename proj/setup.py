import glob

from pybind11.setup_helpers import ParallelCompile, Pybind11Extension, build_ext
from setuptools import setup

ParallelCompile("NPY_NUM_BUILD_JOBS").install()

ext = Pybind11Extension(
    "rednet_py",
    sources=sorted(glob.glob("src/*.cpp")) + ["bindings/rednet_py.cpp"],
    include_dirs=["include", "vendor"],
    libraries=["z"],
    cxx_std=20,
    extra_compile_args=["-O2"],
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
