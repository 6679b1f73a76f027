"""Build the optional Cython kernels.

``python setup.py build_ext --inplace`` compiles ``pragqa._kernels``. When
Cython or a C compiler is missing the package installs without it and
``pragqa.kernels`` falls back to the NumPy implementation.
"""
from __future__ import annotations

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: skipping compiled kernels ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc})")


def build_ext_modules():
    if os.environ.get("PRAGQA_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except Exception:
        return []
    ext = Extension(
        name="pragqa._kernels",
        sources=[os.path.join("src", "pragqa", "_kernels.pyx")],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=build_ext_modules(), cmdclass={"build_ext": OptionalBuildExt})
