"""Build script: compiles the optional Cython fast path.

The extension is a pure accelerator.  If the toolchain is missing or the
compile fails, installation proceeds and the package falls back to the
pure-Python kernels at import time.  Set CFMM_NO_EXT=1 to skip the build
explicitly.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building cfmm._core failed ({exc}); "
                  "falling back to pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building {ext.name} failed ({exc}); "
                  "falling back to pure-Python kernels")


def extensions():
    if os.environ.get("CFMM_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available; skipping cfmm._core")
        return []
    return cythonize(
        ["src/cfmm/_core.pyx"],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
