"""Builds the optional compiled scoring kernel.

The package is fully functional without it: backlink.kernels falls back to
the pure-Python implementation when the extension is missing or fails to
build (no compiler, no Cython).
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that degrades to a warning instead of failing the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: compiled kernel skipped ({exc}); "
                  f"pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  f"pure-Python fallback will be used")


ext_modules = []
if not os.environ.get("BACKLINK_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/backlink/kernels/_native.pyx"],
            language_level=3,
        )
    except ImportError:
        print("warning: Cython not available; compiled kernel skipped")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
