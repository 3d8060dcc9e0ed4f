"""Builds the compiled per-slot simulation kernel.

The package works without the extension (a pure-Python kernel is selected at
import time), so a failed compile degrades to a warning instead of aborting
the install.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            warnings.warn(f"compiled kernel skipped ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel skipped ({exc}); using pure-Python fallback")


extensions = [
    Extension(
        "aodet._kernels._episode",
        sources=["src/aodet/_kernels/_episode.pyx"],
        extra_compile_args=["-O3"],
    )
]

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(extensions, language_level=3)
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
