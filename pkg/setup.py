"""Build script: compiles the optional Cython kernels.

The package works without the compiled extensions (pure-Python fallbacks
are selected at import time), so a missing compiler or Cython only costs
speed, not functionality.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extensions if possible, fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            f"could not build compiled kernels ({exc}); "
            "falling back to the pure-Python implementations"
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            "src/aiid/lzjd/_ckernel.pyx",
            "src/aiid/zkboo/_ckernel.pyx",
        ],
        language_level=3,
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
