"""Build script: compiles the optional Cython core.

The compiled module accelerates the two hot loops (weighted-Laplacian
application inside CG, upwind flux/diffusion updates in transport).  If
Cython or a C compiler is unavailable the build falls through and the
package runs on the pure-numpy backend selected at import time.
"""

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"WARNING: C extension build failed ({exc}); "
                  "falling back to the pure-numpy backend.")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "falling back to the pure-numpy backend.")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "shorelake._core._speedups",
                ["src/shorelake/_core/_speedups.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
