"""Build script: compiles the traversal kernel when a toolchain is present.

The package works without the extension (a pure-Python kernel is selected
at import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rulehop._traversal",
                ["src/rulehop/_traversal.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    print(f"warning: skipping compiled kernel ({exc}); pure-Python fallback will be used", file=sys.stderr)
    ext_modules = []

setup(ext_modules=ext_modules)
