"""Build shim for the optional compiled text kernel.

The package works without the extension: genuq.kernels falls back to the
pure-Python implementation at import time. Any build failure here is
therefore non-fatal.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("genuq._ckernels", ["src/genuq/_ckernels.pyx"])],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - degraded build path
    print(f"genuq: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
