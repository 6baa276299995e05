"""Build script.

The compiled evaluation core (frdecomp._corex) is optional: when Cython and a
C compiler are available it is built, otherwise the package installs with the
NumPy fallback only.  Set FRDECOMP_NO_EXT=1 to skip the extension explicitly.
"""

import os

from setuptools import Extension, setup


def extension_modules():
    if os.environ.get("FRDECOMP_NO_EXT") == "1":
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "frdecomp._corex",
        ["src/frdecomp/_corex.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


# name/packages are repeated here so that legacy setuptools installs (which
# do not merge pyproject metadata into setup.py code paths) still resolve
# the src layout correctly.
setup(
    name="frdecomp",
    version="0.1.0",
    package_dir={"": "src"},
    packages=["frdecomp"],
    install_requires=["numpy>=1.24", "scipy>=1.10", "click>=8.1"],
    entry_points={"console_scripts": ["frdecomp = frdecomp.cli:main"]},
    ext_modules=extension_modules(),
)
