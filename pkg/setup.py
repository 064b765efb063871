import os
import subprocess
import tempfile

import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

_PROBE = r"""
#include <math.h>
typedef double v4df __attribute__((vector_size(32)));
extern v4df _ZGVdN4v_log(v4df);
int main(void) {
    v4df x = {1.0, 2.0, 3.0, 4.0};
    v4df y = _ZGVdN4v_log(x);
    return (int)y[0];
}
"""


def _have_libmvec():
    """Try to compile and link a 4-wide vector-log call (glibc libmvec)."""
    cc = os.environ.get("CC", "cc")
    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "probe.c")
        out = os.path.join(tmp, "probe")
        with open(src, "w") as fh:
            fh.write(_PROBE)
        try:
            res = subprocess.run(
                [cc, "-mavx2", src, "-o", out, "-lmvec", "-lm"],
                capture_output=True,
            )
        except OSError:
            return False
        return res.returncode == 0


extra_compile = ["-O3", "-fno-math-errno"]
libraries = ["m"]
define_macros = []
if _have_libmvec():
    # vectorized Box-Muller path: the _ZGVdN4v_* vector ABI needs AVX2 codegen
    extra_compile.append("-mavx2")
    libraries.insert(0, "mvec")
    define_macros.append(("DG_USE_LIBMVEC", "1"))

extensions = [
    Extension(
        "deltagas._core",
        ["src/deltagas/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=extra_compile,
        libraries=libraries,
        define_macros=define_macros,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
