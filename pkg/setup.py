from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off: the compiled kernel must stay bit-identical to the pure
# Python fallback, so fused multiply-add contraction is disabled.
extensions = [
    Extension(
        "streamtree._core",
        ["src/streamtree/_core.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
