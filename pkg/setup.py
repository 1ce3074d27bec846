from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; smoothmart.rng falls back to numpy
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "smoothmart._philox",
                ["src/smoothmart/_philox.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
