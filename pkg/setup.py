from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [Extension("qsteer._rk4", ["src/qsteer/_rk4.pyx"], optional=True)],
        compiler_directives={"language_level": 3},
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
