"""Build the _survstack extension with CMake and place it in the package."""

import pathlib
import shutil
import subprocess
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

ROOT = pathlib.Path(__file__).resolve().parent


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        out = pathlib.Path(self.get_ext_fullpath(ext.name)).resolve()
        build_dir = pathlib.Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)
        subprocess.run(
            [
                "cmake",
                "-S",
                str(ROOT),
                "-B",
                str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                "-DSURVSTACK_BUILD_PYTHON=ON",
                f"-DPython_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_survstack", "-j"],
            check=True,
        )
        built = sorted(build_dir.glob("_survstack*.so"))
        if not built:
            raise RuntimeError("CMake did not produce the _survstack module")
        out.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(built[-1], out)


setup(
    ext_modules=[CMakeExtension("survstack._survstack")],
    cmdclass={"build_ext": CMakeBuild},
)
