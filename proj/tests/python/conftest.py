"""Make the test suite runnable straight from a CMake build tree.

When the package has not been pip-installed, fall back to the source package
directory plus the freshly built extension pointed at by SURVSTACK_PYMODULE.
"""

import os
import pathlib
import shutil
import sys


def _ensure_importable():
    try:
        import survstack  # noqa: F401

        return
    except ImportError:
        pass
    repo = pathlib.Path(__file__).resolve().parents[2]
    pkg_dir = repo / "python" / "survstack"
    module = os.environ.get("SURVSTACK_PYMODULE")
    if module and not list(pkg_dir.glob("_survstack*.so")):
        shutil.copy2(module, pkg_dir / pathlib.Path(module).name)
    sys.path.insert(0, str(repo / "python"))


_ensure_importable()
