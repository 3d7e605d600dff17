"""Pick the compiled stepping kernel when it imports, else the NumPy one.

Set ``QWALK_BACKEND=python`` to force the fallback.
"""
import os

from . import _pykernels

python_kernels = _pykernels
compiled_kernels = None

try:
    from . import _kernels as compiled_kernels  # type: ignore[no-redef]
except ImportError:  # extension not built
    compiled_kernels = None

if os.environ.get("QWALK_BACKEND", "").lower() == "python" or compiled_kernels is None:
    kernels = python_kernels
else:
    kernels = compiled_kernels

BACKEND = kernels.BACKEND


def get(name: str | None = None):
    """Kernel module by name ("compiled" or "python"); default is the active one."""
    if name is None:
        return kernels
    if name == "python":
        return python_kernels
    if name == "compiled":
        if compiled_kernels is None:
            raise RuntimeError("compiled kernels are not built")
        return compiled_kernels
    raise ValueError(f"unknown backend {name!r}")
