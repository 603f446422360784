"""SGD kernel backend selection: compiled extension when built, else pure Python.

Set ``RECAUDIT_KERNEL=python`` (or ``compiled``) to force a backend.
"""

import os

from recaudit.errors import UsageError
from recaudit.kernels import _sgd_py

try:
    from recaudit.kernels import _sgd as _compiled
except ImportError:  # extension not built
    _compiled = None


def available_backends():
    return ("compiled", "python") if _compiled is not None else ("python",)


def get_backend(name: str | None = None):
    """Resolve a kernel backend to ``(module, name)``.

    ``None`` honors the RECAUDIT_KERNEL environment variable and defaults to
    the compiled extension when it was built.
    """
    if name is None:
        name = os.environ.get("RECAUDIT_KERNEL", "auto")
    if name == "auto":
        return (_compiled, "compiled") if _compiled is not None else (_sgd_py, "python")
    if name == "compiled":
        if _compiled is None:
            raise UsageError("compiled kernel requested but the extension is not built")
        return _compiled, "compiled"
    if name == "python":
        return _sgd_py, "python"
    raise UsageError(f"unknown kernel backend {name!r}; expected 'compiled' or 'python'")
