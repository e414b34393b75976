"""Backend switch for the compiled kernels.

Set ``DOUBLEBUBBLE_BACKEND=numpy`` to bypass numba entirely; the default is
``numba`` when it can be imported.
"""
import os

BACKEND_ENV = "DOUBLEBUBBLE_BACKEND"


def _resolve_backend():
    requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba":
        try:
            import numba  # noqa: F401
        except ImportError:  # pragma: no cover - numba is a declared dependency
            return "numpy"
    return requested


BACKEND = _resolve_backend()


def have_numba():
    try:
        import numba  # noqa: F401
    except ImportError:  # pragma: no cover
        return False
    return True


def njit(func):
    """Compile ``func`` with numba if available, otherwise return it unchanged.

    Unlike the backend switch this always compiles when numba is importable,
    so the benchmark can time both variants in one process.
    """
    if not have_numba():  # pragma: no cover
        return func
    import numba

    return numba.njit(cache=True)(func)


def pick(numba_impl, numpy_impl):
    return numba_impl if BACKEND == "numba" else numpy_impl
