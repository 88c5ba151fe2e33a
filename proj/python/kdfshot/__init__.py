"""Mutual knowledge/data learning with source-free few-shot adaptation."""

try:
    from ._kdfshot import *  # noqa: F401,F403
    from ._kdfshot import __doc__ as _core_doc  # noqa: F401
except ImportError:
    # Plain cmake builds leave the extension next to this package on
    # PYTHONPATH rather than inside it.
    from _kdfshot import *  # noqa: F401,F403
