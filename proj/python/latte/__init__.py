"""Task-aware autoencoder embeddings of heterogeneous social networks."""

try:
    from ._latte import *  # noqa: F401,F403
    from ._latte import __doc__  # noqa: F401
except ImportError:
    # In-tree builds place the extension next to the build outputs rather than
    # inside the package, so fall back to the top-level module.
    from _latte import *  # type: ignore  # noqa: F401,F403
