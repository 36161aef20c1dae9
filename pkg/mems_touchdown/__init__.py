try:
    from ._version import __version__
except ImportError:  # running from a source tree without setuptools_scm metadata
    __version__ = "0.0.0"

__all__ = [
    '__version__',
]
