try:
    from ._version import version as __version__
except ImportError:
    # source tree without a build
    __version__ = '0.0.0'
