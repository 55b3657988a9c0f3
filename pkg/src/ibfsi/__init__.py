"""Extended-domain immersed-body flow solvers on a 2D MAC grid."""

__version__ = "0.1.0"
