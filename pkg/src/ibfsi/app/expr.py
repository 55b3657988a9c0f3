"""Boundary-data expressions such as ``"cos(theta)"`` compiled to numpy callables."""

from __future__ import annotations

import numpy as np
import sympy

from ..errors import ConfigError

_SYMBOLS = {name: sympy.Symbol(name, real=True) for name in ("x", "y", "r", "theta")}


def compile_expr(text):
    """Callable ``(x, y) -> array`` for an expression in ``x, y, r, theta``."""
    try:
        e = sympy.sympify(text, locals=dict(_SYMBOLS))
    except (sympy.SympifyError, SyntaxError, TypeError) as err:
        raise ConfigError(f"cannot parse boundary expression {text!r}: {err}") from None
    unknown = {s.name for s in e.free_symbols} - set(_SYMBOLS)
    if unknown:
        raise ConfigError(f"boundary expression {text!r} uses unknown symbols {sorted(unknown)}")
    f = sympy.lambdify([_SYMBOLS[k] for k in ("x", "y", "r", "theta")], e, "numpy")

    def fn(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return np.broadcast_to(np.asarray(f(x, y, np.hypot(x, y), np.arctan2(y, x)), float), x.shape).copy()

    return fn
