"""Spherical Bessel and Hankel functions by recurrence.

``j_n`` uses Miller's downward recurrence anchored to the closed forms of
``j_0`` / ``j_1``; ``y_n`` (and therefore ``h_n = j_n + i y_n``, first kind)
uses the upward recurrence, which is stable for the second solution.
"""

from __future__ import annotations

import numpy as np

from .sh import N_MAX

KINDS = ("bessel_j", "hankel", "bessel_j_deriv", "hankel_deriv")

_RESCALE = 1e150


def _check(nmax, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if nmax < 0:
        raise ValueError(f"order must be >= 0, got {nmax}")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("argument x must be positive and finite")
    return x


def _jn_downward(nmax: int, x: np.ndarray) -> np.ndarray:
    """``j_0 .. j_nmax`` at every ``x``, shape ``(nmax + 1, len(x))``."""
    start = nmax + int(np.ceil(x.max())) + 40
    out = np.zeros((nmax + 1, x.size))
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-300)
    for n in range(start, 0, -1):
        f_prev = (2 * n + 1) / x * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        if n - 1 <= nmax:
            out[n - 1] = f_cur
        big = np.abs(f_cur) > _RESCALE
        if np.any(big):
            f_cur[big] /= _RESCALE
            f_next[big] /= _RESCALE
            out[n - 1:, big] /= _RESCALE
    j0 = np.sin(x) / x
    j1 = np.sin(x) / x**2 - np.cos(x) / x
    use_j0 = np.abs(j0) >= np.abs(j1)
    f1 = out[1] if nmax >= 1 else f_next
    scale = np.where(use_j0, j0 / np.where(use_j0, out[0], 1.0), j1 / np.where(use_j0, 1.0, f1))
    return out * scale


def _yn_upward(nmax: int, x: np.ndarray) -> np.ndarray:
    out = np.empty((nmax + 1, x.size))
    out[0] = -np.cos(x) / x
    if nmax >= 1:
        out[1] = -np.cos(x) / x**2 - np.sin(x) / x
    for n in range(1, nmax):
        out[n + 1] = (2 * n + 1) / x * out[n] - out[n - 1]
    return out


def _derivative(f: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Derivatives of orders ``0 .. len(f) - 2`` from values ``0 .. len(f) - 1``."""
    nmax = f.shape[0] - 2
    d = np.empty((nmax + 1,) + f.shape[1:], dtype=f.dtype)
    d[0] = -f[1]
    n = np.arange(1, nmax + 1)[:, None]
    d[1:] = f[:nmax] - (n + 1) / x * f[1 : nmax + 1]
    return d


def spherical_table(nmax: int, x) -> dict[str, np.ndarray]:
    """All four radial functions for orders ``0 .. nmax`` at every ``x``.

    Returns a dict keyed by :data:`KINDS`; each value has shape
    ``(nmax + 1, len(x))``. Unlike :func:`spherical_radial`, ``nmax`` is not
    capped, so this also serves as the high-order evaluation path.
    """
    x = _check(nmax, x)
    j = _jn_downward(nmax + 1, x)
    y = _yn_upward(nmax + 1, x)
    h = j + 1j * y
    return {
        "bessel_j": j[: nmax + 1],
        "hankel": h[: nmax + 1],
        "bessel_j_deriv": _derivative(j, x),
        "hankel_deriv": _derivative(h, x),
    }


def spherical_radial(n: int, x, which: str = "bessel_j"):
    """Spherical Bessel ``j_n``, Hankel ``h_n`` (first kind) or a derivative.

    Parameters
    ----------
    n : int
        Order, ``0 <= n <= N_MAX``.
    x : float or array_like
        Positive argument(s).
    which : {'bessel_j', 'hankel', 'bessel_j_deriv', 'hankel_deriv'}
    """
    if which not in KINDS:
        raise ValueError(f"unknown function {which!r}; expected one of {KINDS}")
    if not 0 <= n <= N_MAX:
        raise ValueError(f"order n={n} outside [0, {N_MAX}]")
    scalar = np.ndim(x) == 0
    value = spherical_table(n, x)[which][n]
    return value[0] if scalar else value
