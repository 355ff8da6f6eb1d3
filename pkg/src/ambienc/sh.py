"""Complex spherical harmonics, sphere sampling grids and the conjugation matrix.

Conventions used throughout the package:

* complex orthonormal harmonics with the Condon-Shortley phase,
* ACN channel ordering ``acn = n**2 + n + m``,
* ``theta`` is colatitude in ``[0, pi]``, ``phi`` is azimuth in ``[0, 2*pi)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

N_MAX = 40
"""Hard cap on the order of any special function evaluated by the package."""

GRID_KINDS = ("gauss-legendre", "fibonacci")


@dataclass(frozen=True)
class Direction:
    """A direction on the unit sphere (colatitude, azimuth) in radians."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        object.__setattr__(self, "phi", float(np.mod(self.phi, 2 * np.pi)))

    def unit_vector(self) -> np.ndarray:
        return sph2cart(self.theta, self.phi)


def acn(n: int, m: int) -> int:
    """Linear ACN index of harmonic ``(n, m)``."""
    if n < 0 or abs(m) > n:
        raise ValueError(f"invalid harmonic index (n={n}, m={m})")
    return n * n + n + m


def acn_to_nm(index: int) -> tuple[int, int]:
    """Inverse of :func:`acn`."""
    if index < 0:
        raise ValueError(f"negative ACN index {index}")
    n = int(np.floor(np.sqrt(index)))
    return n, index - n * n - n


def num_channels(order: int) -> int:
    return (order + 1) ** 2


def orders_degrees(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays of ``n`` and ``m`` for every ACN channel up to ``order``."""
    n = np.concatenate([np.full(2 * k + 1, k) for k in range(order + 1)])
    m = np.concatenate([np.arange(-k, k + 1) for k in range(order + 1)])
    return n, m


def sph2cart(theta, phi, r=1.0) -> np.ndarray:
    """Spherical to Cartesian coordinates; the last axis holds ``x, y, z``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([r * st * np.cos(phi), r * st * np.sin(phi), r * np.cos(theta)], axis=-1)


def cart2sph(xyz) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cartesian to ``(theta, phi, r)`` with ``phi`` wrapped into ``[0, 2*pi)``."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    r = np.sqrt(x**2 + y**2 + z**2)
    theta = np.arccos(np.clip(z / np.where(r > 0, r, 1.0), -1.0, 1.0))
    phi = np.mod(np.arctan2(y, x), 2 * np.pi)
    return theta, phi, r


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Directions on the sphere with quadrature weights.

    ``order`` is the SH order up to which the grid is declared alias-free,
    or ``None`` when no such claim is made.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    kind: str
    order: Optional[int] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).ravel()
        phi = np.mod(np.asarray(self.phi, dtype=float).ravel(), 2 * np.pi)
        weights = np.asarray(self.weights, dtype=float).ravel()
        if theta.size < 1:
            raise ValueError("a sampling grid needs at least one direction")
        if not (theta.shape == phi.shape == weights.shape):
            raise ValueError("theta, phi and weights must have equal length")
        if np.any(theta < 0) or np.any(theta > np.pi):
            raise ValueError("theta must lie in [0, pi]")
        if np.any(weights < 0):
            raise ValueError("quadrature weights must be nonnegative")
        if self.kind not in GRID_KINDS + ("custom",):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.order is not None and theta.size < num_channels(self.order):
            raise ValueError(
                f"{theta.size} directions cannot be alias-free at order {self.order}; "
                f"need at least {num_channels(self.order)}"
            )
        for name, value in (("theta", theta), ("phi", phi), ("weights", weights)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def size(self) -> int:
        return self.theta.size

    def __len__(self) -> int:
        return self.size

    def directions(self) -> list[Direction]:
        return [Direction(t, p) for t, p in zip(self.theta, self.phi)]

    def unit_vectors(self) -> np.ndarray:
        return sph2cart(self.theta, self.phi)

    def sh(self, order: int) -> np.ndarray:
        """SH matrix up to ``order``, cached and extended incrementally; read-only."""
        cached = self._cache.get("Y")
        have = -1 if cached is None else int(round(np.sqrt(cached.shape[1]))) - 1
        if order > have:
            block = sh_matrix(self.theta, order, self.phi, start_order=have + 1)
            cached = block if cached is None else np.concatenate([cached, block], axis=1)
            cached.setflags(write=False)
            self._cache["Y"] = cached
        return cached[:, : num_channels(order)]


def custom_grid(theta, phi, weights=None) -> SamplingGrid:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if weights is None:
        weights = np.full(theta.size, 4 * np.pi / theta.size)
    return SamplingGrid(theta, phi, weights, "custom")


def make_grid(kind: str, order: Optional[int] = None, count: Optional[int] = None,
              alias_free_order: Optional[int] = None) -> SamplingGrid:
    """Build a sampling grid.

    Parameters
    ----------
    kind : {'gauss-legendre', 'fibonacci'}
        ``gauss-legendre`` takes ``order`` and returns ``2 (N+1)**2`` points
        (Gauss-Legendre colatitudes times equiangular azimuths) whose weights
        integrate products of harmonics up to order ``N`` exactly.
        ``fibonacci`` takes ``count`` and returns a golden-angle spiral with
        uniform weights ``4 pi / Q``.
    alias_free_order : int, optional
        For fibonacci grids, declare the grid alias-free at this order; the
        request is rejected when ``count < (N+1)**2``.
    """
    if kind == "gauss-legendre":
        if order is None or order < 0:
            raise ValueError("gauss-legendre grid needs order >= 0")
        return _gauss_legendre(int(order))
    if kind == "fibonacci":
        if count is None or count < 1:
            raise ValueError("fibonacci grid needs count >= 1")
        if alias_free_order is not None and count < num_channels(alias_free_order):
            raise ValueError(
                f"count={count} < (N+1)^2={num_channels(alias_free_order)} "
                f"for alias-free order {alias_free_order}"
            )
        return _fibonacci(int(count), alias_free_order)
    raise ValueError(f"unknown grid kind {kind!r}; expected one of {GRID_KINDS}")


@functools.lru_cache(maxsize=16)
def _gauss_legendre(order: int) -> SamplingGrid:
    x, w = np.polynomial.legendre.leggauss(order + 1)
    n_phi = 2 * (order + 1)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    theta = np.arccos(x)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    ww = np.repeat(w, n_phi) * (2 * np.pi / n_phi)
    return SamplingGrid(tt.ravel(), pp.ravel(), ww, "gauss-legendre", order)


@functools.lru_cache(maxsize=16)
def _fibonacci(count: int, alias_free_order: Optional[int]) -> SamplingGrid:
    i = np.arange(count)
    z = 1.0 - (2 * i + 1) / count
    golden = np.pi * (3.0 - np.sqrt(5.0))
    return SamplingGrid(np.arccos(z), golden * i, np.full(count, 4 * np.pi / count),
                        "fibonacci", alias_free_order)


def sh_eval(n: int, m: int, theta, phi):
    """Complex orthonormal spherical harmonic ``Y_nm(theta, phi)``."""
    if n < 0 or abs(m) > n:
        raise ValueError(f"invalid harmonic index (n={n}, m={m})")
    out = special.sph_harm_y(n, m, np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    return out[()] if np.ndim(out) == 0 else out


def sh_matrix(grid_or_theta, order: int, phi=None, start_order: int = 0) -> np.ndarray:
    """SH matrix of shape ``(Q, (N+1)**2)``; column ``acn(n, m)`` holds ``Y_nm``.

    Accepts either a :class:`SamplingGrid` or explicit ``theta, phi`` arrays.
    With ``start_order`` only the columns of orders ``start_order..order``
    are returned.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if isinstance(grid_or_theta, SamplingGrid):
        theta, phi = grid_or_theta.theta, grid_or_theta.phi
    else:
        theta = np.atleast_1d(np.asarray(grid_or_theta, dtype=float))
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
    n, m = orders_degrees(order)
    keep = n >= start_order
    return special.sph_harm_y(n[None, keep], m[None, keep], theta[:, None], phi[:, None])


def conjugation_matrix(order: int) -> np.ndarray:
    """Signed permutation ``T`` with ``Y.T == T @ Y.conj().T`` on any grid.

    Entry ``((n, m), (n, -m))`` equals ``(-1)**m``; everything else is zero.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    n, m = orders_degrees(order)
    size = n.size
    T = np.zeros((size, size))
    T[np.arange(size), n * n + n - m] = (-1.0) ** np.abs(m)
    return T


def sht(values: np.ndarray, grid: SamplingGrid, order: int) -> np.ndarray:
    """Forward SH transform ``Y^H diag(w) f`` along the first axis of ``values``."""
    values = np.asarray(values)
    w = grid.weights.reshape((-1,) + (1,) * (values.ndim - 1))
    return grid.sh(order).conj().T @ (w * values)
