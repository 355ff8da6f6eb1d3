"""Microphone arrays on a rigid sphere and their plane-wave steering matrices.

Time convention is ``exp(-i omega t)``; a unit plane wave arriving from
direction ``Omega_q`` has pressure ``exp(-i k Omega_q . r)`` and the
array is described by the rigid-sphere modal weights ``b_n``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import special as sps

from .sh import N_MAX, SamplingGrid, cart2sph, num_channels, orders_degrees, sh_matrix, sph2cart
from .special import spherical_table

SPEED_OF_SOUND = 343.0

ARRAY_KINDS = ("spherical", "circular", "semicircular", "custom")


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """``M`` omnidirectional microphones at ``(r, theta, phi)`` around a rigid sphere.

    ``scatterer_radius == 0`` denotes a free-field (open) array.
    """

    r: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    scatterer_radius: float
    kind: str = "custom"

    def __post_init__(self):
        r, theta, phi = (np.atleast_1d(np.asarray(v, dtype=float)).copy() for v in (self.r, self.theta, self.phi))
        if r.size < 1 or not (r.shape == theta.shape == phi.shape):
            raise ValueError("need M >= 1 microphones with matching r, theta, phi")
        if self.scatterer_radius < 0:
            raise ValueError("scatterer radius must be >= 0")
        if np.any(r <= 0) or np.any(r < self.scatterer_radius * (1 - 1e-12)):
            raise ValueError("microphones must lie on or outside the scatterer (r >= a > 0)")
        if self.kind not in ARRAY_KINDS:
            raise ValueError(f"unknown array kind {self.kind!r}")
        phi = np.mod(phi, 2 * np.pi)
        for name, value in (("r", r), ("theta", theta), ("phi", phi)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def num_mics(self) -> int:
        return self.r.size

    def positions(self) -> np.ndarray:
        """Cartesian microphone positions, shape ``(M, 3)``."""
        return sph2cart(self.theta, self.phi, self.r)

    def rotated(self, R: np.ndarray) -> "ArrayGeometry":
        theta, phi, r = cart2sph(self.positions() @ np.asarray(R).T)
        return ArrayGeometry(r, theta, phi, self.scatterer_radius, self.kind)

    def permuted(self, order) -> "ArrayGeometry":
        order = np.asarray(order)
        return ArrayGeometry(self.r[order], self.theta[order], self.phi[order],
                             self.scatterer_radius, self.kind)


def _spread_points(M: int) -> np.ndarray:
    if M == 1:
        return np.array([[0.0, 0.0, 1.0]])
    if M == 4:
        return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3.0)
    i = np.arange(M)
    z = 1.0 - (2 * i + 1) / M
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return sph2cart(np.arccos(z), phi)


def make_array(kind: str, M: int = 4, radius: float = 0.1) -> ArrayGeometry:
    """One of the standard layouts, microphones on a rigid sphere of ``radius``.

    ``spherical`` spreads the microphones over the sphere (a regular
    tetrahedron for ``M == 4``, a Fibonacci spiral otherwise); ``circular``
    places them uniformly on the equator; ``semicircular`` places them
    uniformly on the closed half-equator ``phi in [0, pi]``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if radius <= 0:
        raise ValueError("radius must be > 0")
    if kind == "spherical":
        theta, phi, _ = cart2sph(_spread_points(M))
    elif kind == "circular":
        theta = np.full(M, np.pi / 2)
        phi = 2 * np.pi * np.arange(M) / M
    elif kind == "semicircular":
        if M < 2:
            raise ValueError("a semicircular array needs M >= 2")
        theta = np.full(M, np.pi / 2)
        phi = np.pi * np.arange(M) / (M - 1)
    else:
        raise ValueError(f"unknown array kind {kind!r}; expected spherical, circular or semicircular")
    return ArrayGeometry(np.full(M, radius), theta, phi, radius, kind)


def wavenumber(freq: float, c: float = SPEED_OF_SOUND) -> float:
    return 2 * np.pi * freq / c


def radial_weights(nmax: int, k: float, r, a: float) -> np.ndarray:
    """Modal weights ``b_n(k; r, a)`` for ``n = 0..nmax``, shape ``(nmax + 1, len(r))``.

    ``b_n = 4 pi (-i)^n (j_n(kr) - j_n'(ka) / h_n'(ka) h_n(kr))``; with
    ``a == 0`` the scattered term is dropped (free field).
    """
    if k <= 0:
        raise ValueError("wavenumber must be > 0")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if a < 0 or np.any(r < a * (1 - 1e-12)):
        raise ValueError("need r >= a >= 0")
    n = np.arange(nmax + 1)[:, None]
    phase = 4 * np.pi * (-1j) ** n
    radial = spherical_table(nmax, k * r)
    if a == 0:
        return phase * radial["bessel_j"]
    at_a = spherical_table(nmax, np.array([k * a]))
    ratio = at_a["bessel_j_deriv"] / at_a["hankel_deriv"]
    return phase * (radial["bessel_j"] - ratio * radial["hankel"])


def radial_response(n: int, k: float, r: float, a: float) -> complex:
    """Single modal weight ``b_n``; see :func:`radial_weights`."""
    if not 0 <= n <= N_MAX:
        raise ValueError(f"order n={n} outside [0, {N_MAX}]")
    return complex(radial_weights(n, k, [r], a)[n, 0])


def auto_order(freq: float, a: float, c: float = SPEED_OF_SOUND) -> int:
    """Steering order with a negligible truncation tail: ``ceil(e ka / 2) + 8``, capped."""
    if freq <= 0:
        raise ValueError("frequency must be > 0")
    ka = wavenumber(freq, c) * a
    return min(int(math.ceil(math.e * ka / 2)) + 8, N_MAX)


def _resolve_order(geom: ArrayGeometry, freq: float, order) -> int:
    if order is None or order == "auto":
        return auto_order(freq, float(np.max(geom.r)))
    order = int(order)
    if not 0 <= order <= N_MAX:
        raise ValueError(f"steering order {order} outside [0, {N_MAX}]")
    return order


def steering_sh(geom: ArrayGeometry, freq: float, order=None) -> np.ndarray:
    """SH-domain steering matrix ``V_nm`` of shape ``((N_v+1)**2, M)``.

    Entry ``(acn(n, m), i) = b_n(k; r_i, a) * conj(Y_nm(theta_i, phi_i))`` so that
    ``V = V_nm.T @ Y.T`` for any direction set ``Y``.
    """
    order = _resolve_order(geom, freq, order)
    b = radial_weights(order, wavenumber(freq), geom.r, geom.scatterer_radius)
    n, _ = orders_degrees(order)
    return b[n, :] * sh_matrix(geom.theta, order, geom.phi).conj().T


def steering_matrix(geom: ArrayGeometry, grid: SamplingGrid, freq: float, order=None) -> np.ndarray:
    """Space-domain steering matrix ``V`` of shape ``(M, Q)`` via ``V_nm.T @ Y.T``.

    Raises ``ValueError`` if the grid has fewer than ``(N_v+1)**2`` directions.
    """
    order = _resolve_order(geom, freq, order)
    if grid.size < num_channels(order):
        raise ValueError(
            f"grid of {grid.size} directions is too small for steering order {order}; "
            f"need Q >= {num_channels(order)}"
        )
    return steering_sh(geom, freq, order).T @ grid.sh(order).T


def steering_series(geom: ArrayGeometry, theta, phi, freq: float, order=None) -> np.ndarray:
    """Steering evaluated by the Legendre form of the scattering series.

    ``V[i, q] = sum_n (2n+1)/(4 pi) b_n(k; r_i, a) P_n(cos gamma_iq)``, with no
    grid-size requirement. Shape ``(M, Q)``.
    """
    order = _resolve_order(geom, freq, order)
    src = sph2cart(np.atleast_1d(theta), np.atleast_1d(phi))
    mics = sph2cart(geom.theta, geom.phi)
    cosg = np.clip(mics @ src.T, -1.0, 1.0)
    b = radial_weights(order, wavenumber(freq), geom.r, geom.scatterer_radius)
    out = np.zeros(cosg.shape, dtype=complex)
    for n in range(order + 1):
        out += (2 * n + 1) / (4 * np.pi) * b[n][:, None] * sps.eval_legendre(n, cosg)
    return out


def save_geometry(path: str | os.PathLike, geom: ArrayGeometry) -> None:
    """Write a geometry as a plain-text table: one ``r theta phi`` row per microphone."""
    lines = [
        f"# scatterer_radius {geom.scatterer_radius!r}",
        f"# kind {geom.kind}",
        "# r theta phi",
    ]
    lines += [f"{r!r} {t!r} {p!r}" for r, t, p in zip(geom.r.tolist(), geom.theta.tolist(), geom.phi.tolist())]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_geometry(path: str | os.PathLike) -> ArrayGeometry:
    radius = None
    kind = "custom"
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["scatterer_radius"] and len(parts) == 2:
                    radius = float(parts[1])
                elif parts[:1] == ["kind"] and len(parts) == 2:
                    kind = parts[1]
                continue
            fields = line.split()
            if len(fields) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns (r theta phi), got {len(fields)}")
            rows.append([float(v) for v in fields])
    if radius is None:
        raise ValueError(f"{path}: missing '# scatterer_radius' header")
    if not rows:
        raise ValueError(f"{path}: no microphone rows")
    r, theta, phi = np.array(rows).T
    return ArrayGeometry(r, theta, phi, radius, kind)
