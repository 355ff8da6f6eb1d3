"""HRTFs in the SH domain and the Ambisonics / BSM / decomposed binaural renderers.

The built-in head is a rigid sphere with ears on the equator at
``phi = +pi/2`` (left) and ``phi = -pi/2`` (right).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .array import ArrayGeometry, auto_order, steering_series, steering_sh
from .encoding import ChannelPartition, FilterBank
from .sh import SamplingGrid, conjugation_matrix, num_channels, sht

HEAD_RADIUS = 0.0875
EARS = ("left", "right")
EAR_AZIMUTH = {"left": np.pi / 2, "right": 3 * np.pi / 2}


class BinauralPair(NamedTuple):
    left: complex
    right: complex


@dataclass(frozen=True, eq=False)
class HrtfSh:
    """SH coefficients of both ears at one frequency; ``coeffs[e]`` is ear ``EARS[e]``."""

    freq: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != 2:
            raise ValueError("HRTF coefficients must have shape (2, (N+1)^2)")
        order = int(round(np.sqrt(c.shape[1]))) - 1
        if num_channels(order) != c.shape[1]:
            raise ValueError(f"{c.shape[1]} coefficients is not a full (N+1)^2 set")
        if not np.all(np.isfinite(c)):
            raise ValueError("HRTF coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return int(round(np.sqrt(self.coeffs.shape[1]))) - 1

    @property
    def left(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def right(self) -> np.ndarray:
        return self.coeffs[1]

    def truncated(self, order: int) -> "HrtfSh":
        if order > self.order:
            raise ValueError(f"cannot truncate order-{self.order} HRTF to order {order}")
        return HrtfSh(self.freq, self.coeffs[:, : num_channels(order)])

    def on_grid(self, grid: SamplingGrid) -> np.ndarray:
        """Space-domain ear gains ``d = Y h_nm``, shape ``(Q, 2)``."""
        return grid.sh(self.order) @ self.coeffs.T


def _ear_geometry(ear: str, head_radius: float) -> ArrayGeometry:
    if ear not in EAR_AZIMUTH:
        raise ValueError(f"unknown ear {ear!r}; expected 'left' or 'right'")
    return ArrayGeometry([head_radius], [np.pi / 2], [EAR_AZIMUTH[ear]], head_radius)


def sphere_hrtf(head_radius: float, ear: str, grid: SamplingGrid, freq: float, order=None) -> np.ndarray:
    """Rigid-sphere head response at one ear for every plane-wave direction of ``grid``.

    Normalized to the free-field pressure at the head centre; shape ``(Q,)``.
    """
    if head_radius <= 0:
        raise ValueError("head radius must be > 0")
    geom = _ear_geometry(ear, head_radius)
    if order is None:
        order = auto_order(freq, head_radius)
    return steering_series(geom, grid.theta, grid.phi, freq, order)[0]


def hrtf_to_sh(samples: np.ndarray, grid: SamplingGrid, order: int, freq: float = 0.0) -> HrtfSh | np.ndarray:
    """SH coefficients ``Y^H diag(w) h`` of HRTF samples on a Gauss-Legendre grid.

    ``samples`` of shape ``(Q, 2)`` (left, right) give an :class:`HrtfSh`;
    a single ear ``(Q,)`` gives a coefficient vector.
    """
    if grid.kind != "gauss-legendre" or grid.order is None or grid.order < order:
        raise ValueError(f"HRTF transform to order {order} needs a gauss-legendre grid alias-free at that order")
    samples = np.asarray(samples)
    if samples.shape[0] != grid.size:
        raise ValueError(f"{samples.shape[0]} samples for a grid of {grid.size} directions")
    coeffs = sht(samples, grid, order)
    if samples.ndim == 1:
        return coeffs
    return HrtfSh(freq, coeffs.T)


def sphere_hrtf_sh(freq: float, order: int, head_radius: float = HEAD_RADIUS) -> HrtfSh:
    """Both ears of the sphere head model in the SH domain up to ``order``.

    The coefficients are the exact modal ones, ``b_n conj(Y_nm(ear))``, so
    truncating a higher-order set gives the same result.
    """
    if head_radius <= 0:
        raise ValueError("head radius must be > 0")
    coeffs = [steering_sh(_ear_geometry(ear, head_radius), freq, order)[:, 0] for ear in EARS]
    return HrtfSh(freq, np.array(coeffs))


def _fit(v: np.ndarray, size: int) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] >= size:
        return v[:size]
    pad = np.zeros((size - v.shape[0],) + v.shape[1:], dtype=complex)
    return np.concatenate([v, pad])


def render_ambisonics(h, a_nm, order: int):
    """Ear signal ``h_nm^T T^N a_nm`` with both vectors truncated or zero-padded to ``order``.

    ``h`` is an :class:`HrtfSh` (returns a :class:`BinauralPair`) or a single
    ear coefficient vector (returns a scalar or, for ``a_nm`` of shape
    ``(K, T)``, an array).
    """
    K = num_channels(order)
    T = conjugation_matrix(order)
    a = T @ _fit(a_nm, K)
    if isinstance(h, HrtfSh):
        left, right = (_fit(c, K) @ a for c in h.coeffs)
        return BinauralPair(left, right)
    return _fit(h, K) @ a


def _residual_T(partition: ChannelPartition) -> np.ndarray:
    idx = np.asarray(partition.residual)
    return conjugation_matrix(partition.N_h)[np.ix_(idx, idx)]


def render_decomposed(h, a_hat, r_nm, partition: ChannelPartition):
    """ASM rendering plus residual channels: ``h_A^T T^{N_a} a + h_R^T T^{RES} r``."""
    a_hat = np.asarray(a_hat)
    r_nm = np.asarray(r_nm)
    if a_hat.shape[0] != partition.num_ambisonic:
        raise ValueError(f"expected {partition.num_ambisonic} Ambisonics channels, got {a_hat.shape[0]}")
    if r_nm.shape[0] != partition.num_residual:
        raise ValueError(f"expected {partition.num_residual} residual channels, got {r_nm.shape[0]}")
    Ta = conjugation_matrix(partition.N_a)
    Tr = _residual_T(partition)

    def one(c):
        if c.shape[0] < num_channels(partition.N_h):
            raise ValueError(f"HRTF order too low for residual order {partition.N_h}")
        out = c[partition.ambisonic] @ (Ta @ a_hat)
        if partition.num_residual:
            out = out + c[partition.residual] @ (Tr @ r_nm)
        return out

    if isinstance(h, HrtfSh):
        return BinauralPair(*(one(c) for c in h.coeffs))
    return one(np.asarray(h))


def ambisonic_renderer(asm: FilterBank, h: HrtfSh, N_a: int) -> FilterBank:
    """Microphone-domain filters equal to ASM encoding followed by Ambisonics rendering.

    ``p = h^T T a_hat = h^T T C^H x``, so the per-ear filter is ``C T conj(h)``.
    """
    K = num_channels(N_a)
    C = asm.weights[:, :K]
    T = conjugation_matrix(N_a)
    w = C @ T @ h.coeffs[:, :K].conj().T
    return FilterBank(h.freq, w, EARS, asm.reg)


def decomposed_renderer(asm: FilterBank, residual: FilterBank, h: HrtfSh,
                        partition: ChannelPartition) -> FilterBank:
    """Microphone-domain filters of ASM plus residual-channel rendering."""
    w = ambisonic_renderer(asm, h, partition.N_a).weights
    if partition.num_residual:
        idx = np.asarray(partition.residual)
        w = w + residual.weights @ _residual_T(partition) @ h.coeffs[:, idx].conj().T
    return FilterBank(h.freq, w, EARS, asm.reg)


def save_hrtf(path: str | os.PathLike, hrtfs: Sequence[HrtfSh]) -> None:
    """Write HRTF coefficient sets in the plain-text ``hrtf-sh v1`` format.

    Layout: ``order``, ``frequencies`` and ``ears`` header records, then per
    frequency a ``freq`` record followed by one ``ear <name>`` record per
    ear holding ``(N+1)**2`` ACN-ordered ``re,im`` pairs.
    """
    if not hrtfs:
        raise ValueError("nothing to save")
    order = hrtfs[0].order
    if any(h.order != order for h in hrtfs):
        raise ValueError("all frequencies must share one HRTF order")
    lines = ["# hrtf-sh v1", f"order {order}", f"frequencies {len(hrtfs)}", f"ears {len(EARS)}"]
    for h in hrtfs:
        lines.append(f"freq {float(h.freq)!r}")
        for ear, c in zip(EARS, h.coeffs):
            lines.append(f"ear {ear} " + " ".join(f"{z.real!r},{z.imag!r}" for z in c.tolist()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_hrtf(path: str | os.PathLike) -> list[HrtfSh]:
    """Read an ``hrtf-sh v1`` file; errors name the first bad record."""
    with open(path) as fh:
        records = [(i + 1, ln.strip()) for i, ln in enumerate(fh) if ln.strip()]
    if not records or records[0][1] != "# hrtf-sh v1":
        raise ValueError(f"{path}: not an hrtf-sh v1 file")
    it = iter(records[1:])

    def take(key):
        try:
            lineno, line = next(it)
        except StopIteration:
            raise ValueError(f"{path}: truncated file, missing '{key}' record") from None
        head, _, rest = line.partition(" ")
        if head != key:
            raise ValueError(f"{path}:{lineno}: bad record, expected '{key}', got {line[:40]!r}")
        return lineno, rest

    def take_int(key):
        lineno, rest = take(key)
        try:
            return int(rest)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: '{key}' must be an integer") from None

    order = take_int("order")
    n_freq = take_int("frequencies")
    n_ears = take_int("ears")
    if n_ears != len(EARS):
        raise ValueError(f"{path}: expected {len(EARS)} ears, header says {n_ears}")
    K = num_channels(order)
    out = []
    last = -np.inf
    for _ in range(n_freq):
        lineno, rest = take("freq")
        freq = float(rest)
        if not freq > last:
            raise ValueError(f"{path}:{lineno}: frequency axis not strictly increasing at {freq}")
        last = freq
        coeffs = []
        for ear in EARS:
            lineno, rest = take("ear")
            name, _, data = rest.partition(" ")
            if name != ear:
                raise ValueError(f"{path}:{lineno}: expected ear '{ear}', got {name!r}")
            vals = data.split()
            if len(vals) != K:
                raise ValueError(f"{path}:{lineno}: ear '{ear}' has {len(vals)} coefficients, order {order} needs {K}")
            try:
                coeffs.append([complex(float(a), float(b)) for a, b in (v.split(",") for v in vals)])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed coefficient in ear '{ear}'") from None
        out.append(HrtfSh(freq, np.array(coeffs)))
    extra = next(it, None)
    if extra is not None:
        raise ValueError(f"{path}:{extra[0]}: unexpected record after {n_freq} frequencies")
    return out
