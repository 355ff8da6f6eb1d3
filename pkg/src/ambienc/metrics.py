"""Diffuse-field NMSE of Ambisonics and binaural estimates, with a Monte Carlo check.

Every linear estimate ``est = w^H x`` of a reference ``ref = t^H s`` under
``x = V s + n`` with ``s ~ (0, sigma_s^2 W)``, ``n ~ (0, sigma_n^2 I)`` has

    E|est - ref|^2 = sigma_s^2 ||V^H w - t||_W^2 + sigma_n^2 ||w||^2

For Ambisonics channels ``t = y_nm``; for an ear signal ``d^T s`` we have
``t = conj(d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .encoding import db, reg_from_snr
from .sh import SamplingGrid

MC_CHUNK = 512


@dataclass(frozen=True)
class NmseResult:
    value_db: float
    mismatch: float
    noise: float
    denominator: float

    @property
    def ratio(self) -> float:
        return (self.mismatch + self.noise) / self.denominator


@dataclass(frozen=True)
class MonteCarloResult:
    value_db: float
    ratio: float
    stderr: float
    trials: int

    @property
    def stderr_db(self) -> float:
        return float(10.0 / np.log(10.0) * self.stderr / self.ratio) if self.ratio > 0 else np.inf


@dataclass(frozen=True, eq=False)
class DiffuseModel:
    """Plane waves over ``grid`` with power ``sigma_s2`` each, white noise ``sigma_n2``.

    With ``weighted`` the per-direction source power is scaled by the grid
    quadrature weights, which turns sums over the grid into integrals.
    """

    grid: SamplingGrid
    sigma_s2: float = 1.0
    sigma_n2: float = 0.01
    weighted: bool = False

    @classmethod
    def from_snr(cls, grid: SamplingGrid, snr_db: Optional[float] = 20.0, weighted: bool = False):
        return cls(grid, 1.0, reg_from_snr(snr_db), weighted)

    @property
    def reg(self) -> float:
        return self.sigma_n2 / self.sigma_s2

    @property
    def snr_db(self) -> float:
        return np.inf if self.sigma_n2 == 0 else float(10 * np.log10(self.sigma_s2 / self.sigma_n2))

    @property
    def source_weights(self) -> Optional[np.ndarray]:
        return self.grid.weights if self.weighted else None


def _weighted_norm2(v: np.ndarray, w: Optional[np.ndarray]) -> float:
    a = np.abs(v) ** 2
    if w is not None:
        a = a * w.reshape((-1,) + (1,) * (a.ndim - 1))
    return float(a.sum())


def _nmse(V, w, t, model: DiffuseModel) -> NmseResult:
    V, w, t = np.asarray(V), np.asarray(w), np.asarray(t)
    den = model.sigma_s2 * _weighted_norm2(t, model.source_weights)
    if den == 0:
        raise ValueError("reference signal has zero energy")
    mismatch = model.sigma_s2 * _weighted_norm2(V.conj().T @ w - t, model.source_weights)
    noise = model.sigma_n2 * float(np.sum(np.abs(w) ** 2))
    return NmseResult(float(db((mismatch + noise) / den)), mismatch, noise, den)


def nmse_ambisonics(V, c, y_nm, model: DiffuseModel) -> NmseResult:
    """Closed-form NMSE of ``c^H x`` against ``y_nm^H s``.

    ``c`` and ``y_nm`` may hold several channels as columns; energies are
    summed over them.
    """
    return _nmse(V, c, y_nm, model)


def nmse_binaural(V, w, d, model: DiffuseModel) -> NmseResult:
    """Closed-form NMSE of ``w^H x`` against the ear signal ``d^T s``.

    ``w`` and ``d`` may hold both ears as columns, in which case the error
    and reference energies are summed over ears.
    """
    return _nmse(V, w, np.conj(d), model)


def monte_carlo_nmse(V, filters, targets, model: DiffuseModel, trials: int = 10_000,
                     seed: int = 0, kind: str = "ambisonics") -> MonteCarloResult:
    """Empirical NMSE from random diffuse-field realizations.

    Draws circular complex Gaussian sources and noise, forms ``x = V s + n``,
    applies ``filters`` and compares against the reference (``targets^H s``
    for ``kind='ambisonics'``, ``targets^T s`` for ``kind='binaural'``).
    Chunks use independent substreams spawned from ``seed``, so the result
    does not depend on evaluation order.
    """
    if trials < 100:
        raise ValueError("monte carlo estimate needs at least 100 trials")
    if kind not in ("ambisonics", "binaural"):
        raise ValueError(f"unknown kind {kind!r}")
    V = np.asarray(V)
    W = np.asarray(filters)
    t = np.asarray(targets)
    if W.ndim == 1:
        W = W[:, None]
    if t.ndim == 1:
        t = t[:, None]
    if kind == "binaural":
        t = t.conj()
    M, Q = V.shape
    src_std = np.sqrt(model.sigma_s2 * (model.source_weights if model.weighted else np.ones(Q)))
    noise_std = np.sqrt(model.sigma_n2)
    counts = [MC_CHUNK] * (trials // MC_CHUNK) + ([trials % MC_CHUNK] if trials % MC_CHUNK else [])
    streams = np.random.SeedSequence(seed).spawn(len(counts))
    num = np.empty(trials)
    den = np.empty(trials)
    pos = 0
    for count, ss in zip(counts, streams):
        rng = np.random.default_rng(ss)
        s = (rng.standard_normal((Q, count)) + 1j * rng.standard_normal((Q, count))) * (src_std[:, None] / np.sqrt(2))
        n = (rng.standard_normal((M, count)) + 1j * rng.standard_normal((M, count))) * (noise_std / np.sqrt(2))
        x = V @ s + n
        ref = t.conj().T @ s
        est = W.conj().T @ x
        num[pos:pos + count] = np.sum(np.abs(est - ref) ** 2, axis=0)
        den[pos:pos + count] = np.sum(np.abs(ref) ** 2, axis=0)
        pos += count
    ratio = num.mean() / den.mean()
    stderr = np.std(num - ratio * den, ddof=1) / np.sqrt(trials) / den.mean()
    return MonteCarloResult(float(db(ratio)), float(ratio), float(stderr), trials)
