"""Encoding filter design: ASM, truncated SH-domain pseudo-inverse, BSM, residual channels.

All designs assume a diffuse field of ``Q`` uncorrelated plane waves (source
covariance ``diag(weights)``, identity when ``weights`` is ``None``) plus
white microphone noise; the Tikhonov parameter is ``lam = 10**(-snr_db/10)``.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .sh import acn_to_nm, conjugation_matrix, num_channels, orders_degrees

XI_FLOOR_DB = -200.0
DEFAULT_RANK_TOL = 1e-6
DEFAULT_THRESHOLD_DB = -10.0


class SingularSystemError(np.linalg.LinAlgError):
    """A filter design system could not be solved."""


class SamplingConditionWarning(UserWarning):
    """More Ambisonics channels requested than there are microphones."""


def reg_from_snr(snr_db: Optional[float]) -> float:
    """``sigma_n^2 / sigma_s^2`` for a given SNR; ``None`` or ``inf`` gives 0."""
    if snr_db is None or np.isinf(snr_db):
        return 0.0
    return float(10.0 ** (-snr_db / 10.0))


def db(ratio) -> np.ndarray:
    """``10 log10(ratio)`` clamped at :data:`XI_FLOOR_DB`."""
    ratio = np.asarray(ratio, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(np.maximum(ratio, 0.0))
    return np.maximum(out, XI_FLOOR_DB)


def ambi_labels(order: int, start_order: int = 0, prefix: str = "a") -> list[str]:
    n, m = orders_degrees(order)
    keep = n >= start_order
    return [f"{prefix}({i},{j})" for i, j in zip(n[keep], m[keep])]


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Per-frequency filters, one column per output channel: ``out = weights^H x``."""

    freq: float
    weights: np.ndarray
    labels: tuple[str, ...]
    reg: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=complex)
        if w.ndim != 2:
            raise ValueError("filter weights must be a 2-D (M, C) array")
        labels = tuple(self.labels)
        if w.shape[1] != len(labels):
            raise ValueError(f"{w.shape[1]} filter columns but {len(labels)} labels")
        if not np.all(np.isfinite(w)):
            raise ValueError("filter weights must be finite")
        if self.reg < 0:
            raise ValueError("regularization must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", labels)

    @property
    def num_mics(self) -> int:
        return self.weights.shape[0]

    @property
    def num_channels(self) -> int:
        return self.weights.shape[1]

    def column(self, label: str) -> np.ndarray:
        return self.weights[:, self.labels.index(label)]


def apply_filters(bank: FilterBank, x) -> np.ndarray:
    """Filter microphone signals: ``bank.weights^H @ x`` (``x`` may be ``(M,)`` or ``(M, T)``)."""
    x = np.asarray(x)
    if x.shape[0] != bank.num_mics:
        raise ValueError(f"signal has {x.shape[0]} microphones, filter bank expects {bank.num_mics}")
    return bank.weights.conj().T @ x


def regularized_solve(V: np.ndarray, targets: np.ndarray, lam: float,
                      weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Solve ``(V W V^H + lam I) C = V W targets`` for ``C`` of shape ``(M, K)``.

    Uses a Cholesky factorization for ``lam > 0`` and an SVD of ``V W^{1/2}``
    for ``lam == 0``; the latter raises :class:`SingularSystemError` when
    ``V`` is rank deficient.
    """
    V = np.asarray(V)
    targets = np.asarray(targets)
    if targets.ndim == 1:
        return regularized_solve(V, targets[:, None], lam, weights)[:, 0]
    if targets.shape[0] != V.shape[1]:
        raise ValueError(f"targets have {targets.shape[0]} rows, steering has {V.shape[1]} directions")
    sw = np.ones(V.shape[1]) if weights is None else np.sqrt(np.asarray(weights, dtype=float))
    B = V * sw
    rhs = B @ (sw[:, None] * targets)
    if lam > 0:
        A = B @ B.conj().T + lam * np.eye(V.shape[0])
        return linalg.cho_solve(linalg.cho_factor(A), rhs)
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    tol = s.max() * max(B.shape) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    if rank < V.shape[0]:
        raise SingularSystemError(
            f"steering matrix has rank {rank} < {V.shape[0]} microphones; "
            "the unregularized system is singular (use a finite SNR)"
        )
    return U @ ((U.conj().T @ rhs) / (s**2)[:, None])


def _check_sampling(n_channels: int, M: int):
    if n_channels > M:
        warnings.warn(
            f"{n_channels} Ambisonics channels from {M} microphones violates (N_a+1)^2 <= M; "
            "check encodability before trusting these channels",
            SamplingConditionWarning,
            stacklevel=3,
        )


def asm_filters(V: np.ndarray, Y: np.ndarray, snr_db: Optional[float], freq: float = 0.0,
                weights: Optional[np.ndarray] = None, labels: Optional[Sequence[str]] = None) -> FilterBank:
    """Ambisonics signal matching filters.

    Column ``(n, m)`` is ``(V V^H + lam I)^{-1} V y_nm`` where ``y_nm`` is the
    matching column of the ``(Q, (N_a+1)**2)`` SH matrix ``Y``.
    """
    V = np.asarray(V)
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise ValueError("Y must be a 2-D (Q, channels) SH matrix")
    _check_sampling(Y.shape[1], V.shape[0])
    lam = reg_from_snr(snr_db)
    if labels is None:
        order = int(round(np.sqrt(Y.shape[1]))) - 1
        if num_channels(order) != Y.shape[1]:
            raise ValueError("Y column count is not a full (N+1)^2 set; pass labels explicitly")
        labels = ambi_labels(order)
    return FilterBank(freq, regularized_solve(V, Y, lam, weights), tuple(labels), lam)


def truncated_sh_encoder(V_nm: np.ndarray, N_a: int, freq: float = 0.0,
                         cond_limit: float = 1e13, singular: str = "raise") -> FilterBank:
    """SH-domain pseudo-inverse encoder of a truncated steering model.

    Implements ``a = T V_nm^* (V_nm^T T^T T V_nm^*)^{-1} x`` at the steering
    order ``N_v`` implied by ``V_nm`` and keeps output channels up to ``N_a``.

    When the inner ``M x M`` matrix has a condition number above
    ``cond_limit`` this raises :class:`SingularSystemError`, unless
    ``singular='pinv'``, in which case the Moore-Penrose inverse of the inner
    matrix is used (the minimum-norm solution of ``x = V_nm^T T a``). Arrays
    confined to the equator hit this at ``N_v = 1``, where ``Y_10`` vanishes
    at every microphone.
    """
    if singular not in ("raise", "pinv"):
        raise ValueError("singular must be 'raise' or 'pinv'")
    V_nm = np.asarray(V_nm)
    n_sh, M = V_nm.shape
    order = int(round(np.sqrt(n_sh))) - 1
    if num_channels(order) != n_sh:
        raise ValueError("V_nm must have (N_v+1)^2 rows")
    if n_sh < M:
        raise ValueError(f"(N_v+1)^2 = {n_sh} < M = {M}: the pseudo-inverse encoder needs N_v with (N_v+1)^2 >= M")
    if N_a > order:
        raise ValueError(f"N_a = {N_a} exceeds steering order N_v = {order}")
    T = conjugation_matrix(order)
    TV = T @ V_nm.conj()
    G = V_nm.T @ T.T @ TV
    cond = np.linalg.cond(G)
    if np.isfinite(cond) and cond <= cond_limit:
        E = linalg.solve(G.T, TV.T).T  # (n_sh, M): a = E x
    elif singular == "pinv":
        E = TV @ np.linalg.pinv(G, rcond=1.0 / cond_limit, hermitian=True)
    else:
        raise SingularSystemError(
            f"inner matrix of the pseudo-inverse encoder is ill-conditioned (cond = {cond:.3e}); "
            "pass singular='pinv' for the minimum-norm solution"
        )
    K = num_channels(N_a)
    return FilterBank(freq, E[:K].conj().T, tuple(ambi_labels(N_a)), 0.0)


@dataclass(frozen=True)
class ChannelPartition:
    """Split of SH channels into the Ambisonics set (orders ``<= N_a``) and residual set."""

    N_a: int
    N_h: int

    def __post_init__(self):
        if self.N_a < 0 or self.N_h < self.N_a:
            raise ValueError(f"need N_h >= N_a >= 0, got N_a={self.N_a}, N_h={self.N_h}")

    @property
    def ambisonic(self) -> range:
        return range(0, num_channels(self.N_a))

    @property
    def residual(self) -> range:
        return range(num_channels(self.N_a), num_channels(self.N_h))

    @property
    def num_ambisonic(self) -> int:
        return len(self.ambisonic)

    @property
    def num_residual(self) -> int:
        return len(self.residual)

    def residual_channels(self) -> list[tuple[int, int]]:
        return [acn_to_nm(i) for i in self.residual]


def channel_partition(N_a: int, N_h: int) -> ChannelPartition:
    return ChannelPartition(N_a, N_h)


def residual_filters(V: np.ndarray, Y_res: np.ndarray, snr_db: Optional[float], freq: float = 0.0,
                     weights: Optional[np.ndarray] = None,
                     partition: Optional[ChannelPartition] = None) -> FilterBank:
    """Residual-channel filters ``r = Y_res^H V^H (V V^H + lam I)^{-1} x``.

    ``Y_res`` holds the SH columns of orders ``N_a+1 .. N_h``; pass the
    ``partition`` to get channel labels (otherwise they are numbered).
    """
    V = np.asarray(V)
    Y_res = np.asarray(Y_res)
    lam = reg_from_snr(snr_db)
    if partition is not None:
        if partition.num_residual != Y_res.shape[1]:
            raise ValueError(f"partition has {partition.num_residual} residual channels, Y_res has {Y_res.shape[1]}")
        labels = ambi_labels(partition.N_h, partition.N_a + 1, prefix="r")
    else:
        labels = [f"r{i}" for i in range(Y_res.shape[1])]
    if Y_res.shape[1] == 0:
        return FilterBank(freq, np.zeros((V.shape[0], 0), dtype=complex), (), lam)
    return FilterBank(freq, regularized_solve(V, Y_res, lam, weights), tuple(labels), lam)


def bsm_filters(V: np.ndarray, d: np.ndarray, snr_db: Optional[float], freq: float = 0.0,
                weights: Optional[np.ndarray] = None, ears: Sequence[str] = ("left", "right")) -> FilterBank:
    """Binaural signal matching: ``w = (V V^H + lam I)^{-1} V d^*`` per ear.

    ``d`` is the reference (HRTF) gain per direction, shape ``(Q,)`` or
    ``(Q, n_ears)``, such that the target ear signal is ``d^T s``.
    """
    d = np.asarray(d)
    if d.ndim == 1:
        d = d[:, None]
    if d.shape[1] != len(ears):
        ears = tuple(f"ear{i}" for i in range(d.shape[1]))
    lam = reg_from_snr(snr_db)
    return FilterBank(freq, regularized_solve(V, d.conj(), lam, weights), tuple(ears), lam)


def encodability(V: np.ndarray, y_nm: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Null-space energy of a target pattern, in dB.

    The fraction of ``||y_nm||^2`` lying outside the column space of ``V^T``
    (the span of left singular vectors with ``sigma >= rank_tol * sigma_max``),
    expressed in dB and clamped at :data:`XI_FLOOR_DB`.
    """
    y = np.asarray(y_nm)
    norm2 = np.vdot(y, y).real
    if norm2 == 0:
        raise ValueError("target pattern y_nm must be nonzero")
    U, s, _ = np.linalg.svd(np.asarray(V).T, full_matrices=False)
    Ur = U[:, s >= rank_tol * s.max()] if s.size and s.max() > 0 else U[:, :0]
    resid = y - Ur @ (Ur.conj().T @ y)
    return float(db(np.vdot(resid, resid).real / norm2))


@dataclass(frozen=True, eq=False)
class EncodabilityReport:
    """Null-space measure per frequency (rows) and channel (columns), in dB."""

    freqs: np.ndarray
    channels: tuple[tuple[int, int], ...]
    xi_db: np.ndarray
    threshold_db: float = DEFAULT_THRESHOLD_DB
    rank_tol: float = DEFAULT_RANK_TOL
    meta: dict = field(default_factory=dict)

    @property
    def encodable(self) -> np.ndarray:
        return self.xi_db <= self.threshold_db


def save_filterbanks(path: str | os.PathLike, banks: Sequence[FilterBank]) -> None:
    """Write filter banks as text; complex entries are ``re,im`` pairs at full precision."""
    lines = ["# filterbank v1", f"banks {len(banks)}"]
    for bank in banks:
        M, C = bank.weights.shape
        lines += [f"freq {float(bank.freq)!r}", f"reg {float(bank.reg)!r}", f"shape {M} {C}",
                  "labels " + " ".join(bank.labels)]
        for row in bank.weights:
            lines.append("row " + " ".join(f"{z.real!r},{z.imag!r}" for z in row.tolist()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_filterbanks(path: str | os.PathLike) -> list[FilterBank]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    pos = 0

    def take(key):
        nonlocal pos
        if pos >= len(lines):
            raise ValueError(f"{path}: unexpected end of file, expected '{key}' record")
        head, _, rest = lines[pos].partition(" ")
        if head != key:
            raise ValueError(f"{path}:{pos + 1}: expected '{key}' record, got {lines[pos][:40]!r}")
        pos += 1
        return rest

    if not lines or lines[0] != "# filterbank v1":
        raise ValueError(f"{path}: not a filterbank v1 file")
    pos = 1
    count = int(take("banks"))
    banks = []
    for _ in range(count):
        freq = float(take("freq"))
        reg = float(take("reg"))
        M, C = (int(v) for v in take("shape").split())
        labels = take("labels").split()
        rows = []
        for _ in range(M):
            lineno = pos + 1
            vals = take("row").split()
            if len(vals) != C:
                raise ValueError(f"{path}:{lineno}: expected {C} entries, got {len(vals)}")
            rows.append([complex(float(re), float(im)) for re, im in (v.split(",") for v in vals)])
        banks.append(FilterBank(freq, np.array(rows, dtype=complex).reshape(M, C), tuple(labels), reg))
    return banks
