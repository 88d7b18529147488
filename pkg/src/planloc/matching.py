"""Descriptor matching via circular cross-correlation over column shifts.

Shift convention: a heading increase of k bins shifts descriptor columns
left by k (``np.roll(channels, -k, axis=1)``). ``similarity_at_shift(a, b, s)``
compares ``np.roll(a, s)`` against ``b``, so a query taken k bins clockwise
of a database descriptor peaks at shift k and the recovered yaw is
``yaw_anchor + 2*pi*k/n_bins``.

Scores are weighted sums of per-channel cosine similarities; weights are
renormalized over the channels active in both descriptors and selected by
the config mask. A flattened single-cosine mode (one normalization over
all active channels) is available behind a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .database import DescriptorDatabase, EmptyDatabaseError
from .raycast import N_CHANNELS, RadialDescriptor


class MatchShapeError(ValueError):
    """Descriptor bin counts or channel sets are incompatible."""


class EmptyFilterError(ValueError):
    """The transition-signature pre-filter removed every candidate."""


@dataclass(frozen=True)
class MatchConfig:
    channel_weights: tuple[float, ...] = (0.2,) * N_CHANNELS
    channel_mask: tuple[int, ...] = (0, 1, 2, 3, 4)
    prefilter_tolerance: int | None = None
    top_k: int = 10
    flatten: bool = False

    def __post_init__(self):
        if len(self.channel_weights) != N_CHANNELS:
            raise ValueError(f"need {N_CHANNELS} channel weights")
        if any(w < 0 for w in self.channel_weights):
            raise ValueError("channel weights must be non-negative")
        if abs(sum(self.channel_weights) - 1.0) > 1e-9:
            raise ValueError("channel weights must sum to 1")
        if not self.channel_mask:
            raise ValueError("channel mask must select at least one channel")
        if any(not 0 <= c < N_CHANNELS for c in self.channel_mask):
            raise ValueError(f"channel mask entries must be in [0, {N_CHANNELS})")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass(frozen=True)
class MatchResult:
    candidate_index: int
    x: float
    y: float
    best_shift: int
    yaw: float  # radians in [0, 2pi)
    score: float


def _effective_channels(cfg: MatchConfig, a_active: Sequence[bool],
                        b_active: Sequence[bool]) -> list[int]:
    chans = [c for c in cfg.channel_mask if a_active[c] and b_active[c]]
    if not chans:
        raise MatchShapeError("no channel is active in both descriptors under the mask")
    if not cfg.flatten and sum(cfg.channel_weights[c] for c in chans) <= 0:
        raise MatchShapeError("all selected channels have zero weight")
    return chans


def _cosine(a_row: np.ndarray, b_row: np.ndarray) -> float:
    na = math.sqrt(float(np.dot(a_row, a_row)))
    nb = math.sqrt(float(np.dot(b_row, b_row)))
    if na == 0.0 and nb == 0.0:
        return 1.0
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a_row, b_row)) / (na * nb)


def similarity_at_shift(a: RadialDescriptor, b: RadialDescriptor, shift: int,
                        cfg: MatchConfig = MatchConfig()) -> float:
    """Weighted per-channel cosine between a rolled by ``shift`` and b.

    Two all-zero rows count as perfectly similar (1); a zero row against a
    non-zero row counts as 0. Direct evaluation; the FFT path must agree
    with this within 1e-9.
    """
    if a.n_bins != b.n_bins:
        raise MatchShapeError(f"bin counts differ: {a.n_bins} vs {b.n_bins}")
    chans = _effective_channels(cfg, a.active, b.active)
    if cfg.flatten:
        arot = np.roll(a.channels[chans], shift, axis=1).ravel()
        return _cosine(arot, b.channels[chans].ravel())
    wsum = sum(cfg.channel_weights[c] for c in chans)
    score = 0.0
    for c in chans:
        cos = _cosine(np.roll(a.channels[c], shift), b.channels[c])
        score += (cfg.channel_weights[c] / wsum) * cos
    return score


def _xcorr_rows(a_rows: np.ndarray, b_rows: np.ndarray) -> np.ndarray:
    """Circular cross-correlation C[.., s] = sum_j a[.., j-s mod n] * b[.., j].

    Real FFTs of length exactly n_bins (circular, not linear, correlation).
    """
    n = a_rows.shape[-1]
    fa = sfft.rfft(np.asarray(a_rows, dtype=np.float64), axis=-1)
    fb = sfft.rfft(np.asarray(b_rows, dtype=np.float64), axis=-1)
    return sfft.irfft(np.conj(fa) * fb, n=n, axis=-1)


def correlation_curve(a: RadialDescriptor, b: RadialDescriptor,
                      cfg: MatchConfig = MatchConfig()) -> np.ndarray:
    """similarity_at_shift for every shift, computed in the frequency domain."""
    if a.n_bins != b.n_bins:
        raise MatchShapeError(f"bin counts differ: {a.n_bins} vs {b.n_bins}")
    chans = _effective_channels(cfg, a.active, b.active)
    corr = _xcorr_rows(a.channels[chans], b.channels[chans])  # (C', n)
    na = np.linalg.norm(np.asarray(a.channels[chans], dtype=np.float64), axis=1)
    nb = np.linalg.norm(np.asarray(b.channels[chans], dtype=np.float64), axis=1)
    if cfg.flatten:
        ntot = float(np.linalg.norm(na) * np.linalg.norm(nb))
        if ntot == 0.0:
            fill = 1.0 if (na.max(initial=0.0) == 0.0 and nb.max(initial=0.0) == 0.0) else 0.0
            return np.full(a.n_bins, fill)
        return corr.sum(axis=0) / ntot
    weights = np.asarray([cfg.channel_weights[c] for c in chans])
    weights = weights / weights.sum()
    curve = np.zeros(a.n_bins)
    for i in range(len(chans)):
        denom = na[i] * nb[i]
        if denom == 0.0:
            cos = 1.0 if (na[i] == 0.0 and nb[i] == 0.0) else 0.0
            curve += weights[i] * cos
        else:
            curve += weights[i] * (corr[i] / denom)
    return curve


def best_shift_fft(a: RadialDescriptor, b: RadialDescriptor,
                   cfg: MatchConfig = MatchConfig()) -> tuple[int, float]:
    """Argmax of the correlation curve; exact ties resolve to the smallest shift."""
    curve = correlation_curve(a, b, cfg)
    shift = int(np.argmax(curve))
    return shift, float(curve[shift])


def hit_type_agreement(a: RadialDescriptor, b: RadialDescriptor,
                       shift: int = 0) -> tuple[int, float]:
    """Bins whose hit-type labels coincide after rolling a by ``shift``."""
    if a.n_bins != b.n_bins:
        raise MatchShapeError(f"bin counts differ: {a.n_bins} vs {b.n_bins}")
    a_lab = np.roll(a.hit_labels(), shift)
    agree = int(np.count_nonzero(a_lab == b.hit_labels()))
    return agree, agree / a.n_bins


def match_query(query: RadialDescriptor, db: DescriptorDatabase,
                cfg: MatchConfig = MatchConfig()) -> list[MatchResult]:
    """Rank database candidates by their best-shift similarity to the query.

    The optional transition-signature pre-filter drops candidates whose
    signature differs from the query's by more than the tolerance. Results
    sort by descending score, ties by candidate index; the per-candidate
    shift itself resolves ties toward the smallest shift.
    """
    if len(db) == 0:
        raise EmptyDatabaseError("cannot match against an empty database")
    if query.n_bins != db.n_bins:
        raise MatchShapeError(f"bin counts differ: query {query.n_bins} vs db {db.n_bins}")
    chans = _effective_channels(cfg, query.active, db.active)

    cand = np.arange(len(db))
    if cfg.prefilter_tolerance is not None:
        diff = np.abs(db.transition_counts - query.transition_count)
        cand = cand[diff <= cfg.prefilter_tolerance]
        if cand.size == 0:
            raise EmptyFilterError(
                f"transition pre-filter (tolerance {cfg.prefilter_tolerance}) "
                f"removed all {len(db)} candidates")

    # Normalization and channel weighting are folded into per-candidate
    # spectral coefficients (irfft is linear), and candidates stream through
    # in chunks: one inverse transform per candidate, small working set.
    a_rows = np.asarray(query.channels[chans], dtype=np.float64)       # (C', n)
    n = query.n_bins
    fa_conj = np.conj(sfft.rfft(a_rows, axis=-1))                      # (C', k)
    na = np.sqrt(np.einsum("cn,cn->c", a_rows, a_rows))                # (C',)
    if cfg.flatten:
        weights = np.ones(len(chans))
    else:
        weights = np.asarray([cfg.channel_weights[c] for c in chans])
        weights = weights / weights.sum()

    m_total = cand.size
    shifts = np.empty(m_total, dtype=np.int64)
    scores = np.empty(m_total)
    chunk = 2048
    for s0 in range(0, m_total, chunk):
        sel = cand[s0:s0 + chunk]
        blk = np.asarray(db.channels[np.ix_(sel, chans)], dtype=np.float64)
        fb = sfft.rfft(blk, axis=-1)                                   # (M, C', k)
        nb = np.sqrt(np.einsum("mcn,mcn->mc", blk, blk))               # (M, C')
        if cfg.flatten:
            ntot = np.linalg.norm(na) * np.linalg.norm(nb, axis=1)     # (M,)
            coef = np.where(ntot[:, None] > 0.0,
                            1.0 / np.maximum(ntot[:, None], 1e-300),
                            0.0) * np.ones(len(chans))[None, :]
            const = np.where((np.linalg.norm(na) == 0.0) & (ntot == 0.0), 1.0, 0.0)
        else:
            denom = na[None, :] * nb                                   # (M, C')
            coef = np.where(denom > 0.0,
                            weights[None, :] / np.maximum(denom, 1e-300), 0.0)
            const = np.where((na[None, :] == 0.0) & (nb == 0.0),
                             weights[None, :], 0.0).sum(axis=1)
        spectrum = np.einsum("mc,ck,mck->mk", coef, fa_conj, fb)       # (M, k)
        curves = sfft.irfft(spectrum, n=n, axis=-1) + const[:, None]
        best = np.argmax(curves, axis=1)
        shifts[s0:s0 + chunk] = best
        scores[s0:s0 + chunk] = curves[np.arange(curves.shape[0]), best]
    order = np.lexsort((cand, -scores))
    two_pi = 2.0 * math.pi
    results = []
    for row in order[: cfg.top_k]:
        idx = int(cand[row])
        shift = int(shifts[row])
        yaw = (db.yaw_anchor + two_pi * shift / n) % two_pi
        results.append(MatchResult(candidate_index=idx,
                                   x=float(db.cells[idx, 0]), y=float(db.cells[idx, 1]),
                                   best_shift=shift, yaw=yaw, score=float(scores[row])))
    return results
