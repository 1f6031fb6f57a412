"""Low-pass Fourier contours of pitch and rhythm.

Each phrase becomes a step function over normalized time, sampled at
``N_SAMPLES`` points, mirrored, and reduced to its lowest ``K`` Fourier
coefficients. The features are clustered with Ward linkage and one cluster is
chosen by a size/width quality measure; its mean spectrum, transformed back
and unmirrored, is the contour the composer follows.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .corpus.score import Phrase
from .errors import ContourUndefined
from .markov import DURATION, PITCH

log = logging.getLogger(__name__)

N_SAMPLES = 256
DEFAULT_K = 6
_ENERGY_FLOOR = 1e-20


def step_curve(phrase: Phrase, feature: str, n: int = N_SAMPLES) -> np.ndarray:
    """Sample a phrase's pitch or duration step function at ``n`` points.

    Sample ``j`` sits at normalized time ``j / n``. For pitch, rests take the
    first pitch before the first sounding note, the last pitch after the last
    one, and a linear ramp between the neighbouring pitches in between.
    Duration curves keep each note's own duration, rests included.
    """
    if not phrase.notes:
        raise ContourUndefined("empty phrase")
    if feature == PITCH and not phrase.has_pitch():
        raise ContourUndefined(f"phrase {phrase.source_id}#{phrase.index_in_song} has no pitched notes")
    total = phrase.total_duration
    onsets = [nt.onset for nt in phrase.notes]
    exact = [Fraction(j, n) * total for j in range(n)]
    idx = [bisect.bisect_right(onsets, t) - 1 for t in exact]

    if feature == DURATION:
        return np.array([float(phrase.notes[i].duration) for i in idx])
    if feature != PITCH:
        raise ValueError(f"unknown feature {feature!r}")

    # resolve every note (rest or not) to a value function of absolute time
    notes = phrase.notes
    pitched = [i for i, nt in enumerate(notes) if nt.pitch is not None]
    first, last = pitched[0], pitched[-1]
    out = np.empty(n)
    for j, i in enumerate(idx):
        note = notes[i]
        if note.pitch is not None:
            out[j] = note.pitch
        elif i < first:
            out[j] = notes[first].pitch
        elif i > last:
            out[j] = notes[last].pitch
        else:
            prev = max(p for p in pitched if p < i)
            nxt = min(p for p in pitched if p > i)
            start = float(notes[prev].end)
            end = float(notes[nxt].onset)
            frac = (float(exact[j]) - start) / (end - start)
            out[j] = notes[prev].pitch + (notes[nxt].pitch - notes[prev].pitch) * frac
    return out


def center_pitch_curve(phrase: Phrase, curve: np.ndarray) -> np.ndarray:
    """Subtract the mean pitch of the phrase's sounding notes (durations ignored)."""
    pitches = [nt.pitch for nt in phrase.notes if nt.pitch is not None]
    if not pitches:
        raise ContourUndefined("cannot center a phrase without pitches")
    return np.asarray(curve, dtype=float) - float(np.mean(pitches))


def mirror(curve: np.ndarray) -> np.ndarray:
    """Prepend the reversed curve: ``reverse(curve) ++ curve``."""
    curve = np.asarray(curve)
    return np.concatenate([curve[::-1], curve])


@dataclass
class ContourFeature:
    coeffs: np.ndarray  # K complex values, coeffs[0] is the mean
    phrase_ref: str = ""
    compensation: float = 1.0

    def as_real(self) -> np.ndarray:
        return np.concatenate([self.coeffs.real, self.coeffs.imag])


def extract_feature(mirrored: np.ndarray, k: int = DEFAULT_K, phrase_ref: str = "") -> ContourFeature:
    """Keep the ``k`` lowest FFT bins and restore the lost non-DC energy.

    Retained harmonics are scaled by ``sqrt(E_total / E_kept)`` over non-DC
    bins, which keeps the time-domain variance of the smoothed curve equal to
    the input's. Coefficients are divided by the signal length so that
    ``coeffs[0]`` is the curve mean.
    """
    x = np.asarray(mirrored, dtype=float)
    length = len(x)
    if not 1 <= k <= length // 2:
        raise ValueError(f"K must be in 1..{length // 2}, got {k}")
    spectrum = np.fft.fft(x)
    power = np.abs(spectrum) ** 2
    total = power[1:].sum()
    # bins 1..k-1 and their negative-frequency mirrors
    kept = power[1:k].sum() + power[length - k + 1:].sum() if k > 1 else 0.0
    # kept energy at round-off level counts as nothing kept
    if total > 0 and kept > total * _ENERGY_FLOOR:
        factor = float(np.sqrt(total / kept))
    else:
        factor = 1.0
    coeffs = spectrum[:k].copy()
    if factor == 1.0 and kept <= total * _ENERGY_FLOOR:
        coeffs[1:] = 0
    coeffs[1:] *= factor
    return ContourFeature(coeffs / length, phrase_ref, factor)


def spectrum_to_curve(coeffs: np.ndarray, length: int) -> np.ndarray:
    """Inverse of :func:`extract_feature`: real curve of ``length`` samples."""
    coeffs = np.asarray(coeffs, dtype=complex)
    half = np.zeros(length // 2 + 1, dtype=complex)
    half[: len(coeffs)] = coeffs * length
    return np.fft.irfft(half, n=length)


def ward_cluster(points: np.ndarray, n_clusters: int) -> np.ndarray:
    """Agglomerative clustering with Ward linkage, cut at ``n_clusters``.

    At each step the pair whose merge least increases the within-cluster sum
    of squares is joined; equal costs go to the lowest ``(i, j)`` pair.
    Labels are numbered by the smallest member index of each cluster.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=int)
    k = max(1, min(n_clusters, n))
    centroids = points.copy()
    sizes = np.ones(n)
    active = np.ones(n, dtype=bool)
    parent = np.arange(n)

    sq = ((points[:, None, :] - points[None, :, :]) ** 2).sum(-1)
    cost = 0.5 * sq
    cost[np.tril_indices(n)] = np.inf
    row_min = cost.min(axis=1)
    row_arg = cost.argmin(axis=1)

    def refresh(rows):
        for r in rows:
            row_min[r] = cost[r].min()
            row_arg[r] = cost[r].argmin()

    for _ in range(n - k):
        i = int(np.argmin(row_min))
        j = int(row_arg[i])
        total = sizes[i] + sizes[j]
        centroids[i] = (sizes[i] * centroids[i] + sizes[j] * centroids[j]) / total
        sizes[i] = total
        active[j] = False
        parent[parent == j] = i
        cost[j, :] = np.inf
        cost[:, j] = np.inf
        row_min[j] = np.inf

        others = np.flatnonzero(active)
        others = others[others != i]
        d = ((centroids[others] - centroids[i]) ** 2).sum(-1) * sizes[others] * sizes[i] / (sizes[others] + sizes[i])
        below = others < i
        cost[others[below], i] = d[below]
        cost[i, others[~below]] = d[~below]

        stale = set(np.flatnonzero(active & ((row_arg == i) | (row_arg == j))).tolist()) | {i}
        refresh(stale)
        for o, c in zip(others[below], d[below]):
            if o in stale:
                continue
            if c < row_min[o] or (c == row_min[o] and i < row_arg[o]):
                row_min[o] = c
                row_arg[o] = i

    roots = sorted(set(parent.tolist()))
    # a root is the lowest index of its cluster since merges keep the lower index
    relabel = {r: label for label, r in enumerate(roots)}
    return np.array([relabel[p] for p in parent])


def cluster(features: Sequence[ContourFeature], max_clusters: int) -> np.ndarray:
    """Ward-cluster complex features embedded as ``[re..., im...]`` vectors."""
    if not features:
        raise ValueError("need at least one feature to cluster")
    points = np.stack([f.as_real() for f in features])
    return ward_cluster(points, max_clusters)


@dataclass
class ClusterStats:
    cluster_id: int
    size: int
    width: float
    quality: float
    mean_spectrum: np.ndarray
    members: list[str] = field(default_factory=list)


def cluster_quality(
    clusters: Sequence[Sequence[np.ndarray]], gamma: float = 3.0, n_samples: int = N_SAMPLES
) -> tuple[list[ClusterStats], int]:
    """Score clusters of (untransposed) spectra and pick the best one.

    ``q = size / max size + w**(1/gamma) / max(w**(1/gamma))`` where ``w`` is
    the mean absolute deviation of the cluster's mean contour from its own
    mean. The highest ``q`` wins; ties go to the larger, then lower-numbered
    cluster.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not clusters:
        raise ValueError("no clusters")
    length = 2 * n_samples
    sizes, widths, means = [], [], []
    for members in clusters:
        spectra = np.stack([np.asarray(m, dtype=complex) for m in members])
        mean = spectra.mean(axis=0)
        curve = spectrum_to_curve(mean, length)
        sizes.append(len(members))
        widths.append(float(np.abs(curve.mean() - curve).mean()))
        means.append(mean)
    quality = quality_scores(sizes, widths, gamma)
    stats = [
        ClusterStats(i, sizes[i], widths[i], float(quality[i]), means[i]) for i in range(len(clusters))
    ]
    return stats, select_cluster(quality, sizes)


def quality_scores(sizes: Sequence[int], widths: Sequence[float], gamma: float) -> np.ndarray:
    sizes = np.asarray(sizes, dtype=float)
    s = sizes / sizes.max()
    scaled = np.asarray(widths, dtype=float) ** (1.0 / gamma)
    top = scaled.max()
    width_term = scaled / top if top > 0 else np.zeros_like(scaled)
    return s / s.max() + width_term


def select_cluster(quality: Sequence[float], sizes: Sequence[int], rel_tol: float = 1e-12) -> int:
    quality = np.asarray(quality, dtype=float)
    best = quality.max()
    tied = [i for i, q in enumerate(quality) if q >= best - rel_tol * max(1.0, abs(best))]
    return min(tied, key=lambda i: (-sizes[i], i))


@dataclass
class ContourModel:
    feature: str
    selected_cluster: int
    mean_spectrum: np.ndarray
    curve: np.ndarray  # unmirrored, len n_samples
    clusters: list[ClusterStats]
    argmin_cluster: int = 0
    n_samples: int = N_SAMPLES

    def __call__(self, t: float) -> float:
        return contour_at(self, t)


def contour_at(model: ContourModel, t: float) -> float:
    """Selected mean contour at normalized phrase time ``t`` in [0, 1).

    Nearest-sample lookup at mirrored position ``(1 + t) / 2``.
    """
    n = model.n_samples
    index = int(np.floor((1.0 + t) / 2.0 * 2 * n + 0.5))
    index = min(max(index, n), 2 * n - 1)
    return float(model.curve[index - n])


def contour_from_spectrum(feature: str, spectrum: np.ndarray, n_samples: int = N_SAMPLES) -> ContourModel:
    """Contour model with a single cluster built from a given spectrum."""
    spectrum = np.asarray(spectrum, dtype=complex)
    stats, selected = cluster_quality([[spectrum]], 3.0, n_samples)
    curve = spectrum_to_curve(spectrum, 2 * n_samples)[n_samples:]
    return ContourModel(feature, selected, spectrum, curve, stats, selected, n_samples)


def phrase_features(
    phrase: Phrase, feature: str, k: int = DEFAULT_K, n_samples: int = N_SAMPLES
) -> tuple[ContourFeature, ContourFeature]:
    """Return ``(clustering_feature, absolute_feature)`` for one phrase.

    The clustering feature is register-free (pitch curves centered); the
    absolute one keeps the original pitch level for building mean contours.
    """
    ref = f"{phrase.source_id}#{phrase.index_in_song}"
    raw = step_curve(phrase, feature, n_samples)
    absolute = extract_feature(mirror(raw), k, ref)
    if feature == PITCH:
        centered = extract_feature(mirror(center_pitch_curve(phrase, raw)), k, ref)
    else:
        centered = absolute
    return centered, absolute


def learn_contour(
    phrases: Sequence[Phrase],
    feature: str,
    k: int = DEFAULT_K,
    max_clusters: int = 17,
    gamma: float = 3.0,
    n_samples: int = N_SAMPLES,
) -> ContourModel:
    centered, absolute = [], []
    for phrase in phrases:
        try:
            c, a = phrase_features(phrase, feature, k, n_samples)
        except ContourUndefined as exc:
            log.debug("skipping phrase for %s contour: %s", feature, exc)
            continue
        centered.append(c)
        absolute.append(a)
    if not centered:
        raise ContourUndefined(f"no phrase yields a {feature} contour")

    labels = cluster(centered, max_clusters)
    groups = [[] for _ in range(int(labels.max()) + 1)]
    for label, feat in zip(labels, absolute):
        groups[label].append(feat)
    stats, selected = cluster_quality([[f.coeffs for f in g] for g in groups], gamma, n_samples)
    for st, g in zip(stats, groups):
        st.members = [f.phrase_ref for f in g]
    argmin = int(np.argmin([st.quality for st in stats]))
    mean = stats[selected].mean_spectrum
    curve = spectrum_to_curve(mean, 2 * n_samples)[n_samples:]
    return ContourModel(feature, selected, mean, curve, stats, argmin, n_samples)
