"""Randomized rounding of fractional caching vectors via K sample paths.

The ensemble keeps K synchronized binary cache vectors, each carrying
probability mass 1/K; the policy follows one path, chosen uniformly once
per run.  After every update the column means equal the quantized target
probabilities exactly, every path respects the capacity M, and the number
of per-path insertions stays proportional to the movement of the targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


def rng_stream(seed: int, label: str) -> np.random.Generator:
    """Independent, reproducible generator for (seed, label).

    Identical arguments yield bit-identical streams regardless of creation
    order, which keeps whole runs replayable from a single seed.
    """
    entropy = [seed & 0xFFFFFFFFFFFFFFFF] + list(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass
class SamplePathEnsemble:
    """K binary cache vectors of width N, capacity M per path, plus the
    index of the path the policy follows."""

    K: int
    M: int
    S: np.ndarray        # (K, N) int8 in {0, 1}
    k_star: int          # 0-based row the policy follows

    @classmethod
    def initial(cls, K: int, N: int, M: int, k_star: int) -> "SamplePathEnsemble":
        if K < 1:
            raise ValueError("K must be a positive integer")
        if not (0 <= k_star < K):
            raise ValueError("k_star outside [0, K)")
        if not (1 <= M <= N):
            raise ValueError(f"M={M} outside [1, N={N}]")
        return cls(K=K, M=M, S=np.zeros((K, N), dtype=np.int8), k_star=k_star)

    @property
    def N(self) -> int:
        return int(self.S.shape[1])

    def column_counts(self) -> np.ndarray:
        return self.S.sum(axis=0, dtype=np.int64)


def quantize_probs(p, K: int) -> np.ndarray:
    """Round each probability down to a multiple of 1/K.

    Flooring (rather than rounding) keeps the quantized sum at or below the
    original sum, which is what guarantees the capacity rebalance below can
    always find a deficit path.  A 1e-9 nudge absorbs float noise on values
    that are already exact multiples.
    """
    p = np.asarray(p, dtype=float)
    counts = np.floor(p * K + 1e-9)
    return np.clip(counts, 0, K) / K


def update_ensemble(ensemble: SamplePathEnsemble, p_quant,
                    rng: np.random.Generator) -> SamplePathEnsemble:
    """Advance the ensemble one slot so column means match ``p_quant``.

    For each service whose quantized probability rose, the extra copies go
    to uniformly chosen paths currently lacking it; drops are symmetric.
    Paths left above capacity then hand a uniformly chosen surplus service
    to a uniformly chosen deficit path until all rows fit.  All randomness
    comes from ``rng``; overflow rows are processed lowest-index first so a
    run is a pure function of its seed.
    """
    K, M = ensemble.K, ensemble.M
    raw = np.asarray(p_quant, dtype=float) * K
    target = np.rint(raw).astype(np.int64)
    if raw.shape != (ensemble.N,):
        raise ValueError("p_quant length differs from the ensemble width")
    if np.any(np.abs(raw - target) > 1e-6):
        raise ValueError("targets are not multiples of 1/K; apply quantize_probs first")
    if np.any(target < 0) or np.any(target > K):
        raise ValueError("quantized probabilities outside [0, 1]")
    if target.sum() > K * M:
        raise ValueError("quantized load exceeds K * M; quantize_probs not applied?")
    S = ensemble.S.copy()
    current = S.sum(axis=0, dtype=np.int64)

    for n in np.flatnonzero(target != current):
        delta = int(target[n] - current[n])
        if delta > 0:
            vacant = np.flatnonzero(S[:, n] == 0)
            if vacant.size < delta:
                raise RuntimeError("more additions requested than vacant paths; "
                                   "ensemble invariants are broken")
            S[rng.choice(vacant, size=delta, replace=False), n] = 1
        else:
            occupied = np.flatnonzero(S[:, n] == 1)
            S[rng.choice(occupied, size=-delta, replace=False), n] = 0

    # Capacity repair: total load K * sum(pQ) <= K * M, so an overfull row
    # implies an underfull one, and every move strictly shrinks the total
    # overflow; hence at most K * M moves.
    row_sums = S.sum(axis=1, dtype=np.int64)
    moves = 0
    while True:
        over = np.flatnonzero(row_sums > M)
        if over.size == 0:
            break
        k = int(over[0])
        deficits = np.flatnonzero(row_sums < M)
        if deficits.size == 0:
            raise RuntimeError("no deficit path during rebalance; "
                               "ensemble invariants are broken")
        k2 = int(rng.choice(deficits))
        movable = np.flatnonzero((S[k2] == 0) & (S[k] == 1))
        n2 = int(rng.choice(movable))
        S[k, n2] = 0
        S[k2, n2] = 1
        row_sums[k] -= 1
        row_sums[k2] += 1
        moves += 1
        if moves > K * M:
            raise RuntimeError("rebalance failed to terminate")

    return SamplePathEnsemble(K=K, M=M, S=S, k_star=ensemble.k_star)


def expected_switching(ensembles) -> float:
    """Ensemble-average insertion count over a run.

    (1/K) * sum over slots, paths and services of positive flips, starting
    from the all-empty ensemble.
    """
    total = 0
    prev = None
    K = None
    for ens in ensembles:
        S = ens.S if isinstance(ens, SamplePathEnsemble) else np.asarray(ens)
        if prev is None:
            prev = np.zeros_like(S)
            K = ens.K if isinstance(ens, SamplePathEnsemble) else S.shape[0]
        total += int(np.maximum(S - prev, 0).sum())
        prev = S
    return 0.0 if K is None else total / K


def decision_at(ensemble: SamplePathEnsemble) -> np.ndarray:
    """The binary cache vector of the followed path."""
    return ensemble.S[ensemble.k_star].copy()


# ---------------------------------------------------------------------------
# Optional per-slot ensemble dump for debugging: row-major K x N bits per
# frame, packed little-endian within bytes, frames appended in slot order.
# ---------------------------------------------------------------------------

def pack_ensemble(S: np.ndarray) -> bytes:
    return np.packbits(np.asarray(S, dtype=np.uint8).reshape(-1),
                       bitorder="little").tobytes()


def read_ensemble_frames(path, K: int, N: int) -> list[np.ndarray]:
    frame_bytes = (K * N + 7) // 8
    raw = Path(path).read_bytes()
    if len(raw) % frame_bytes:
        raise ValueError("dump length is not a whole number of frames")
    frames = []
    for off in range(0, len(raw), frame_bytes):
        bits = np.unpackbits(np.frombuffer(raw[off:off + frame_bytes], dtype=np.uint8),
                             bitorder="little")[: K * N]
        frames.append(bits.reshape(K, N).astype(np.int8))
    return frames
