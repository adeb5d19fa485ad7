from dataclasses import dataclass

import numpy as np

from errors import ConfigError, DataError

TRAIN = "train"
TEST = "test"


@dataclass
class StageScores:
    primary: np.ndarray     # s^d over all C candidates
    selected: list          # B_t, indices into the candidate set
    synergy: np.ndarray     # s^r over B_t, same order as selected
    ranking: list           # final order over C, best first


# Descending score order; equal scores keep ascending candidate index
def rank_by_scores(scores):
    scores = np.asarray(scores, dtype=np.float64)
    return [int(i) for i in np.argsort(-scores, kind="stable")]


def select_candidates(scores, n, m, mode, gt=None, rng=None):
    """Pick B_t for the synergistic stage.

    test: the top n by primary score.
    train: the ground truth plus n - 1 drawn without replacement from the top
    m (ground truth excluded), returned in shuffled order.
    m is capped at the candidate count; n may not exceed m.
    """
    scores = np.asarray(scores, dtype=np.float64)
    count = scores.shape[0]
    if n > m:
        raise ConfigError(f"N={n} cannot exceed M={m}")
    m = min(m, count)
    n = min(n, m)
    order = rank_by_scores(scores)
    if mode == TEST:
        return order[:n]
    if mode != TRAIN:
        raise ConfigError(f"unknown selection mode {mode!r}")
    if gt is None:
        raise DataError("train-mode selection needs the ground-truth index")
    if rng is None:
        raise ConfigError("train-mode selection needs a random generator")
    # gt is forced in even when it falls outside the top m
    pool = [i for i in order[:m] if i != gt]
    sampled = rng.choice(len(pool), size=n - 1, replace=False) if n > 1 else []
    chosen = [int(gt)] + [pool[i] for i in sampled]
    return [chosen[i] for i in rng.permutation(len(chosen))]


# Selected candidates in synergy order take ranks 1..N; the rest follow in primary order
def fuse_rankings(primary, selected, synergy):
    primary = np.asarray(primary, dtype=np.float64)
    synergy = np.asarray(synergy, dtype=np.float64)
    count = primary.shape[0]
    selected = [int(i) for i in selected]
    if len(set(selected)) != len(selected):
        raise DataError(f"selected candidates overlap: {selected}")
    if any(i < 0 or i >= count for i in selected):
        raise DataError(f"selected index out of range for {count} candidates: {selected}")
    if len(selected) != synergy.shape[0]:
        raise DataError(f"{len(selected)} selected candidates but {synergy.shape[0]} synergy scores")
    head = sorted(range(len(selected)), key=lambda j: (-synergy[j], selected[j]))
    chosen = set(selected)
    tail = [i for i in rank_by_scores(primary) if i not in chosen]
    return [selected[j] for j in head] + tail
