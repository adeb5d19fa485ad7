import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from errors import DataError, ShapeError
from ranking.selection import rank_by_scores


@dataclass
class TurnRanking:
    ranking: list               # candidate indices, rank 1 first
    gt_index: int
    relevance: list = None

    def __post_init__(self):
        if sorted(self.ranking) != list(range(len(self.ranking))):
            raise DataError(f"ranking is not a permutation of 0..{len(self.ranking) - 1}")


@dataclass
class RankHits:
    rr: float
    hit1: int
    hit5: int
    hit10: int
    rank: int


@dataclass
class MetricsReport:
    ndcg: float
    mrr: float
    r1: float
    r5: float
    r10: float
    mean_rank: float
    turns: int
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=4)


def rank_metrics(turn):
    if turn.gt_index not in turn.ranking:
        raise DataError(f"ground truth {turn.gt_index} absent from ranking")
    rank = turn.ranking.index(turn.gt_index) + 1
    return RankHits(1.0 / rank, int(rank <= 1), int(rank <= 5), int(rank <= 10), rank)


def _dcg(gains):
    return sum(g / math.log2(i + 2) for i, g in enumerate(gains))


# DCG@k of the submitted order over DCG@k of the ideal order, k = #(relevance > 0)
def ndcg(turn):
    if turn.relevance is None:
        raise DataError("NDCG needs a relevance vector")
    relevance = np.asarray(turn.relevance, dtype=np.float64)
    if relevance.shape[0] != len(turn.ranking):
        raise ShapeError(f"{relevance.shape[0]} relevances for {len(turn.ranking)} candidates")
    k = int((relevance > 0).sum())
    if k == 0:
        return 1.0
    submitted = [relevance[i] for i in turn.ranking[:k]]
    ideal = sorted(relevance, reverse=True)[:k]
    return _dcg(submitted) / _dcg(ideal)


# Average per-turn metrics; NDCG only over turns that carry relevance
def aggregate(turns):
    if not turns:
        raise DataError("no turns to evaluate")
    hits = [rank_metrics(t) for t in turns]
    graded = [ndcg(t) for t in turns if t.relevance is not None]
    count = len(hits)
    return MetricsReport(
        ndcg=float(sum(graded) / len(graded)) if graded else float("nan"),
        mrr=sum(h.rr for h in hits) / count,
        r1=sum(h.hit1 for h in hits) / count,
        r5=sum(h.hit5 for h in hits) / count,
        r10=sum(h.hit10 for h in hits) / count,
        mean_rank=sum(h.rank for h in hits) / count,
        turns=count,
    )


# Elementwise sum of every model's scores for one turn
def ensemble_scores(score_vectors):
    vectors = [np.asarray(v, dtype=np.float64) for v in score_vectors]
    if not vectors:
        raise DataError("nothing to ensemble")
    lengths = {v.shape for v in vectors}
    if len(lengths) != 1:
        raise ShapeError(f"score vectors differ in length: {sorted(s[0] for s in lengths)}")
    total = np.zeros_like(vectors[0])
    for v in vectors:
        total = total + v
    return total


def ensemble_ranking(score_vectors):
    return rank_by_scores(ensemble_scores(score_vectors))


@dataclass
class LossShareCurve:
    tau: float
    edges: list         # bin edges over the margin s_i - s_gt
    cumulative: list    # normalized cumulative loss at each bin's right edge
    easy_share: float   # share carried by margins below 0

    def to_dict(self):
        return asdict(self)


# Share of N-pair loss mass exp(margin / tau) per margin bin; easy_share covers margins < 0
def loss_share_diagnostic(margins, tau, bins=20):
    margins = np.asarray(margins, dtype=np.float64).reshape(-1)
    if margins.size == 0:
        return LossShareCurve(tau, [], [], 0.0)
    shifted = margins / tau
    weights = np.exp(shifted - shifted.max())
    weights = weights / weights.sum()
    easy = float(weights[margins < 0].sum())
    low, high = float(margins.min()), float(margins.max())
    if low == high:
        return LossShareCurve(tau, [low, high], [1.0], easy)
    edges = np.linspace(low, high, bins + 1)
    mass, _ = np.histogram(margins, bins=edges, weights=weights)
    cumulative = np.minimum(np.cumsum(mass), 1.0)
    cumulative[-1] = 1.0
    return LossShareCurve(tau, edges.tolist(), cumulative.tolist(), easy)
