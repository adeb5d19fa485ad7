import numpy as np

from autograd.tensor import as_tensor, log_softmax, logsumexp
from errors import ConfigError, DataError, ShapeError

LABEL_TOLERANCE = 1e-6


# log sum_i exp((s_i - s_gt) / tau) over all C candidates, ground truth included
def npair_temperature_loss(scores, gt, tau):
    scores = as_tensor(scores)
    if tau <= 0:
        raise ConfigError(f"temperature must be positive, got {tau}")
    if scores.ndim != 1 or scores.shape[0] < 2:
        raise ShapeError(f"N-pair loss needs a score vector of at least 2 candidates, got {list(scores.shape)}")
    if not 0 <= gt < scores.shape[0]:
        raise DataError(f"ground-truth index {gt} outside {scores.shape[0]} candidates")
    margins = (scores - scores[gt]) * (1.0 / tau)
    return logsumexp(margins)


# -sum_j y_j log softmax(s)_j; labels may be one-hot or soft but must sum to 1
def synergy_cross_entropy(scores, labels):
    scores = as_tensor(scores)
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != scores.shape:
        raise ShapeError(f"labels {list(labels.shape)} do not match scores {list(scores.shape)}")
    if (labels < 0).any():
        raise DataError("labels must be nonnegative")
    if abs(labels.sum() - 1.0) > LABEL_TOLERANCE:
        raise DataError(f"labels must sum to 1, got {labels.sum()}")
    return -(log_softmax(scores) * labels).sum()


def one_hot(size, index):
    labels = np.zeros(size)
    labels[index] = 1.0
    return labels
