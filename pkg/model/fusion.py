from autograd.tensor import normalize_power_l2, softmax
from errors import ShapeError
from model.module import Module, uniform_param


# Factor tensors U [d_x x l x k] and V [d_y x l x k] of one MFB block
class MfbParams(Module):
    def __init__(self, x_dim, y_dim, hidden, factors, rng):
        if hidden < 1 or factors < 1:
            raise ShapeError(f"MFB needs l >= 1 and k >= 1, got l={hidden} k={factors}")
        self.U = uniform_param(rng, (x_dim, hidden, factors))
        self.V = uniform_param(rng, (y_dim, hidden, factors))

    @property
    def x_dim(self):
        return self.U.shape[0]

    @property
    def y_dim(self):
        return self.V.shape[0]

    @property
    def hidden(self):
        return self.U.shape[1]

    @property
    def factors(self):
        return self.U.shape[2]


class AttentionParams(Module):
    def __init__(self, hidden, rng):
        self.w = uniform_param(rng, (hidden,))


# rows [a x dim] -> [a x l x k] through one factor tensor
def _project(rows, factors, name):
    dim, hidden, k = factors.shape
    if rows.shape[-1] != dim:
        raise ShapeError(f"MFB {name}: input shape {list(rows.shape)} does not match factor shape {list(factors.shape)}")
    return (rows @ factors.reshape(dim, hidden * k)).reshape(rows.shape[0], hidden, k)


def _rows(x):
    return x.reshape(1, x.shape[0]) if x.ndim == 1 else x


# z = sum_i (U_i^T X) * (V_i^T Y), then power + L2 normalization; returns [l]
def mfb_fuse(X, Y, p, normalize=True):
    x = _project(_rows(X), p.U, "X")
    y = _project(_rows(Y), p.V, "Y")
    z = (x * y).sum(axis=2)[0]
    return normalize_power_l2(z) if normalize else z


# X [d_x] against every column of Y [d_y x phi]; column j of the [l x phi] result is normalized alone
def mfb_fuse_multi(X, Y, p, normalize=True):
    if Y.ndim != 2 or Y.shape[1] < 1:
        raise ShapeError(f"MFB: multi-channel Y must be [d_y x phi], got {list(Y.shape)}")
    x = _project(_rows(X), p.U, "X")
    y = _project(Y.T, p.V, "Y")
    z = (x * y).sum(axis=2).T
    return normalize_power_l2(z, axis=0) if normalize else z


# Row-wise fusion of X [B x d_x] with Y [B x d_y] (or one shared Y [d_y]); returns [B x l]
def mfb_fuse_pairs(X, Y, p, normalize=True):
    x = _project(X, p.U, "X")
    y = _project(_rows(Y), p.V, "Y")
    if y.shape[0] not in (1, x.shape[0]):
        raise ShapeError(f"MFB: {x.shape[0]} X rows cannot pair with {y.shape[0]} Y rows")
    z = (x * y).sum(axis=2)
    return normalize_power_l2(z, axis=1) if normalize else z


# Every row of X [B x d_x] against every column of Y [d_y x phi]; returns [B x phi x l]
def mfb_fuse_grid(X, Y, p, normalize=True):
    x = _project(X, p.U, "X")
    y = _project(Y.T, p.V, "Y")
    batch, hidden, k = x.shape
    z = (x.reshape(batch, 1, hidden, k) * y.reshape(1, y.shape[0], hidden, k)).sum(axis=3)
    return normalize_power_l2(z, axis=2) if normalize else z


# z [l x phi], features [d x phi]; returns (weights [phi], attended [d])
def attend(z, features, p):
    if z.ndim != 2 or features.ndim != 2 or z.shape[1] != features.shape[1]:
        raise ShapeError(f"attend: channel mismatch between z {list(z.shape)} and features {list(features.shape)}")
    if z.shape[0] != p.w.shape[0]:
        raise ShapeError(f"attend: z {list(z.shape)} does not match scoring vector {list(p.w.shape)}")
    weights = softmax(p.w @ z)
    return weights, features @ weights


# Batched attend over z [B x phi x l]; returns weights [B x phi], attended [B x d]
def attend_grid(z, features, p):
    batch, channels, hidden = z.shape
    if channels != features.shape[1] or hidden != p.w.shape[0]:
        raise ShapeError(f"attend: grid {list(z.shape)} does not match features {list(features.shape)}")
    logits = (z.reshape(batch * channels, hidden) @ p.w).reshape(batch, channels)
    weights = softmax(logits, axis=1)
    return weights, weights @ features.T
