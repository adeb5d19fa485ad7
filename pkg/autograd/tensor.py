from contextlib import contextmanager

import numpy as np

from errors import DataError, GraphError, ShapeError

_grad_state = {"enabled": True}


# Disable graph recording, used for evaluation and beam search
@contextmanager
def no_grad():
    previous = _grad_state["enabled"]
    _grad_state["enabled"] = False
    try:
        yield
    finally:
        _grad_state["enabled"] = previous


def is_grad_enabled():
    return _grad_state["enabled"]


class Tensor:
    """Dense float64 array with an optional reverse-mode graph node.

    Leaves are created by the user; every differentiable op below returns a
    new Tensor that remembers its inputs and a backward rule mapping the
    output gradient to one gradient per input.
    """

    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.op = "leaf"
        self._parents = ()
        self._backward = None

    @classmethod
    def _wrap(cls, array):
        out = cls.__new__(cls)
        out.data = np.asarray(array, dtype=np.float64)
        out.requires_grad = False
        out.grad = None
        out.op = "leaf"
        out._parents = ()
        out._backward = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def T(self):
        return transpose(self)

    def is_leaf(self):
        return self._backward is None

    def item(self):
        if self.data.size != 1:
            _raise_non_scalar(self)
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={list(self.shape)}, op={self.op}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def _raise_non_scalar(tensor):
    raise GraphError(f"expected a scalar tensor, got shape {list(tensor.shape)}")


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor._wrap(np.asarray(value, dtype=np.float64))


# Record a new node when any input takes part in differentiation
def _result(data, parents, op, backward_fn):
    out = Tensor._wrap(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.op = op
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


# Sum a broadcast gradient back down to the input's shape
def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_broadcast(a, b, op):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {list(a.shape)} and {list(b.shape)} do not broadcast")


# Recorded operations reachable from one output, inputs before consumers
class ComputeGraph:
    def __init__(self, nodes):
        self.nodes = nodes

    @classmethod
    def trace(cls, output):
        order = []
        visited = set()
        stack = [(output, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order)

    # (op, input ids, output id) for every recorded entry
    def entries(self):
        return [(node.op, [id(p) for p in node._parents], id(node)) for node in self.nodes]

    def backward(self, output):
        if output.data.size != 1:
            _raise_non_scalar(output)
        if not output.requires_grad:
            raise GraphError("output is detached: no input requires a gradient")
        if not self.nodes or self.nodes[-1] is not output:
            raise GraphError("graph was traced from a different output")

        grads = {id(output): np.ones_like(output.data)}
        for node in reversed(self.nodes):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node.is_leaf():
                node.grad = np.array(grad, copy=True) if node.grad is None else node.grad + grad
                continue
            for parent, contribution in zip(node._parents, node._backward(grad)):
                if contribution is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = contribution if key not in grads else grads[key] + contribution


def backward(output, graph=None):
    if not isinstance(output, Tensor):
        raise GraphError("backward expects a Tensor output")
    if output.data.size != 1:
        _raise_non_scalar(output)
    if not output.requires_grad:
        raise GraphError("output is detached: no input requires a gradient")
    graph = graph or ComputeGraph.trace(output)
    graph.backward(output)
    return graph


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def backward_fn(grad):
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)

    return _result(a.data + b.data, (a, b), "add", backward_fn)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")

    def backward_fn(grad):
        return _unbroadcast(grad * b.data, a.shape), _unbroadcast(grad * a.data, b.shape)

    return _result(a.data * b.data, (a, b), "mul", backward_fn)


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "div")

    def backward_fn(grad):
        return (
            _unbroadcast(grad / b.data, a.shape),
            _unbroadcast(-grad * a.data / (b.data * b.data), b.shape),
        )

    return _result(a.data / b.data, (a, b), "div", backward_fn)


def neg(a):
    a = as_tensor(a)
    return _result(-a.data, (a,), "neg", lambda grad: (-grad,))


# C[i,j] = sum_p A[i,p] B[p,j]; 1-d operands act as a row (left) or column (right)
def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: shapes {list(a.shape)} and {list(b.shape)} are not aligned")

    def backward_fn(grad):
        a2 = a.data if a.ndim == 2 else a.data[None, :]
        b2 = b.data if b.ndim == 2 else b.data[:, None]
        g2 = grad.reshape(a2.shape[0], b2.shape[1])
        return (g2 @ b2.T).reshape(a.shape), (a2.T @ g2).reshape(b.shape)

    return _result(a.data @ b.data, (a, b), "matmul", backward_fn)


def tensor_sum(a, axis=None, keepdims=False):
    a = as_tensor(a)

    def backward_fn(grad):
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, a.shape),)

    return _result(a.data.sum(axis=axis, keepdims=keepdims), (a,), "sum", backward_fn)


def reshape(a, shape):
    a = as_tensor(a)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {list(a.shape)} as {list(shape)}")
    return _result(data, (a,), "reshape", lambda grad: (grad.reshape(a.shape),))


def transpose(a, axes=None):
    a = as_tensor(a)
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _result(a.data.transpose(axes), (a,), "transpose", lambda grad: (grad.transpose(inverse),))


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[list(t.shape) for t in tensors]}")
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward_fn(grad):
        return tuple(np.split(grad, splits, axis=axis))

    return _result(data, tensors, "concat", backward_fn)


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        data = np.stack([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(f"stack: incompatible shapes {[list(t.shape) for t in tensors]}")

    def backward_fn(grad):
        return tuple(np.take(grad, i, axis=axis) for i in range(len(tensors)))

    return _result(data, tensors, "stack", backward_fn)


def getitem(a, index):
    a = as_tensor(a)

    def backward_fn(grad):
        full = np.zeros_like(a.data)
        np.add.at(full, index, grad)
        return (full,)

    return _result(a.data[index], (a,), "getitem", backward_fn)


# Gather rows of a table; repeated ids accumulate into the same row
def take_rows(table, ids):
    ids = np.asarray(ids, dtype=np.int64)
    rows = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= rows):
        raise DataError(f"row index out of range for table of {rows} rows: {ids.tolist()}")

    def backward_fn(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, grad)
        return (full,)

    return _result(table.data[ids], (table,), "take_rows", backward_fn)


def tanh(a):
    a = as_tensor(a)
    y = np.tanh(a.data)
    return _result(y, (a,), "tanh", lambda grad: (grad * (1.0 - y * y),))


def sigmoid(a):
    a = as_tensor(a)
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _result(y, (a,), "sigmoid", lambda grad: (grad * y * (1.0 - y),))


def exp(a):
    a = as_tensor(a)
    y = np.exp(a.data)
    return _result(y, (a,), "exp", lambda grad: (grad * y,))


def log(a):
    a = as_tensor(a)
    return _result(np.log(a.data), (a,), "log", lambda grad: (grad / a.data,))


def _check_axis(a, axis, op):
    if a.ndim == 0 or a.shape[axis] == 0:
        raise ShapeError(f"{op}: empty axis {axis} in shape {list(a.shape)}")


def softmax(a, axis=-1):
    a = as_tensor(a)
    _check_axis(a, axis, "softmax")
    shifted = np.exp(a.data - a.data.max(axis=axis, keepdims=True))
    y = shifted / shifted.sum(axis=axis, keepdims=True)

    def backward_fn(grad):
        return (y * (grad - (grad * y).sum(axis=axis, keepdims=True)),)

    return _result(y, (a,), "softmax", backward_fn)


def log_softmax(a, axis=-1):
    a = as_tensor(a)
    _check_axis(a, axis, "log_softmax")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    y = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward_fn(grad):
        return (grad - np.exp(y) * grad.sum(axis=axis, keepdims=True),)

    return _result(y, (a,), "log_softmax", backward_fn)


def logsumexp(a, axis=None):
    a = as_tensor(a)
    if a.size == 0:
        raise ShapeError("logsumexp: empty input")
    peak = a.data.max(axis=axis, keepdims=True)
    total = np.exp(a.data - peak).sum(axis=axis, keepdims=True)
    value = peak + np.log(total)
    weights = np.exp(a.data - value)
    data = value.reshape(()) if axis is None else np.squeeze(value, axis=axis)

    def backward_fn(grad):
        grad = np.asarray(grad)
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (grad * weights,)

    return _result(data, (a,), "logsumexp", backward_fn)


# sign(z)|z|^0.5; the gradient at z = 0 is taken as 0
def signed_sqrt(a):
    a = as_tensor(a)
    magnitude = np.sqrt(np.abs(a.data))
    y = np.sign(a.data) * magnitude

    def backward_fn(grad):
        slope = np.divide(0.5, magnitude, out=np.zeros_like(magnitude), where=magnitude > 0)
        return (grad * slope,)

    return _result(y, (a,), "signed_sqrt", backward_fn)


def l2_normalize(a, axis=None, eps=1e-12):
    a = as_tensor(a)
    norm = np.sqrt((a.data * a.data).sum(axis=axis, keepdims=True))
    denom = np.maximum(norm, eps)
    y = a.data / denom
    active = norm > eps

    def backward_fn(grad):
        projection = (grad * y).sum(axis=axis, keepdims=True)
        return ((grad - np.where(active, y * projection, 0.0)) / denom,)

    return _result(y, (a,), "l2_normalize", backward_fn)


# Power normalization then L2 normalization; axis=0 normalizes each column
def normalize_power_l2(z, eps=1e-12, axis=None):
    return l2_normalize(signed_sqrt(z), axis=axis, eps=eps)
