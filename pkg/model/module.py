import numpy as np

from autograd.tensor import Tensor

# Weight init range
INIT_SCALE = 0.08


def uniform_param(rng, shape, scale=INIT_SCALE):
    return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=True)


def zeros_param(shape):
    return Tensor(np.zeros(shape), requires_grad=True)


# Parameter paths follow attribute names (history_encoder.lstm.w0) in insertion order
class Module:
    def named_parameters(self, prefix=""):
        for name, value in vars(self).items():
            path = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(path + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Tensor) and item.requires_grad:
                        yield f"{path}.{i}", item
                    elif isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{i}.")

    def parameters(self):
        return dict(self.named_parameters())

    def zero_grad(self):
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def state_dict(self):
        return {name: tensor.data.copy() for name, tensor in self.named_parameters()}

    def load_state_dict(self, state):
        params = self.parameters()
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise KeyError(f"state mismatch: missing {missing}, unexpected {unexpected}")
        for name, tensor in params.items():
            if tensor.data.shape != state[name].shape:
                raise ValueError(
                    f"{name}: checkpoint shape {list(state[name].shape)} != model shape {list(tensor.data.shape)}"
                )
            tensor.data[...] = state[name]
