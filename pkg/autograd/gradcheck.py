from dataclasses import dataclass

import numpy as np

from autograd.tensor import no_grad

# Central difference step, float64
STEP = 1e-5


@dataclass
class GradCheckResult:
    max_rel_error: float
    analytic: list
    numeric: list

    def passed(self, tol=1e-4):
        return self.max_rel_error < tol


# Central finite differences of a scalar-valued fn with respect to each input
def numerical_grads(fn, inputs, step=STEP):
    grads = []
    for tensor in inputs:
        grad = np.zeros_like(tensor.data)
        for index in np.ndindex(*tensor.shape):
            original = tensor.data[index]
            with no_grad():
                tensor.data[index] = original + step
                plus = fn().item()
                tensor.data[index] = original - step
                minus = fn().item()
            tensor.data[index] = original
            grad[index] = (plus - minus) / (2.0 * step)
        grads.append(grad)
    return grads


def analytic_grads(fn, inputs):
    for tensor in inputs:
        tensor.zero_grad()
    fn().backward()
    return [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]


def relative_error(analytic, numeric, floor=1e-4):
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale)) if analytic.size else 0.0


# Compare backward() against central differences; fn rebuilds the graph from the mutable inputs on each call
def gradcheck(fn, inputs, step=STEP, floor=1e-4):
    analytic = analytic_grads(fn, inputs)
    numeric = numerical_grads(fn, inputs, step)
    worst = max((relative_error(a, n, floor) for a, n in zip(analytic, numeric)), default=0.0)
    return GradCheckResult(worst, analytic, numeric)
