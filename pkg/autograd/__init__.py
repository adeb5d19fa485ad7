from autograd.tensor import (
    ComputeGraph,
    Tensor,
    add,
    as_tensor,
    backward,
    concat,
    exp,
    getitem,
    is_grad_enabled,
    l2_normalize,
    log,
    log_softmax,
    logsumexp,
    matmul,
    mul,
    no_grad,
    normalize_power_l2,
    reshape,
    sigmoid,
    signed_sqrt,
    softmax,
    stack,
    take_rows,
    tanh,
    tensor_sum,
    transpose,
)
