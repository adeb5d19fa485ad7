from dataclasses import dataclass, field

import numpy as np

from autograd.tensor import Tensor, log_softmax, no_grad, softmax, stack
from errors import ConfigError, DataError
from model.fusion import MfbParams, mfb_fuse_pairs
from model.module import Module, uniform_param, zeros_param
from text.lstm import Lstm, TextRole
from text.vocab import END_ID, START_ID

# Decoder steps per answer, END included
MAX_ANSWER_STEPS = TextRole.ANSWER.max_len


# Single-layer LSTM decoder whose state is fused with the fixed context e^p at every step
class DecoderParams(Module):
    def __init__(self, emb_dim, hidden, mfb_hidden, factors, vocab_size, rng):
        self.lstm = Lstm(emb_dim, hidden, 1, rng)
        self.mfb_g = MfbParams(hidden, mfb_hidden, mfb_hidden, factors, rng)
        # f_g: fused vector to word logits
        self.weight = uniform_param(rng, (mfb_hidden, vocab_size))
        self.bias = zeros_param((vocab_size,))

    @property
    def vocab_size(self):
        return self.weight.shape[1]


# Batched step: rows of h/c [B x d], previous tokens [B]; returns log-probs [B x V], h, c
def _step(h, c, tokens, context, params, embedding):
    x = embedding(np.asarray(tokens, dtype=np.int64))
    h, c = params.lstm.step(0, x, h, c)
    fused = mfb_fuse_pairs(h, context, params.mfb_g)
    return log_softmax(fused @ params.weight + params.bias, axis=1), h, c


# One decoder step for a single answer; returns (distribution [V], h [d], c [d])
def decode_step(h_prev, c_prev, w_prev, context, params, embedding):
    x = embedding(np.asarray([w_prev], dtype=np.int64))
    h, c = params.lstm.step(0, x, h_prev.reshape(1, -1), c_prev.reshape(1, -1))
    fused = mfb_fuse_pairs(h, context, params.mfb_g)
    return softmax(fused @ params.weight + params.bias, axis=1)[0], h[0], c[0]


# h0 is the question's last hidden state, c0 zeros
def initial_state(question_state, rows=1):
    hidden = question_state.shape[-1]
    h = stack([question_state] * rows)
    return h, Tensor(np.zeros((rows, hidden)))


def _teacher_forcing(answers):
    if any(len(a) == 0 for a in answers):
        raise DataError("cannot score an empty answer")
    answers = [list(a)[:MAX_ANSWER_STEPS - 1] for a in answers]
    steps = max(len(a) for a in answers) + 1
    inputs = np.full((len(answers), steps), END_ID, dtype=np.int64)
    targets = np.full((len(answers), steps), END_ID, dtype=np.int64)
    valid = np.zeros((len(answers), steps))
    for row, words in enumerate(answers):
        inputs[row, :len(words) + 1] = [START_ID] + words
        targets[row, :len(words) + 1] = words + [END_ID]
        valid[row, :len(words) + 1] = 1.0
    return inputs, targets, valid


# log p(w_j | w_<j, e^p) for every step of every answer, [C x T]; padded steps are 0
def step_log_probs(answers, question_state, context, params, embedding):
    inputs, targets, valid = _teacher_forcing(answers)
    rows = np.arange(len(answers))
    h, c = initial_state(question_state, len(answers))
    columns = []
    for t in range(inputs.shape[1]):
        log_probs, h, c = _step(h, c, inputs[:, t], context, params, embedding)
        columns.append(log_probs[rows, targets[:, t]] * valid[:, t])
    return stack(columns, axis=1)


# Sum of per-step log-probs including END; the generative primary score per candidate [C]
def answer_log_probs(answers, question_state, context, params, embedding):
    return step_log_probs(answers, question_state, context, params, embedding).sum(axis=1)


def answer_log_prob(answer, question_state, context, params, embedding):
    return answer_log_probs([answer], question_state, context, params, embedding)[0]


# L_G: negative log likelihood of the ground-truth answer
def generative_loss(answer, question_state, context, params, embedding):
    return -answer_log_prob(answer, question_state, context, params, embedding)


@dataclass
class Hypothesis:
    tokens: list
    log_prob: float
    h: np.ndarray = field(repr=False, default=None)
    c: np.ndarray = field(repr=False, default=None)


@dataclass
class BeamState:
    partial: list
    complete: list = field(default_factory=list)

    def best_partial(self):
        return self.partial[0].log_prob if self.partial else -np.inf


def _expand(state, width, context, params, embedding, end_id, banned):
    h = Tensor(np.stack([p.h for p in state.partial]))
    c = Tensor(np.stack([p.c for p in state.partial]))
    last = [p.tokens[-1] if p.tokens else START_ID for p in state.partial]
    log_probs, h, c = _step(h, c, last, context, params, embedding)
    step = log_probs.data.copy()
    if banned:
        step[:, list(banned)] = -np.inf
    totals = np.array([p.log_prob for p in state.partial])[:, None] + step
    vocab = totals.shape[1]
    order = np.argsort(-totals.reshape(-1), kind="stable")[:width]

    partial = []
    for flat in order:
        row, token = divmod(int(flat), vocab)
        total = float(totals[row, token])
        if not np.isfinite(total):
            continue
        tokens = state.partial[row].tokens + [token]
        if token == end_id:
            state.complete.append(Hypothesis(tokens, total))
        else:
            partial.append(Hypothesis(tokens, total, h.data[row], c.data[row]))
    state.partial = partial
    state.complete.sort(key=lambda hyp: -hyp.log_prob)


def beam_search(question_state, context, width, max_len, params, embedding, end_id=END_ID, banned=()):
    """Keep the `width` best extensions per step; END-terminated ones move to the complete list.

    Partials still alive after max_len steps count as complete. Returns up to
    `width` (tokens, log_prob) pairs sorted by cumulative log-prob, best first.
    """
    if width < 1 or max_len < 1:
        raise ConfigError(f"beam width and max_len must be >= 1, got {width} and {max_len}")
    with no_grad():
        h0 = question_state.data.reshape(-1)
        state = BeamState([Hypothesis([], 0.0, h0.copy(), np.zeros_like(h0))])
        for _ in range(max_len):
            if not state.partial:
                break
            _expand(state, width, context, params, embedding, end_id, banned)
            # log-probs only fall, so no partial can overtake a full complete list
            if len(state.complete) >= width and state.best_partial() <= state.complete[width - 1].log_prob:
                break
        pool = list(state.complete)
        if len(pool) < width:
            pool += state.partial[:width - len(pool)]
        pool.sort(key=lambda hyp: -hyp.log_prob)
    return [(hyp.tokens, hyp.log_prob) for hyp in pool[:width]]
