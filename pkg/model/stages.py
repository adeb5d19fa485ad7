from dataclasses import dataclass

import numpy as np

from autograd.tensor import Tensor, concat, stack, tanh
from errors import ShapeError
from model.fusion import (
    AttentionParams,
    MfbParams,
    attend,
    attend_grid,
    mfb_fuse,
    mfb_fuse_grid,
    mfb_fuse_multi,
    mfb_fuse_pairs,
)
from model.module import Module, uniform_param, zeros_param
from text.lstm import Lstm, TextEncoder, TextRole


@dataclass
class EncodedContext:
    question: Tensor            # m^q_t [d]
    history: Tensor             # U [d x t]
    history_weights: Tensor     # alpha^h_t [t]
    attended_history: Tensor    # m^h_t [d]
    image: Tensor               # V [d x n]
    image_weights: Tensor       # [n]
    attended_image: Tensor      # m^v_t [d]
    fused: Tensor               # e^p_t [l]

    @property
    def turn(self):
        return self.history.shape[1]

    @property
    def objects(self):
        return self.image.shape[1]


# Linear + tanh over detected-object features; stands in for the CNN
class ImageEncoder(Module):
    def __init__(self, feature_dim, hidden, rng):
        self.weight = uniform_param(rng, (feature_dim, hidden))
        self.bias = zeros_param((hidden,))

    def __call__(self, features):
        if features.ndim != 2 or features.shape[1] != self.weight.shape[0]:
            raise ShapeError(f"object features {list(features.shape)} do not match encoder {list(self.weight.shape)}")
        return tanh(features @ self.weight + self.bias).T


class ContextEncoder(Module):
    def __init__(self, emb_dim, hidden, mfb_hidden, factors, feature_dim, rng):
        self.question_encoder = TextEncoder(TextRole.QUESTION, Lstm(emb_dim, hidden, TextRole.QUESTION.layers, rng))
        self.history_encoder = TextEncoder(
            TextRole.HISTORY_ITEM, Lstm(emb_dim, hidden, TextRole.HISTORY_ITEM.layers, rng)
        )
        self.image_encoder = ImageEncoder(feature_dim, hidden, rng)
        self.mfb_h = MfbParams(hidden, hidden, mfb_hidden, factors, rng)
        self.att_h = AttentionParams(mfb_hidden, rng)
        self.mfb_v = MfbParams(2 * hidden, hidden, mfb_hidden, factors, rng)
        self.att_v = AttentionParams(mfb_hidden, rng)
        self.mfb_e = MfbParams(2 * hidden, hidden, mfb_hidden, factors, rng)


# History attention, then image attention queried by [m^q : m^h], then the MFB_e fusion
# history is a non-empty list of token-id lists, caption first
def encode_context(question, history, features, encoder, embedding):
    if not history:
        raise ShapeError("history must hold at least the caption")
    m_q = encoder.question_encoder(question, embedding)
    U = encoder.history_encoder.encode_batch(history, embedding).T
    z_h = mfb_fuse_multi(m_q, U, encoder.mfb_h)
    alpha_h, m_h = attend(z_h, U, encoder.att_h)

    V = encoder.image_encoder(features if isinstance(features, Tensor) else Tensor(np.asarray(features)))
    query = concat([m_q, m_h])
    z_v = mfb_fuse_multi(query, V, encoder.mfb_v)
    alpha_v, m_v = attend(z_v, V, encoder.att_v)
    e_p = mfb_fuse(query, m_v, encoder.mfb_e)
    return EncodedContext(m_q, U, alpha_h, m_h, V, alpha_v, m_v, e_p)


# f_d: one-layer MLP with tanh from answer space d to the fused space l
class PrimaryHead(Module):
    def __init__(self, hidden, mfb_hidden, rng):
        self.weight = uniform_param(rng, (hidden, mfb_hidden))
        self.bias = zeros_param((mfb_hidden,))


# s^d_i = e^p . tanh(W m^a_i + b); answer_encodings holds one row per candidate [C x d]
def primary_score(ctx, answer_encodings, head):
    projected = tanh(answer_encodings @ head.weight + head.bias)
    return projected @ ctx.fused


class SynergyHead(Module):
    def __init__(self, hidden, mfb_hidden, factors, rng):
        self.mfb_a = MfbParams(2 * hidden, hidden, mfb_hidden, factors, rng)
        self.att_r = AttentionParams(mfb_hidden, rng)
        self.mfb_r = MfbParams(2 * hidden, hidden, mfb_hidden, factors, rng)
        # f_r: linear to a scalar logit
        self.weight = uniform_param(rng, (mfb_hidden,))
        self.bias = zeros_param((1,))


# Re-score N question-answer encodings [N x d]; each gets its own attention map over the shared image V
def synergistic_score(qa_encodings, attended_history, image, head):
    count = qa_encodings.shape[0]
    history = stack([attended_history] * count)
    query = concat([qa_encodings, history], axis=1)
    z = mfb_fuse_grid(query, image, head.mfb_a)
    _, m_r = attend_grid(z, image, head.att_r)
    e_r = mfb_fuse_pairs(query, m_r, head.mfb_r)
    return e_r @ head.weight + head.bias


# One candidate at a time; reference for the batched path
def synergistic_score_single(qa_encoding, attended_history, image, head):
    query = concat([qa_encoding, attended_history])
    z = mfb_fuse_multi(query, image, head.mfb_a)
    _, m_r = attend(z, image, head.att_r)
    e_r = mfb_fuse(query, m_r, head.mfb_r)
    return e_r @ head.weight + head.bias[0]
