from enum import Enum

import numpy as np

from autograd.tensor import Tensor, concat, sigmoid, take_rows, tanh
from errors import ConfigError, DataError
from model.module import Module, uniform_param, zeros_param
from text.vocab import END_ID, PAD_ID, START_ID


class TextRole(Enum):
    # name, LSTM layers, max tokens
    QUESTION = ("question", 2, 20)
    HISTORY_ITEM = ("history", 2, 40)
    ANSWER = ("answer", 1, 20)
    QA_PAIR = ("qa_pair", 1, 40)

    @property
    def layers(self):
        return self.value[1]

    @property
    def max_len(self):
        return self.value[2]


class Embedding(Module):
    def __init__(self, vocab_size, emb_dim, rng):
        self.weight = uniform_param(rng, (vocab_size, emb_dim))

    def __call__(self, ids):
        return embed_tokens(ids, self)


# Row t of the result is the table row of token t
def embed_tokens(tokens, table):
    return take_rows(table.weight, tokens)


# Stacked LSTM; layer i maps concat(x, h) of size (input + d) to 4d gates (i, f, g, o)
class Lstm(Module):
    def __init__(self, input_dim, hidden, layers, rng):
        self.input_dim = input_dim
        self.hidden = hidden
        self.num_layers = layers
        self.weights = [
            uniform_param(rng, ((input_dim if i == 0 else hidden) + hidden, 4 * hidden)) for i in range(layers)
        ]
        self.biases = [zeros_param((4 * hidden,)) for _ in range(layers)]

    def step(self, layer, x, h, c):
        d = self.hidden
        gates = concat([x, h], axis=1) @ self.weights[layer] + self.biases[layer]
        i = sigmoid(gates[:, :d])
        f = sigmoid(gates[:, d:2 * d])
        g = tanh(gates[:, 2 * d:3 * d])
        o = sigmoid(gates[:, 3 * d:])
        c = f * c + i * g
        return o * tanh(c), c

    # mask[t] is [B x 1]; masked steps keep the previous state
    def run(self, inputs, mask=None, state=None):
        batch = inputs[0].shape[0]
        outputs = inputs
        h = c = None
        for layer in range(self.num_layers):
            if state is not None and layer == 0:
                h, c = state
            else:
                h = Tensor(np.zeros((batch, self.hidden)))
                c = Tensor(np.zeros((batch, self.hidden)))
            layer_outputs = []
            for t, x in enumerate(outputs):
                h_new, c_new = self.step(layer, x, h, c)
                if mask is None:
                    h, c = h_new, c_new
                else:
                    keep = mask[t]
                    h = h_new * keep + h * (1.0 - keep)
                    c = c_new * keep + c * (1.0 - keep)
                layer_outputs.append(h)
            outputs = layer_outputs
        return outputs, (h, c)


def _strip_padding(tokens):
    while tokens and tokens[-1] == PAD_ID:
        tokens.pop()
    return tokens


# Trailing padding goes before answers get START and END; truncation comes last
def prepare_tokens(tokens, role):
    tokens = _strip_padding(list(tokens))
    if role is TextRole.ANSWER:
        tokens = [START_ID] + tokens + [END_ID]
    tokens = _strip_padding(tokens[:role.max_len])
    if not tokens:
        raise DataError(f"empty {role.value[0]} sequence after truncation")
    return tokens


class TextEncoder(Module):
    def __init__(self, role, lstm):
        if lstm.num_layers != role.layers:
            raise ConfigError(f"{role.value[0]} encoder needs {role.layers} LSTM layers, got {lstm.num_layers}")
        self.role = role
        self.lstm = lstm

    # Encode several token-id sequences at once; returns [B x d] final states
    def encode_batch(self, sequences, embedding):
        _, (h, _) = self.run(sequences, embedding)
        return h

    def run(self, sequences, embedding):
        prepared = [prepare_tokens(s, self.role) for s in sequences]
        steps = max(len(s) for s in prepared)
        ids = np.full((len(prepared), steps), PAD_ID, dtype=np.int64)
        valid = np.zeros((steps, len(prepared), 1))
        for row, tokens in enumerate(prepared):
            ids[row, :len(tokens)] = tokens
            valid[:len(tokens), row, 0] = 1.0
        inputs = [embedding(ids[:, t]) for t in range(steps)]
        mask = None if valid.all() else valid
        return self.lstm.run(inputs, mask)

    def __call__(self, tokens, embedding):
        return encode_text(tokens, self, embedding)


# Last hidden state of the top layer for one sequence, shape [d]
def encode_text(tokens, encoder, embedding):
    return encoder.encode_batch([tokens], embedding)[0]
