import numpy as np

from model.generative import DecoderParams, answer_log_probs, beam_search, generative_loss
from model.module import Module
from model.stages import ContextEncoder, PrimaryHead, SynergyHead, encode_context, primary_score, synergistic_score
from ranking.losses import npair_temperature_loss, one_hot, synergy_cross_entropy
from text.lstm import Embedding, Lstm, TextEncoder, TextRole
from text.vocab import PAD_ID, START_ID, UNK_ID
from training.config import DISCRIMINATIVE


# Both stages over one shared embedding table and context encoder
class DialogNetwork(Module):
    def __init__(self, config, vocab_size, feature_dim, rng=None):
        rng = rng if rng is not None else np.random.default_rng(config.seed)
        d, emb, l, k = config.hidden, config.emb_dim, config.mfb_hidden, config.factors
        self.kind = config.model_kind
        self.tau = config.tau
        self.embedding = Embedding(vocab_size, emb, rng)
        self.context_encoder = ContextEncoder(emb, d, l, k, feature_dim, rng)
        if self.kind == DISCRIMINATIVE:
            self.answer_encoder = TextEncoder(TextRole.ANSWER, Lstm(emb, d, TextRole.ANSWER.layers, rng))
            self.primary_head = PrimaryHead(d, l, rng)
        else:
            self.decoder = DecoderParams(emb, d, l, k, vocab_size, rng)
        self.qa_encoder = TextEncoder(TextRole.QA_PAIR, Lstm(emb, d, TextRole.QA_PAIR.layers, rng))
        self.synergy_head = SynergyHead(d, l, k, rng)

    @property
    def discriminative(self):
        return self.kind == DISCRIMINATIVE

    @property
    def vocab_size(self):
        return self.embedding.weight.shape[0]

    @property
    def feature_dim(self):
        return self.context_encoder.image_encoder.weight.shape[0]

    def context(self, dialog, t):
        turn = dialog.turns[t]
        return encode_context(turn.question, dialog.history(t), dialog.features, self.context_encoder, self.embedding)

    # s^d over all candidates: dot similarity, or the answer log-likelihood for the generative model
    def primary_scores(self, ctx, candidates):
        if self.discriminative:
            answers = self.answer_encoder.encode_batch(candidates, self.embedding)
            return primary_score(ctx, answers, self.primary_head)
        return answer_log_probs(candidates, ctx.question, ctx.fused, self.decoder, self.embedding)

    # L_D (tempered N-pair) or L_G (ground-truth NLL)
    def primary_loss(self, ctx, turn, scores=None):
        if self.discriminative:
            scores = scores if scores is not None else self.primary_scores(ctx, turn.candidates)
            return npair_temperature_loss(scores, turn.gt_index, self.tau)
        return generative_loss(turn.candidates[turn.gt_index], ctx.question, ctx.fused, self.decoder, self.embedding)

    def synergy_scores(self, ctx, question, answers):
        pairs = [list(question) + list(answer) for answer in answers]
        qa = self.qa_encoder.encode_batch(pairs, self.embedding)
        return synergistic_score(qa, ctx.attended_history, ctx.image, self.synergy_head)

    # L_R over the selected set, one-hot on the ground truth's position in it
    def synergy_loss(self, scores, gt_position):
        return synergy_cross_entropy(scores, one_hot(scores.shape[0], gt_position))

    # Beam candidates for the generative model; PAD, UNK and START are never emitted
    def generate(self, ctx, width, max_len):
        return beam_search(
            ctx.question, ctx.fused, width, max_len, self.decoder, self.embedding,
            banned=(PAD_ID, UNK_ID, START_ID),
        )
