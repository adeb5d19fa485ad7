import os
import tempfile
import unittest

import numpy as np

from autograd.gradcheck import gradcheck
from autograd.tensor import Tensor
from errors import ConfigError, DataError
from text.lstm import Embedding, Lstm, TextEncoder, TextRole, embed_tokens, encode_text, prepare_tokens
from text.vocab import END_ID, PAD, PAD_ID, START_ID, UNK, UNK_ID, Vocabulary, build_vocab, tokenize

SEEDS = range(100)


class TestVocabulary(unittest.TestCase):
    def test_threshold_is_strict(self):
        corpus = [["a"] * 5 + ["b"] * 4]
        vocab = build_vocab(corpus, min_count=4)
        self.assertEqual(vocab.words, ["a"])
        self.assertEqual(len(vocab), 5)

    def test_specials_first(self):
        vocab = build_vocab([["x", "y"]], min_count=0)
        self.assertEqual(vocab.decode([0, 1, 2, 3]), ["PAD", "UNK", "START", "END"])
        self.assertEqual(vocab.encode([PAD, UNK]), [PAD_ID, UNK_ID])

    def test_order_frequency_then_lexicographic(self):
        corpus = [["pear", "apple", "fig", "fig", "pear", "kiwi"]]
        vocab = build_vocab(corpus, min_count=0)
        self.assertEqual(vocab.words, ["fig", "pear", "apple", "kiwi"])

    def test_deterministic(self):
        corpus = [["b", "a", "c"], ["a", "c"]]
        self.assertEqual(build_vocab(corpus, 0).words, build_vocab(list(reversed(corpus)), 0).words)

    def test_unknown_maps_to_unk(self):
        vocab = build_vocab([["red", "dog"]], 0)
        self.assertEqual(vocab.encode(["red", "zebra"]), [vocab.encode(["red"])[0], UNK_ID])

    def test_empty_corpus(self):
        with self.assertRaises(DataError):
            build_vocab([], 0)
        with self.assertRaises(DataError):
            build_vocab([[], []], 0)

    def test_specials_rejected_as_words(self):
        with self.assertRaises(DataError):
            Vocabulary(["END", "dog"])

    def test_save_and_load(self):
        vocab = build_vocab([["what", "color", "is", "it"]], 0)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "vocab.json")
            vocab.save(path)
            loaded = Vocabulary.load(path)
        self.assertEqual(loaded.words, vocab.words)
        self.assertEqual(loaded.to_dict(), {"tokens": vocab.words, "min_count": 0})

    def test_tokenize(self):
        self.assertEqual(tokenize("What color is IT"), ["what", "color", "is", "it"])
        self.assertEqual(tokenize("START yes END"), ["START", "yes", "END"])


class TestEmbedding(unittest.TestCase):
    def setUp(self):
        self.embedding = Embedding(6, 3, np.random.default_rng(0))

    def test_lookup_returns_rows(self):
        rows = embed_tokens([4, 1], self.embedding)
        np.testing.assert_array_equal(rows.data, self.embedding.weight.data[[4, 1]])

    def test_pad_only_sequence(self):
        rows = self.embedding([PAD_ID, PAD_ID])
        np.testing.assert_array_equal(rows.data, np.stack([self.embedding.weight.data[PAD_ID]] * 2))

    def test_out_of_range(self):
        with self.assertRaises(DataError):
            self.embedding([6])

    def test_repeated_token_gradient(self):
        tokens = [2, 2, 5, 2]
        weights = np.random.default_rng(1).normal(size=(4, 3))
        result = gradcheck(lambda: (self.embedding(tokens) * weights).sum(), [self.embedding.weight])
        self.assertLess(result.max_rel_error, 1e-6)
        np.testing.assert_allclose(result.analytic[0][2], weights[[0, 1, 3]].sum(axis=0))


class TestPrepareTokens(unittest.TestCase):
    def test_answer_gets_start_and_end(self):
        self.assertEqual(prepare_tokens([7, 8], TextRole.ANSWER), [START_ID, 7, 8, END_ID])

    def test_truncation(self):
        self.assertEqual(len(prepare_tokens(list(range(4, 60)), TextRole.QUESTION)), 20)
        self.assertEqual(len(prepare_tokens(list(range(4, 60)), TextRole.HISTORY_ITEM)), 40)

    def test_trailing_padding_dropped(self):
        self.assertEqual(prepare_tokens([5, 6, PAD_ID, PAD_ID], TextRole.QUESTION), [5, 6])

    def test_answer_padding_stays_outside_markers(self):
        self.assertEqual(prepare_tokens([4, 7, PAD_ID, PAD_ID], TextRole.ANSWER), [START_ID, 4, 7, END_ID])

    def test_empty_after_truncation(self):
        with self.assertRaises(DataError):
            prepare_tokens([PAD_ID], TextRole.QUESTION)
        with self.assertRaises(DataError):
            prepare_tokens([], TextRole.HISTORY_ITEM)


class TestTextEncoder(unittest.TestCase):
    def setUp(self):
        rng = np.random.default_rng(3)
        self.embedding = Embedding(12, 5, rng)
        self.encoder = TextEncoder(TextRole.QUESTION, Lstm(5, 4, 2, rng))

    def test_output_shape(self):
        for tokens in ([4], [4, 5, 6, 7, 8, 9, 10]):
            self.assertEqual(encode_text(tokens, self.encoder, self.embedding).shape, (4,))

    def test_zero_params_give_zero_state(self):
        for p in self.encoder.parameters().values():
            p.data[...] = 0.0
        out = self.encoder([4, 5, 6], self.embedding)
        np.testing.assert_array_equal(out.data, np.zeros(4))

    def test_padding_never_changes_state(self):
        tokens = [4, 7, 9]
        plain = self.encoder(tokens, self.embedding).data
        padded = self.encoder(tokens + [PAD_ID] * 3, self.embedding).data
        np.testing.assert_array_equal(plain, padded)

    def test_answer_padding_never_changes_state(self):
        rng = np.random.default_rng(5)
        encoder = TextEncoder(TextRole.ANSWER, Lstm(5, 4, 1, rng))
        plain = encoder([4, 7], self.embedding).data
        padded = encoder([4, 7, PAD_ID, PAD_ID], self.embedding).data
        np.testing.assert_array_equal(plain, padded)

    def test_batch_masks_shorter_sequences(self):
        short, long = [4, 7], [5, 6, 8, 9, 10]
        batch = self.encoder.encode_batch([short, long], self.embedding).data
        np.testing.assert_allclose(batch[0], self.encoder(short, self.embedding).data, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(batch[1], self.encoder(long, self.embedding).data, rtol=1e-12, atol=1e-15)

    def test_truncated_question_matches_prefix(self):
        tokens = [4 + (i % 8) for i in range(30)]
        full = self.encoder(tokens, self.embedding).data
        prefix = self.encoder(tokens[:20], self.embedding).data
        np.testing.assert_array_equal(full, prefix)

    def test_layer_count_enforced(self):
        with self.assertRaises(ConfigError):
            TextEncoder(TextRole.QUESTION, Lstm(5, 4, 1, np.random.default_rng(0)))
        with self.assertRaises(ConfigError):
            TextEncoder(TextRole.ANSWER, Lstm(5, 4, 2, np.random.default_rng(0)))

    def test_role_layers(self):
        self.assertEqual([r.layers for r in TextRole], [2, 2, 1, 1])


class TestLstmGradients(unittest.TestCase):
    def test_step(self):
        for seed in SEEDS:
            with self.subTest(seed=seed):
                rng = np.random.default_rng(seed)
                lstm = Lstm(3, 4, 1, rng)
                lstm.weights[0].data = rng.normal(scale=0.5, size=lstm.weights[0].shape)
                lstm.biases[0].data = rng.normal(scale=0.5, size=lstm.biases[0].shape)
                x = Tensor(rng.normal(size=(2, 3)), requires_grad=True)
                h = Tensor(rng.normal(size=(2, 4)), requires_grad=True)
                c = Tensor(rng.normal(size=(2, 4)), requires_grad=True)
                wh, wc = rng.normal(size=(2, 4)), rng.normal(size=(2, 4))

                def loss():
                    h_new, c_new = lstm.step(0, x, h, c)
                    return (h_new * wh).sum() + (c_new * wc).sum()

                result = gradcheck(loss, [x, h, c, lstm.weights[0], lstm.biases[0]])
                self.assertLess(result.max_rel_error, 1e-4)

    def test_encoder_embedding_gradient(self):
        rng = np.random.default_rng(11)
        embedding = Embedding(8, 3, rng)
        encoder = TextEncoder(TextRole.ANSWER, Lstm(3, 4, 1, rng))
        encoder.lstm.weights[0].data *= 10.0
        weights = rng.normal(size=4)
        result = gradcheck(lambda: (encoder([5, 6, 5], embedding) * weights).sum(), [embedding.weight])
        self.assertLess(result.max_rel_error, 1e-4)


if __name__ == "__main__":
    unittest.main()
