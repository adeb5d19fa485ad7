import json
import os
import tempfile
import unittest

import numpy as np

from data.records import DialogRecord, dataset_digest, encode_dialog, read_jsonl, vocab_corpus, write_jsonl
from data.synthetic import (
    FEATURE_DIM,
    SyntheticSpec,
    answer_forms,
    answer_oracle,
    answer_pool,
    encode_objects,
    generate_synthetic_dataset,
    question_tokens,
)
from errors import ConfigError, DataError
from text.vocab import UNK_ID, build_vocab


def is_pronoun(question):
    return "it" in question or "them" in question


def sample_record():
    return {
        "dialog_id": "d1",
        "object_features": [[1.0, 0.0], [0.0, 1.0]],
        "caption": ["there", "is", "a", "red", "dog"],
        "turns": [
            {
                "question": ["what", "color", "is", "the", "dog"],
                "answer": ["red"],
                "candidates": [["blue"], ["red"], ["the", "dog", "is", "red"]],
                "gt_index": 1,
                "relevance": [0.0, 1.0, 0.5],
            }
        ],
    }


class TestSyntheticDataset(unittest.TestCase):
    def setUp(self):
        self.spec = SyntheticSpec(num_dialogs=6, num_turns=4, num_candidates=20, num_objects=3)
        self.records = generate_synthetic_dataset(self.spec, seed=7)

    def test_same_seed_same_dataset(self):
        again = generate_synthetic_dataset(self.spec, seed=7)
        self.assertEqual([r.to_dict() for r in again], [r.to_dict() for r in self.records])
        other = generate_synthetic_dataset(self.spec, seed=8)
        self.assertNotEqual(dataset_digest(other), dataset_digest(self.records))

    def test_shapes(self):
        self.assertEqual(len(self.records), 6)
        self.assertEqual(self.records[0].dialog_id, "dialog-00000")
        for record in self.records:
            self.assertEqual(np.asarray(record.object_features).shape, (3, FEATURE_DIM))
            self.assertEqual(len(record.turns), 4)
            for turn in record.turns:
                self.assertEqual(len(turn.candidates), 20)
                self.assertEqual(len(turn.relevance), 20)

    def test_candidates(self):
        for record in self.records:
            for turn in record.turns:
                self.assertEqual(turn.candidates[turn.gt_index], turn.answer)
                self.assertEqual(turn.relevance[turn.gt_index], 1.0)
                self.assertEqual(sorted(set(turn.relevance)), [0.0, 0.5, 1.0])
                self.assertEqual(len({tuple(c) for c in turn.candidates}), 20)

    def test_answers_follow_the_oracle(self):
        for record in self.records:
            referent = None
            for turn in record.turns:
                answer, referent = answer_oracle(record.scene, turn.question, referent)
                self.assertEqual(answer, turn.answer)

    def test_first_question_names_its_object(self):
        for record in self.records:
            self.assertFalse(is_pronoun(record.turns[0].question))

    def test_pronoun_fraction(self):
        never = generate_synthetic_dataset(SyntheticSpec(num_dialogs=4, num_turns=5, pronoun_fraction=0.0), 1)
        self.assertFalse(any(is_pronoun(turn.question) for r in never for turn in r.turns))
        always = generate_synthetic_dataset(SyntheticSpec(num_dialogs=4, num_turns=5, pronoun_fraction=1.0), 1)
        for record in always:
            self.assertTrue(all(is_pronoun(turn.question) for turn in record.turns[1:]))

    def test_pronoun_answers_name_the_referent(self):
        records = generate_synthetic_dataset(SyntheticSpec(num_dialogs=4, num_turns=3, pronoun_fraction=1.0), 2)
        for record in records:
            _, referent = answer_oracle(record.scene, record.turns[0].question)
            kind = record.scene[referent]["kind"]
            self.assertIn(kind, record.turns[1].answer)

    def test_minimum_candidates(self):
        records = generate_synthetic_dataset(SyntheticSpec(num_dialogs=2, num_candidates=2), 0)
        for turn in records[0].turns:
            self.assertEqual(sorted(turn.relevance), [0.5, 1.0])

    def test_invalid_spec(self):
        for bad in (
            SyntheticSpec(num_objects=7),
            SyntheticSpec(num_objects=0),
            SyntheticSpec(num_dialogs=0),
            SyntheticSpec(num_candidates=1),
            SyntheticSpec(num_candidates=len(answer_pool()) + 1),
            SyntheticSpec(pronoun_fraction=1.5),
        ):
            with self.subTest(spec=bad):
                with self.assertRaises(ConfigError):
                    generate_synthetic_dataset(bad, 0)


class TestSceneHelpers(unittest.TestCase):
    def test_answer_forms(self):
        obj = {"color": "red", "kind": "dog", "count": 2}
        self.assertEqual(answer_forms("dog", "color", obj), (["red"], ["the", "dog", "is", "red"]))
        self.assertEqual(answer_forms("dog", "count", obj), (["two"], ["there", "are", "two", "dog"]))
        self.assertEqual(answer_forms("dog", "yesno", obj, "blue"), (["no"], ["no", "the", "dog", "is", "red"]))

    def test_questions(self):
        self.assertEqual(question_tokens("color", "cat", True), ["what", "color", "is", "it"])
        self.assertEqual(question_tokens("yesno", "cat", False, "red"), ["is", "the", "cat", "red"])

    def test_oracle_needs_referent_for_pronouns(self):
        scene = [{"color": "red", "kind": "dog", "count": 1}]
        with self.assertRaises(ValueError):
            answer_oracle(scene, ["what", "color", "is", "it"])
        self.assertEqual(answer_oracle(scene, ["what", "color", "is", "it"], 0), (["the", "dog", "is", "red"], 0))

    def test_noise_free_features_are_one_hot(self):
        scene = [{"color": "blue", "kind": "car", "count": 3}]
        features = encode_objects(scene, 0.0, np.random.default_rng(0))
        self.assertEqual(features.shape, (1, FEATURE_DIM))
        self.assertEqual(features.sum(), 3.0)
        self.assertEqual(set(np.unique(features)), {0.0, 1.0})


class TestRecords(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "dialogs.jsonl")

    def tearDown(self):
        self.tmp.cleanup()

    def write_lines(self, *lines):
        with open(self.path, "w") as f:
            f.write("\n".join(lines) + "\n")

    def test_write_then_read(self):
        records = generate_synthetic_dataset(SyntheticSpec(num_dialogs=3), 0)
        write_jsonl(records, self.path)
        loaded = read_jsonl(self.path)
        self.assertEqual(loaded, records)
        self.assertEqual(dataset_digest(loaded), dataset_digest(records))

    def test_sentences_are_tokenized(self):
        data = sample_record()
        data["caption"] = "there is a red dog"
        data["turns"][0].update(question="What color is the dog", answer="red", candidates=["blue", "red", "the dog is red"])
        self.write_lines(json.dumps(data))
        [record] = read_jsonl(self.path)
        self.assertEqual(record.turns[0].question, ["what", "color", "is", "the", "dog"])
        self.assertEqual(record.caption, ["there", "is", "a", "red", "dog"])
        self.assertEqual(record.turns[0].candidates[2], ["the", "dog", "is", "red"])
        self.assertIsNone(record.scene)

    def test_history(self):
        record = DialogRecord.from_dict(sample_record())
        self.assertEqual(record.history(0), [record.caption])
        self.assertEqual(record.history(1), [record.caption, ["what", "color", "is", "the", "dog", "red"]])

    def test_invalid_json(self):
        self.write_lines("{not json")
        with self.assertRaises(DataError):
            read_jsonl(self.path)

    def test_empty_file(self):
        self.write_lines("")
        with self.assertRaises(DataError):
            read_jsonl(self.path)

    def test_bad_gt_index(self):
        data = sample_record()
        data["turns"][0]["gt_index"] = 3
        self.write_lines(json.dumps(data))
        with self.assertRaises(DataError):
            read_jsonl(self.path)

    def test_relevance_length(self):
        data = sample_record()
        data["turns"][0]["relevance"] = [1.0]
        self.write_lines(json.dumps(data))
        with self.assertRaises(DataError):
            read_jsonl(self.path)

    def test_missing_field(self):
        data = sample_record()
        del data["object_features"]
        self.write_lines(json.dumps(data))
        with self.assertRaises(DataError):
            read_jsonl(self.path)

    def test_encode_and_corpus(self):
        record = DialogRecord.from_dict(sample_record())
        corpus = vocab_corpus([record])
        self.assertEqual(len(corpus), 3)
        vocab = build_vocab(corpus, 0)
        encoded = encode_dialog(record, vocab)
        self.assertEqual(encoded.features.shape, (2, 2))
        self.assertEqual(encoded.turns[0].candidates[0], [UNK_ID])
        self.assertEqual(vocab.decode(encoded.turns[0].answer), ["red"])
        self.assertEqual(encoded.history(1)[1], encoded.turns[0].question + encoded.turns[0].answer)


if __name__ == "__main__":
    unittest.main()
