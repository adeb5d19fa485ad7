import json
import logging
from dataclasses import asdict, dataclass

import numpy as np

from errors import DataError
from storage.digest import canonical_json, sha256
from text.vocab import tokenize

logger = logging.getLogger(__name__)


@dataclass
class Turn:
    question: list      # tokens
    answer: list        # ground-truth answer tokens
    candidates: list    # C token lists
    gt_index: int
    relevance: list     # C floats in [0, 1]


@dataclass
class DialogRecord:
    dialog_id: str
    object_features: list   # n x f floats
    caption: list
    turns: list
    scene: list = None      # latent objects the generator drew; not used by the model

    # H_0 = caption, H_i = question_i + answer_i for every turn before t
    def history(self, t):
        return [self.caption] + [turn.question + turn.answer for turn in self.turns[:t]]

    def to_dict(self):
        data = asdict(self)
        if self.scene is None:
            data.pop("scene")
        return data

    @classmethod
    def from_dict(cls, data):
        try:
            turns = [Turn(**turn) for turn in data["turns"]]
            record = cls(
                dialog_id=str(data["dialog_id"]),
                object_features=data["object_features"],
                caption=list(data["caption"]),
                turns=turns,
                scene=data.get("scene"),
            )
        except (KeyError, TypeError) as e:
            raise DataError(f"malformed dialog record: {e}")
        record.validate()
        return record

    def validate(self):
        features = np.asarray(self.object_features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] == 0:
            raise DataError(f"{self.dialog_id}: object features must be a non-empty n x f matrix")
        if not self.caption:
            raise DataError(f"{self.dialog_id}: empty caption")
        for t, turn in enumerate(self.turns):
            count = len(turn.candidates)
            if not 0 <= turn.gt_index < count:
                raise DataError(f"{self.dialog_id} turn {t}: gt index {turn.gt_index} outside {count} candidates")
            if len(turn.relevance) != count:
                raise DataError(f"{self.dialog_id} turn {t}: {len(turn.relevance)} relevances for {count} candidates")
            if turn.relevance[turn.gt_index] <= 0:
                raise DataError(f"{self.dialog_id} turn {t}: ground truth has zero relevance")
            if any(len(c) == 0 for c in turn.candidates) or not turn.question:
                raise DataError(f"{self.dialog_id} turn {t}: empty question or candidate")


@dataclass
class EncodedTurn:
    question: list
    answer: list
    candidates: list
    gt_index: int
    relevance: np.ndarray


@dataclass
class EncodedDialog:
    dialog_id: str
    features: np.ndarray
    caption: list
    turns: list

    def history(self, t):
        return [self.caption] + [turn.question + turn.answer for turn in self.turns[:t]]


# Map every token sequence of a record to vocabulary ids
def encode_dialog(record, vocab):
    turns = [
        EncodedTurn(
            question=vocab.encode(turn.question),
            answer=vocab.encode(turn.answer),
            candidates=[vocab.encode(c) for c in turn.candidates],
            gt_index=turn.gt_index,
            relevance=np.asarray(turn.relevance, dtype=np.float64),
        )
        for turn in record.turns
    ]
    return EncodedDialog(
        record.dialog_id,
        np.asarray(record.object_features, dtype=np.float64),
        vocab.encode(record.caption),
        turns,
    )


# Captions, questions and correct answers feed the vocabulary
def vocab_corpus(records):
    corpus = []
    for record in records:
        corpus.append(record.caption)
        for turn in record.turns:
            corpus.append(turn.question)
            corpus.append(turn.answer)
    return corpus


def write_jsonl(records, path):
    with open(path, "w") as f:
        for record in records:
            f.write(canonical_json(record.to_dict()) + "\n")
    logger.info(f"Wrote {len(records)} dialogs to {path}")


def read_jsonl(path):
    records = []
    with open(path, "r") as f:
        for number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{number}: invalid JSON ({e})")
            records.append(DialogRecord.from_dict(_normalize_tokens(data)))
    if not records:
        raise DataError(f"{path}: no dialogs")
    return records


# Files written by hand may carry sentences instead of token lists
def _normalize_tokens(data):
    def tokens(value):
        return tokenize(value) if isinstance(value, str) else list(value)

    data = dict(data)
    data["caption"] = tokens(data.get("caption", []))
    turns = []
    for turn in data.get("turns", []):
        turn = dict(turn)
        turn["question"] = tokens(turn.get("question", []))
        turn["answer"] = tokens(turn.get("answer", []))
        turn["candidates"] = [tokens(c) for c in turn.get("candidates", [])]
        turns.append(turn)
    data["turns"] = turns
    return data


def dataset_digest(records):
    lines = "\n".join(canonical_json(r.to_dict()) for r in records)
    return sha256(lines).hex()
