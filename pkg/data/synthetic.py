"""Deterministic toy dialogs about small scenes of colored objects.

Each dialog draws a latent scene, encodes its objects as feature vectors,
names part of it in a caption and asks attribute questions. Pronoun
questions ("what color is it") refer to the previous turn's object, so only
the history resolves them, and their correct answer is the descriptive form
that names the object ("the dog is red"). Candidate sets mix the ground
truth, its other surface form, hard distractors of the same question type
and easy answers drawn from everything else.
"""
import logging
from dataclasses import dataclass

import numpy as np

from data.records import DialogRecord, Turn
from errors import ConfigError

logger = logging.getLogger(__name__)

COLORS = ["red", "blue", "green", "yellow", "white", "black"]
KINDS = ["dog", "cat", "car", "ball", "bird", "hat"]
COUNT_WORDS = ["one", "two", "three"]
FEATURE_DIM = len(COLORS) + len(KINDS) + len(COUNT_WORDS)

COLOR_QUESTION = "color"
COUNT_QUESTION = "count"
YESNO_QUESTION = "yesno"
QUESTION_TYPES = (COLOR_QUESTION, COUNT_QUESTION, YESNO_QUESTION)


@dataclass
class SyntheticSpec:
    num_dialogs: int = 32
    num_turns: int = 3
    num_candidates: int = 30
    num_objects: int = 4
    pronoun_fraction: float = 0.3
    synonym_relevance: bool = True
    feature_noise: float = 0.05

    @classmethod
    def from_config(cls, config):
        return cls(
            num_dialogs=config.num_dialogs,
            num_turns=config.num_turns,
            num_candidates=config.num_candidates,
            num_objects=config.num_objects,
            pronoun_fraction=config.pronoun_fraction,
            synonym_relevance=config.synonym_relevance,
            feature_noise=config.feature_noise,
        )

    def validate(self):
        if not 1 <= self.num_objects <= len(KINDS):
            raise ConfigError(f"num_objects must be in 1..{len(KINDS)}, got {self.num_objects}")
        if self.num_dialogs < 1 or self.num_turns < 1:
            raise ConfigError("need at least one dialog and one turn")
        if not 2 <= self.num_candidates <= len(answer_pool()):
            raise ConfigError(f"num_candidates must be in 2..{len(answer_pool())}, got {self.num_candidates}")
        if not 0.0 <= self.pronoun_fraction <= 1.0:
            raise ConfigError(f"pronoun_fraction must be in [0, 1], got {self.pronoun_fraction}")


def _count_word(count):
    return COUNT_WORDS[count - 1]


# Short and descriptive surface forms of one fact
def answer_forms(kind, question_type, obj, asked_color=None):
    if question_type == COLOR_QUESTION:
        return [obj["color"]], ["the", kind, "is", obj["color"]]
    if question_type == COUNT_QUESTION:
        word = _count_word(obj["count"])
        return [word], ["there", "are", word, kind]
    reply = "yes" if obj["color"] == asked_color else "no"
    return [reply], [reply, "the", kind, "is", obj["color"]]


def answer_pool():
    pool = [[c] for c in COLORS] + [[w] for w in COUNT_WORDS] + [["yes"], ["no"]]
    for kind in KINDS:
        pool += [["the", kind, "is", c] for c in COLORS]
        pool += [["there", "are", w, kind] for w in COUNT_WORDS]
        pool += [[r, "the", kind, "is", c] for r in ("yes", "no") for c in COLORS]
    return pool


def question_tokens(question_type, kind, pronoun, asked_color=None):
    subject = ["it"] if pronoun else ["the", kind]
    if question_type == COLOR_QUESTION:
        return ["what", "color", "is"] + subject
    if question_type == COUNT_QUESTION:
        return ["how", "many", "of", "them", "are", "there"] if pronoun else ["how", "many", kind, "are", "there"]
    return ["is"] + subject + [asked_color]


# Answer a generated question from the latent scene; pronouns resolve to the previous turn's referent
def answer_oracle(scene, question, referent=None):
    pronoun = "it" in question or "them" in question
    if pronoun:
        if referent is None:
            raise ValueError(f"pronoun question without a referent: {question}")
        index = referent
    else:
        index = next(i for i, obj in enumerate(scene) if obj["kind"] in question)
    obj = scene[index]
    if question[:2] == ["what", "color"]:
        question_type, asked = COLOR_QUESTION, None
    elif question[:2] == ["how", "many"]:
        question_type, asked = COUNT_QUESTION, None
    else:
        question_type, asked = YESNO_QUESTION, question[-1]
    short, descriptive = answer_forms(obj["kind"], question_type, obj, asked)
    return (descriptive if pronoun else short), index


def _draw_scene(spec, rng):
    kinds = rng.choice(len(KINDS), size=spec.num_objects, replace=False)
    return [
        {
            "color": COLORS[int(rng.integers(len(COLORS)))],
            "kind": KINDS[int(k)],
            "count": int(rng.integers(1, len(COUNT_WORDS) + 1)),
        }
        for k in kinds
    ]


# One-hot color, kind and count plus seeded noise
def encode_objects(scene, noise, rng):
    features = np.zeros((len(scene), FEATURE_DIM))
    for i, obj in enumerate(scene):
        features[i, COLORS.index(obj["color"])] = 1.0
        features[i, len(COLORS) + KINDS.index(obj["kind"])] = 1.0
        features[i, len(COLORS) + len(KINDS) + obj["count"] - 1] = 1.0
    return features + rng.normal(0.0, noise, size=features.shape)


def _caption(scene):
    first = scene[0]
    tokens = ["there", "is", "a", first["color"], first["kind"]]
    for obj in scene[1:2]:
        tokens += ["and", "a", obj["kind"]]
    return tokens


def _hard_distractors(scene, question_type, kind, correct, pronoun):
    forms = []
    if question_type == COLOR_QUESTION:
        forms += [[c] for c in COLORS] + [["the", kind, "is", c] for c in COLORS]
    elif question_type == COUNT_QUESTION:
        forms += [[w] for w in COUNT_WORDS] + [["there", "are", w, kind] for w in COUNT_WORDS]
    else:
        forms += [[r] for r in ("yes", "no")] + [[r, "the", kind, "is", c] for r in ("yes", "no") for c in COLORS]
    if pronoun:
        # true statements about other objects: only the referent makes them wrong
        for obj in scene:
            if obj["kind"] != kind:
                forms.append(answer_forms(obj["kind"], question_type, obj, obj["color"])[1])
    return [f for f in forms if f not in correct]


def _candidates(spec, scene, question_type, index, pronoun, asked, rng):
    obj = scene[index]
    short, descriptive = answer_forms(obj["kind"], question_type, obj, asked)
    gt, synonym = (descriptive, short) if pronoun else (short, descriptive)
    hard = _hard_distractors(scene, question_type, obj["kind"], [gt, synonym], pronoun)
    hard = [hard[i] for i in rng.permutation(len(hard))][: max(0, (spec.num_candidates - 2) // 2)]
    taken = [gt, synonym] + hard
    easy = [a for a in answer_pool() if a not in taken]
    needed = spec.num_candidates - len(taken)
    easy = [easy[i] for i in rng.choice(len(easy), size=needed, replace=False)] if needed > 0 else []
    candidates = (taken + easy)[: spec.num_candidates]
    order = rng.permutation(len(candidates))
    candidates = [candidates[i] for i in order]
    relevance = [0.0] * len(candidates)
    relevance[candidates.index(gt)] = 1.0
    if synonym in candidates and spec.synonym_relevance:
        relevance[candidates.index(synonym)] = 0.5
    return candidates, candidates.index(gt), relevance


def _dialog(spec, number, rng):
    scene = _draw_scene(spec, rng)
    features = encode_objects(scene, spec.feature_noise, rng)
    turns = []
    referent = None
    for t in range(spec.num_turns):
        pronoun = t > 0 and rng.random() < spec.pronoun_fraction
        index = referent if pronoun else int(rng.integers(len(scene)))
        question_type = QUESTION_TYPES[int(rng.integers(len(QUESTION_TYPES)))]
        asked = COLORS[int(rng.integers(len(COLORS)))] if question_type == YESNO_QUESTION else None
        question = question_tokens(question_type, scene[index]["kind"], pronoun, asked)
        answer, resolved = answer_oracle(scene, question, referent)
        candidates, gt_index, relevance = _candidates(spec, scene, question_type, resolved, pronoun, asked, rng)
        turns.append(Turn(question, answer, candidates, gt_index, relevance))
        referent = resolved
    return DialogRecord(
        dialog_id=f"dialog-{number:05d}",
        object_features=features.tolist(),
        caption=_caption(scene),
        turns=turns,
        scene=scene,
    )


def generate_synthetic_dataset(spec, seed):
    spec.validate()
    rng = np.random.default_rng(seed)
    records = [_dialog(spec, number, rng) for number in range(spec.num_dialogs)]
    logger.info(f"Generated {len(records)} synthetic dialogs (seed {seed}, {spec.num_turns} turns each)")
    return records
