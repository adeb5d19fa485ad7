import json
import logging
from collections import Counter

from errors import DataError

logger = logging.getLogger(__name__)

PAD = "PAD"
UNK = "UNK"
START = "START"
END = "END"
SPECIALS = (PAD, UNK, START, END)
PAD_ID, UNK_ID, START_ID, END_ID = range(4)


# Lowercase whitespace split; specials survive untouched
def tokenize(text):
    return [t if t in SPECIALS else t.lower() for t in text.split()]


class Vocabulary:
    def __init__(self, tokens, min_count=0):
        tokens = list(tokens)
        clashes = [t for t in tokens if t in SPECIALS]
        if clashes:
            raise DataError(f"special tokens cannot appear in the word list: {clashes}")
        if len(set(tokens)) != len(tokens):
            raise DataError("vocabulary words must be distinct")
        self.min_count = min_count
        self.index_to_token = list(SPECIALS) + tokens
        self.token_to_index = {t: i for i, t in enumerate(self.index_to_token)}

    def __len__(self):
        return len(self.index_to_token)

    @property
    def words(self):
        return self.index_to_token[len(SPECIALS):]

    def encode(self, tokens):
        return [self.token_to_index.get(t, UNK_ID) for t in tokens]

    def decode(self, ids):
        return [self.index_to_token[i] for i in ids]

    def to_dict(self):
        return {"tokens": self.words, "min_count": self.min_count}

    @classmethod
    def from_dict(cls, data):
        return cls(data["tokens"], data.get("min_count", 0))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=4)

    @classmethod
    def load(cls, path):
        with open(path, "r") as f:
            try:
                return cls.from_dict(json.load(f))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise DataError(f"{path}: unreadable vocabulary ({e})")


# Words seen more than min_count times, by frequency then lexicographically, after the specials
def build_vocab(corpus, min_count):
    corpus = list(corpus)
    if not corpus or not any(corpus):
        raise DataError("cannot build a vocabulary from an empty corpus")
    counts = Counter(t for sequence in corpus for t in sequence if t not in SPECIALS)
    kept = sorted((t for t, c in counts.items() if c > min_count), key=lambda t: (-counts[t], t))
    vocab = Vocabulary(kept, min_count)
    logger.info(f"Built vocabulary of {len(vocab)} entries from {len(counts)} distinct words")
    return vocab
