import json
import logging
import os

from errors import CheckpointError, DataError
from storage.checkpoint import load_checkpoint
from storage.digest import json_digest

logger = logging.getLogger(__name__)

GENESIS_PHASE = "start"


class LedgerEntry:
    # One emitted checkpoint, linked to the entry before it
    def __init__(self, index, epoch, phase, loss, digest, prev_hash, checkpoint=None):
        self.index = index
        self.epoch = epoch
        self.phase = phase
        self.loss = loss
        self.digest = digest
        self.prev_hash = prev_hash
        self.checkpoint = checkpoint
        self.hash = self.compute_hash()

    # SHA-256 over the entry header
    def compute_hash(self):
        return json_digest({
            "index": self.index,
            "epoch": self.epoch,
            "phase": self.phase,
            "loss": self.loss,
            "digest": self.digest,
            "prev_hash": self.prev_hash,
            "checkpoint": self.checkpoint,
        })

    def to_dict(self):
        return {
            "index": self.index,
            "epoch": self.epoch,
            "phase": self.phase,
            "loss": self.loss,
            "digest": self.digest,
            "prev_hash": self.prev_hash,
            "checkpoint": self.checkpoint,
            "hash": self.hash,
        }

    @classmethod
    def from_dict(cls, data):
        entry = cls(
            data["index"], data["epoch"], data["phase"], data["loss"],
            data["digest"], data["prev_hash"], data.get("checkpoint"),
        )
        # keep the stored hash so tampering shows up in is_valid_chain
        entry.hash = data["hash"]
        return entry


# Hash-chained training history; the first entry pins the dataset digest
class RunLedger:
    def __init__(self, dataset_digest):
        self.chain = []
        self.create_starting_entry(dataset_digest)

    def create_starting_entry(self, dataset_digest):
        self.chain.append(LedgerEntry(0, -1, GENESIS_PHASE, None, dataset_digest, "0"))

    def get_latest_entry(self):
        return self.chain[-1]

    # Append after checking the link to the current head
    def add_entry(self, entry):
        latest = self.get_latest_entry()
        if entry.prev_hash != latest.compute_hash() or entry.index != latest.index + 1:
            return False
        if entry.compute_hash() != entry.hash:
            return False
        self.chain.append(entry)
        return True

    def record(self, epoch, phase, loss, digest, checkpoint=None):
        latest = self.get_latest_entry()
        entry = LedgerEntry(latest.index + 1, epoch, phase, loss, digest, latest.compute_hash(), checkpoint)
        if not self.add_entry(entry):
            raise DataError(f"ledger rejected entry {entry.index} for epoch {epoch}")
        logger.debug(f"Ledger entry {entry.index}: epoch {epoch} {phase} loss {loss:.6f} hash {entry.hash[:12]}")
        return entry

    @property
    def dataset_digest(self):
        return self.chain[0].digest

    # Validate the integrity of a ledger
    def is_valid_chain(self, chain=None):
        chain = self.chain if chain is None else chain
        if not chain:
            return False
        prev = "0"
        for i, entry in enumerate(chain):
            if entry.index != i or entry.prev_hash != prev or entry.compute_hash() != entry.hash:
                return False
            prev = entry.compute_hash()
        return True

    # Reload every checkpoint the ledger names and compare parameter digests
    def verify_checkpoints(self, directory):
        for entry in self.chain[1:]:
            if entry.checkpoint is None:
                continue
            try:
                checkpoint = load_checkpoint(os.path.join(directory, entry.checkpoint))
            except CheckpointError as e:
                logger.warning(f"Ledger entry {entry.index}: {e}")
                return False
            if checkpoint.digest != entry.digest:
                logger.warning(f"Ledger entry {entry.index}: digest differs from {entry.checkpoint}")
                return False
        return True

    def save(self, path):
        with open(path, "w") as f:
            json.dump([entry.to_dict() for entry in self.chain], f, indent=4)

    @classmethod
    def load(cls, path):
        try:
            with open(path, "r") as f:
                entries = [LedgerEntry.from_dict(item) for item in json.load(f)]
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
            raise DataError(f"{path}: unreadable ledger ({e})")
        if not entries:
            raise DataError(f"{path}: empty ledger")
        ledger = cls.__new__(cls)
        ledger.chain = entries
        return ledger
