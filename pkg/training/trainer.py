import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from autograd.tensor import no_grad
from data.records import dataset_digest, encode_dialog
from errors import DataError, DivergenceError
from model.network import DialogNetwork
from ranking.selection import TRAIN, rank_by_scores, select_candidates
from storage.checkpoint import Checkpoint, save_checkpoint
from storage.ledger import RunLedger
from training.optim import Adam, lr_at

logger = logging.getLogger(__name__)

PRIMARY_PHASE = "primary"
JOINT_PHASE = "joint"

# Recorded in the run manifest
BATCH_CHOICES = {
    "turns_per_step": 1,
    "shuffle": "turn order reshuffled every epoch from the run generator",
    "history": "caption plus every earlier question and ground-truth answer",
}


@dataclass
class EpochLog:
    epoch: int
    phase: str
    lr: float
    loss: float
    primary_loss: float
    synergy_loss: float
    train_r1: float

    def to_dict(self):
        return asdict(self)


@dataclass
class TurnLoss:
    total: float
    primary: float
    synergy: float
    hit1: int


@dataclass
class TrainResult:
    model: DialogNetwork
    history: list = field(default_factory=list)
    checkpoint: Checkpoint = None
    ledger: RunLedger = None


def feature_dim_of(dialogs):
    dims = {d.features.shape[1] for d in dialogs}
    if len(dims) != 1:
        raise DataError(f"dialogs disagree on object feature size: {sorted(dims)}")
    return dims.pop()


class Trainer:
    """Two-phase training: the primary loss alone, then primary + synergy.

    One turn per optimizer step (or per accumulation group). All randomness
    after parameter init (turn order, train-mode selection) comes from the
    same seeded generator, so a config fully determines the loss log.
    """

    def __init__(self, config, dialogs, vocab, model=None):
        if not dialogs or not any(d.turns for d in dialogs):
            raise DataError("training needs at least one dialog turn")
        self.config = config
        self.dialogs = dialogs
        self.vocab = vocab
        self.rng = np.random.default_rng(config.seed)
        self.model = model if model is not None else DialogNetwork(config, len(vocab), feature_dim_of(dialogs), self.rng)
        self.optimizer = Adam(self.model.parameters(), config.lr, config.beta1, config.beta2, config.eps)
        self.turns = [(i, t) for i, dialog in enumerate(dialogs) for t in range(len(dialog.turns))]
        self.epoch = 0

    def phase_of(self, epoch):
        return PRIMARY_PHASE if epoch < self.config.primary_epochs else JOINT_PHASE

    def train_turn(self, dialog, t, phase):
        model, config = self.model, self.config
        turn = dialog.turns[t]
        ctx = model.context(dialog, t)
        if model.discriminative:
            scores = model.primary_scores(ctx, turn.candidates)
        else:
            # generative scores only drive selection and logging
            with no_grad():
                scores = model.primary_scores(ctx, turn.candidates)
        primary = model.primary_loss(ctx, turn, scores)
        loss = primary
        synergy_value = 0.0
        if phase == JOINT_PHASE:
            selected = select_candidates(scores.data, config.select_n, config.select_m, TRAIN, turn.gt_index, self.rng)
            synergy_scores = model.synergy_scores(ctx, turn.question, [turn.candidates[j] for j in selected])
            synergy = model.synergy_loss(synergy_scores, selected.index(turn.gt_index))
            synergy_value = synergy.item()
            loss = primary + synergy
        value = loss.item()
        if not math.isfinite(value):
            raise DivergenceError(f"non-finite loss {value} at epoch {self.epoch}, dialog {dialog.dialog_id} turn {t}")
        loss.backward()
        hit = int(rank_by_scores(scores.data)[0] == turn.gt_index)
        return TurnLoss(value, primary.item(), synergy_value, hit)

    def run_epoch(self):
        config = self.config
        phase = self.phase_of(self.epoch)
        self.optimizer.lr = lr_at(self.epoch, config.lr, config.decay_rate, config.decay_every)
        order = self.rng.permutation(len(self.turns))
        totals = np.zeros(4)
        pending = 0
        self.optimizer.zero_grad()
        for j in order:
            i, t = self.turns[j]
            result = self.train_turn(self.dialogs[i], t, phase)
            totals += [result.total, result.primary, result.synergy, result.hit1]
            pending += 1
            if pending == config.grad_accumulation:
                self.optimizer.step(1.0 / pending)
                self.optimizer.zero_grad()
                pending = 0
        if pending:
            self.optimizer.step(1.0 / pending)
            self.optimizer.zero_grad()
        mean = totals / len(order)
        log = EpochLog(self.epoch, phase, self.optimizer.lr, float(mean[0]), float(mean[1]), float(mean[2]), float(mean[3]))
        logger.info(
            f"Epoch {log.epoch} [{phase}] lr {log.lr:.2e} loss {log.loss:.4f} "
            f"(primary {log.primary_loss:.4f}, synergy {log.synergy_loss:.4f}) train R@1 {log.train_r1:.3f}"
        )
        self.epoch += 1
        return log

    def checkpoint(self):
        return Checkpoint(
            params=self.model.state_dict(),
            config=self.config.to_dict(),
            epoch=self.epoch,
            rng_state=self.rng.bit_generator.state,
            vocab=self.vocab.to_dict(),
            optimizer=self.optimizer.state_dict(),
        )

    # Run `epochs` epochs (default: both phases); on_epoch(log, checkpoint) follows each one
    def fit(self, epochs=None, on_epoch=None):
        epochs = self.config.total_epochs if epochs is None else epochs
        history = []
        for _ in range(epochs):
            log = self.run_epoch()
            history.append(log)
            if on_epoch is not None:
                on_epoch(log, self.checkpoint())
        return history


def write_manifest(path, config, vocab, records):
    manifest = {
        "config": config.to_dict(),
        "vocab_size": len(vocab),
        "batching": BATCH_CHOICES,
        "dialogs": len(records),
        "dataset_digest": dataset_digest(records),
    }
    with open(path, "w") as f:
        json.dump(manifest, f, indent=4, sort_keys=True)
    return manifest


# Train on dialog records; with out_dir, write per-epoch checkpoints, the ledger, manifest and loss log
def train(config, records, vocab, out_dir=None):
    dialogs = [encode_dialog(r, vocab) for r in records]
    trainer = Trainer(config, dialogs, vocab)
    ledger = RunLedger(dataset_digest(records))
    result = TrainResult(trainer.model, ledger=ledger)

    def on_epoch(log, checkpoint):
        name = None
        if out_dir is not None:
            name = f"checkpoint-epoch{log.epoch:03d}.npz"
            save_checkpoint(checkpoint, os.path.join(out_dir, name))
            with open(os.path.join(out_dir, "losses.jsonl"), "a") as f:
                f.write(json.dumps(log.to_dict(), sort_keys=True) + "\n")
        ledger.record(log.epoch, log.phase, log.loss, checkpoint.digest, name)
        result.checkpoint = checkpoint

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_manifest(os.path.join(out_dir, "manifest.json"), config, vocab, records)
        losses = os.path.join(out_dir, "losses.jsonl")
        if os.path.exists(losses):
            os.remove(losses)
    result.history = trainer.fit(on_epoch=on_epoch)
    if result.checkpoint is None:
        result.checkpoint = trainer.checkpoint()
    if out_dir is not None:
        save_checkpoint(result.checkpoint, os.path.join(out_dir, "checkpoint-final.npz"))
        ledger.save(os.path.join(out_dir, "ledger.json"))
    return result
