import json
import logging
from dataclasses import dataclass

import numpy as np

from autograd.tensor import no_grad
from data.records import encode_dialog
from errors import CheckpointError, ConfigError, DataError
from model.network import DialogNetwork
from ranking.metrics import TurnRanking, aggregate, ensemble_scores, loss_share_diagnostic
from ranking.selection import TEST, fuse_rankings, rank_by_scores, select_candidates
from storage.checkpoint import restore_params
from text.vocab import Vocabulary
from training.config import RunConfig
from training.trainer import feature_dim_of

logger = logging.getLogger(__name__)

PRIMARY_ONLY = "primary"
TWO_STAGE = "two-stage"
MODES = (PRIMARY_ONLY, TWO_STAGE)

# Temperatures always reported by the loss-share diagnostic
SWEEP_TAUS = (1.0, 0.5, 0.25)


@dataclass
class TurnResult:
    dialog_id: str
    turn: int
    primary: np.ndarray
    selected: list
    synergy: np.ndarray
    ranking: list
    gt_index: int
    relevance: np.ndarray = None

    def to_dict(self):
        return {
            "dialog_id": self.dialog_id,
            "turn": self.turn,
            "scores": [float(s) for s in self.primary],
            "selected": [int(i) for i in self.selected],
            "synergy": [float(s) for s in self.synergy],
            "ranking": [int(i) for i in self.ranking],
        }


# Rebuild the network and vocabulary a checkpoint was trained with
def model_from_checkpoint(checkpoint):
    config = RunConfig.from_dict(checkpoint.config)
    vocab = Vocabulary.from_dict(checkpoint.vocab)
    image = checkpoint.params.get("context_encoder.image_encoder.weight")
    if image is None:
        raise CheckpointError("checkpoint has no image encoder weights")
    model = DialogNetwork(config, len(vocab), image.shape[0], np.random.default_rng(config.seed))
    restore_params(model, checkpoint)
    return model, vocab, config


def check_compatible(model, dialogs):
    features = feature_dim_of(dialogs)
    if features != model.feature_dim:
        raise CheckpointError(f"dataset object features have size {features}, model expects {model.feature_dim}")


def score_turn(model, dialog, t, mode, config):
    turn = dialog.turns[t]
    with no_grad():
        ctx = model.context(dialog, t)
        primary = model.primary_scores(ctx, turn.candidates).data.copy()
        if mode == PRIMARY_ONLY:
            return TurnResult(dialog.dialog_id, t, primary, [], np.zeros(0), rank_by_scores(primary),
                              turn.gt_index, turn.relevance)
        selected = select_candidates(primary, config.select_n, config.select_m, TEST)
        synergy = model.synergy_scores(ctx, turn.question, [turn.candidates[j] for j in selected]).data.copy()
    ranking = fuse_rankings(primary, selected, synergy)
    return TurnResult(dialog.dialog_id, t, primary, selected, synergy, ranking, turn.gt_index, turn.relevance)


# Rank every turn of every dialog in file order
def rank_turns(model, dialogs, mode, config):
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    check_compatible(model, dialogs)
    results = []
    for dialog in dialogs:
        for t in range(len(dialog.turns)):
            results.append(score_turn(model, dialog, t, mode, config))
    logger.debug(f"Ranked {len(results)} turns in {mode} mode")
    return results


def _margins(results):
    pooled = []
    for result in results:
        others = np.delete(result.primary, result.gt_index)
        pooled.append(others - result.primary[result.gt_index])
    return np.concatenate(pooled) if pooled else np.zeros(0)


# Aggregate metrics over turn results, with loss-share curves and primary top-N recall
def report(results, tau=None, select_n=None):
    metrics = aggregate([TurnRanking(r.ranking, r.gt_index, r.relevance) for r in results])
    margins = _margins(results)
    taus = sorted(set(SWEEP_TAUS) | ({tau} if tau is not None else set()), reverse=True)
    metrics.diagnostics["loss_share"] = {str(t): loss_share_diagnostic(margins, t).to_dict() for t in taus}
    if select_n is not None:
        inside = [r.gt_index in rank_by_scores(r.primary)[:select_n] for r in results]
        metrics.diagnostics["primary_top_n_recall"] = {"n": select_n, "recall": float(np.mean(inside))}
    return metrics


def evaluate(model, dialogs, mode, config):
    results = rank_turns(model, dialogs, mode, config)
    metrics = report(results, config.tau, config.select_n)
    metrics.diagnostics["mode"] = mode
    logger.info(
        f"{mode}: NDCG {metrics.ndcg:.4f} MRR {metrics.mrr:.4f} R@1 {metrics.r1:.4f} "
        f"R@5 {metrics.r5:.4f} R@10 {metrics.r10:.4f} mean rank {metrics.mean_rank:.2f} over {metrics.turns} turns"
    )
    return metrics, results


def evaluate_records(model, vocab, records, mode, config):
    return evaluate(model, [encode_dialog(r, vocab) for r in records], mode, config)


def write_scores(results, path):
    with open(path, "w") as f:
        for result in results:
            f.write(json.dumps(result.to_dict(), sort_keys=True) + "\n")
    logger.info(f"Wrote scores for {len(results)} turns to {path}")


def read_scores(path):
    scores = {}
    with open(path, "r") as f:
        for number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                item = json.loads(line)
                scores[(item["dialog_id"], int(item["turn"]))] = np.asarray(item["scores"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise DataError(f"{path}:{number}: bad score line ({e})")
    if not scores:
        raise DataError(f"{path}: no scores")
    return scores


# Sum every file's scores per (dialog, turn); every file must cover the same turns
def merge_score_files(score_maps):
    keys = list(score_maps[0])
    for other in score_maps[1:]:
        if set(other) != set(keys):
            raise DataError("score files cover different turns")
    return {key: ensemble_scores([m[key] for m in score_maps]) for key in keys}


# Turn results ranked by plain scores; records supply ground truth and relevance when given
def results_from_scores(scores, records=None):
    truth = {}
    for record in records or []:
        for t, turn in enumerate(record.turns):
            truth[(record.dialog_id, t)] = (turn.gt_index, np.asarray(turn.relevance, dtype=np.float64))
    results = []
    for (dialog_id, t), vector in scores.items():
        if records is not None and (dialog_id, t) not in truth:
            raise DataError(f"no dataset turn for {dialog_id} turn {t}")
        gt, relevance = truth.get((dialog_id, t), (0, None))
        results.append(TurnResult(dialog_id, t, vector, [], np.zeros(0), rank_by_scores(vector), gt, relevance))
    return results
