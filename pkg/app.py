import argparse
import json
import logging
import sys

import numpy as np

from autograd.tensor import no_grad
from data.records import encode_dialog, read_jsonl, vocab_corpus, write_jsonl
from data.synthetic import SyntheticSpec, generate_synthetic_dataset
from errors import EXIT_OK, EXIT_USAGE, ConfigError, SynergyError, exit_code_for
from ranking.selection import TEST, fuse_rankings, select_candidates
from storage.checkpoint import load_checkpoint
from text.vocab import END_ID, Vocabulary, build_vocab
from training.config import MODEL_KINDS, RunConfig
from training.evaluate import (
    MODES,
    evaluate_records,
    merge_score_files,
    model_from_checkpoint,
    read_scores,
    report,
    results_from_scores,
    write_scores,
)
from training.trainer import train

logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    # Usage errors exit with 1 like every other configuration problem
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_config(args):
    config = RunConfig.from_json(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {name: getattr(args, name, None) for name in OVERRIDABLE}
    return config.with_overrides(**overrides)


# RunConfig fields settable from the command line
OVERRIDABLE = (
    "seed", "model_kind", "tau", "select_n", "select_m", "hidden", "emb_dim", "factors", "mfb_hidden",
    "num_dialogs", "num_turns", "num_candidates", "num_objects", "pronoun_fraction",
    "primary_epochs", "joint_epochs", "lr", "min_count", "grad_accumulation",
)


def add_config_flags(parser):
    parser.add_argument("--config", help="JSON file of RunConfig fields")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--model-kind", dest="model_kind", choices=MODEL_KINDS)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--select-n", dest="select_n", type=int)
    parser.add_argument("--select-m", dest="select_m", type=int)
    parser.add_argument("--hidden", type=int)
    parser.add_argument("--emb-dim", dest="emb_dim", type=int)
    parser.add_argument("--factors", type=int)
    parser.add_argument("--mfb-hidden", dest="mfb_hidden", type=int)
    parser.add_argument("--num-dialogs", dest="num_dialogs", type=int)
    parser.add_argument("--num-turns", dest="num_turns", type=int)
    parser.add_argument("--num-candidates", dest="num_candidates", type=int)
    parser.add_argument("--num-objects", dest="num_objects", type=int)
    parser.add_argument("--pronoun-fraction", dest="pronoun_fraction", type=float)
    parser.add_argument("--primary-epochs", dest="primary_epochs", type=int)
    parser.add_argument("--joint-epochs", dest="joint_epochs", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--min-count", dest="min_count", type=int)
    parser.add_argument("--grad-accumulation", dest="grad_accumulation", type=int)


def cmd_gen_data(args):
    config = load_config(args)
    records = generate_synthetic_dataset(SyntheticSpec.from_config(config), config.seed)
    write_jsonl(records, args.out)


def cmd_build_vocab(args):
    records = read_jsonl(args.data)
    vocab = build_vocab(vocab_corpus(records), args.min_count)
    vocab.save(args.out)
    logger.info(f"Saved vocabulary to {args.out}")


def cmd_train(args):
    config = load_config(args)
    records = read_jsonl(args.data)
    if args.vocab:
        vocab = Vocabulary.load(args.vocab)
    else:
        vocab = build_vocab(vocab_corpus(records), config.min_count)
    result = train(config, records, vocab, args.out)
    logger.info(f"Training finished after {len(result.history)} epochs; ledger valid: {result.ledger.is_valid_chain()}")


def _load_model(path):
    checkpoint = load_checkpoint(path)
    return model_from_checkpoint(checkpoint)


def cmd_evaluate(args):
    model, vocab, config = _load_model(args.checkpoint)
    records = read_jsonl(args.data)
    metrics, results = evaluate_records(model, vocab, records, args.mode, config)
    if args.report:
        metrics.save(args.report)
        logger.info(f"Saved report to {args.report}")
    if args.scores:
        write_scores(results, args.scores)
    print(json.dumps({k: v for k, v in metrics.to_dict().items() if k != "diagnostics"}, indent=4))


def cmd_rank(args):
    model, vocab, config = _load_model(args.checkpoint)
    records = read_jsonl(args.data)
    _, results = evaluate_records(model, vocab, records, args.mode, config)
    write_scores(results, args.out)


def _rerank_generated(model, ctx, question, generated, config):
    primary = np.array([log_prob for _, log_prob in generated])
    n = min(config.select_n, len(generated))
    selected = select_candidates(primary, n, len(generated), TEST)
    synergy = model.synergy_scores(ctx, question, [generated[j][0] for j in selected]).data
    return fuse_rankings(primary, selected, synergy)


def cmd_beam(args):
    model, vocab, config = _load_model(args.checkpoint)
    if model.discriminative:
        raise ConfigError("beam search needs a generative checkpoint")
    width = args.width or config.beam_width
    max_len = args.max_len or config.beam_max_len
    if width < 1 or max_len < 1:
        raise ConfigError(f"beam width and max_len must be >= 1, got {width} and {max_len}")
    records = read_jsonl(args.data)
    with open(args.out, "w") as f, no_grad():
        for record in records:
            dialog = encode_dialog(record, vocab)
            for t, turn in enumerate(dialog.turns):
                ctx = model.context(dialog, t)
                generated = [
                    ([w for w in tokens if w != END_ID], log_prob)
                    for tokens, log_prob in model.generate(ctx, width, max_len)
                ]
                generated = [(tokens, log_prob) for tokens, log_prob in generated if tokens]
                line = {
                    "dialog_id": dialog.dialog_id,
                    "turn": t,
                    "answers": [" ".join(vocab.decode(tokens)) for tokens, _ in generated],
                    "log_probs": [float(lp) for _, lp in generated],
                }
                if args.rerank and generated:
                    line["ranking"] = _rerank_generated(model, ctx, turn.question, generated, config)
                f.write(json.dumps(line, sort_keys=True) + "\n")
    logger.info(f"Wrote beam candidates to {args.out}")


def cmd_ensemble(args):
    merged = merge_score_files([read_scores(path) for path in args.scores])
    records = read_jsonl(args.data) if args.data else None
    results = results_from_scores(merged, records)
    write_scores(results, args.out)
    if records is not None and args.report:
        report(results).save(args.report)
        logger.info(f"Saved ensemble report to {args.report}")


def build_parser():
    parser = CliParser(prog="synergy", description="Two-stage answer ranking for visual dialog")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("gen-data", help="write a synthetic dialog dataset")
    add_config_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = commands.add_parser("build-vocab", help="build a vocabulary from a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--min-count", dest="min_count", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_vocab)

    p = commands.add_parser("train", help="train both stages")
    add_config_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--vocab")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = commands.add_parser("evaluate", help="rank a dataset and report metrics")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=MODES, default=MODES[1])
    p.add_argument("--report")
    p.add_argument("--scores")
    p.set_defaults(func=cmd_evaluate)

    p = commands.add_parser("rank", help="write per-turn scores and rankings")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=MODES, default=MODES[1])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = commands.add_parser("beam", help="generate answers with beam search")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--width", type=int)
    p.add_argument("--max-len", dest="max_len", type=int)
    p.add_argument("--rerank", action="store_true", help="re-rank generated answers with the synergistic stage")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_beam)

    p = commands.add_parser("ensemble", help="sum score files and rank")
    p.add_argument("--scores", nargs="+", required=True)
    p.add_argument("--data")
    p.add_argument("--report")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        args.func(args)
    except SynergyError as e:
        logger.error(str(e))
        return exit_code_for(e)
    except OSError as e:
        logger.error(f"{e.filename or ''}: {e.strerror or e}")
        return exit_code_for(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
