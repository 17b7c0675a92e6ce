"""Command-line pipeline: mentions | label | train | infer | eval.

Every subcommand accepts ``--config FILE`` with ``key=value`` lines (keys are
flag names without dashes, e.g. ``log-beta=-18``); explicit flags win.
Exit status: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .corpus import Clustering, DataError, load_documents, read_clustering, read_mentions, write_clustering, write_mentions
from .kb import load_kb
from .learner import SampleRank, TrainConfig
from .metrics import baseline_last_name, baseline_unique_name, pairwise_prf, report_rows, write_report
from .model import MentionTable, WeightVector
from .ranker import RankerParams, article_stats_for, distant_label_corpus, size_histogram
from .sampler import build_canopies, infer
from .withindoc import DEFAULT_WEIGHTS, WdFeatureWeights, mentions_for_corpus

log = logging.getLogger("distcoref")


class UsageError(Exception):
    pass


def read_config(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise DataError("expected key=value", path, lineno)
            out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _echo_seed(args):
    print(f"seed={args.seed}", file=sys.stderr)


# -- subcommands ---------------------------------------------------------------


def cmd_mentions(args):
    _require(args, "documents", "out")
    weights = WdFeatureWeights.from_file(args.wd_weights) if args.wd_weights else DEFAULT_WEIGHTS
    docs = load_documents(args.documents)
    mentions = mentions_for_corpus(docs, weights, args.window)
    write_mentions(args.out, mentions)
    log.info("%d documents -> %d mentions", len(docs), len(mentions))


_WORKER_STATE = {}


def _label_init(docs, kb, params, stats):
    _WORKER_STATE.update(docs=docs, kb=kb, params=params, stats=stats)


def _label_chunk(mentions):
    s = _WORKER_STATE
    clustering, stats = distant_label_corpus(s["docs"], mentions, s["kb"], s["params"], s["stats"])
    return clustering.assignment, stats


def label_corpus(docs, mentions, kb, params, workers=1):
    stats = article_stats_for(docs)
    if workers <= 1 or len(mentions) < 2 * workers:
        return distant_label_corpus(docs, mentions, kb, params, stats)
    size = -(-len(mentions) // workers)
    chunks = [mentions[k:k + size] for k in range(0, len(mentions), size)]
    assignment, total = {}, None
    with ProcessPoolExecutor(workers, initializer=_label_init, initargs=(docs, kb, params, stats)) as pool:
        for part, st in pool.map(_label_chunk, chunks):
            assignment.update(part)
            if total is None:
                total = st
            else:
                for f in ("mentions", "zero_candidates", "one_candidate", "multiple_candidates", "accepted", "rejected"):
                    setattr(total, f, getattr(total, f) + getattr(st, f))
    clustering = Clustering(assignment)
    total.entity_sizes = size_histogram(clustering)
    return clustering, total


def cmd_label(args):
    _require(args, "mentions", "documents", "redirects", "disambig", "pages", "out")
    params = RankerParams(args.alpha, args.lam if args.lam is not None else 1 - args.alpha, args.log_beta)
    kb = load_kb(args.redirects, args.disambig, args.pages)
    docs = load_documents(args.documents)
    mentions = read_mentions(args.mentions)
    known = {d.doc_id for d in docs}
    for m in mentions:
        if m.doc_id not in known:
            raise DataError(f"mention {m.mention_id!r} refers to unknown document {m.doc_id!r}", args.mentions)
    labels, stats = label_corpus(docs, mentions, kb, params, args.workers)
    write_clustering(args.out, labels)
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            json.dump(stats.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    log.info("labeled %d of %d mentions", stats.accepted, stats.mentions)


def _labeled_mentions(mentions_path, labels_path):
    mentions = read_mentions(mentions_path)
    gold = read_clustering(labels_path)
    ids = {m.mention_id for m in mentions}
    unknown = sorted(set(gold.assignment) - ids)
    if unknown:
        raise DataError(f"label for unknown mention {unknown[0]!r}", labels_path)
    return [m for m in mentions if m.mention_id in gold.assignment], gold


def cmd_train(args):
    _require(args, "mentions", "labels", "out")
    _echo_seed(args)
    mentions, gold = _labeled_mentions(args.mentions, args.labels)
    if not mentions:
        raise DataError("no labeled mentions to train on", args.labels)
    cfg = TrainConfig(args.iterations, args.steps_per_iteration, args.learning_rate, args.seed)
    trainer = SampleRank(mentions, gold, build_canopies(mentions), cfg)
    for _ in range(cfg.iterations):
        row = trainer.run_iteration()
        log.info("iteration %d: %d updates, train F1 %.4f", row.iteration, row.updates, row.train_pairwise_f1)
    trainer.averaged().write(args.out)
    if args.final_weights:
        trainer.theta.write(args.final_weights)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            for row in trainer.log:
                fh.write(f"{row}\n")


def _run_chain(job):
    mentions, weights, steps, seed, report_every = job
    return infer(mentions, weights, steps, seed, report_every=report_every)


def cmd_infer(args):
    _require(args, "mentions", "weights", "out")
    _echo_seed(args)
    if args.chains < 1:
        raise UsageError("--chains must be >= 1")
    mentions = read_mentions(args.mentions)
    if args.labels:
        mentions, _ = _labeled_mentions(args.mentions, args.labels)
    weights = WeightVector.read(args.weights)
    if not mentions:
        write_clustering(args.out, Clustering())
        return
    seeds = [args.seed + k for k in range(args.chains)]
    if args.workers > 1 and args.chains > 1:
        jobs = [(mentions, weights, args.steps, s, args.report_every) for s in seeds]
        with ProcessPoolExecutor(min(args.workers, len(jobs))) as pool:
            results = list(pool.map(_run_chain, jobs))
    else:
        table = MentionTable(mentions)
        results = [infer(table, weights, args.steps, s, report_every=args.report_every) for s in seeds]
    best = max(results, key=lambda r: r.best_score)  # first among ties: max is stable
    write_clustering(args.out, best.clustering)
    log.info("best chain seed=%s score=%.6f acceptance=%.4f", best.seed, best.best_score, best.acceptance_rate)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for row in best.trace:
                fh.write(f"{row}\n")


def _eval_rows(pred: Clustering, gold: Clustering, prefix=""):
    missing = sorted(set(gold.assignment) - set(pred.assignment))
    if missing:
        raise DataError(f"prediction has no entity for labeled mention {missing[0]!r}")
    return report_rows(prefix, pairwise_prf(pred.restrict(gold.assignment), gold))


def _emit(rows, out):
    if out:
        write_report(out, rows)
    else:
        for name, value in rows:
            print(f"{name}\t{value:.6f}")


def cmd_eval(args):
    _require(args, "pred", "gold")
    rows = _eval_rows(read_clustering(args.pred), read_clustering(args.gold))
    if args.mentions:
        mentions, gold = _labeled_mentions(args.mentions, args.gold)
        rows += _eval_rows(baseline_unique_name(mentions), gold, "unique_name.")
        rows += _eval_rows(baseline_last_name(mentions), gold, "last_name.")
    _emit(rows, args.out)


def cmd_baseline(args):
    _require(args, "mentions", "labels")
    mentions, gold = _labeled_mentions(args.mentions, args.labels)
    rows = _eval_rows(baseline_unique_name(mentions), gold, "unique_name.")
    rows += _eval_rows(baseline_last_name(mentions), gold, "last_name.")
    _emit(rows, args.out)


def cmd_generate(args):
    from .synthetic import generate
    _require(args, "out_dir")
    _echo_seed(args)
    corpus = generate(args.entities, args.mentions_per_split, args.seed, test_entities=args.entities,
                      test_mentions=args.mentions_per_split, kb_coverage=args.kb_coverage)
    for split in ("train", "test"):
        corpus.write(os.path.join(args.out_dir, split), split)


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value defaults file")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="distcoref", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("mentions", parents=[common], help="documents -> within-document mentions")
    p.add_argument("--documents", help="documents.jsonl")
    p.add_argument("--out", help="mentions.jsonl to write")
    p.add_argument("--window", type=int, default=50, help="context tokens per side (default 50)")
    p.add_argument("--wd-weights", help="key=value within-document weight file")
    p.set_defaults(func=cmd_mentions)

    p = sub.add_parser("label", parents=[common], help="mentions + KB -> distant labels")
    p.add_argument("--mentions", help="mentions.jsonl")
    p.add_argument("--documents", help="documents.jsonl (article text)")
    p.add_argument("--redirects", help="kb_redirects.tsv")
    p.add_argument("--disambig", help="kb_disambig.tsv")
    p.add_argument("--pages", help="kb_pages.jsonl")
    p.add_argument("--out", help="labels.tsv to write")
    p.add_argument("--stats", help="labelstats.json to write")
    p.add_argument("--alpha", type=float, default=1e-4, help="background token probability (default 1e-4)")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="interpolation weight (default 1 - alpha)")
    p.add_argument("--log-beta", type=float, default=-18.0, help="log rejection threshold (default -18)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", parents=[common], help="mentions + labels -> weights.tsv")
    p.add_argument("--mentions", help="mentions.jsonl")
    p.add_argument("--labels", help="labels.tsv")
    p.add_argument("--out", help="averaged weights.tsv to write")
    p.add_argument("--final-weights", help="also write the last (unaveraged) weights here")
    p.add_argument("--log", help="training log (iteration, updates, train F1)")
    p.add_argument("--iterations", type=int, default=10, help="training iterations (default 10)")
    p.add_argument("--steps-per-iteration", type=int, default=100_000, help="MH steps per iteration (default 100000)")
    p.add_argument("--learning-rate", type=float, default=1.0, help="perceptron step size (default 1)")
    p.add_argument("--seed", type=int, default=0, help="random seed, echoed to stderr (default 0)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", parents=[common], help="mentions + weights -> clustering.tsv")
    p.add_argument("--mentions", help="mentions.jsonl")
    p.add_argument("--weights", help="weights.tsv")
    p.add_argument("--labels", help="only cluster mentions present in this labels.tsv")
    p.add_argument("--out", help="clustering.tsv to write")
    p.add_argument("--steps", type=int, default=100_000, help="MH steps per chain (default 100000)")
    p.add_argument("--seed", type=int, default=0, help="random seed, echoed to stderr (default 0)")
    p.add_argument("--chains", type=int, default=1, help="independent chains; best score wins")
    p.add_argument("--workers", type=int, default=1, help="processes for --chains")
    p.add_argument("--report-every", type=int, default=0, help="trace interval in steps (0: off)")
    p.add_argument("--trace", help="score trace (step, score, acceptance rate)")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", parents=[common], help="clustering + labels -> pairwise report")
    p.add_argument("--pred", help="clustering.tsv")
    p.add_argument("--gold", help="labels.tsv")
    p.add_argument("--mentions", help="mentions.jsonl; adds both baselines to the report")
    p.add_argument("--out", help="report file (default stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", parents=[common], help="mentions + labels -> baseline report")
    p.add_argument("--mentions", help="mentions.jsonl")
    p.add_argument("--labels", help="labels.tsv")
    p.add_argument("--out", help="report file (default stdout)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("generate", parents=[common], help="write the synthetic train/test fixture")
    p.add_argument("--out-dir", help="directory for the train/ and test/ splits")
    p.add_argument("--entities", type=int, default=50, help="entities per split")
    p.add_argument("--mentions-per-split", type=int, default=500, help="mentions in each split (default 500)")
    p.add_argument("--kb-coverage", type=float, default=0.9, help="fraction of people with a KB page (default 0.9)")
    p.add_argument("--seed", type=int, default=0, help="random seed, echoed to stderr (default 0)")
    p.set_defaults(func=cmd_generate)
    return parser


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    config = read_config(known.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    recognized = set()
    for sp in subparsers.choices.values():
        dests = {a.dest for a in sp._actions}
        relevant = {k: v for k, v in config.items() if k in dests or (k == "lambda" and "lam" in dests)}
        if "lambda" in relevant:
            relevant["lam"] = relevant.pop("lambda")
        recognized |= set(relevant) | ({"lambda"} if "lam" in relevant else set())
        # argparse converts string defaults with the action's type
        sp.set_defaults(**relevant)
    unknown = sorted(set(config) - recognized)
    if unknown:
        raise UsageError(f"unknown config key(s) in {known.config}: {', '.join(unknown)}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except UsageError as exc:
        print(f"distcoref: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"distcoref: error: {exc}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"distcoref {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError, KeyError, ValueError) as exc:
        print(f"distcoref {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
