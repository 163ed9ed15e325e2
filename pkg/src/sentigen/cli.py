"""Command-line entry point: build-corpus, train, generate, evaluate.

Exit codes: 0 success, 2 input error, 3 numeric failure, 4 artifact
mismatch. Errors print a single machine-parsable `ErrorClass: message`
line on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .checkpoint import load_checkpoint
from .errors import SentigenError
from .evalmetrics import evaluate_generations, render_report, report_json
from .generate import batch_generate, read_generations
from .lexicon import load_lexicon, read_token_file
from .train import TrainConfig, train

log = logging.getLogger(__name__)


def _load_lexicon_args(args):
    stopwords = read_token_file(args.stopwords) if args.stopwords else ()
    return load_lexicon(args.pos_lex, args.neg_lex, stopwords)


def _corpus_paths(corpus_dir: Path) -> dict:
    return {name: corpus_dir / f"{name}.jsonl" for name in corpus_mod.SPLIT_NAMES}


def cmd_build_corpus(args) -> int:
    lex = _load_lexicon_args(args)
    pairs = corpus_mod.read_pairs_tsv(args.pairs)
    groups = corpus_mod.group_by_post(pairs)
    triples = corpus_mod.mine_triples(groups, lex, args.min_len)
    instances = corpus_mod.rewrite_instances(triples)
    ratios = tuple(float(x) for x in args.ratios.split(","))
    split = corpus_mod.strict_split(instances, ratios, args.seed)

    train_insts = split.train
    post_vocab = corpus_mod.build_vocab([i.post for i in train_insts], args.vocab_cap)
    resp_vocab = corpus_mod.build_vocab([i.response for i in train_insts], args.vocab_cap)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus_mod.write_triples_tsv(triples, out / "triples.tsv")
    corpus_mod.write_instances_jsonl(instances, out / "instances.jsonl")
    for name, path in _corpus_paths(out).items():
        corpus_mod.write_instances_jsonl(split.split(name), path)
    corpus_mod.write_vocab(post_vocab, out / "post.vocab")
    corpus_mod.write_vocab(resp_vocab, out / "resp.vocab")

    posts_with_triples = {t.post for t in triples}
    stats = {
        "pair_count": len(pairs),
        "post_count": len(posts_with_triples),
        "triple_count": len(triples),
        "instance_count": len(instances),
        "triples_per_post": (len(triples) / len(posts_with_triples)) if triples else 0.0,
        "split_sizes": {name: len(split.split(name)) for name in corpus_mod.SPLIT_NAMES},
        "post_vocab_size": len(post_vocab),
        "resp_vocab_size": len(resp_vocab),
        "post_coverage": corpus_mod.vocab_coverage([i.post for i in instances], post_vocab),
        "resp_coverage": corpus_mod.vocab_coverage([i.response for i in instances], resp_vocab),
    }
    with open(out / "stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"corpus written to {out} ({len(triples)} triples, {len(instances)} instances)")
    return 0


def cmd_train(args) -> int:
    corpus_dir = Path(args.corpus)
    paths = _corpus_paths(corpus_dir)
    for path in (corpus_dir / "post.vocab", corpus_dir / "resp.vocab", paths["train"]):
        if not path.exists():
            raise FileNotFoundError(f"missing corpus file {path}")
    split = corpus_mod.SplitCorpus(
        *(corpus_mod.read_instances_jsonl(paths[n]) for n in corpus_mod.SPLIT_NAMES),
        post_groups={},
    )
    post_vocab = corpus_mod.read_vocab(corpus_dir / "post.vocab")
    resp_vocab = corpus_mod.read_vocab(corpus_dir / "resp.vocab")

    overrides = dict(
        model_kind=args.model,
        seed=args.seed,
        max_epochs=args.max_epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        embedding_dim=args.embedding_dim,
        hidden_dim=args.hidden_dim,
        patience=args.patience,
    )
    if args.config:
        config = TrainConfig.from_file(args.config, **overrides)
    else:
        config = TrainConfig(**{k: v for k, v in overrides.items() if v is not None})

    result = train(split, post_vocab, resp_vocab, config, out_dir=args.out)
    best = min((h.valid_loss if h.valid_loss is not None else h.train_loss)
               for h in result.history)
    print(f"trained {config.model_kind} for {len(result.history)} epoch(s), "
          f"best monitored loss {best:.4f}; checkpoint in {args.out}")
    return 0


def _distinct_posts(instances) -> list:
    seen = {}
    for inst in instances:
        seen.setdefault(inst.post, None)
    return list(seen)


def cmd_generate(args) -> int:
    lex = _load_lexicon_args(args)
    params = load_checkpoint(args.ckpt, expected_kind=args.model)
    corpus_dir = Path(args.corpus)
    instances = corpus_mod.read_instances_jsonl(_corpus_paths(corpus_dir)[args.split])
    post_vocab = corpus_mod.read_vocab(corpus_dir / "post.vocab")
    resp_vocab = corpus_mod.read_vocab(corpus_dir / "resp.vocab")
    if len(post_vocab) != params.post_vocab or len(resp_vocab) != params.resp_vocab:
        from .errors import ModelMismatchError
        raise ModelMismatchError(
            f"vocab sizes ({len(post_vocab)}, {len(resp_vocab)}) do not match "
            f"checkpoint ({params.post_vocab}, {params.resp_vocab})"
        )
    posts = _distinct_posts(instances)
    gen_posts, labels = [], []
    for post in posts:
        for label in (1, -1):
            gen_posts.append(post)
            labels.append(label)
    batch_generate(gen_posts, labels, params, post_vocab, resp_vocab, lex,
                   out_path=args.out, max_len=args.max_len)
    print(f"{2 * len(posts)} generations written to {args.out}")
    return 0


def _checkpoint_embeddings(params, resp_vocab) -> dict:
    table = params["emb.resp"].data
    return {tok: np.asarray(table[i], dtype=np.float64)
            for i, tok in enumerate(resp_vocab.index_to_token)}


def _read_embeddings_file(path) -> dict:
    """Plain text vectors: `token v1 v2 ...` per line, optional
    `count dim` header line."""
    table = {}
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().split()
        if len(first) != 2 or not all(p.lstrip("-").isdigit() for p in first[1:]):
            if first:
                table[first[0]] = np.array([float(x) for x in first[1:]])
        for line in fh:
            parts = line.split()
            if parts:
                table[parts[0]] = np.array([float(x) for x in parts[1:]])
    return table


def cmd_evaluate(args) -> int:
    lex = _load_lexicon_args(args)
    records = read_generations(args.gen)
    if not records:
        from .errors import EmptyInputError
        raise EmptyInputError(f"no generation records in {args.gen}")
    corpus_dir = Path(args.corpus)
    instances = corpus_mod.read_instances_jsonl(_corpus_paths(corpus_dir)[args.split])
    resp_vocab = corpus_mod.read_vocab(corpus_dir / "resp.vocab")

    refs_by_post: dict = {}
    for inst in instances:
        refs_by_post.setdefault(inst.post, []).append(list(inst.response))

    generations, references = [], []
    for rec in records:
        post = tuple(rec["post"])
        generations.append((rec["response"], rec["label"]))
        references.append(refs_by_post.get(post, [[]]) or [[]])

    if args.embeddings:
        embeddings = _read_embeddings_file(args.embeddings)
    else:
        params = load_checkpoint(args.ckpt)
        embeddings = _checkpoint_embeddings(params, resp_vocab)

    report, usage = evaluate_generations(generations, references, lex, embeddings)
    doc = report_json(report, usage, model=args.model_name)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(doc + "\n")
    print(render_report(report, usage, model=args.model_name))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentigen",
        description="sentiment-controlled response generation pipeline",
    )
    parser.add_argument("--verbose", action="store_true", help="log INFO messages")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("build-corpus", formatter_class=fmt,
                       help="mine triples, rewrite instances, split and build vocabularies")
    p.add_argument("--pairs", required=True, help="TSV file: post<TAB>response, tokens space-separated")
    p.add_argument("--pos-lex", required=True, help="positive lexicon, one token per line")
    p.add_argument("--neg-lex", required=True, help="negative lexicon, one token per line")
    p.add_argument("--stopwords", default=None, help="optional stopword file removed from the lexicon")
    p.add_argument("--min-len", type=int, default=5, help="responses must be strictly longer than this")
    p.add_argument("--ratios", default="0.8,0.1,0.1", help="train,valid,test instance ratios")
    p.add_argument("--seed", type=int, default=0, help="split shuffle seed")
    p.add_argument("--vocab-cap", type=int, default=30000, help="non-reserved vocabulary cap per side")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("train", formatter_class=fmt, help="train a model on a built corpus")
    p.add_argument("--corpus", required=True, help="corpus directory from build-corpus")
    p.add_argument("--model", default="dual", choices=("dual", "s2s", "s2s-sent"),
                   help="model kind")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--out", required=True, help="output directory for best.ckpt and epochs.jsonl")
    p.add_argument("--seed", type=int, default=None, help="override seed")
    p.add_argument("--max-epochs", type=int, default=None, help="override max epochs")
    p.add_argument("--batch-size", type=int, default=None, help="override batch size")
    p.add_argument("--learning-rate", type=float, default=None, help="override learning rate")
    p.add_argument("--embedding-dim", type=int, default=None, help="override embedding dim")
    p.add_argument("--hidden-dim", type=int, default=None, help="override hidden dim")
    p.add_argument("--patience", type=int, default=None, help="override early-stop patience")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", formatter_class=fmt,
                       help="greedy-decode both labels for every distinct post of a split")
    p.add_argument("--ckpt", required=True, help="checkpoint file")
    p.add_argument("--model", default=None, choices=("dual", "s2s", "s2s-sent"),
                   help="expected model kind (checked against the checkpoint)")
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--split", default="test", choices=corpus_mod.SPLIT_NAMES, help="split to read posts from")
    p.add_argument("--pos-lex", required=True, help="positive lexicon file")
    p.add_argument("--neg-lex", required=True, help="negative lexicon file")
    p.add_argument("--stopwords", default=None, help="optional stopword file")
    p.add_argument("--max-len", type=int, default=50, help="maximum generated tokens")
    p.add_argument("--out", required=True, help="output generations JSONL file")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", formatter_class=fmt,
                       help="score a generation file against a split")
    p.add_argument("--gen", required=True, help="generations file from the generate command")
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--split", default="test", choices=corpus_mod.SPLIT_NAMES,
                   help="split providing the reference responses")
    p.add_argument("--pos-lex", required=True, help="positive lexicon file")
    p.add_argument("--neg-lex", required=True, help="negative lexicon file")
    p.add_argument("--stopwords", default=None, help="optional stopword file")
    p.add_argument("--ckpt", default=None, help="checkpoint supplying response embeddings for Average")
    p.add_argument("--embeddings", default=None, help="external text embedding file (token v1 v2 ...)")
    p.add_argument("--model-name", default="model", help="row label in the rendered report")
    p.add_argument("--out", default=None, help="optional report JSON path")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "command", None) == "evaluate" and not (args.ckpt or args.embeddings):
        print("ValueError: evaluate needs --ckpt or --embeddings", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except SentigenError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"IoError: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"ValueError: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
