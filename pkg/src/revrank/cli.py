"""Command-line orchestration of the pipeline.

Subcommands: ingest, pairs, split, train, score, rank, eval, report, and
experiment (split -> train -> evaluate over seeds or category folds).
Runs are config-driven and deterministic; every output file starts with a
comment line carrying the config hash and seed list.

Exit codes: 0 success, 1 usage, 2 data error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluate as eval_mod
from .errors import (
    ContractError,
    DegenerateInputError,
    NotFoundError,
    ParseError,
    RevRankError,
    ValidationError,
)
from .features import EmbeddingStore, load_embeddings, version_features
from .models import (
    ModelKind,
    PairModel,
    TrainConfig,
    default_train_config,
    load_model,
    predict_prob,
    save_model,
    train_logreg,
)
from .pairs import (
    PairKind,
    balance_pairs,
    chain_max_distance_histogram,
    distance_histogram,
    generate_pairs,
    read_pairs,
    write_pairs,
)
from .ranking import (
    Ranking,
    btl_fit,
    btl_rank,
    btl_rank_fn,
    build_score_matrix,
    random_ranking,
    svmrank_rank,
    svmrank_train,
)
from .splits import (
    SplitSpec,
    cross_category_splits,
    random_split,
    split_corpus,
    write_split_manifest,
)

DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass
class RunConfig:
    """Flat configuration for a full experiment run.

    Defaults match the reference protocol: 80/20 chain split, similarity
    threshold 0.8, minimum claim length 4, top 20 categories, 5 seeds.
    """

    corpus: str = ""
    pairs: str = ""
    embeddings: str = ""
    out_dir: str = "."
    kind: str = "base"
    split: str = "random"
    model: str = "length"
    ranker: str = ""
    ratio: float = 0.8
    threshold: float = 0.8
    min_chars: int = 4
    k: int = 20
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    learning_rate: float = 0.0  # 0 = kind-dependent default
    epochs: int = 10
    l2: float = 1e-4
    batch_size: int = 64
    min_freq: int = 2
    svm_c: float = 1.0
    svm_epochs: int = 20
    svm_lr: float = 0.01
    gains: str = "linear"

    def hash(self) -> str:
        digest = hashlib.sha256()
        for key in sorted(vars(self)):
            digest.update(f"{key}={getattr(self, key)}\n".encode("utf-8"))
        return digest.hexdigest()[:12]

    def header(self) -> tuple[str, ...]:
        seeds = ",".join(str(s) for s in self.seeds)
        return (f"config={self.hash()} seeds={seeds}",)


def parse_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("config lines are key=value", line_no)
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def config_from_sources(file_values: dict[str, str], overrides: list[str]) -> RunConfig:
    config = RunConfig()
    merged = dict(file_values)
    for item in overrides:
        if "=" not in item:
            raise ContractError(f"override {item!r} is not key=value")
        key, _, value = item.partition("=")
        merged[key.strip()] = value.strip()
    for key, value in merged.items():
        if not hasattr(config, key):
            raise ContractError(f"unknown config key {key!r}")
        current = getattr(config, key)
        if key == "seeds":
            setattr(config, key, tuple(int(s) for s in value.split(",") if s))
        elif isinstance(current, bool):
            setattr(config, key, value.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(config, key, int(value))
        elif isinstance(current, float):
            setattr(config, key, float(value))
        else:
            setattr(config, key, value)
    return config


def _load_embeddings_if(path: str) -> EmbeddingStore | None:
    return load_embeddings(path) if path else None


def cmd_ingest(args: argparse.Namespace) -> int:
    raw = corpus_mod.load_corpus(args.input)
    staged = corpus_mod.filter_language(raw, args.language)
    staged = corpus_mod.filter_short_claims(staged, args.min_chars)
    staged = corpus_mod.filter_meaning_changes(staged, args.threshold)
    header = (
        f"config={_args_hash(args)} seeds=",
        f"ingest: {len(raw.chains)} chains in, {len(staged.chains)} out",
    )
    staged = corpus_mod.Corpus(staged.chains, header + staged.provenance)
    corpus_mod.save_corpus(staged, args.out)
    print(f"ingest: wrote {len(staged.chains)} chains to {args.out}")
    return 0


def cmd_pairs(args: argparse.Namespace) -> int:
    corp = corpus_mod.load_corpus(args.corpus)
    kind = PairKind.BASE if args.kind == "base" else PairKind.EXT
    dataset = generate_pairs(corp, kind)
    n_true = len(dataset.pairs)
    per_pair = distance_histogram(dataset)
    per_chain = chain_max_distance_histogram(corp)
    if not args.no_balance:
        dataset = balance_pairs(dataset, args.seed)
    write_pairs(
        dataset,
        args.out,
        header_comments=(f"config={_args_hash(args)} seeds={args.seed}",),
    )
    print(
        f"pairs: {n_true} true pairs ({kind.value}), wrote {len(dataset.pairs)} rows to {args.out}"
    )
    print(f"pairs: distance histogram (per pair): {dict(sorted(per_pair.items()))}")
    print(f"pairs: max-distance histogram (per chain): {dict(sorted(per_chain.items()))}")
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    corp = corpus_mod.load_corpus(args.corpus)
    header = (f"config={_args_hash(args)} seeds={args.seed}",)
    spec = SplitSpec(kind=args.split, train_ratio=args.ratio, seed=args.seed, k=args.k)
    rows: list[tuple[str, str, str]] = []
    for fold, train, test in split_corpus(corp, spec):
        rows += [(ch.chain_id, fold, "train") for ch in train.chains]
        rows += [(ch.chain_id, fold, "test") for ch in test.chains]
    write_split_manifest(rows, args.out, header_comments=header)
    print(f"split: wrote {len(rows)} manifest rows to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    kind = ModelKind(args.model)
    embeddings = _load_embeddings_if(args.embeddings)
    if kind in (ModelKind.LENGTH, ModelKind.RANDOM):
        model = PairModel(kind=kind, seed=args.seed)
    else:
        dataset = read_pairs(args.pairs)
        lr = args.learning_rate or default_train_config(kind).learning_rate
        config = TrainConfig(
            learning_rate=lr,
            epochs=args.epochs,
            l2=args.l2,
            batch_size=args.batch_size,
            seed=args.seed,
        )
        model = train_logreg(
            dataset, kind, config, embeddings=embeddings, min_freq=args.min_freq
        )
    save_model(model, args.out)
    print(f"train: wrote {kind.value} model to {args.out}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    embeddings = _load_embeddings_if(args.embeddings)
    model = load_model(args.model, embeddings=embeddings)
    dataset = read_pairs(args.pairs)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(f"# config={_args_hash(args)} seeds={model.seed}\n")
        fh.write("chain_id\tfirst_id\tsecond_id\tprob\tpredicted\n")
        for pair in dataset.pairs:
            prob = predict_prob(model, pair)
            fh.write(
                f"{pair.chain_id}\t{pair.first.version_id}\t{pair.second.version_id}"
                f"\t{prob:.6f}\t{1 if prob > 0.5 else 0}\n"
            )
    print(f"score: wrote {len(dataset.pairs)} rows to {args.out}")
    return 0


def _rankable_chains(corp: corpus_mod.Corpus) -> list[corpus_mod.RevisionChain]:
    return [ch for ch in corp.chains if len(ch.versions) >= 2]


def _svmrank_features(
    chains: list[corpus_mod.RevisionChain],
    train_chains: list[corpus_mod.RevisionChain],
    embeddings: EmbeddingStore | None,
    min_freq: int,
):
    from .features import LengthScaler, build_vocabulary, length_feature

    if embeddings is not None:
        def feats(chain):
            return [
                version_features(v.text, embedding=embeddings.lookup(v.version_id))
                for v in chain.versions
            ]
        return feats
    texts = [v.text for ch in train_chains for v in ch.versions]
    vocab = build_vocabulary(texts, min_freq=min_freq)
    scaler = LengthScaler.fit([length_feature(t) for t in texts])

    def feats(chain):
        return [version_features(v.text, vocab=vocab, scaler=scaler) for v in chain.versions]

    return feats


def cmd_rank(args: argparse.Namespace) -> int:
    corp = corpus_mod.load_corpus(args.corpus)
    chains = _rankable_chains(corp)
    embeddings = _load_embeddings_if(args.embeddings)
    rows: list[tuple[str, Ranking, str]] = []
    if args.ranker == "btl":
        if not args.model:
            raise ContractError("--ranker btl requires --model")
        model = load_model(args.model, embeddings=embeddings)
        for chain in chains:
            strengths = btl_fit(build_score_matrix(chain, model))
            ranking = btl_rank(strengths)
            rows.append(
                (chain.chain_id, ranking, ",".join(f"{s:.6f}" for s in strengths.values))
            )
    elif args.ranker == "svmrank":
        if not args.train_corpus:
            raise ContractError("--ranker svmrank requires --train-corpus")
        train_corp = corpus_mod.load_corpus(args.train_corpus)
        train_chains = _rankable_chains(train_corp)
        feats = _svmrank_features(chains, train_chains, embeddings, args.min_freq)
        ranker = svmrank_train(
            [feats(ch) for ch in train_chains],
            C=args.svm_c,
            epochs=args.svm_epochs,
            seed=args.seed,
            learning_rate=args.svm_lr,
        )
        for chain in chains:
            rows.append((chain.chain_id, svmrank_rank(ranker, feats(chain)), ""))
    else:  # random
        import random as _random

        rng = _random.Random(args.seed)
        for chain in chains:
            rows.append((chain.chain_id, random_ranking(len(chain.versions), rng), ""))

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(f"# config={_args_hash(args)} seeds={args.seed}\n")
        fh.write("chain_id\tpredicted_order\tstrengths\n")
        by_id = {ch.chain_id: ch for ch in chains}
        for chain_id, ranking, strengths in rows:
            chain = by_id[chain_id]
            ordered_ids = ",".join(chain.versions[i].version_id for i in ranking.order)
            fh.write(f"{chain_id}\t{ordered_ids}\t{strengths}\n")
    print(f"rank: wrote {len(rows)} rankings to {args.out}")
    return 0


def _read_rankings(path: str | Path) -> dict[str, list[str]]:
    orders: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#") or line.startswith("chain_id\t"):
                continue
            fields = line.split("\t")
            orders[fields[0]] = fields[1].split(",")
    return orders


def cmd_eval(args: argparse.Namespace) -> int:
    if args.task == "class":
        embeddings = _load_embeddings_if(args.embeddings)
        model = load_model(args.model, embeddings=embeddings)
        dataset = read_pairs(args.pairs)
        report = eval_mod.evaluate_classification(model, dataset, seed=args.seed)
    else:
        corp = corpus_mod.load_corpus(args.corpus)
        chains = _rankable_chains(corp)
        orders = _read_rankings(args.rankings)

        def rank_fn(chain: corpus_mod.RevisionChain) -> Ranking:
            if chain.chain_id not in orders:
                raise NotFoundError(f"no ranking for chain {chain.chain_id!r}")
            id_to_index = {v.version_id: v.index for v in chain.versions}
            try:
                return Ranking(tuple(id_to_index[vid] for vid in orders[chain.chain_id]))
            except KeyError as exc:
                raise NotFoundError(
                    f"ranking for chain {chain.chain_id!r} names unknown version {exc}"
                ) from None

        report = eval_mod.evaluate_ranking(rank_fn, chains, gains=args.gains, seed=args.seed)
    eval_mod.write_report(
        report, args.out, header_comments=(f"config={_args_hash(args)} seeds={args.seed}",)
    )
    print(f"eval: wrote {len(report.rows)} rows to {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    reports = [eval_mod.read_report(p) for p in args.inputs]
    aggregated = eval_mod.aggregate_report(reports) if len(reports) > 1 else reports[0]
    text = eval_mod.render_report(aggregated, title=args.title)
    if args.out:
        Path(args.out).write_text(f"# config={_args_hash(args)}\n" + text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


@dataclass
class _RunResult:
    report: object
    model: PairModel
    train_chains: object
    test_chains: object
    seed: int
    fold: str | None


def _experiment_splits(config: RunConfig, corp):
    if config.split == "random":
        for seed in config.seeds:
            train_chains, test_chains = random_split(corp, config.ratio, seed)
            yield train_chains, test_chains, seed, None
    else:
        seed = config.seeds[0]
        for held_out, train_chains, test_chains in cross_category_splits(corp, config.k):
            if train_chains.chains and test_chains.chains:
                yield train_chains, test_chains, seed, held_out


def _experiment_classification(config: RunConfig, corp, embeddings) -> list[_RunResult]:
    """One classification run per seed (random) or per fold (xcat)."""
    kind = PairKind.BASE if config.kind == "base" else PairKind.EXT
    model_kind = ModelKind(config.model)
    results: list[_RunResult] = []
    for train_chains, test_chains, seed, fold in _experiment_splits(config, corp):
        train_set = balance_pairs(generate_pairs(train_chains, kind), seed)
        test_set = balance_pairs(generate_pairs(test_chains, kind), seed + 1)
        if not train_set.pairs or not test_set.pairs:
            continue
        if model_kind in (ModelKind.LENGTH, ModelKind.RANDOM):
            model = PairModel(kind=model_kind, seed=seed)
        else:
            lr = config.learning_rate or default_train_config(model_kind).learning_rate
            tc = TrainConfig(
                learning_rate=lr,
                epochs=config.epochs,
                l2=config.l2,
                batch_size=config.batch_size,
                seed=seed,
            )
            model = train_logreg(
                train_set, model_kind, tc, embeddings=embeddings, min_freq=config.min_freq
            )
        report = eval_mod.evaluate_classification(model, test_set, seed=seed, fold=fold)
        results.append(_RunResult(report, model, train_chains, test_chains, seed, fold))
    return results


def _experiment_ranking(config: RunConfig, embeddings, runs: list[_RunResult]) -> list:
    reports = []
    for run in runs:
        chains = _rankable_chains(run.test_chains)
        if not chains:
            continue
        if config.ranker == "btl":
            rank_fn = btl_rank_fn(run.model)
        elif config.ranker == "svmrank":
            train_chains = _rankable_chains(run.train_chains)
            feats = _svmrank_features(chains, train_chains, embeddings, config.min_freq)
            ranker = svmrank_train(
                [feats(ch) for ch in train_chains],
                C=config.svm_c,
                epochs=config.svm_epochs,
                seed=run.seed,
                learning_rate=config.svm_lr,
            )

            def rank_fn(chain, _ranker=ranker, _feats=feats):
                return svmrank_rank(_ranker, _feats(chain))

        else:  # random
            rank_fn = eval_mod.random_rank_fn(run.seed)
        reports.append(
            eval_mod.evaluate_ranking(
                rank_fn, chains, gains=config.gains, seed=run.seed, fold=run.fold
            )
        )
    return reports


def cmd_experiment(args: argparse.Namespace) -> int:
    file_values = parse_config_file(args.config) if args.config else {}
    config = config_from_sources(file_values, args.set or [])
    for key in ("corpus", "kind", "split", "model", "ranker", "embeddings", "out_dir", "ratio", "k"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    if args.runs is not None:
        base = args.seed if args.seed is not None else 0
        config.seeds = tuple(range(base, base + args.runs))
    elif args.seed is not None:
        config.seeds = (args.seed,)
    corp = corpus_mod.load_corpus(config.corpus)
    embeddings = _load_embeddings_if(config.embeddings)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    runs = _experiment_classification(config, corp, embeddings)
    class_reports = [run.report for run in runs]
    for i, rep in enumerate(class_reports):
        eval_mod.write_report(rep, out_dir / f"class_run{i}.jsonl", config.header())
    class_agg = eval_mod.aggregate_report(class_reports)
    eval_mod.write_report(class_agg, out_dir / "class_aggregate.jsonl", config.header())
    (out_dir / "class_report.txt").write_text(
        f"# {config.header()[0]}\n"
        + eval_mod.render_report(
            class_agg, title=f"classification: {config.model} / {config.kind} / {config.split}"
        ),
        encoding="utf-8",
    )
    acc = class_agg.get("accuracy", fold="mean")
    print(f"experiment: classification accuracy (mean) = {acc:.4f}")

    if config.ranker:
        rank_reports = _experiment_ranking(config, embeddings, runs)
        for i, rep in enumerate(rank_reports):
            eval_mod.write_report(rep, out_dir / f"rank_run{i}.jsonl", config.header())
        rank_agg = eval_mod.aggregate_report(rank_reports)
        eval_mod.write_report(rank_agg, out_dir / "rank_aggregate.jsonl", config.header())
        (out_dir / "rank_report.txt").write_text(
            f"# {config.header()[0]}\n"
            + eval_mod.render_report(rank_agg, title=f"ranking: {config.ranker} / {config.model}"),
            encoding="utf-8",
        )
        print(f"experiment: ranking top1 (mean) = {rank_agg.get('top1', fold='mean'):.4f}")
    return 0


def _args_hash(args: argparse.Namespace) -> str:
    digest = hashlib.sha256()
    for key in sorted(vars(args)):
        if key == "func":
            continue
        digest.update(f"{key}={getattr(args, key)}\n".encode("utf-8"))
    return digest.hexdigest()[:12]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit code 1 on usage errors
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="revrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and filter a raw corpus file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--language", default="en")
    p.add_argument("--min-chars", dest="min_chars", type=int, default=4)
    p.add_argument("--threshold", type=float, default=0.8)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pairs", help="generate labeled claim pairs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--kind", choices=("base", "ext"), default="base")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-balance", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("split", help="write a train/test split manifest")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=("random", "xcat"), default="random")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a pairwise model")
    p.add_argument("--pairs", default="")
    p.add_argument("--model", choices=[k.value for k in ModelKind], required=True)
    p.add_argument("--embeddings", default="")
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=64)
    p.add_argument("--min-freq", dest="min_freq", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score pairs with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--embeddings", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rank", help="rank chains with BTL, SVMRank, or randomly")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ranker", choices=("btl", "svmrank", "random"), default="btl")
    p.add_argument("--model", default="")
    p.add_argument("--train-corpus", dest="train_corpus", default="")
    p.add_argument("--embeddings", default="")
    p.add_argument("--min-freq", dest="min_freq", type=int, default=2)
    p.add_argument("--svm-c", dest="svm_c", type=float, default=1.0)
    p.add_argument("--svm-epochs", dest="svm_epochs", type=int, default=20)
    p.add_argument("--svm-lr", dest="svm_lr", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="evaluate predictions or rankings")
    p.add_argument("--task", choices=("class", "rank"), required=True)
    p.add_argument("--model", default="")
    p.add_argument("--pairs", default="")
    p.add_argument("--embeddings", default="")
    p.add_argument("--rankings", default="")
    p.add_argument("--corpus", default="")
    p.add_argument("--gains", choices=("linear", "exponential"), default="linear")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="aggregate and render report files")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", default="")
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("experiment", help="split -> train -> evaluate per seed/fold")
    p.add_argument("--config", default="")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--corpus", default=None)
    p.add_argument("--kind", choices=("base", "ext"), default=None)
    p.add_argument("--split", choices=("random", "xcat"), default=None)
    p.add_argument("--model", choices=[k.value for k in ModelKind], default=None)
    p.add_argument("--ranker", choices=("btl", "svmrank", "random"), default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="base seed for --runs")
    p.add_argument("--runs", type=int, default=None, help="number of seeded runs")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, ValidationError, NotFoundError, DegenerateInputError, FileNotFoundError) as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return 2
    except (ContractError, RevRankError) as exc:
        sys.stderr.write(f"runtime error: {exc}\n")
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        sys.stderr.write(f"runtime error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
