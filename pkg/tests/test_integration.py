"""Full-protocol rehearsal on a synthetic corpus with a real quality signal.

Later versions are longer and carry hedging-removal markers, so a learned
model must beat the random baseline and pairwise scores must aggregate into
better-than-random rankings. This exercises the exact pipeline the released
corpus would flow through.
"""

import random

from revrank.cli import main
from revrank.corpus import save_corpus
from revrank.evaluate import (
    evaluate_classification,
    evaluate_ranking,
    read_report,
)
from revrank.models import ModelKind, TrainConfig, train_logreg
from revrank.pairs import PairKind, balance_pairs, generate_pairs
from revrank.ranking import btl_rank_fn
from revrank.splits import random_split

from .conftest import make_chain, make_corpus

FILLERS = ["maybe", "arguably", "somewhat", "perhaps", "possibly"]
CONTENT = ["taxes", "education", "rivers", "healthcare", "energy", "transit", "housing"]


def quality_corpus(n_chains=120, seed=0):
    """Chains whose versions monotonically lose filler words and gain content."""
    rng = random.Random(seed)
    chains = []
    for i in range(n_chains):
        length = rng.randint(2, 5)
        topic = rng.choice(CONTENT)
        base = [f"the policy on {topic} is", "important", "for", "people"]
        versions = []
        for v in range(length):
            fillers = rng.sample(FILLERS, k=max(0, 3 - v))
            extra = [rng.choice(CONTENT) for _ in range(v)]
            words = base + fillers + extra + (["because", "evidence", "shows"] if v >= 2 else [])
            versions.append(" ".join(words))
        chains.append(
            make_chain(
                f"q{i}",
                versions,
                categories=(rng.choice(["Politics", "Ethics", "Economics"]),),
                types=["clarified"] * (length - 1),
            )
        )
    return make_corpus(chains)


class TestLearnedPipeline:
    def test_sbow_beats_random_split_protocol(self):
        corpus = quality_corpus()
        accs = []
        for seed in range(2):
            train, test = random_split(corpus, 0.8, seed)
            train_set = balance_pairs(generate_pairs(train, PairKind.BASE), seed)
            test_set = balance_pairs(generate_pairs(test, PairKind.BASE), seed + 1)
            model = train_logreg(
                train_set,
                ModelKind.LOGREG_BOW_LEN,
                TrainConfig(learning_rate=0.3, epochs=15, seed=seed),
                min_freq=1,
            )
            accs.append(evaluate_classification(model, test_set).get("accuracy"))
        assert sum(accs) / len(accs) > 0.8

    def test_btl_over_learned_scores_beats_random_ranking(self):
        corpus = quality_corpus(80, seed=1)
        train, test = random_split(corpus, 0.8, 0)
        train_set = balance_pairs(generate_pairs(train, PairKind.EXT), 0)
        model = train_logreg(
            train_set,
            ModelKind.LOGREG_BOW_LEN,
            TrainConfig(learning_rate=0.3, epochs=15, seed=0),
            min_freq=1,
        )
        test_chains = [ch for ch in test.chains if len(ch.versions) >= 2]
        report = evaluate_ranking(btl_rank_fn(model), test_chains)
        assert report.get("top1") > 0.6
        assert report.get("spearman_rho") > 0.5


class TestExperimentCommandFullProtocol:
    def run_experiment(self, tmp_path, corpus, **overrides):
        corpus_path = tmp_path / "corpus.jsonl"
        save_corpus(corpus, corpus_path)
        out_dir = tmp_path / "out"
        args = ["experiment", "--set", f"corpus={corpus_path}", "--set", f"out_dir={out_dir}"]
        for key, value in overrides.items():
            args += ["--set", f"{key}={value}"]
        assert main(args) == 0
        return out_dir

    def test_sbow_len_with_btl(self, tmp_path):
        out_dir = self.run_experiment(
            tmp_path,
            quality_corpus(60, seed=2),
            model="sbow-len",
            ranker="btl",
            seeds="0,1",
            min_freq="1",
            learning_rate="0.3",
            epochs="12",
        )
        class_agg = read_report(out_dir / "class_aggregate.jsonl")
        rank_agg = read_report(out_dir / "rank_aggregate.jsonl")
        assert class_agg.get("accuracy", fold="mean") > 0.75
        assert rank_agg.get("top1", fold="mean") > 0.5
        assert rank_agg.get("ndcg", fold="mean") > 0.9

    def test_sbow_with_svmrank_xcat(self, tmp_path):
        out_dir = self.run_experiment(
            tmp_path,
            quality_corpus(90, seed=3),
            model="sbow-len",
            ranker="svmrank",
            split="xcat",
            k="3",
            min_freq="1",
            learning_rate="0.3",
            epochs="12",
            svm_lr="0.05",
            svm_epochs="30",
        )
        class_agg = read_report(out_dir / "class_aggregate.jsonl")
        rank_agg = read_report(out_dir / "rank_aggregate.jsonl")
        assert class_agg.get("accuracy", fold="mean") > 0.7
        # the hinge ranker sees the monotone signal
        assert rank_agg.get("spearman_rho", fold="mean") > 0.4
        folds = {row.fold for row in class_agg.rows if row.fold not in (None, "mean")}
        assert len(folds) == 3
