"""revrank: pairwise quality datasets, classifiers, and rankings from claim
revision histories."""

from .corpus import (
    ClaimVersion,
    Corpus,
    RevisionChain,
    RevisionType,
    RevisionTypeLabel,
    filter_language,
    filter_meaning_changes,
    filter_short_claims,
    load_corpus,
    normalize_revision_type,
    parse_corpus,
    save_corpus,
    serialize_corpus,
    text_similarity,
    tokenize,
)
from .errors import (
    ContractError,
    DegenerateInputError,
    NotFoundError,
    ParseError,
    RevRankError,
    ValidationError,
)
from .pairs import (
    ClaimPair,
    PairDataset,
    PairKind,
    balance_pairs,
    chain_max_distance_histogram,
    consecutive_pairs,
    distance_histogram,
    generate_pairs,
    read_pairs,
    transitive_pairs,
    write_pairs,
)
from .splits import cross_category_splits, random_split, top_categories

__version__ = "0.1.0"
