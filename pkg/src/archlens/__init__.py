"""archlens: character archetype detection and diachronic corpus analysis."""

from .data import (
    AttributeBag,
    CharacterRecord,
    CorruptionError,
    Dataset,
    EmbeddingMatrix,
    Finding,
    FormatError,
    Label,
    ParseError,
    parse_characters,
    read_characters,
    read_embeddings,
    read_labels,
    validate_dataset,
    with_labels,
    write_characters,
    write_embeddings,
)
from .distinctive import AttributeCounts, DistinctivenessTable, Sign, group_distinctiveness, top_attributes, zscore
from .evaluate import (
    EvalReport,
    Grouping,
    LogoScheme,
    SplitPlan,
    StratifiedKFoldScheme,
    cross_validate,
    error_over_time,
    make_splits,
)
from .features import (
    BowFeaturizer,
    EmbeddingFeaturizer,
    FeatureKind,
    Vocabulary,
    aggregate_embedding,
    bow_vector,
    build_vocabulary,
)
from .models import LinearModel, ModelKind, TrainConfig, Weighting, decision_score, load_model, predict, save_model, train

__version__ = "0.1.0"
