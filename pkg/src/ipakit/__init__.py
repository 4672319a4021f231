"""ipakit: phonetics-aware phoneme embeddings, distillation, and evaluation."""

__version__ = "0.1.0"

from .inventory import (
    AttributeTable,
    Manner,
    Phoneme,
    PhonemeClass,
    Place,
    PronunciationSequence,
    UnknownSymbolError,
    default_table,
    load_attribute_table,
    parse_ipa,
    render,
)
from .embedding import (
    AttributeIndex,
    BaselineTable,
    EmbeddingMode,
    FeatureMatrix,
    attribute_index,
    attribute_vector,
    embed_sequence,
    embed_token,
)
from .lexicon import (
    ConversionFailure,
    CorpusPair,
    FrequencyTable,
    PronunciationDictionary,
    build_corpus,
    convert_sentence,
    load_dictionary,
    load_frequency_table,
    load_wordlist,
    split_validation,
    zipf_filter,
)
from .nonwords import (
    Nonword,
    SubstitutionTable,
    generate_nonwords,
    shared_attributes,
    starts_with_sole_consonant,
)
from .metrics import (
    ConsonantAttribute,
    PhonemeSpace,
    VowelAxis,
    attribute_map,
    average_precision,
    pca_export,
    silhouette,
    space_metrics,
    spearman,
    vowel_ground_truth_rankings,
    vowel_rank_correlation,
)
from .teacher import TeacherTable, read_teb, synthetic_teacher, write_teb
from .model import (
    CheckpointError,
    Mode,
    StudentConfig,
    StudentModel,
    load_checkpoint,
    save_checkpoint,
)
from .distill import Adam, EpochStats, grad_check, mse_loss, train
from .retrieval import (
    EmbeddedClass,
    HumanSimilarityTrial,
    RetrievalTarget,
    classify,
    fuse,
    human_similarity_correlation,
    nonword_retrieval,
    prompt,
)

__all__ = [
    "Adam",
    "AttributeIndex",
    "AttributeTable",
    "BaselineTable",
    "CheckpointError",
    "ConsonantAttribute",
    "ConversionFailure",
    "CorpusPair",
    "EmbeddedClass",
    "EmbeddingMode",
    "EpochStats",
    "FeatureMatrix",
    "FrequencyTable",
    "HumanSimilarityTrial",
    "Manner",
    "Mode",
    "Nonword",
    "Phoneme",
    "PhonemeClass",
    "PhonemeSpace",
    "Place",
    "PronunciationDictionary",
    "PronunciationSequence",
    "RetrievalTarget",
    "StudentConfig",
    "StudentModel",
    "SubstitutionTable",
    "TeacherTable",
    "UnknownSymbolError",
    "VowelAxis",
    "attribute_index",
    "attribute_map",
    "attribute_vector",
    "average_precision",
    "build_corpus",
    "classify",
    "convert_sentence",
    "default_table",
    "embed_sequence",
    "embed_token",
    "fuse",
    "generate_nonwords",
    "grad_check",
    "human_similarity_correlation",
    "load_attribute_table",
    "load_checkpoint",
    "load_dictionary",
    "load_frequency_table",
    "load_wordlist",
    "mse_loss",
    "nonword_retrieval",
    "parse_ipa",
    "pca_export",
    "prompt",
    "read_teb",
    "render",
    "save_checkpoint",
    "shared_attributes",
    "silhouette",
    "space_metrics",
    "spearman",
    "split_validation",
    "starts_with_sole_consonant",
    "synthetic_teacher",
    "train",
    "vowel_ground_truth_rankings",
    "vowel_rank_correlation",
    "write_teb",
    "zipf_filter",
]
