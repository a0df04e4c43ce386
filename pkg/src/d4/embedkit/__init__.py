"""Word-embedding ingestion, debiasing pipeline, and bias metrics."""

from .analysis import (
    LexiconData,
    ProfessionRecord,
    ProfessionReport,
    WeatResult,
    bias_by_neighbour,
    debias,
    gender_direction,
    lexicon_lookup,
    linear_probe_cv,
    nearest_neighbours,
    probe_trajectory_cv,
    profession_neighbour_counts,
    recoverability_probe,
    weat,
)
from .io import (
    EMBEDDING_FORMATS,
    EmbeddingSet,
    GenderLexicon,
    WeatSpec,
    load_embeddings,
    load_gender_lexicon,
    load_weat_spec,
    load_word2vec_binary,
    load_word2vec_text,
    load_word_list,
    load_word_sections,
    save_embeddings,
    save_word2vec_binary,
    save_word2vec_text,
)
from .synthetic import PlantedEmbedding, make_planted_embedding

__all__ = [
    "EMBEDDING_FORMATS",
    "EmbeddingSet",
    "GenderLexicon",
    "LexiconData",
    "PlantedEmbedding",
    "ProfessionRecord",
    "ProfessionReport",
    "WeatResult",
    "WeatSpec",
    "bias_by_neighbour",
    "debias",
    "gender_direction",
    "lexicon_lookup",
    "linear_probe_cv",
    "load_embeddings",
    "load_gender_lexicon",
    "load_weat_spec",
    "load_word2vec_binary",
    "load_word2vec_text",
    "load_word_list",
    "load_word_sections",
    "make_planted_embedding",
    "nearest_neighbours",
    "probe_trajectory_cv",
    "profession_neighbour_counts",
    "recoverability_probe",
    "save_embeddings",
    "save_word2vec_binary",
    "save_word2vec_text",
    "weat",
]
