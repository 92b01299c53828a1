from .types import (
    MAX_DOSE_G,
    N_COMPONENTS,
    N_FORMULAS,
    N_HERBS,
    SEASONS,
    CorpusError,
    Phenotype,
    Prescription,
    component_kind,
    season_of_month,
)
from .codec import (
    VECTOR_SIZE,
    MalformedVectorError,
    decode_vector,
    encode_prescription,
    validate_encoded_vector,
)
from .zipf import (
    ZIPF_INTERVALS,
    ZipfModel,
    fit_zipf_exponent,
    reconstruct_weights,
    zipf_interval_center,
    zipf_token,
)
from .vocab import PAD, GO, EOS, UNK, Vocabulary
from .tokens import (
    BUCKETS,
    GrammarError,
    TokenSequence,
    bucket_of,
    build_source_vocab,
    build_target_vocab,
    detokenize_target,
    phenotype_tokens,
    prescription_tokens,
    schedule_text,
    tokenize_source,
    tokenize_target,
)
from .generator import GeneratorConfig, GroundTruth, Record, generate_corpus
from .io import read_corpus, write_corpus
from .labels import LabelSpace

__all__ = [
    "MAX_DOSE_G", "N_COMPONENTS", "N_FORMULAS", "N_HERBS", "SEASONS",
    "CorpusError", "Phenotype", "Prescription", "component_kind",
    "season_of_month", "VECTOR_SIZE", "MalformedVectorError",
    "decode_vector", "encode_prescription", "validate_encoded_vector",
    "ZIPF_INTERVALS", "ZipfModel", "fit_zipf_exponent",
    "reconstruct_weights", "zipf_interval_center", "zipf_token",
    "PAD", "GO", "EOS", "UNK", "Vocabulary", "BUCKETS", "GrammarError",
    "TokenSequence", "bucket_of", "build_source_vocab", "build_target_vocab",
    "detokenize_target", "phenotype_tokens", "prescription_tokens",
    "schedule_text", "tokenize_source", "tokenize_target", "GeneratorConfig",
    "GroundTruth", "Record", "generate_corpus", "read_corpus", "write_corpus",
    "LabelSpace",
]
