"""Grammar-constrained greedy decoding engine for named entity extraction."""

from .decode import (
    DecodeResult,
    Scorer,
    default_max_steps,
    greedy_decode,
    hallucination_count,
    unconstrained_decode,
)
from .encoding import (
    EncodedExample,
    Entity,
    encode_example,
    entities_to_iob,
    inference_prefix,
    iob_to_entities,
    parse_entity_string,
)
from .grammar import (
    MASK_SENTINEL,
    DecoderState,
    EntityTypeSet,
    advance,
    allowed_tokens,
    apply_mask,
    compile_types,
    is_grammatical,
    is_terminal,
    new_session,
    select_token,
)
from .metrics import EvalReport, match_entities, match_entities_positional, micro_f1
from .oracle import RandomScorer, TeacherScorer, enumerate_valid_strings, teacher_score
from .vocab import (
    DEFAULT_MARKERS,
    Tokenizer,
    Vocabulary,
    WhitespaceTokenizer,
    build_vocabulary,
    whitespace_tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MARKERS",
    "MASK_SENTINEL",
    "DecodeResult",
    "DecoderState",
    "EncodedExample",
    "Entity",
    "EntityTypeSet",
    "EvalReport",
    "RandomScorer",
    "Scorer",
    "TeacherScorer",
    "Tokenizer",
    "Vocabulary",
    "WhitespaceTokenizer",
    "advance",
    "allowed_tokens",
    "apply_mask",
    "build_vocabulary",
    "compile_types",
    "default_max_steps",
    "encode_example",
    "entities_to_iob",
    "enumerate_valid_strings",
    "greedy_decode",
    "hallucination_count",
    "inference_prefix",
    "iob_to_entities",
    "is_grammatical",
    "is_terminal",
    "match_entities",
    "match_entities_positional",
    "micro_f1",
    "new_session",
    "parse_entity_string",
    "select_token",
    "teacher_score",
    "unconstrained_decode",
    "whitespace_tokenize",
]
