from .encoding import PLACEHOLDER_ITEM, EntityItem, ModelInput, encode_example
from .schema import (
    PLACEHOLDER,
    Example,
    Mention,
    example_from_json,
    example_to_json,
    make_example,
    parse_dataset,
    serialize_dataset,
    validate_example,
    write_dataset,
)
from .synthetic import SyntheticConfig, gen_synthetic, two_hop_answers
from .text import Token, answer_normalize, split_sentences, tokenize
from .vocab import ENTITY_SPECIALS, WORD_SPECIALS, Vocab, build_vocab
