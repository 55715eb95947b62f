"""Entity-aware transformer reader with a question-gated relational graph module.

Pure numpy (float64) with a small reverse-mode autodiff, for cloze-style
reading comprehension where the answer is one of the document's entity mentions.
"""

from .errors import (
    BoundsError,
    CheckpointError,
    ConfigError,
    DimensionError,
    DomainError,
    GenerationError,
    LukeGraphError,
    ParseError,
    TrainingError,
    UsageError,
    ValidationError,
)
from .graph import EntityGraph, Relation, brute_force_graph, build_graph, export_graph
from .gated_rgat import Ablation
from .harness import Checkpoint, LukeGraphModel, RunConfig, evaluate, train

__version__ = "0.1.0"
