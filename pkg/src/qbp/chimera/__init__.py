"""Chimera topology, check placement and two-level embedding."""
from .embedding import (
    ChimeraEmbedding,
    EmbeddingError,
    EmbeddingReport,
    HardwareProblem,
    build_embedding,
    build_hardware_problem,
    capacity,
    embed_code,
    extend_to_physical,
    level2_embed,
    unembed,
    verify_embedding,
)
from .graph import ChimeraGraph, neighbors
from .native import construct_qgem_code
from .placement import CodeLayout, PlacementError, place_checks, validate_layout
from .schemas import SchemaError, level1_embed, schema_type

__all__ = [
    "ChimeraEmbedding",
    "ChimeraGraph",
    "CodeLayout",
    "EmbeddingError",
    "EmbeddingReport",
    "HardwareProblem",
    "PlacementError",
    "SchemaError",
    "build_embedding",
    "build_hardware_problem",
    "capacity",
    "construct_qgem_code",
    "embed_code",
    "extend_to_physical",
    "level1_embed",
    "level2_embed",
    "neighbors",
    "place_checks",
    "schema_type",
    "unembed",
    "validate_layout",
    "verify_embedding",
]
