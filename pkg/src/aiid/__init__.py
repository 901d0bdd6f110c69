"""aiid: cryptographic identity toolchain for AI models.

Gives every stable weight configuration a verifiable identity:

* ``aiw``      -- canonical, bit-exact serialization of model weights (AIW1)
* ``identity`` -- weight commitments, namespaced AI-IDs, human-readable labels
* ``lzjd``     -- Lempel-Ziv Jaccard distance screening for structural drift
* ``ledger``   -- append-only hash-chained registry with a status lifecycle
* ``zkboo``    -- MPC-in-the-head proof of possession of a registered commitment
* ``service``  -- HTTP registry/checkpoint endpoint
* ``cli``      -- operator command line
"""

__version__ = "0.1.0"

from .aiw import CanonicalTensorRecord, Dtype, WeightManifest, canonical_parse, canonical_serialize
from .identity import (
    Commitment,
    IssuerNamespace,
    PrimaryIdentifier,
    SecondaryIdentifier,
    build_secondary_id,
    compute_commitment,
    derive_ai_id,
    parse_secondary_id,
)

__all__ = [
    "CanonicalTensorRecord",
    "Commitment",
    "Dtype",
    "IssuerNamespace",
    "PrimaryIdentifier",
    "SecondaryIdentifier",
    "WeightManifest",
    "build_secondary_id",
    "canonical_parse",
    "canonical_serialize",
    "compute_commitment",
    "derive_ai_id",
    "parse_secondary_id",
]
