"""Canonical JSON serialization.

One byte representation per value: keys sorted, separators compact, UTF-8,
no NaN/Infinity. Used both as the description-length complexity proxy and to
make exported records byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

from .errors import ValidationError


def canonical_bytes(value: Any) -> bytes:
    """Serialize a JSON tree to its canonical byte form."""
    try:
        text = json.dumps(
            value,
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
            allow_nan=False,
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"value is not canonically serializable: {exc}") from exc
    return text.encode("utf-8")


def check_round_trip(value: Any) -> None:
    """Require that a value survives serialize -> parse -> serialize byte-identically."""
    first = canonical_bytes(value)
    second = canonical_bytes(json.loads(first.decode("utf-8")))
    if first != second:
        raise ValidationError("value does not round-trip through canonical serialization")


def digest(value: Any, length: int = 16) -> str:
    """Short hex digest of a value's canonical form."""
    return hashlib.sha256(canonical_bytes(value)).hexdigest()[:length]
