"""App file hashing.

Hashes identify an app independent of its file path.  Both digests are
computed so an answer can be correlated with either, as different tools
report different algorithms.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

# algorithm name -> expected hex digest length
_ALGORITHMS = {
    "SHA-256": 64,
    "MD5": 32,
}

_HASHLIB_NAMES = {
    "SHA-256": "sha256",
    "MD5": "md5",
}


@dataclass(frozen=True, order=True)
class Hash:
    algorithm: str
    value: str

    def __post_init__(self) -> None:
        if self.algorithm not in _ALGORITHMS:
            raise ValueError(f"unsupported hash algorithm: {self.algorithm!r}")
        value = self.value.lower()
        if len(value) != _ALGORITHMS[self.algorithm]:
            raise ValueError(
                f"{self.algorithm} digest must be "
                f"{_ALGORITHMS[self.algorithm]} hex chars, got {len(value)}")
        if any(c not in "0123456789abcdef" for c in value):
            raise ValueError(f"digest is not hexadecimal: {value!r}")
        object.__setattr__(self, "value", value)


def hash_bytes(data: bytes, algorithm: str = "SHA-256") -> Hash:
    if algorithm not in _HASHLIB_NAMES:
        raise ValueError(f"unsupported hash algorithm: {algorithm!r}")
    digest = hashlib.new(_HASHLIB_NAMES[algorithm], data).hexdigest()
    return Hash(algorithm, digest)


def hash_path(path: str | Path, algorithm: str = "SHA-256") -> Hash:
    return hash_bytes(Path(path).read_bytes(), algorithm)


def hash_pair(data: bytes) -> tuple[Hash, Hash]:
    """Both supported digests of the same bytes, SHA-256 first."""
    return (hash_bytes(data, "SHA-256"), hash_bytes(data, "MD5"))
