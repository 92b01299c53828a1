"""Token vocabularies for the two sentence languages.

Tokens are readable strings ("icd:4280", "sex:male", "comp:17", ...);
indices 0-3 are reserved for PAD, GO, EOS, UNK on both sides. Domain
tokens are assigned indices in a deterministic sorted order so vocabulary
construction is reproducible from any corpus ordering.
"""

from __future__ import annotations

import json
from pathlib import Path

PAD, GO, EOS, UNK = 0, 1, 2, 3
SPECIALS = ("<pad>", "<go>", "<eos>", "<unk>")

_KIND_ORDER = {"icd": 0, "sex": 1, "age": 2, "season": 3, "year": 4,
               "zipf": 5, "comp": 6, "sched": 7, "dur": 8}


def _sort_key(token: str) -> tuple:
    kind, _, value = token.partition(":")
    rank = _KIND_ORDER.get(kind, 99)
    try:
        return (rank, 0, int(value), token)
    except ValueError:
        return (rank, 1, 0, token)


class Vocabulary:
    """Bijection between token strings and contiguous indices."""

    def __init__(self, role: str, tokens=()):
        if role not in ("source", "target"):
            raise ValueError(f"role must be source or target, got {role!r}")
        self.role = role
        self._tokens: list[str] = list(SPECIALS)
        self._index: dict[str, int] = {t: i for i, t in enumerate(SPECIALS)}
        for t in sorted(set(tokens), key=_sort_key):
            self.add(t)

    def add(self, token: str) -> int:
        if token in self._index:
            return self._index[token]
        self._index[token] = len(self._tokens)
        self._tokens.append(token)
        return self._index[token]

    def index(self, token: str) -> int:
        """Index of token, falling back to UNK for unknown tokens."""
        return self._index.get(token, UNK)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def token(self, index: int) -> str:
        return self._tokens[index]

    def __len__(self) -> int:
        return len(self._tokens)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self._tokens)

    def indices_of_kind(self, kind: str) -> list[int]:
        """All indices whose token string has the given kind prefix."""
        prefix = kind + ":"
        return [i for i, t in enumerate(self._tokens) if t.startswith(prefix)]

    @classmethod
    def from_tokens(cls, role: str, tokens) -> "Vocabulary":
        """Rebuild a vocabulary from a full token list, preserving order.

        The list must start with the four specials; indices match list
        positions exactly (unlike the constructor, which sorts).
        """
        if role not in ("source", "target"):
            raise ValueError(f"role must be source or target, got {role!r}")
        vocab = cls.__new__(cls)
        vocab.role = role
        vocab._tokens = list(tokens)
        if tuple(vocab._tokens[:4]) != SPECIALS:
            raise ValueError("token list must start with the four specials")
        vocab._index = {t: i for i, t in enumerate(vocab._tokens)}
        if len(vocab._index) != len(vocab._tokens):
            raise ValueError("duplicate tokens in vocabulary")
        return vocab

    def save(self, path) -> None:
        Path(path).write_text(
            json.dumps({"role": self.role, "tokens": self._tokens}, indent=0) + "\n"
        )

    @classmethod
    def load(cls, path) -> "Vocabulary":
        blob = json.loads(Path(path).read_text())
        try:
            return cls.from_tokens(blob["role"], blob["tokens"])
        except ValueError as exc:
            raise ValueError(f"{path}: {exc}") from exc
