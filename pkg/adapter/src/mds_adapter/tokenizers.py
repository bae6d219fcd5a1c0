"""Minimal tokenizer interface the dump commands depend on.

Production runs wrap a HuggingFace tokenizer (HfTokenizer); tests and
small offline experiments can use WhitespaceTokenizer over a fixed word
list.  Only four operations are needed: encode, decode, ids -> token
strings, and the special-token ids the decode loop must know about.
"""

from __future__ import annotations

from typing import Protocol, Sequence


class Tokenizer(Protocol):
    vocab_size: int
    pad_id: int
    eos_id: int

    def encode(self, text: str) -> list[int]: ...
    def decode(self, ids: Sequence[int]) -> str: ...
    def tokens(self, ids: Sequence[int]) -> list[str]: ...


class WhitespaceTokenizer:
    """Word-level vocabulary; unknown words map to <unk>."""

    def __init__(self, words: Sequence[str]):
        self.specials = ["<pad>", "</s>", "<unk>"]
        self._vocab = self.specials + list(dict.fromkeys(words))
        self._ids = {w: i for i, w in enumerate(self._vocab)}
        self.vocab_size = len(self._vocab)
        self.pad_id = 0
        self.eos_id = 1
        self.unk_id = 2

    def encode(self, text: str) -> list[int]:
        return [self._ids.get(w, self.unk_id) for w in text.split()]

    def decode(self, ids) -> str:
        return " ".join(self._vocab[i] for i in ids
                        if i not in (self.pad_id, self.eos_id))

    def tokens(self, ids) -> list[str]:
        # verbatim, one string per id, so token indices stay aligned
        return [self._vocab[i] for i in ids]


class HfTokenizer:
    """Adapter over a HuggingFace tokenizer instance."""

    def __init__(self, hf_tokenizer):
        self._tok = hf_tokenizer
        self.vocab_size = len(hf_tokenizer)
        self.pad_id = hf_tokenizer.pad_token_id
        self.eos_id = hf_tokenizer.eos_token_id

    def encode(self, text: str) -> list[int]:
        return self._tok.encode(text, add_special_tokens=False)

    def decode(self, ids) -> str:
        return self._tok.decode(ids, skip_special_tokens=True)

    def tokens(self, ids) -> list[str]:
        return self._tok.convert_ids_to_tokens(list(ids))
