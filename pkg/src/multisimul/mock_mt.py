"""Deterministic mock translators implementing the incremental decode contract."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

from .corpus import TokenSequence
from .errors import InputError, TranslatorContractError
from .simul import EOS, DecodeResult, Vocabulary

__all__ = ["LexiconTranslator", "ReorderingTranslator", "load_lexicon"]

UNK_TAG = "<unk>"
KNOWN_MARGIN = 1.0
UNKNOWN_MARGIN = 0.5


def load_lexicon(path: str | Path) -> dict[str, str]:
    """TSV lexicon: one "src<TAB>tgt" entry per line."""
    lexicon: dict[str, str] = {}
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise InputError(f"{path}: malformed lexicon entry at line {lineno}: {line!r}")
        lexicon[fields[0]] = fields[1]
    return lexicon


class LexiconTranslator:
    """Word-for-word translator; one output token per input token.

    Known words translate with full margin; unknown words are copied (or
    tagged) at a reduced margin, so late averaging prefers a confident
    partner over a guess. With ``realign=True`` (the default) forced target
    tokens produced by other ensemble members are skipped by matching the
    forced prefix against this translator's own hypothesis as a subsequence;
    with ``realign=False`` any forced token that does not match positionally
    raises a contract error.
    """

    def __init__(
        self,
        lexicon: Mapping[str, str],
        unknown_policy: str = "copy",
        *,
        realign: bool = True,
    ):
        if unknown_policy not in ("copy", "tag"):
            raise ValueError(f"unknown_policy must be 'copy' or 'tag', got {unknown_policy!r}")
        self.lexicon = dict(lexicon)
        self.unknown_policy = unknown_policy
        self.realign = realign

    def _translate(self, token: str) -> tuple[str, float]:
        if token in self.lexicon:
            return self.lexicon[token], KNOWN_MARGIN
        if self.unknown_policy == "copy":
            return token, UNKNOWN_MARGIN
        return UNK_TAG, UNKNOWN_MARGIN

    def _hypothesis(
        self, source_prefix: TokenSequence, final: bool
    ) -> list[tuple[str, float]]:
        return [self._translate(tok) for tok in source_prefix.tokens]

    def output_tokens(self, source: TokenSequence) -> set[str]:
        tokens = {self._translate(tok)[0] for tok in source.tokens}
        tokens.add(EOS)
        return tokens

    def _consume_forced(
        self, hypothesis: list[tuple[str, float]], forced_target: Sequence[str]
    ) -> int:
        ptr = 0
        for forced in forced_target:
            if self.realign:
                for k in range(ptr, len(hypothesis)):
                    if hypothesis[k][0] == forced:
                        ptr = k + 1
                        break
            elif ptr < len(hypothesis) and hypothesis[ptr][0] == forced:
                ptr += 1
            else:
                raise TranslatorContractError(
                    f"forced token {forced!r} does not match hypothesis position {ptr}"
                )
        return ptr

    def decode(
        self,
        source_prefix: TokenSequence,
        forced_target: Sequence[str],
        vocab: Vocabulary,
        final: bool = False,
    ) -> DecodeResult:
        hypothesis = self._hypothesis(source_prefix, final)
        ptr = self._consume_forced(hypothesis, forced_target)
        continuation = hypothesis[ptr:]
        scores = [vocab.one_hot(tok, margin) for tok, margin in continuation]
        scores.append(vocab.one_hot(EOS, KNOWN_MARGIN))
        return DecodeResult(
            tuple(tok for tok, _ in continuation), tuple(scores), eos=True
        )


class ReorderingTranslator(LexiconTranslator):
    """Lexicon translator that guesses words of a deferred class until input ends.

    Source words in ``deferred`` translate to a provisional guess on partial
    input and to their real lexicon entry once end-of-input is signaled, so
    prefix hypotheses are unstable by construction.
    """

    def __init__(
        self,
        lexicon: Mapping[str, str],
        deferred: set[str],
        unknown_policy: str = "copy",
        *,
        realign: bool = True,
    ):
        super().__init__(lexicon, unknown_policy, realign=realign)
        self.deferred = set(deferred)

    def _guess(self, token: str) -> str:
        return f"<{token}?>"

    def _hypothesis(
        self, source_prefix: TokenSequence, final: bool
    ) -> list[tuple[str, float]]:
        out = []
        for tok in source_prefix.tokens:
            if tok in self.deferred and not final:
                out.append((self._guess(tok), UNKNOWN_MARGIN))
            else:
                out.append(self._translate(tok))
        return out

    def output_tokens(self, source: TokenSequence) -> set[str]:
        tokens = super().output_tokens(source)
        tokens |= {self._guess(tok) for tok in source.tokens if tok in self.deferred}
        return tokens
