"""Data model and ingestion: token sequences, parallel documents, transcripts, alignments."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import AlignmentMismatchError, ContractError, InputError, ParseError

__all__ = [
    "TokenSequence",
    "ParallelDocument",
    "TranscriptPair",
    "WordAlignment",
    "tokenize_13a",
    "normalize_transcript",
    "load_parallel",
    "load_transcript_pairs",
    "save_parallel",
    "load_word_alignment",
    "char_fraction",
]


@dataclass(frozen=True)
class TokenSequence:
    """A tokenized sentence together with its raw character form.

    ``char_offsets[i]`` is the start of ``tokens[i]`` inside ``raw``. The raw
    string is stripped of leading/trailing whitespace so that the last token
    ends exactly at ``len(raw)``.
    """

    tokens: tuple[str, ...]
    raw: str
    char_offsets: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.char_offsets):
            raise ContractError("tokens and char_offsets must have equal length")
        prev_end = -1
        for tok, off in zip(self.tokens, self.char_offsets):
            if not tok:
                raise ContractError("tokens must be non-empty strings")
            if off <= prev_end:
                raise ContractError("char_offsets must be strictly increasing")
            if self.raw[off : off + len(tok)] != tok:
                raise ContractError(
                    f"token {tok!r} does not occur in raw text at offset {off}"
                )
            prev_end = off

    @classmethod
    def from_raw(cls, raw: str) -> "TokenSequence":
        """Whitespace-split ``raw`` keeping per-token character offsets."""
        raw = raw.strip()
        tokens: list[str] = []
        offsets: list[int] = []
        for match in re.finditer(r"\S+", raw):
            tokens.append(match.group())
            offsets.append(match.start())
        return cls(tuple(tokens), raw, tuple(offsets))

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "TokenSequence":
        """Build a sequence whose raw form is the single-space join of tokens."""
        raw = " ".join(tokens)
        offsets = []
        pos = 0
        for tok in tokens:
            offsets.append(pos)
            pos += len(tok) + 1
        return cls(tuple(tokens), raw, tuple(offsets))

    def __len__(self) -> int:
        return len(self.tokens)

    def prefix(self, k: int) -> "TokenSequence":
        """First ``k`` tokens with the raw text cut at the end of token ``k``."""
        if not 0 <= k <= len(self.tokens):
            raise ContractError(f"prefix length {k} out of range 0..{len(self.tokens)}")
        if k == 0:
            return TokenSequence((), "", ())
        end = self.char_offsets[k - 1] + len(self.tokens[k - 1])
        return TokenSequence(self.tokens[:k], self.raw[:end], self.char_offsets[:k])


@dataclass(frozen=True)
class ParallelDocument:
    """Line-aligned sentences in two or more languages."""

    languages: tuple[str, ...]
    sentences: tuple[tuple[TokenSequence, ...], ...]

    def __post_init__(self) -> None:
        for i, tup in enumerate(self.sentences):
            if len(tup) != len(self.languages):
                raise ContractError(
                    f"sentence {i} has {len(tup)} entries, expected {len(self.languages)}"
                )

    def __len__(self) -> int:
        return len(self.sentences)

    def column(self, language: str) -> list[TokenSequence]:
        idx = self.languages.index(language)
        return [tup[idx] for tup in self.sentences]


@dataclass(frozen=True)
class TranscriptPair:
    """A gold transcript and the corresponding ASR hypothesis."""

    gold: TokenSequence
    hyp: TokenSequence


@dataclass(frozen=True)
class WordAlignment:
    """Cross-lingual word alignment links for one sentence pair."""

    links: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def validate(self, src_len: int, tgt_len: int) -> None:
        for i, j in self.links:
            if not (0 <= i < src_len and 0 <= j < tgt_len):
                raise ContractError(
                    f"alignment link ({i},{j}) out of bounds for lengths "
                    f"({src_len},{tgt_len})"
                )


def tokenize_13a(raw: str) -> TokenSequence:
    """Tokenize with the mteval-13a scheme used by sacre-style scorers.

    The raw form of the result is the space-joined token string, so the
    function is idempotent under re-joining and re-tokenizing.
    """
    norm = raw
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")
    norm = f" {norm} "
    norm = re.sub(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])", r" \1 ", norm)
    norm = re.sub(r"([^0-9])([\.,])", r"\1 \2 ", norm)
    norm = re.sub(r"([\.,])([^0-9])", r" \1 \2", norm)
    norm = re.sub(r"([0-9])(-)", r"\1 \2 ", norm)
    return TokenSequence.from_tokens(norm.split())


def normalize_transcript(raw: str, *, lowercase: bool = True, strip_punct: bool = False) -> TokenSequence:
    """Whitespace tokenization of a transcript with optional normalization.

    Default keeps punctuation and lowercases, the setting used before
    Levenshtein alignment of gold/ASR transcripts.
    """
    text = raw.lower() if lowercase else raw
    if strip_punct:
        text = "".join(
            " " if unicodedata.category(ch).startswith("P") else ch for ch in text
        )
    return TokenSequence.from_raw(text)


def _read_lines(path: Path) -> list[str]:
    data = path.read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise InputError(f"{path}: UTF-8 decoding failed on line {line}") from exc
    text = text.replace("\r\n", "\n")
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n") if text else []


def load_parallel(paths: Mapping[str, str | Path]) -> ParallelDocument:
    """Load one sentence-per-line file per language into a ParallelDocument."""
    if not paths:
        raise ContractError("at least one language file is required")
    languages = tuple(paths)
    columns: dict[str, list[str]] = {}
    for lang, path in paths.items():
        columns[lang] = _read_lines(Path(path))
    counts = {lang: len(lines) for lang, lines in columns.items()}
    first_lang = languages[0]
    for lang in languages[1:]:
        if counts[lang] != counts[first_lang]:
            raise AlignmentMismatchError(
                f"line-count mismatch: {paths[first_lang]} has {counts[first_lang]} "
                f"lines but {paths[lang]} has {counts[lang]}"
            )
    sentences = tuple(
        tuple(TokenSequence.from_raw(columns[lang][i]) for lang in languages)
        for i in range(counts[first_lang])
    )
    return ParallelDocument(languages, sentences)


def save_parallel(doc: ParallelDocument, paths: Mapping[str, str | Path]) -> None:
    """Write a ParallelDocument back to one file per language."""
    for lang, path in paths.items():
        lines = [seq.raw for seq in doc.column(lang)]
        Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def load_transcript_pairs(
    gold_path: str | Path,
    hyp_path: str | Path,
    *,
    lowercase: bool = True,
    strip_punct: bool = False,
) -> list[TranscriptPair]:
    """Load line-aligned gold and ASR transcripts, applying normalization toggles."""
    gold_lines = _read_lines(Path(gold_path))
    hyp_lines = _read_lines(Path(hyp_path))
    if len(gold_lines) != len(hyp_lines):
        raise AlignmentMismatchError(
            f"line-count mismatch: {gold_path} has {len(gold_lines)} lines but "
            f"{hyp_path} has {len(hyp_lines)}"
        )
    return [
        TranscriptPair(
            normalize_transcript(g, lowercase=lowercase, strip_punct=strip_punct),
            normalize_transcript(h, lowercase=lowercase, strip_punct=strip_punct),
        )
        for g, h in zip(gold_lines, hyp_lines)
    ]


_PHARAOH_RE = re.compile(r"^(\d+)-(\d+)$")


def load_word_alignment(path: str | Path) -> list[WordAlignment]:
    """Parse Pharaoh-format ("i-j" pairs, one line per sentence pair) alignments."""
    alignments: list[WordAlignment] = []
    for lineno, line in enumerate(_read_lines(Path(path)), start=1):
        links: set[tuple[int, int]] = set()
        col = 1
        for field_ in line.split():
            m = _PHARAOH_RE.match(field_)
            if m is None:
                raise ParseError(
                    f"{path}: malformed alignment pair {field_!r} at line {lineno}, "
                    f"column {col}"
                )
            links.add((int(m.group(1)), int(m.group(2))))
            col += len(field_) + 1
        alignments.append(WordAlignment(frozenset(links)))
    return alignments


def char_fraction(sentence: TokenSequence, prefix_len: int) -> float:
    """Fraction of raw characters covered by the first ``prefix_len`` tokens."""
    if not 0 <= prefix_len <= len(sentence.tokens):
        raise ContractError(
            f"prefix_len {prefix_len} out of range 0..{len(sentence.tokens)}"
        )
    if prefix_len == 0:
        return 1.0 if not sentence.raw else 0.0
    covered = sentence.char_offsets[prefix_len - 1] + len(sentence.tokens[prefix_len - 1])
    return covered / len(sentence.raw)
