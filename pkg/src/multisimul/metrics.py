"""Scoring: edit alignment, WER, BLEU, chrF2, latency, erasure, bootstrap, chi-square."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .corpus import TokenSequence, TranscriptPair, tokenize_13a
from .errors import ContractError, DegenerateTableError
from .simul import FlushEvent, ReadEvent, ReviseEvent, SimulEventLog, WriteEvent

__all__ = [
    "EditOp",
    "EditScript",
    "WerBreakdown",
    "Contingency2x2",
    "ChiSquareResult",
    "LatencyReport",
    "ErasureReport",
    "BootstrapResult",
    "align_edit",
    "wer",
    "corpus_wer",
    "token_correctness",
    "chi_square_2x2",
    "bleu",
    "chrf2",
    "average_lagging",
    "normalized_erasure",
    "paired_bootstrap",
]

Tokens = Union[TokenSequence, Sequence[str]]

BLEU_ORDER = 4
CHRF_ORDER = 6
CHRF_BETA = 2.0

COPY = "copy"
SUBSTITUTE = "sub"
DELETE = "del"
INSERT = "ins"


def _tokens(seq: Tokens) -> list[str]:
    if isinstance(seq, TokenSequence):
        return list(seq.tokens)
    return list(seq)


@dataclass(frozen=True)
class EditOp:
    kind: str
    gold: str | None = None
    hyp: str | None = None


@dataclass(frozen=True)
class EditScript:
    """Minimal-cost alignment of a gold token sequence to a hypothesis."""

    ops: tuple[EditOp, ...]

    @property
    def cost(self) -> int:
        return sum(op.kind != COPY for op in self.ops)

    def gold_side(self) -> list[str]:
        return [op.gold for op in self.ops if op.kind in (COPY, SUBSTITUTE, DELETE)]

    def hyp_side(self) -> list[str]:
        return [op.hyp for op in self.ops if op.kind in (COPY, SUBSTITUTE, INSERT)]

    def counts(self) -> tuple[int, int, int]:
        """(substitutions, deletions, insertions)."""
        subs = sum(op.kind == SUBSTITUTE for op in self.ops)
        dels = sum(op.kind == DELETE for op in self.ops)
        inss = sum(op.kind == INSERT for op in self.ops)
        return subs, dels, inss


def align_edit(gold: Tokens, hyp: Tokens) -> EditScript:
    """Unit-cost Levenshtein alignment with deterministic tie-breaking.

    When costs tie the left-to-right walk prefers Copy over Substitute over
    Delete over Insert.
    """
    g = _tokens(gold)
    h = _tokens(hyp)
    n, m = len(g), len(h)
    # dist[i][j] = edit distance between g[i:] and h[j:]
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for j in range(m + 1):
        dist[n][j] = m - j
    for i in range(n - 1, -1, -1):
        dist[i][m] = n - i
        row, below = dist[i], dist[i + 1]
        for j in range(m - 1, -1, -1):
            diag = below[j + 1] + (g[i] != h[j])
            row[j] = min(diag, below[j] + 1, row[j + 1] + 1)
    ops: list[EditOp] = []
    i = j = 0
    while i < n or j < m:
        d = dist[i][j]
        if i < n and j < m and g[i] == h[j] and d == dist[i + 1][j + 1]:
            ops.append(EditOp(COPY, gold=g[i], hyp=h[j]))
            i += 1
            j += 1
        elif i < n and j < m and g[i] != h[j] and d == 1 + dist[i + 1][j + 1]:
            ops.append(EditOp(SUBSTITUTE, gold=g[i], hyp=h[j]))
            i += 1
            j += 1
        elif i < n and d == 1 + dist[i + 1][j]:
            ops.append(EditOp(DELETE, gold=g[i]))
            i += 1
        else:
            ops.append(EditOp(INSERT, hyp=h[j]))
            j += 1
    return EditScript(tuple(ops))


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    gold_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float | None:
        """None when gold is empty (undefined rate)."""
        if self.gold_words == 0:
            return None
        return self.errors / self.gold_words


def wer(gold: Tokens, hyp: Tokens) -> WerBreakdown:
    script = align_edit(gold, hyp)
    subs, dels, inss = script.counts()
    return WerBreakdown(subs, dels, inss, len(_tokens(gold)))


def corpus_wer(pairs: Iterable[TranscriptPair | tuple[Tokens, Tokens]]) -> float:
    """Corpus WER: total errors over total gold words (gold-word-weighted mean)."""
    errors = 0
    gold_words = 0
    for pair in pairs:
        if isinstance(pair, TranscriptPair):
            g, h = pair.gold, pair.hyp
        else:
            g, h = pair
        breakdown = wer(g, h)
        errors += breakdown.errors
        gold_words += breakdown.gold_words
    if gold_words == 0:
        raise ContractError("corpus_wer needs at least one pair with non-empty gold")
    return errors / gold_words


def token_correctness(script: EditScript) -> list[bool]:
    """Per-gold-token correctness: True iff the token is aligned by Copy."""
    return [op.kind == COPY for op in script.ops if op.kind != INSERT]


@dataclass(frozen=True)
class Contingency2x2:
    """Counts indexed (src correct|incorrect) x (tgt correct|incorrect)."""

    cells: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self) -> None:
        for row in self.cells:
            for v in row:
                if v < 0:
                    raise ContractError("contingency counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.cells)

    def row_sums(self) -> tuple[int, int]:
        return (sum(self.cells[0]), sum(self.cells[1]))

    def col_sums(self) -> tuple[int, int]:
        return (
            self.cells[0][0] + self.cells[1][0],
            self.cells[0][1] + self.cells[1][1],
        )

    def transpose(self) -> "Contingency2x2":
        c = self.cells
        return Contingency2x2(((c[0][0], c[1][0]), (c[0][1], c[1][1])))


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float
    df: int = 1

    def reject_at(self, alpha: float) -> bool:
        return self.p_value < alpha


def chi_square_2x2(table: Contingency2x2, *, yates: bool = False) -> ChiSquareResult:
    """Pearson chi-square test of independence on a 2x2 table.

    The p-value is the exact chi-square(1) upper tail, erfc(sqrt(x/2)).
    Yates continuity correction is off by default.
    """
    rows = table.row_sums()
    cols = table.col_sums()
    total = table.total
    if min(rows) == 0 or min(cols) == 0:
        raise DegenerateTableError(
            f"degenerate table: row sums {rows}, column sums {cols}"
        )
    statistic = 0.0
    for r in range(2):
        for c in range(2):
            expected = rows[r] * cols[c] / total
            diff = abs(table.cells[r][c] - expected)
            if yates:
                diff = max(diff - 0.5, 0.0)
            statistic += diff * diff / expected
    p_value = math.erfc(math.sqrt(statistic / 2.0))
    return ChiSquareResult(statistic, p_value)


def _ngram_counts(tokens: list[str], order: int) -> Counter:
    counts: Counter = Counter()
    for n in range(1, order + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


def _bleu_sentence_stats(
    hyp: str, refs: Sequence[str]
) -> tuple[list[int], list[int], int, int]:
    """(correct[4], total[4], sys_len, closest_ref_len) for one segment."""
    hyp_tokens = list(tokenize_13a(hyp).tokens)
    ref_token_lists = [list(tokenize_13a(r).tokens) for r in refs]

    closest_len = None
    closest_diff = None
    ref_ngrams: Counter = Counter()
    for ref_tokens in ref_token_lists:
        diff = abs(len(hyp_tokens) - len(ref_tokens))
        if closest_diff is None or diff < closest_diff or (
            diff == closest_diff and len(ref_tokens) < closest_len
        ):
            closest_diff = diff
            closest_len = len(ref_tokens)
        for ngram, count in _ngram_counts(ref_tokens, BLEU_ORDER).items():
            ref_ngrams[ngram] = max(ref_ngrams[ngram], count)

    correct = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    for ngram, count in _ngram_counts(hyp_tokens, BLEU_ORDER).items():
        n = len(ngram)
        total[n - 1] += count
        correct[n - 1] += min(count, ref_ngrams.get(ngram, 0))
    return correct, total, len(hyp_tokens), closest_len


def _bleu_from_stats(
    correct: Sequence[int], total: Sequence[int], sys_len: int, ref_len: int
) -> float:
    """Corpus BLEU from summed statistics, exponential smoothing, fixed order 4."""
    log_precisions = 0.0
    smooth = 1.0
    for n in range(1, BLEU_ORDER + 1):
        if total[n - 1] == 0:
            return 0.0
        if correct[n - 1] == 0:
            smooth *= 2.0
            precision = 100.0 / (smooth * total[n - 1])
        else:
            precision = 100.0 * correct[n - 1] / total[n - 1]
        log_precisions += math.log(precision)
    brevity_penalty = 1.0
    if sys_len < ref_len:
        brevity_penalty = math.exp(1 - ref_len / sys_len) if sys_len > 0 else 0.0
    return brevity_penalty * math.exp(log_precisions / BLEU_ORDER)


def _check_corpus_args(hyps: Sequence[str], refs: Sequence[Sequence[str]]) -> None:
    if not refs:
        raise ContractError("at least one reference set is required")
    for i, ref_set in enumerate(refs):
        if len(ref_set) != len(hyps):
            raise ContractError(
                f"reference set {i} has {len(ref_set)} segments, expected {len(hyps)}"
            )


def bleu(hyps: Sequence[str], refs: Sequence[Sequence[str]]) -> float:
    """Corpus-level 4-gram BLEU, 13a tokenization, exponential smoothing.

    ``refs`` is a list of reference sets, each parallel to ``hyps``. Brevity
    penalty uses the closest reference length per segment.
    """
    _check_corpus_args(hyps, refs)
    correct = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    sys_len = 0
    ref_len = 0
    for i, hyp in enumerate(hyps):
        c, t, s, r = _bleu_sentence_stats(hyp, [ref_set[i] for ref_set in refs])
        for n in range(BLEU_ORDER):
            correct[n] += c[n]
            total[n] += t[n]
        sys_len += s
        ref_len += r
    return _bleu_from_stats(correct, total, sys_len, ref_len)


def _char_ngram_counts(text: str, n: int) -> Counter:
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def _chrf_pair_stats(hyp: str, ref: str) -> list[int]:
    """Flattened [hyp_ngrams, ref_ngrams, matches] per order, whitespace removed."""
    hyp = "".join(hyp.split())
    ref = "".join(ref.split())
    stats: list[int] = []
    for n in range(1, CHRF_ORDER + 1):
        hyp_counts = _char_ngram_counts(hyp, n)
        ref_counts = _char_ngram_counts(ref, n)
        match = sum((hyp_counts & ref_counts).values())
        stats.extend((sum(hyp_counts.values()), sum(ref_counts.values()), match))
    return stats


def _chrf_from_stats(stats: Sequence[int]) -> float:
    """chrF with beta=2 from summed per-order statistics, effective-order handling."""
    beta_sq = CHRF_BETA * CHRF_BETA
    score = 0.0
    effective_order = 0
    for i in range(CHRF_ORDER):
        n_hyp, n_ref, n_match = stats[3 * i : 3 * i + 3]
        if n_hyp == 0 and n_ref == 0:
            continue
        precision = n_match / n_hyp if n_hyp > 0 else 0.0
        recall = n_match / n_ref if n_ref > 0 else 0.0
        denom = beta_sq * precision + recall
        if denom > 0:
            score += (1 + beta_sq) * precision * recall / denom
        effective_order += 1
    if effective_order == 0:
        return 0.0
    return 100.0 * score / effective_order


def _chrf_sentence_stats(hyp: str, refs: Sequence[str]) -> list[int]:
    # with multiple references, keep the statistics of the best-scoring one
    best_stats = None
    best_score = -1.0
    for ref in refs:
        stats = _chrf_pair_stats(hyp, ref)
        score = _chrf_from_stats(stats)
        if score > best_score:
            best_score = score
            best_stats = stats
    assert best_stats is not None
    return best_stats


def chrf2(hyps: Sequence[str], refs: Sequence[Sequence[str]]) -> float:
    """Corpus chrF2: character n-grams to order 6, no word n-grams, beta=2."""
    _check_corpus_args(hyps, refs)
    totals = [0] * (3 * CHRF_ORDER)
    for i, hyp in enumerate(hyps):
        stats = _chrf_sentence_stats(hyp, [ref_set[i] for ref_set in refs])
        for k, v in enumerate(stats):
            totals[k] += v
    return _chrf_from_stats(totals)


@dataclass(frozen=True)
class LatencyReport:
    al: float
    g: tuple[int, ...]
    src_len: int
    tgt_len: int
    tau: int


def average_lagging(log: SimulEventLog, primary_language: str) -> LatencyReport:
    """Token-level Average Lagging with the tau cutoff.

    g(t) counts Read events of the primary language before the t-th Write;
    reads of other languages are ignored.
    """
    g: list[int] = []
    reads = 0
    for event in log.events:
        if isinstance(event, ReadEvent):
            if event.language == primary_language:
                reads += 1
        elif isinstance(event, WriteEvent):
            g.append(reads)
    src_len = reads
    tgt_len = len(g)
    if src_len == 0:
        raise ContractError(f"no Read events of primary language {primary_language!r}")
    if tgt_len == 0:
        raise ContractError("log contains no Write events")
    tau = tgt_len
    for t, g_t in enumerate(g, start=1):
        if g_t == src_len:
            tau = t
            break
    rate = tgt_len / src_len
    al = sum(g[t - 1] - (t - 1) / rate for t in range(1, tau + 1)) / tau
    return LatencyReport(al, tuple(g), src_len, tgt_len, tau)


@dataclass(frozen=True)
class ErasureReport:
    erased_tokens: int
    final_length: int

    @property
    def ne(self) -> float:
        return self.erased_tokens / self.final_length


def normalized_erasure(log: SimulEventLog) -> ErasureReport:
    """Erased tokens across all Revise events over the final output length."""
    erased = 0
    length = 0
    for event in log.events:
        if isinstance(event, WriteEvent):
            length += 1
        elif isinstance(event, ReviseEvent):
            if event.erased > length:
                raise ContractError("Revise erases more tokens than present")
            erased += event.erased
            length += len(event.replacement) - event.erased
    if length == 0:
        raise ContractError("normalized erasure is undefined for empty final output")
    return ErasureReport(erased, length)


@dataclass(frozen=True)
class BootstrapResult:
    p_value: float
    wins_a: int
    wins_b: int
    ties: int
    resamples: int
    seed: int


_BOOTSTRAP_METRICS = {"bleu", "chrf2"}


def paired_bootstrap(
    sys_a: Sequence[str],
    sys_b: Sequence[str],
    refs: Sequence[Sequence[str]],
    *,
    metric: str = "bleu",
    resamples: int = 1000,
    seed: int = 0,
) -> BootstrapResult:
    """Paired bootstrap resampling over segments.

    The p-value is the fraction of resamples where system B scores at least
    as high as system A, with exact ties counted as one half so that two
    statistically equivalent systems land near 0.5.
    """
    if metric not in _BOOTSTRAP_METRICS:
        raise ContractError(f"unknown metric {metric!r}; choose from {_BOOTSTRAP_METRICS}")
    if len(sys_a) != len(sys_b):
        raise ContractError("system outputs must have equal segment counts")
    _check_corpus_args(sys_a, refs)
    if resamples < 100:
        raise ContractError("resamples must be at least 100")

    n = len(sys_a)
    if metric == "bleu":
        stats_a = np.array(
            [np.concatenate(_flat_bleu(sys_a[i], refs, i)) for i in range(n)]
        )
        stats_b = np.array(
            [np.concatenate(_flat_bleu(sys_b[i], refs, i)) for i in range(n)]
        )
        score = _bleu_score_from_flat
    else:
        stats_a = np.array(
            [_chrf_sentence_stats(sys_a[i], [r[i] for r in refs]) for i in range(n)],
            dtype=np.int64,
        )
        stats_b = np.array(
            [_chrf_sentence_stats(sys_b[i], [r[i] for r in refs]) for i in range(n)],
            dtype=np.int64,
        )
        score = _chrf_from_stats

    rng = np.random.default_rng(seed)
    wins_a = wins_b = ties = 0
    for _ in range(resamples):
        idx = rng.integers(0, n, size=n)
        score_a = score(stats_a[idx].sum(axis=0))
        score_b = score(stats_b[idx].sum(axis=0))
        if score_a > score_b:
            wins_a += 1
        elif score_b > score_a:
            wins_b += 1
        else:
            ties += 1
    p_value = (wins_b + 0.5 * ties) / resamples
    return BootstrapResult(p_value, wins_a, wins_b, ties, resamples, seed)


def _flat_bleu(hyp: str, refs: Sequence[Sequence[str]], i: int) -> tuple:
    correct, total, sys_len, ref_len = _bleu_sentence_stats(
        hyp, [ref_set[i] for ref_set in refs]
    )
    return (
        np.array(correct, dtype=np.int64),
        np.array(total, dtype=np.int64),
        np.array([sys_len, ref_len], dtype=np.int64),
    )


def _bleu_score_from_flat(flat: np.ndarray) -> float:
    correct = flat[:BLEU_ORDER]
    total = flat[BLEU_ORDER : 2 * BLEU_ORDER]
    sys_len, ref_len = int(flat[-2]), int(flat[-1])
    return _bleu_from_stats([int(x) for x in correct], [int(x) for x in total], sys_len, ref_len)
