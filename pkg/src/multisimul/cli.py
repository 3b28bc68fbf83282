"""Command-line harness: scoring, noise, independence, simulation, and sweeps."""

from __future__ import annotations

import argparse
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import metrics, noise
from .corpus import (
    TokenSequence,
    load_parallel,
    load_transcript_pairs,
    load_word_alignment,
)
from .errors import (
    ConfigError,
    ContractError,
    EngineError,
    InputError,
    MultisimulError,
    UnattainableWerError,
)
from .independence import analyze_independence
from .mock_mt import LexiconTranslator, load_lexicon
from .simul import run_simul

__all__ = ["main"]

RESULT_HEADER = ("system", "la_n", "seed", "bleu", "chrf2", "al", "ne")


def _read_lines(path: str | Path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8").replace("\r\n", "\n")
    if text.endswith("\n"):
        text = text[:-1]
    return text.split("\n") if text else []


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def cmd_score(args: argparse.Namespace) -> int:
    hyps = _read_lines(args.hyps)
    refs = [_read_lines(p) for p in args.refs]
    rows = [
        ("bleu", f"{metrics.bleu(hyps, refs):.4f}"),
        ("chrf2", f"{metrics.chrf2(hyps, refs):.4f}"),
    ]
    if args.compare is not None:
        sys_b = _read_lines(args.compare)
        for metric in ("bleu", "chrf2"):
            result = metrics.paired_bootstrap(
                hyps, sys_b, refs, metric=metric,
                resamples=args.resamples, seed=args.seed,
            )
            rows.append(
                (f"{metric}_bootstrap_p", f"{result.p_value:.4f}", str(result.seed))
            )
    for row in rows:
        print("\t".join(row))
    return 0


def cmd_noise_train(args: argparse.Namespace) -> int:
    pairs = load_transcript_pairs(
        args.gold, args.asr,
        lowercase=not args.keep_case, strip_punct=args.strip_punct,
    )
    model = noise.train_noise_model(pairs)
    noise.save_model(model, args.out)
    _progress(
        f"trained model: p_insert={model.p_insert:.6f} p_delete={model.p_delete:.6f} "
        f"p_substitute={model.p_substitute:.6f}"
    )
    print(f"model written to {args.out}")
    return 0


def cmd_noise_apply(args: argparse.Namespace) -> int:
    model = noise.load_model(args.model)
    if args.target_wer is not None:
        model = noise.rescale_to_wer(model, args.target_wer)
        _progress(f"rescaled by c={model.scale_c:.6f}")
    sentences = [TokenSequence.from_raw(line) for line in _read_lines(args.input)]
    noised = noise.apply_noise_corpus(model, sentences, args.seed)
    Path(args.output).write_text(
        "".join(seq.raw + "\n" for seq in noised), encoding="utf-8"
    )
    print(f"noised {len(noised)} sentences to {args.output}")
    return 0


def cmd_independence(args: argparse.Namespace) -> int:
    src_pairs = load_transcript_pairs(
        args.src_gold, args.src_asr,
        lowercase=not args.keep_case, strip_punct=args.strip_punct,
    )
    tgt_pairs = load_transcript_pairs(
        args.tgt_gold, args.tgt_asr,
        lowercase=not args.keep_case, strip_punct=args.strip_punct,
    )
    alignments = load_word_alignment(args.align)
    report = analyze_independence(
        src_pairs, tgt_pairs, alignments, alpha=args.alpha, yates=args.yates
    )
    cells = report.table.cells
    print(f"aligned_links\t{report.aligned_link_count}")
    print(f"coverage\t{report.coverage:.6f}")
    print(f"cell_cc\t{cells[0][0]}")
    print(f"cell_ci\t{cells[0][1]}")
    print(f"cell_ic\t{cells[1][0]}")
    print(f"cell_ii\t{cells[1][1]}")
    print(f"chi_square\t{report.chi_square.statistic:.6f}")
    print(f"p_value\t{report.chi_square.p_value:.6g}")
    print(f"reject_at_alpha\t{report.reject_independence}")
    print()
    print(report.summary())
    return 0


def _parse_lang_file(values: Sequence[str], flag: str) -> dict[str, Path]:
    out: dict[str, Path] = {}
    for value in values:
        if "=" not in value:
            raise ConfigError(f"{flag} expects LANG=FILE, got {value!r}")
        lang, _, path = value.partition("=")
        out[lang] = Path(path)
    return out


def _run_system(
    translators: dict[str, LexiconTranslator],
    source_columns: dict[str, list[TokenSequence]],
    la_n: int,
    tie_order: list[str],
    primary: str,
) -> tuple[list[str], list[float], list[float]]:
    """Per-sentence streaming runs; returns (outputs, AL values, NE values)."""
    outputs: list[str] = []
    als: list[float] = []
    nes: list[float] = []
    n_sentences = len(next(iter(source_columns.values())))
    for i in range(n_sentences):
        sources = {lang: col[i] for lang, col in source_columns.items()}
        if all(len(s.tokens) == 0 for s in sources.values()):
            outputs.append("")
            continue
        final, log = run_simul(translators, sources, la_n, tie_order=tie_order)
        outputs.append(" ".join(final))
        als.append(metrics.average_lagging(log, primary).al)
        nes.append(metrics.normalized_erasure(log).ne if final else 0.0)
    return outputs, als, nes


def cmd_simulate(args: argparse.Namespace) -> int:
    source_paths = _parse_lang_file(args.source, "--source")
    lexicon_paths = _parse_lang_file(args.lexicon, "--lexicon")
    if set(source_paths) != set(lexicon_paths):
        raise ConfigError("--source and --lexicon must name the same languages")
    languages = list(source_paths)
    primary = args.primary or languages[0]
    if primary not in languages:
        raise ConfigError(f"primary language {primary!r} has no source")
    doc = load_parallel(source_paths)
    columns = {lang: doc.column(lang) for lang in languages}
    translators = {
        lang: LexiconTranslator(load_lexicon(path))
        for lang, path in lexicon_paths.items()
    }
    outputs, als, nes = _run_system(translators, columns, args.la_n, languages, primary)
    if args.out is not None:
        Path(args.out).write_text(
            "".join(line + "\n" for line in outputs), encoding="utf-8"
        )
    mean_al = sum(als) / len(als) if als else 0.0
    mean_ne = sum(nes) / len(nes) if nes else 0.0
    rows = [("al", f"{mean_al:.4f}"), ("ne", f"{mean_ne:.4f}")]
    if args.refs:
        refs = [_read_lines(p) for p in args.refs]
        rows.insert(0, ("chrf2", f"{metrics.chrf2(outputs, refs):.4f}"))
        rows.insert(0, ("bleu", f"{metrics.bleu(outputs, refs):.4f}"))
    for row in rows:
        print("\t".join(row))
    return 0


@dataclass
class SweepConfig:
    languages: list[str]
    primary: str
    sources: dict[str, Path]
    lexicons: dict[str, Path]
    noise_models: dict[str, Path]
    reference: Path
    wer_grid: list[tuple[float, ...]]
    la_grid: list[int]
    seeds: list[int]


def _load_sweep_config(path: Path) -> SweepConfig:
    values: dict[str, str] = {}
    for lineno, line in enumerate(_read_lines(path), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}: line {lineno} is not key=value: {line!r}")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    if values.get("version") != "1":
        raise ConfigError(f"{path}: missing or unsupported config version")

    def require(key: str) -> str:
        if key not in values:
            raise ConfigError(f"{path}: missing required key {key!r}")
        return values[key]

    base = path.parent
    languages = [lang.strip() for lang in require("languages").split(",") if lang.strip()]
    if not languages:
        raise ConfigError(f"{path}: languages must be non-empty")
    primary = values.get("primary", languages[0])
    if primary not in languages:
        raise ConfigError(f"{path}: primary {primary!r} not among languages")

    def per_language(prefix: str) -> dict[str, Path]:
        return {lang: base / require(f"{prefix}.{lang}") for lang in languages}

    wer_grid = []
    for cell in require("wer_grid").split(","):
        parts = cell.split(":")
        if len(parts) != len(languages):
            raise ConfigError(
                f"{path}: wer cell {cell!r} needs {len(languages)} colon-separated values"
            )
        try:
            wer_grid.append(tuple(float(p) for p in parts))
        except ValueError:
            raise ConfigError(f"{path}: non-numeric wer cell {cell!r}") from None
    try:
        la_grid = [int(v) for v in require("la_grid").split(",")]
        seeds = [int(v) for v in require("seeds").split(",")]
    except ValueError:
        raise ConfigError(f"{path}: la_grid and seeds must be integers") from None
    if not wer_grid or not la_grid or not seeds:
        raise ConfigError(f"{path}: grids and seeds must be non-empty")

    return SweepConfig(
        languages=languages,
        primary=primary,
        sources=per_language("source"),
        lexicons=per_language("lexicon"),
        noise_models=per_language("noise_model"),
        reference=base / require("reference"),
        wer_grid=wer_grid,
        la_grid=la_grid,
        seeds=seeds,
    )


def _language_stream_seed(seed: int, lang_index: int) -> int:
    # one noise stream per (config seed, language); kept disjoint by a large stride
    return seed * 1_000_003 + lang_index


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_sweep_config(Path(args.config))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    clean = {
        lang: [TokenSequence.from_raw(line) for line in _read_lines(path)]
        for lang, path in config.sources.items()
    }
    lengths = {len(col) for col in clean.values()}
    refs = [_read_lines(config.reference)]
    lengths.add(len(refs[0]))
    if len(lengths) != 1:
        raise ConfigError(f"source/reference line counts differ: {sorted(lengths)}")
    translators = {
        lang: LexiconTranslator(load_lexicon(path))
        for lang, path in config.lexicons.items()
    }
    base_models = {
        lang: noise.load_model(path) for lang, path in config.noise_models.items()
    }

    wer_cols = [f"wer_{lang}" for lang in config.languages]
    rows: list[tuple] = []
    for cell in config.wer_grid:
        for seed in config.seeds:
            noised: dict[str, list[TokenSequence]] = {}
            for li, lang in enumerate(config.languages):
                target = cell[li]
                model = base_models[lang]
                if target > 0:
                    model = noise.rescale_to_wer(model, target)
                    noised[lang] = noise.apply_noise_corpus(
                        model, clean[lang], _language_stream_seed(seed, li)
                    )
                else:
                    noised[lang] = clean[lang]
            for la_n in config.la_grid:
                systems = {lang: [lang] for lang in config.languages}
                systems["multi"] = config.languages
                for system, langs in systems.items():
                    _progress(
                        f"cell={cell} seed={seed} la_n={la_n} system={system}"
                    )
                    outputs, als, nes = _run_system(
                        {lang: translators[lang] for lang in langs},
                        {lang: noised[lang] for lang in langs},
                        la_n,
                        config.languages,
                        config.primary if config.primary in langs else langs[0],
                    )
                    row = (
                        *(f"{w:.4f}" for w in cell),
                        system,
                        str(la_n),
                        str(seed),
                        f"{metrics.bleu(outputs, refs):.4f}",
                        f"{metrics.chrf2(outputs, refs):.4f}",
                        f"{sum(als) / len(als):.4f}" if als else "0.0000",
                        f"{sum(nes) / len(nes):.4f}" if nes else "0.0000",
                    )
                    rows.append(row)

    header = (*wer_cols, *RESULT_HEADER)
    results_path = out_dir / "results.tsv"
    with results_path.open("w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")

    _write_summary(out_dir, header, rows, len(config.languages))
    _write_tradeoffs(out_dir, header, rows, config.languages)
    print(f"wrote {len(rows)} result rows to {results_path}")
    return 0


def _write_summary(
    out_dir: Path, header: tuple, rows: list[tuple], n_langs: int
) -> None:
    """Per-cell avg and stddev over seeds of every numeric metric."""
    groups: dict[tuple, list[tuple]] = {}
    for row in rows:
        key = (*row[:n_langs], row[n_langs], row[n_langs + 1])  # cell, system, la_n
        groups.setdefault(key, []).append(row)
    metric_names = ("bleu", "chrf2", "al", "ne")
    out = [
        "\t".join(
            (*header[:n_langs], "system", "la_n")
            + tuple(f"{m}_{s}" for m in metric_names for s in ("avg", "std"))
        )
    ]
    for key in sorted(groups):
        group = groups[key]
        cols: list[str] = list(key)
        for offset in range(4):
            values = [float(row[n_langs + 3 + offset]) for row in group]
            avg = statistics.fmean(values)
            std = statistics.pstdev(values) if len(values) > 1 else 0.0
            cols.extend((f"{avg:.4f}", f"{std:.4f}"))
        out.append("\t".join(cols))
    (out_dir / "summary.tsv").write_text(
        "".join(line + "\n" for line in out), encoding="utf-8"
    )


def _write_tradeoffs(
    out_dir: Path, header: tuple, rows: list[tuple], languages: list[str]
) -> None:
    """One (AL, BLEU) point file per noise cell, averaged over seeds."""
    n_langs = len(languages)
    cells: dict[tuple, dict[tuple, list[tuple[float, float]]]] = {}
    for row in rows:
        cell = row[:n_langs]
        sys_la = (row[n_langs], row[n_langs + 1])
        cells.setdefault(cell, {}).setdefault(sys_la, []).append(
            (float(row[n_langs + 5]), float(row[n_langs + 3]))  # (al, bleu)
        )
    for cell, points in sorted(cells.items()):
        name = "tradeoff_" + "_".join(
            f"{lang}{float(w):.2f}" for lang, w in zip(languages, cell)
        )
        lines = ["system\tla_n\tal\tbleu"]
        for (system, la_n), pairs in sorted(points.items()):
            al = statistics.fmean(p[0] for p in pairs)
            bleu_score = statistics.fmean(p[1] for p in pairs)
            lines.append(f"{system}\t{la_n}\t{al:.4f}\t{bleu_score:.4f}")
        (out_dir / f"{name}.tsv").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multisimul",
        description="Multi-source simultaneous translation simulation under ASR noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="BLEU/chrF2 and optional paired bootstrap")
    p.add_argument("--hyps", required=True)
    p.add_argument("--refs", required=True, nargs="+")
    p.add_argument("--compare", help="second system for paired bootstrap")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("noise-train", help="train a lexical noise model")
    p.add_argument("--gold", required=True)
    p.add_argument("--asr", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keep-case", action="store_true")
    p.add_argument("--strip-punct", action="store_true")
    p.set_defaults(func=cmd_noise_train)

    p = sub.add_parser("noise-apply", help="apply (optionally rescaled) noise")
    p.add_argument("--model", required=True)
    p.add_argument("--target-wer", type=float)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_noise_apply)

    p = sub.add_parser("independence", help="cross-lingual ASR error independence test")
    p.add_argument("--src-gold", required=True)
    p.add_argument("--src-asr", required=True)
    p.add_argument("--tgt-gold", required=True)
    p.add_argument("--tgt-asr", required=True)
    p.add_argument("--align", required=True)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--yates", action="store_true")
    p.add_argument("--keep-case", action="store_true")
    p.add_argument("--strip-punct", action="store_true")
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser("simulate", help="one streaming run over a corpus")
    p.add_argument("--source", required=True, nargs="+", metavar="LANG=FILE")
    p.add_argument("--lexicon", required=True, nargs="+", metavar="LANG=FILE")
    p.add_argument("--la-n", type=int, default=2)
    p.add_argument("--primary")
    p.add_argument("--refs", nargs="+")
    p.add_argument("--out", help="write final outputs to this file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="noise x latency grid with single and multi systems")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, UnattainableWerError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except (ContractError, EngineError) as exc:
        print(f"contract error: {exc}", file=sys.stderr)
        return 4
    except MultisimulError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
