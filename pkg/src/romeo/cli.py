"""Command line interface: romeo ingest|build|subset|stats|tokenize."""

from __future__ import annotations

from pathlib import Path

import click

from . import __version__
from .dataset import DatasetStats, load
from .errors import RomeoError
from .pipeline import PipelineConfig, build_dataset, ingest_tree, write_store


def _build_options(fn):
    options = [
        click.option(
            "--input", "input_root", required=True,
            type=click.Path(exists=True, file_okay=False, path_type=Path),
            help="Tree of <testcase>.dis/<testcase>.sym pairs, or an ingest store.",
        ),
        click.option(
            "--output", "output_dir", required=True,
            type=click.Path(file_okay=False, path_type=Path),
            help="Directory for train/valid/test.jsonl, stats.json and manifest.json.",
        ),
        click.option("--seed", type=int, default=0, envvar="ROMEO_SEED", show_default=True),
        click.option(
            "--context/--no-context", "with_context", default=True, show_default=True,
            help="Concatenate recursively referenced functions after each example.",
        ),
        click.option(
            "--label-mode", type=click.Choice(["binary", "multiclass"]), default="binary",
            show_default=True,
        ),
        click.option(
            "--role-regexes", type=click.Path(exists=True, dir_okay=False, path_type=Path),
            default=None, help="Role-regex override file: '<role> <regex>' per line.",
        ),
        click.option(
            "--allowlist", type=click.Path(exists=True, dir_okay=False, path_type=Path),
            default=None, help="Runtime-symbol allowlist override, one name per line.",
        ),
        click.option(
            "--exclude-list", type=click.Path(exists=True, dir_okay=False, path_type=Path),
            default=None, help="Context exclusion override, one name per line.",
        ),
        click.option(
            "--toolchain-cmd", default=None,
            help="Shell template run per testcase to produce .dis/.sym "
                 "(placeholders: {id} {source} {dis} {sym}).",
        ),
        click.option("--workers", type=int, default=1, show_default=True),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="romeo")
def main():
    """Build labeled assembly-language datasets from disassembled testcases."""


@main.command()
@click.option(
    "--input", "input_root", required=True,
    type=click.Path(exists=True, file_okay=False, path_type=Path),
)
@click.option(
    "--output", "output_dir", required=True,
    type=click.Path(file_okay=False, path_type=Path),
)
@click.option("--toolchain-cmd", default=None)
def ingest(input_root: Path, output_dir: Path, toolchain_cmd: str | None):
    """Parse all testcase pairs under --input into an intermediate store."""
    try:
        result = ingest_tree(input_root, toolchain_cmd)
        write_store(result, output_dir)
    except RomeoError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"parsed {len(result.objects)} testcases, {len(result.failures)} failures")
    for path, message in result.failures:
        click.echo(f"  failed: {path}: {message}", err=True)
    if not result.objects:
        click.echo("warning: no testcases found under the input root", err=True)


def _config_from_options(
    input_root, output_dir, seed, with_context, label_mode, role_regexes,
    allowlist, exclude_list, toolchain_cmd, workers, cwe=None,
) -> PipelineConfig:
    return PipelineConfig(
        input_root=input_root,
        output_dir=output_dir,
        seed=seed,
        with_context=with_context,
        label_mode=label_mode,
        cwe_filter=frozenset(cwe) if cwe else None,
        role_regexes_file=role_regexes,
        allowlist_file=allowlist,
        exclude_list_file=exclude_list,
        toolchain_cmd=toolchain_cmd,
        workers=workers,
    )


def _echo_build_summary(bundle) -> None:
    counts = {name: len(examples) for name, examples in bundle.splits()}
    click.echo(
        f"built dataset: train={counts['train']} valid={counts['valid']} test={counts['test']}"
    )
    if bundle.stats is not None:
        click.echo(f"duplicate fraction: {bundle.stats.duplicate_fraction:.4f}")
        failures = bundle.stats.warnings.get("parse_failures", 0)
        if failures:
            click.echo(f"warning: {failures} testcases failed and were skipped", err=True)


@main.command()
@_build_options
@click.option("--cwe", type=int, multiple=True, help="Keep only these CWE numbers.")
def build(cwe, **options):
    """Run the full pipeline: ingest, scramble, render, extract, dedup, split."""
    config = _config_from_options(cwe=cwe, **options)
    try:
        bundle = build_dataset(config)
    except RomeoError as exc:
        raise click.ClickException(str(exc))
    _echo_build_summary(bundle)


@main.command()
@_build_options
@click.option("--cwe", type=int, multiple=True, required=True,
              help="CWE numbers defining the subset (repeatable).")
def subset(cwe, **options):
    """Build a dataset restricted to a CWE subset (filter before dedup/split)."""
    config = _config_from_options(cwe=cwe, **options)
    try:
        bundle = build_dataset(config)
    except RomeoError as exc:
        raise click.ClickException(str(exc))
    if not bundle.all_examples():
        click.echo("warning: subset is empty", err=True)
    _echo_build_summary(bundle)


def _print_stats_table(stats: DatasetStats) -> None:
    click.echo("split      total  positive  negative")
    for name in ("train", "valid", "test"):
        row = stats.per_split.get(name, {})
        click.echo(
            f"{name:<9}{row.get('total', 0):>7}{row.get('positive', 0):>10}"
            f"{row.get('negative', 0):>10}"
        )
    click.echo(f"duplicate fraction: {stats.duplicate_fraction:.4f}")
    click.echo("per CWE:")
    for cwe, count in sorted(stats.per_cwe.items(), key=lambda kv: (-kv[1], kv[0])):
        click.echo(f"  CWE-{cwe:<6}{count:>8}")
    click.echo("per flow variant:")
    for flow, count in sorted(stats.per_flow_variant.items()):
        click.echo(f"  {flow:<9}{count:>8}")
    if stats.warnings:
        click.echo("warnings:")
        for key, value in sorted(stats.warnings.items()):
            click.echo(f"  {key}: {value}")


@main.command()
@click.argument("dataset_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Also render distribution figures next to the dataset files.")
@click.option("--figures-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Where to write figures (default: the dataset directory).")
def stats(dataset_dir: Path, figures: bool, figures_dir: Path | None):
    """Print the statistics report for a built dataset."""
    stats_path = dataset_dir / "stats.json"
    if not stats_path.exists():
        raise click.ClickException(f"missing stats file: {stats_path}")
    try:
        bundle = load(dataset_dir)
    except RomeoError as exc:
        raise click.ClickException(str(exc))
    dataset_stats = bundle.stats or DatasetStats()
    _print_stats_table(dataset_stats)
    if figures:
        from .figures import render_stats_figures

        written = render_stats_figures(dataset_stats, figures_dir or dataset_dir)
        for path in written:
            click.echo(f"wrote {path}")


@main.command()
@click.argument("dataset_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--vocab-size", type=int, default=50000, show_default=True)
@click.option("--output", "model_path", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="Model file path (default: <dataset>/bpe.model).")
@click.option("--cap", type=int, default=512, show_default=True,
              help="Sequence-length cap for the overflow statistic.")
def tokenize(dataset_dir: Path, vocab_size: int, model_path: Path | None, cap: int):
    """Train byte-pair encoding on the training split and report length stats."""
    from .bpe import length_stats, save_model, train_bpe

    try:
        bundle = load(dataset_dir)
    except RomeoError as exc:
        raise click.ClickException(str(exc))
    if not bundle.train:
        raise click.ClickException(f"no training split found in {dataset_dir}")
    try:
        model = train_bpe([example.text for example in bundle.train], vocab_size)
    except RomeoError as exc:
        raise click.ClickException(str(exc))
    model_path = model_path or dataset_dir / "bpe.model"
    save_model(model, model_path)
    click.echo(f"trained vocabulary of {model.vocab_size} tokens -> {model_path}")
    click.echo("split      mean     max  overflow")
    for name, examples in bundle.splits():
        if not examples:
            continue
        ls = length_stats(model, examples, cap)
        click.echo(
            f"{name:<9}{ls.mean_tokens:>7.1f}{ls.max_tokens:>8}{ls.overflow_fraction:>9.4f}"
        )


if __name__ == "__main__":
    main()
