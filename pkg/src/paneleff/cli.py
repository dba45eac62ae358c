"""Command-line interface.

Subcommands: validate, dea, cluster, pls, pipeline, demo. Exit codes:
0 success, 1 validation errors, 2 runtime errors. Diagnostics go to
stderr with stage context; stack traces never reach the user.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import ConfigError, PanelEffError, StageError, ValidationFailedError
from .panel_data import slice_period, write_panel_csv
from .pipeline import (
    REPORT_BASENAME,
    PipelineConfig,
    ReportBundle,
    build_provenance,
    config_from_file,
    emit_report,
    load_dataset,
    render_text,
    run_cluster_stage,
    run_dea_stage,
    run_pls_stage,
    run_pipeline,
    validate_config_dataset,
)
from .synthetic import DEMO_SEED, make_demo_config, make_demo_panel

_SKIPPED = {"skipped": True}
_PENDING = {"pending": True}


def main(argv=None) -> int:
    return cli_main(argv)


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed its message
        return 0 if exc.code in (0, None) else 2
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return args.handler(args)
    except ConfigError as exc:
        _err(args, f"configuration error: {exc}")
        return 1
    except ValidationFailedError as exc:
        _err(args, f"validation failed: {exc}")
        return 1
    except StageError as exc:
        _err(args, f"stage error in {exc.stage}: {exc}")
        if exc.partial_bundle is not None:
            try:
                config = _load_config(args)
                out_dir = args.out or config.output_dir
                emit_report(exc.partial_bundle, out_dir, config.formats)
                _note(args, f"partial report (INCOMPLETE) written to {out_dir}")
            except PanelEffError:
                pass
        return 2
    except PanelEffError as exc:
        _err(args, f"error: {exc}")
        return 2
    except OSError as exc:
        _err(args, f"filesystem error: {exc}")
        return 2
    except Exception as exc:  # contract: never a bare stack trace
        _err(args, f"internal error: {type(exc).__name__}: {exc}")
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paneleff",
        description="DEA efficiency scoring, cluster validation, and PLS path modeling over panel data",
    )
    parser.add_argument("--version", action="version", version=f"paneleff {__version__}")
    sub = parser.add_subparsers(dest="command")
    parser.set_defaults(command=None, quiet=False)

    def common(p):
        p.add_argument("--config", required=True, help="pipeline configuration JSON")
        p.add_argument("--out", help="output directory (overrides the configuration)")
        p.add_argument("--format", dest="formats", action="append", choices=("csv", "json", "text"),
                       help="report format (repeatable; overrides the configuration)")
        p.add_argument("--seed", type=int, help="override every stage seed")
        p.add_argument("--quiet", action="store_true", help="suppress progress notes")

    p = sub.add_parser("validate", help="check a configuration and its dataset")
    common(p)
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("pipeline", help="run all configured stages")
    common(p)
    p.set_defaults(handler=_cmd_pipeline)

    p = sub.add_parser("dea", help="run the DEA stage (writes/updates report.json)")
    common(p)
    p.add_argument("--period", help="solve a single period and print its table")
    p.set_defaults(handler=_cmd_dea)

    p = sub.add_parser("cluster", help="run the cluster stage from an existing DEA report")
    common(p)
    p.set_defaults(handler=_cmd_cluster)

    p = sub.add_parser("pls", help="run the path-model stage (writes/updates report.json)")
    common(p)
    p.set_defaults(handler=_cmd_pls)

    p = sub.add_parser("demo", help="generate the bundled synthetic dataset and run the pipeline")
    p.add_argument("--out", default="paneleff_demo", help="directory for dataset, config, and reports")
    p.add_argument("--seed", type=int, default=DEMO_SEED, help="dataset generator seed")
    p.add_argument("--samples", type=int, default=500, help="bootstrap resamples")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(handler=_cmd_demo)
    return parser


def _note(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


def _err(args, message: str) -> None:
    print(message, file=sys.stderr)


def _load_config(args) -> PipelineConfig:
    config = config_from_file(args.config)
    if getattr(args, "seed", None) is not None:
        config = config.with_seed(args.seed)
    if getattr(args, "formats", None):
        config = _replace_formats(config, tuple(dict.fromkeys(args.formats)))
    return config


def _replace_formats(config: PipelineConfig, formats) -> PipelineConfig:
    from dataclasses import replace

    return replace(config, formats=formats)


def _cmd_validate(args) -> int:
    config = _load_config(args)
    reports = validate_config_dataset(config)
    failed = False
    for name, report in reports.items():
        print(f"analysis {name}: {report.summary()}")
        failed = failed or not report.ok
    return 1 if failed else 0


def _cmd_pipeline(args) -> int:
    config = _load_config(args)
    out_dir = args.out or config.output_dir
    _note(args, "running dea, cluster, and pls stages")
    bundle = run_pipeline(config)
    written = emit_report(bundle, out_dir, config.formats)
    for path in written:
        _note(args, f"wrote {path}")
    return 0


def _cmd_dea(args) -> int:
    config = _load_config(args)
    panel = load_dataset(config)
    if args.period is not None:
        for analysis in config.dea_analyses:
            cs = slice_period(panel, args.period, analysis.spec)  # raises lookup error
            from .dea import solve_bcc, solve_ccr

            solve = solve_ccr if analysis.spec.returns_to_scale == "CRS" else solve_bcc
            print(f"analysis {analysis.name}, period {args.period}")
            for dmu in cs.dmus:
                result = solve(cs, dmu, analysis.spec.orientation)
                print(f"  {dmu}  {result.score:.7f}")
        return 0
    section = run_dea_stage(config, panel)
    bundle = _merge_stage(config, args, dea=section)
    out_dir = args.out or config.output_dir
    emit_report(bundle, out_dir, config.formats)
    _note(args, f"dea stage written to {out_dir}")
    return 0


def _cmd_cluster(args) -> int:
    config = _load_config(args)
    if config.cluster is None:
        raise ConfigError("configuration has no cluster stage")
    existing = _read_existing_bundle(config, args)
    if existing is None or not existing.dea or "pending" in existing.dea:
        raise StageError("cluster", "no DEA results on disk; run the dea stage first")
    cluster_section, correspondence = run_cluster_stage(config, existing.dea)
    bundle = _merge_stage(config, args, dea=existing.dea, cluster=cluster_section,
                          correspondence=correspondence, pls=existing.pls)
    out_dir = args.out or config.output_dir
    emit_report(bundle, out_dir, config.formats)
    _note(args, f"cluster stage written to {out_dir}")
    return 0


def _cmd_pls(args) -> int:
    config = _load_config(args)
    if config.pls is None:
        raise ConfigError("configuration has no pls stage")
    panel = load_dataset(config)
    section = run_pls_stage(config, panel)
    existing = _read_existing_bundle(config, args)
    bundle = _merge_stage(
        config, args,
        dea=existing.dea if existing else None,
        cluster=existing.cluster if existing else None,
        correspondence=existing.correspondence if existing else None,
        pls=section,
    )
    out_dir = args.out or config.output_dir
    emit_report(bundle, out_dir, config.formats)
    _note(args, f"pls stage written to {out_dir}")
    return 0


def _read_existing_bundle(config: PipelineConfig, args) -> ReportBundle | None:
    out_dir = args.out or config.output_dir
    path = os.path.join(out_dir, f"{REPORT_BASENAME}.json")
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return ReportBundle.from_json(fh.read())


def _merge_stage(config: PipelineConfig, args, dea=None, cluster=None,
                 correspondence=None, pls=None) -> ReportBundle:
    """Combine freshly computed sections with on-disk ones, marking
    configured-but-not-yet-run stages as pending."""
    existing = _read_existing_bundle(config, args)

    def fallback(fresh, old, configured):
        if fresh is not None and "pending" not in fresh:
            return fresh
        if old is not None and "pending" not in old and "skipped" not in old:
            return old
        return dict(_PENDING) if configured else dict(_SKIPPED)

    return ReportBundle(
        provenance=build_provenance(config),
        dea=fallback(dea, existing.dea if existing else None, True),
        cluster=fallback(cluster, existing.cluster if existing else None, config.cluster is not None),
        correspondence=fallback(correspondence, existing.correspondence if existing else None,
                                config.cluster is not None),
        pls=fallback(pls, existing.pls if existing else None, config.pls is not None),
    )


def _cmd_demo(args) -> int:
    out = args.out
    os.makedirs(out, exist_ok=True)
    panel = make_demo_panel(args.seed)
    dataset_path = os.path.join(out, "dataset.csv")
    write_panel_csv(panel, dataset_path)
    document = make_demo_config("dataset.csv", "reports", bootstrap_samples=args.samples)
    config_path = os.path.join(out, "config.json")
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _note(args, f"wrote {dataset_path} and {config_path}")

    config = config_from_file(config_path)
    bundle = run_pipeline(config)
    written = emit_report(bundle, config.output_dir, config.formats)
    for path in written:
        _note(args, f"wrote {path}")
    if not args.quiet:
        print(render_text(bundle))
    return 0


if __name__ == "__main__":
    sys.exit(main())
