"""Command-line surface: inspect, prune, report, zoo.

Every command that writes files also writes a run manifest (inputs hashed,
flags normalized, seed recorded) next to them; re-running with the same
inputs and flags reproduces every output byte for byte. Exit codes: 0 on
success, 2 on bad input or validation failure, 3 when a pruning run ends
without meeting its target.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__
from .complexity import Mode, energy_estimate, network_complexity
from .graph import GraphError, NetworkGraph, propagate_shapes, validate_graph
from .pruner import (
    PruneConfig,
    Terminal,
    prune_to_target,
    trace_from_json,
    trace_to_json,
)
from .report import (
    breakdown_to_csv,
    breakdown_to_json,
    layer_breakdown,
    reduction_report,
    series_to_csv,
    series_to_json,
    tradeoff_series,
)
from .schema import SchemaError, parse_architecture, serialize_architecture
from .zoo import UnknownArchitectureError, builtin_arch, zoo_entries

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_TARGET_NOT_MET = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_BAD_INPUT):
        super().__init__(message)
        self.code = code


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _load_arch(source: str) -> tuple[NetworkGraph, dict[str, str]]:
    """Resolve a zoo name or a document path into a shape-resolved graph."""
    names = {entry.name for entry in zoo_entries()}
    if source in names:
        graph = builtin_arch(source)
        digest = _sha256(serialize_architecture(graph).encode())
        return graph, {f"zoo:{source}": digest}
    path = Path(source)
    if not path.is_file():
        raise CliError(
            f"unknown architecture '{source}': not a zoo name "
            f"({', '.join(sorted(names))}) and not a file"
        )
    data = path.read_bytes()
    try:
        graph = parse_architecture(data.decode("utf-8"))
        graph = propagate_shapes(graph)
    except (SchemaError, GraphError, UnicodeDecodeError) as err:
        raise CliError(f"{source}: {err}") from None
    report = validate_graph(graph)
    if not report.ok:
        raise CliError(f"{source}: architecture is invalid\n{report.render()}")
    return graph, {str(path): _sha256(data)}


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("PRUNEKIT_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(outdir: Path, name: str, text: str) -> str:
    (outdir / name).write_text(text, encoding="utf-8")
    return name


def _write_manifest(outdir: Path, command: str, args, input_hashes: dict[str, str],
                    outputs: list[str], seed: int | None) -> None:
    flags = {
        key: value for key, value in sorted(vars(args).items())
        if key not in ("command", "zoo_command") and not key.startswith("_")
    }
    manifest = {
        "command": command,
        "arguments": flags,
        "input_hashes": dict(sorted(input_hashes.items())),
        "output_paths": outputs + ["manifest.json"],
        "seed": seed,
        "tool_version": __version__,
    }
    _write(outdir, "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _cmd_zoo(args) -> int:
    if args.zoo_command == "list":
        for entry in zoo_entries():
            summary = entry.notes.split(". ")[0]
            print(f"{entry.name}\t{summary}")
        return EXIT_OK
    graph = builtin_arch(args.name)
    document = serialize_architecture(graph)
    if args.out:
        Path(args.out).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    graph, hashes = _load_arch(args.arch)
    profile = network_complexity(graph, args.flops_factor)
    energy = energy_estimate(profile)

    by_id = {spec.id: spec for spec in graph.layers}
    header = f"{'layer':<18}{'kind':<16}{'out':>6}{'spatial':>10}" \
             f"{'flops':>14}{'bytes':>13}{'params':>11}"
    print(header)
    for layer_id, cost in profile.per_layer.items():
        spec = by_id[layer_id]
        spatial = "x".join(str(d) for d in spec.out_spatial)
        print(f"{layer_id:<18}{spec.kind.value:<16}{spec.out_channels:>6}"
              f"{spatial:>10}{cost.flops:>14}{cost.memory_bytes:>13}{cost.params:>11}")
    totals, conv = profile.totals, profile.conv_totals
    print(f"{'total':<50}{totals.flops:>14}{totals.memory_bytes:>13}{totals.params:>11}")
    print(f"{'conv layers only':<50}{conv.flops:>14}{conv.memory_bytes:>13}{conv.params:>11}")
    print(f"memory: {totals.memory_bytes / 2**20:.2f} MiB | "
          f"energy: {energy.total_pj:.4g} pJ "
          f"(compute {energy.compute_pj:.4g}, access {energy.access_pj:.4g})")

    if args.out:
        outdir = _out_dir(args)
        rows = layer_breakdown(profile)
        outputs = [
            _write(outdir, "profile.json", profile.to_json()),
            _write(outdir, "breakdown.csv", breakdown_to_csv(rows)),
            _write(outdir, "breakdown.json", breakdown_to_json(rows)),
        ]
        _write_manifest(outdir, "inspect", args, hashes, outputs, seed=None)
    return EXIT_OK


def _cmd_prune(args) -> int:
    graph, hashes = _load_arch(args.arch)
    mode = Mode(args.mode)
    baseline = network_complexity(graph, args.flops_factor)

    if (args.target_abs is None) == (args.target_frac is None):
        raise CliError("give exactly one of --target-abs or --target-frac")
    if args.target_abs is not None:
        target = args.target_abs
    else:
        if not 0.0 <= args.target_frac <= 1.0:
            raise CliError(f"--target-frac must be in [0, 1], got {args.target_frac}")
        target = int(args.target_frac * baseline.conv_totals.of(mode))

    config = PruneConfig(
        mode=mode,
        target_complexity=target,
        prune_ratio=args.ratio,
        seed=args.seed,
        min_filters=args.min_filters,
        flops_factor=args.flops_factor,
    )
    pruned_graph, trace = prune_to_target(graph, config)
    pruned_profile = network_complexity(pruned_graph, args.flops_factor)
    report = reduction_report(baseline, pruned_profile)

    outdir = _out_dir(args)
    outputs = [
        _write(outdir, "pruned.json", serialize_architecture(pruned_graph)),
        _write(outdir, "trace.json", trace_to_json(trace)),
        _write(outdir, "report.json", report.to_json()),
        _write(outdir, "report.csv", report.to_csv()),
    ]
    _write_manifest(outdir, "prune", args, hashes, outputs, seed=args.seed)

    conv_pct = report.conv_reduction_pct[mode.value]
    print(f"terminal: {trace.terminal.value} after {len(trace.steps)} steps | "
          f"{mode.value} reduced {conv_pct:.2f}% over conv layers "
          f"({report.reduction_pct[mode.value]:.2f}% network-wide)")
    return EXIT_OK if trace.terminal is Terminal.TARGET_MET else EXIT_TARGET_NOT_MET


def _cmd_report(args) -> int:
    traces = []
    hashes: dict[str, str] = {}
    for trace_path in args.trace:
        path = Path(trace_path)
        if not path.is_file():
            raise CliError(f"trace not found: {trace_path}")
        data = path.read_bytes()
        hashes[str(path)] = _sha256(data)
        try:
            traces.append(trace_from_json(data.decode("utf-8")))
        except (ValueError, KeyError) as err:
            raise CliError(f"{trace_path}: not a valid trace: {err}") from None

    results = None
    if args.metrics:
        if len(args.metrics) != len(traces):
            raise CliError(
                f"{len(args.metrics)} metrics files for {len(traces)} traces; "
                "give one per trace, in order"
            )
        results = []
        for metrics_path in args.metrics:
            path = Path(metrics_path)
            if not path.is_file():
                raise CliError(f"metrics not found: {metrics_path}")
            data = path.read_bytes()
            hashes[str(path)] = _sha256(data)
            results.append(json.loads(data.decode("utf-8")))

    try:
        rows = tradeoff_series(traces, results)
    except ValueError as err:
        raise CliError(str(err)) from None

    outdir = _out_dir(args)
    outputs = [
        _write(outdir, "tradeoff.csv", series_to_csv(rows)),
        _write(outdir, "tradeoff.json", series_to_json(rows)),
    ]
    _write_manifest(outdir, "report", args, hashes, outputs, seed=None)
    print(f"wrote {len(rows)} rows for {len(traces)} trace(s) to {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prunekit",
        description="Complexity-driven structured filter pruning for CNN "
                    "architectures.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    zoo = sub.add_parser("zoo", help="list or export built-in architectures")
    zoo_sub = zoo.add_subparsers(dest="zoo_command", required=True)
    zoo_sub.add_parser("list", help="list built-in architecture names")
    export = zoo_sub.add_parser("export", help="write an architecture document")
    export.add_argument("name", help="zoo architecture name")
    export.add_argument("--out", help="output file (default: stdout)")

    inspect = sub.add_parser("inspect", help="per-layer complexity breakdown")
    inspect.add_argument("--arch", required=True,
                         help="zoo name or architecture JSON path")
    inspect.add_argument("--flops-factor", type=int, choices=(1, 2), default=2,
                         help="2 counts multiply and add separately (default 2)")
    inspect.add_argument("--out", help="directory for profile/breakdown files "
                                       "(default: $PRUNEKIT_OUT, else none)")

    prune = sub.add_parser("prune", help="prune an architecture to a budget")
    prune.add_argument("--arch", required=True,
                       help="zoo name or architecture JSON path")
    prune.add_argument("--mode", required=True, choices=[m.value for m in Mode],
                       help="cost currency that drives sampling and the stop "
                            "condition")
    prune.add_argument("--target-abs", type=int,
                       help="absolute budget over conv layers, in the mode's unit")
    prune.add_argument("--target-frac", type=float,
                       help="budget as a fraction of the baseline conv-layer total")
    prune.add_argument("--ratio", type=float, default=0.1,
                       help="fraction of the sampled layer's filters removed "
                            "per iteration (default 0.1)")
    prune.add_argument("--seed", type=int, required=True,
                       help="64-bit RNG seed; equal seeds give equal outputs")
    prune.add_argument("--min-filters", type=int, default=1,
                       help="filters every conv layer keeps (default 1)")
    prune.add_argument("--flops-factor", type=int, choices=(1, 2), default=2)
    prune.add_argument("--out", help="output directory "
                                     "(default: $PRUNEKIT_OUT, else cwd)")

    report = sub.add_parser("report", help="merge traces into a trade-off series")
    report.add_argument("--trace", action="append", required=True,
                        help="trace JSON path (repeatable)")
    report.add_argument("--metrics", action="append",
                        help="training metrics JSON, one per trace, in order")
    report.add_argument("--out", help="output directory "
                                      "(default: $PRUNEKIT_OUT, else cwd)")
    return parser


_HANDLERS = {
    "zoo": _cmd_zoo,
    "inspect": _cmd_inspect,
    "prune": _cmd_prune,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except UnknownArchitectureError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (SchemaError, GraphError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
