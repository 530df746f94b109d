"""Command-line experiment runner.

Each subcommand reads one JSON config (all keys optional; defaults give a
2-ring/4-ary alphabet, n = 4, beta = 0.9, 10 GBd, the reference APD) and
writes four artifacts into the output directory:

    results.csv            the numbers, deterministic for a given config+seed
    resolved_config.json   the config echoed back with every default filled in
    run.log                seed, code version, wall time, task summary lines
    <command>.png          a quick-look figure of the same results

Thread count never changes results.csv, only how long the run takes.  On
any failure the partially written artifacts are removed again.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .classes import choose_representatives, enumerate_classes, rate_loss
from .config import ConfigError, ExperimentConfig
from .metrics import (
    ber_sweep,
    block_set_power,
    empirical_power,
    mi_sweep,
    power_decomposition,
)
from .photodetector import build_noise_model
from .reports import (
    save_bandwidth_curves,
    save_class_histogram,
    save_power_check,
    save_sweep_figure,
)
from .waveform import TukeyShape, fractional_energy_bandwidth, synthesize_block

__all__ = ["main"]

_COMMAND_METRIC = {
    "classes": "classes",
    "bandwidth": "bandwidth",
    "mi-sweep": "mi",
    "ber-sweep": "ber",
    "fiber-ber": "ber",
    "power-check": "power_check",
}


def _version_string() -> str:
    """Package version, extended with the git revision when available."""
    try:
        proc = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True, text=True, timeout=5,
            cwd=Path(__file__).resolve().parent)
        if proc.returncode == 0 and proc.stdout.strip():
            return f"{__version__}+g{proc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _build_table(cfg: ExperimentConfig):
    table = enumerate_classes(cfg.constellation.build(), cfg.n)
    if cfg.M > table.num_classes:
        raise ConfigError(
            f"M: {cfg.M} blocks requested but this constellation and n "
            f"give only {table.num_classes} classes")
    return table


def _run_classes(cfg, csv_path, fig_path, threads):
    constellation = cfg.constellation.build()
    table = enumerate_classes(constellation, cfg.n)
    hist = sorted(table.size_histogram().items())
    loss = float(rate_loss(table))
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("class_size,count\n")
        for size, count in hist:
            fh.write(f"{size},{count}\n")
        fh.write(f"# total_classes,{table.num_classes}\n")
        fh.write(f"# total_vectors,{table.num_vectors}\n")
        fh.write(f"# rate_loss_bits_per_symbol,{loss!r}\n")
    name = constellation.name
    save_class_histogram([s for s, _ in hist], [c for _, c in hist], fig_path,
                         subtitle=f"{name}, n={cfg.n}: {table.num_classes} classes")
    return [f"constellation={name}",
            f"num_classes={table.num_classes}",
            f"num_vectors={table.num_vectors}",
            f"rate_loss_bits_per_symbol={loss!r}"]


def _run_bandwidth(cfg, csv_path, fig_path, threads):
    rows = [(beta, frac, fractional_energy_bandwidth(beta, frac))
            for beta in cfg.bandwidth.betas
            for frac in cfg.bandwidth.fractions]
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("beta,fraction,bandwidth\n")
        for beta, frac, bw in rows:
            fh.write(f"{float(beta)!r},{float(frac)!r},{bw!r}\n")
    save_bandwidth_curves(rows, fig_path)
    return [f"rows={len(rows)}",
            "bandwidth_unit=cycles per symbol period, one-sided"]


def _run_mi(cfg, csv_path, fig_path, threads):
    table = _build_table(cfg)
    blocks = choose_representatives(table, cfg.M)
    prior = None
    if cfg.sweep.prior == "class_sizes":
        sizes = np.asarray(table.sizes[:cfg.M], dtype=float)
        prior = sizes / sizes.sum()
    noise = build_noise_model(cfg.apd)
    result = mi_sweep(blocks, cfg.beta, cfg.T, noise, cfg.sweep.powers_dbm,
                      trials=cfg.sweep.trials, seed=cfg.seed, prior=prior,
                      threads=threads)
    with open(csv_path, "w", newline="\n") as fh:
        result.write_csv(fh)
    ceiling = float(np.log2(cfg.M)) / cfg.n
    save_sweep_figure(result, "mutual information (bits/symbol)", fig_path,
                      subtitle=f"M={cfg.M}, n={cfg.n}, beta={cfg.beta}, "
                               f"ceiling {ceiling:.3f} b/sym")
    return [f"num_classes={table.num_classes}",
            f"prior={cfg.sweep.prior}",
            f"mi_ceiling_bits_per_symbol={ceiling!r}",
            "value_unit=bits per symbol"]


def _run_ber(cfg, csv_path, fig_path, threads):
    table = _build_table(cfg)
    blocks = choose_representatives(table, cfg.M, label_seed=cfg.label_seed)
    noise = build_noise_model(cfg.apd)
    result = ber_sweep(blocks, cfg.beta, cfg.T, noise, cfg.sweep.powers_dbm,
                       max_trials=cfg.sweep.max_trials,
                       min_errors=cfg.sweep.min_errors,
                       seed=cfg.seed, threads=threads, fiber=cfg.fiber)
    with open(csv_path, "w", newline="\n") as fh:
        result.write_csv(fh)
    if cfg.fiber is not None:
        xlabel = "launch power (dBm)"
        extra = [f"fiber_length_km={cfg.fiber.length_km!r}",
                 "power_axis=launch power before the span"]
    else:
        xlabel = "received optical power (dBm)"
        extra = ["power_axis=received power, back to back"]
    save_sweep_figure(result, "bit error rate", fig_path, logy=True,
                      xlabel=xlabel,
                      subtitle=f"M={cfg.M}, n={cfg.n}, beta={cfg.beta}")
    return [f"num_classes={table.num_classes}",
            f"bits_per_block={int(np.log2(cfg.M))}",
            f"label_seed={cfg.label_seed}"] + extra


def _run_power_check(cfg, csv_path, fig_path, threads):
    table = _build_table(cfg)
    blocks = choose_representatives(table, cfg.M)
    shape = TukeyShape(cfg.beta, cfg.T)
    num_blocks = max(1, cfg.power_check.symbols // cfg.n)
    rng = np.random.default_rng(cfg.seed)
    draws = rng.integers(0, cfg.M, size=num_blocks)
    stream = blocks.blocks[draws].reshape(-1)
    target = block_set_power(blocks)

    field = synthesize_block(shape, stream, cfg.power_check.oversampling)
    measured = empirical_power(field, stream.size * cfg.T)
    sym_w, ovl_w, edge_w = power_decomposition(
        stream, shape, cfg.power_check.oversampling)
    rel = abs(measured - target) / target

    with open(csv_path, "w", newline="\n") as fh:
        fh.write("target_w,empirical_w,relative_error,"
                 "symbol_window_w,overlap_window_w,edge_term_w,symbols\n")
        fh.write(f"{target!r},{measured!r},{rel!r},"
                 f"{sym_w!r},{ovl_w!r},{edge_w!r},{stream.size}\n")
    save_power_check(target, measured, fig_path)
    return [f"symbols={stream.size}",
            f"relative_error={rel!r}"]


_TASKS = {
    "classes": _run_classes,
    "bandwidth": _run_bandwidth,
    "mi-sweep": _run_mi,
    "ber-sweep": _run_ber,
    "fiber-ber": _run_ber,
    "power-check": _run_power_check,
}


def run(command: str, cfg: ExperimentConfig, out_dir: Path,
        threads: int = 1) -> None:
    """Execute one task and write its artifacts into ``out_dir``.

    Any exception removes the files written so far before propagating, so
    an output directory never holds a half-finished run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "results.csv"
    fig_path = out_dir / f"{command}.png"
    resolved_path = out_dir / "resolved_config.json"
    log_path = out_dir / "run.log"
    written = [resolved_path, csv_path, fig_path, log_path]

    start = time.perf_counter()
    try:
        with open(resolved_path, "w", newline="\n") as fh:
            json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        extra = _TASKS[command](cfg, csv_path, fig_path, threads)
        elapsed = time.perf_counter() - start
        with open(log_path, "w", newline="\n") as fh:
            fh.write(f"command={command}\n")
            fh.write(f"version={_version_string()}\n")
            fh.write(f"seed={cfg.seed}\n")
            fh.write(f"threads={threads}\n")
            fh.write(f"wall_time_s={elapsed:.3f}\n")
            for line in extra:
                fh.write(line + "\n")
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def _load_raw(config_path) -> dict:
    if config_path is None:
        return {}
    try:
        with open(config_path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"config: cannot read {config_path} ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    return raw


def _reconcile(command: str, raw: dict, seed_override) -> ExperimentConfig:
    """Fold command-line overrides into the raw dict and validate it."""
    if seed_override is not None:
        raw["seed"] = seed_override
    expected = _COMMAND_METRIC[command]
    declared = raw.get("metric")
    if declared is None:
        raw["metric"] = expected
    elif declared != expected:
        raise ConfigError(
            f"metric: config declares {declared!r} but the {command} "
            f"command runs {expected!r}")
    channel = raw.get("channel")
    if command == "fiber-ber":
        if channel is None:
            raw["channel"] = {"kind": "fiber"}
        elif isinstance(channel, dict):
            channel.setdefault("kind", "fiber")
            if channel["kind"] != "fiber":
                raise ConfigError(
                    "channel.kind: fiber-ber runs the fiber channel, "
                    f"got {channel['kind']!r}")
    elif command == "ber-sweep":
        if isinstance(channel, dict) and \
                channel.get("kind", "backtoback") != "backtoback":
            raise ConfigError(
                "channel.kind: ber-sweep is the back-to-back runner; "
                "use the fiber-ber command for a span")
    return ExperimentConfig.from_dict(raw)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tukeylink",
        description="Experiment runner for the controlled-ISI "
                    "direct-detection link simulator.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "classes": "enumerate square-law equivalence classes",
        "bandwidth": "tabulate fractional-energy bandwidths",
        "mi-sweep": "mutual information vs received power",
        "ber-sweep": "bit error rate vs received power, back to back",
        "fiber-ber": "bit error rate vs launch power over a fiber span",
        "power-check": "audit waveform power against the ensemble average",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", default=None, metavar="PATH",
                       help="JSON experiment description (default: all defaults)")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="output directory (default: runs/<command>)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads; never changes results.csv")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = _reconcile(args.command, _load_raw(args.config), args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out) if args.out is not None \
        else Path("runs") / args.command
    try:
        run(args.command, cfg, out_dir, threads=args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out_dir / 'results.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
