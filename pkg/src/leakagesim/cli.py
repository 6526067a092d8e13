"""Command-line interface: ``leakagesim {generate,estimate,run,validate}``.

Exit codes: 0 success, 2 invalid configuration or dataset, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    PRESETS,
    ConfigError,
    SimConfig,
    _merge,
    default_config_dict,
    from_dict,
    load_config,
    read_config_file,
    validate_dict,
)
from .dgp import generate_units, numeric_arrays
from .estimators import ols_ate, run_six_estimates
from .io import (
    DatasetError,
    read_dataset,
    write_dataset,
    write_leakage,
    write_models,
    write_propensities,
    write_report,
)
from .simulate import simulate

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3

logger = logging.getLogger("leakagesim")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON config file (keys as in SimConfig)")
    p.add_argument("--preset", choices=["default", "desk"], help="desk: n=2000, bootstrap_b=300")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--hajek", action="store_true", default=None, help="weight-normalized IPW")
    p.add_argument("--clip", type=float, metavar="EPS", help="clip fitted propensities to [EPS, 1-EPS]")
    p.add_argument("--bootstrap-b", type=int, dest="bootstrap_b", metavar="B", help="bootstrap resamples (>= 100)")
    p.add_argument("--threads", type=int, default=1)


def _overrides(args: argparse.Namespace) -> dict:
    return {"seed": args.seed, "n": args.n, "k": args.k, "hajek": args.hajek, "clip_epsilon": args.clip,
            "bootstrap_b": args.bootstrap_b}


def _config(args: argparse.Namespace) -> SimConfig:
    return load_config(args.config, preset=args.preset, overrides=_overrides(args))


def _executor(threads: int):
    return ThreadPoolExecutor(max_workers=threads) if threads and threads > 1 else nullcontext(None)


def _estimate(units, config: SimConfig, out_dir: Path, threads: int):
    out_dir.mkdir(parents=True, exist_ok=True)
    with _executor(threads) as pool:
        report, fits = run_six_estimates(units, config, executor=pool)
    digest = config.digest()
    write_report(report, out_dir)
    write_propensities(units, fits, out_dir / "propensities.csv", digest)
    write_leakage(units, out_dir / "leakage.csv", digest)
    write_models(fits, out_dir / "models.json", digest)
    return report


def _print_summary(report) -> None:
    print(f"{'label':<22}{'estimate':>10}{'ci_low':>10}{'ci_high':>10}")
    for e in report.estimates:
        print(f"{e.label.value:<22}{e.value:>10.3f}{e.ci_low:>10.3f}{e.ci_high:>10.3f}")
    print(f"tau_true = {report.true_tau}")
    print(f"config_digest = {report.config_digest}")


def cmd_generate(args: argparse.Namespace) -> int:
    config = _config(args)
    with _executor(args.threads) as pool:
        units = simulate(config, executor=pool)
    out = Path(args.out)
    if out.parent:
        out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(units, out, config)
    print(f"wrote {len(units)} units to {out} (config {config.digest()})")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    units, config = read_dataset(args.dataset)
    if config is None or args.config or args.preset or any(v is not None for v in _overrides(args).values()):
        # sidecar config < file < preset < flags; the DGP fields only label the report here
        base = config.to_dict() if config is not None else {}
        file_raw = read_config_file(args.config) if args.config else {}
        config = load_config(None, preset=args.preset, overrides=_merge(_merge(base, file_raw), _overrides(args)))
    report = _estimate(units, config, Path(args.out), args.threads)
    _print_summary(report)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with _executor(args.threads) as pool:
        units = simulate(config, executor=pool)
    write_dataset(units, out / "dataset.jsonl", config)
    report = _estimate(units, config, out, args.threads)
    _print_summary(report)
    return EXIT_OK


def calibration_check(config: SimConfig, n: int = 10_000) -> tuple[float, float]:
    """OLS of Y on (T, X) without U on a numeric-only draw; returns (estimate, bias)."""
    data = numeric_arrays(generate_units(replace(config, n=n)))
    est = ols_ate(data["y"], data["t"], data["x"])
    return est, est - config.dgp.outcome_tau


def cmd_validate(args: argparse.Namespace) -> int:
    raw: dict = {}
    findings: list[tuple[str, bool, str]] = []
    try:
        if args.config:
            raw = read_config_file(args.config)
        findings.append(("config file readable", True, args.config or "(built-in defaults)"))
    except (OSError, ConfigError, ValueError) as exc:
        findings.append(("config file readable", False, str(exc)))
    merged = _merge(default_config_dict(), raw)
    if args.preset:
        merged = _merge(merged, PRESETS[args.preset])
    merged = _merge(merged, {k: v for k, v in _overrides(args).items() if v is not None})
    problems = validate_dict(merged)
    checks = {
        "topic_mixture sums to 1": lambda p: p.startswith("topic_mixture"),
        "outcome_sigma positive": lambda p: p.startswith("dgp.outcome_sigma"),
        "sizes positive (n, k, vocab_size)": lambda p: p.split(":")[0] in ("n", "k", "vocab_size"),
        "topics complete (4 prompts, 8 keywords)": lambda p: p.startswith("topics"),
    }
    claimed = set()
    for name, match in checks.items():
        hits = [p for p in problems if match(p)]
        claimed.update(hits)
        findings.append((name, not hits, "; ".join(hits)))
    rest = [p for p in problems if p not in claimed]
    findings.append(("other fields valid", not rest, "; ".join(rest)))

    if not problems:
        config = from_dict(merged)
        try:
            from .textgen import default_language_model, make_topics

            make_topics(config, default_language_model())
            findings.append(("keywords in model vocabulary", True, ""))
        except ConfigError as exc:
            findings.append(("keywords in model vocabulary", False, str(exc)))
        est, bias = calibration_check(config)
        findings.append(("calibration: OLS without U is negative", est < 0, f"estimate {est:.3f}"))
        findings.append(("calibration: OLS without U bias <= -5", bias <= -5, f"bias {bias:.3f}"))
    else:
        findings.append(("calibration oracle", False, "skipped: configuration invalid"))

    for name, ok, detail in findings:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" - {detail}" if detail else ""))
    return EXIT_OK if all(ok for _, ok, _ in findings) else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leakagesim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate a dataset (JSON lines)")
    _add_common(p)
    p.add_argument("--out", required=True, help="dataset path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", help="six ATE estimates for a dataset")
    p.add_argument("dataset")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("run", help="generate and estimate in one go")
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a config and run the calibration oracle")
    _add_common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
