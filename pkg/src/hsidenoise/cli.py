"""Command-line interface.

Subcommands compose into a full desk-scale experiment:

    hsidenoise simulate --case 1 --seed 0 --rows 64 --cols 64 --bands 60 \
        --rank 8 --output run/
    hsidenoise denoise --input run/noisy.hyc --output run/denoised.hyc \
        --report run/report.json
    hsidenoise evaluate --ref run/clean.hyc --test run/denoised.hyc \
        --report run/metrics.json

Progress goes to stderr; machine-readable artifacts only to files.
Exit codes: 0 success, 2 config error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .container import read_container, write_container
from .denoisers import REGISTRY, DenoiserSpec
from .errors import ConfigError, ContainerError, NumericalError, PipelineError
from .jsonio import write_json
from .metrics import evaluate
from .noise import estimate_noise
from .pipeline import PipelineConfig, denoise
from .simulate import simulate_case, synth_clean

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file is not valid JSON: {err}") from err
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return cfg


def _merge(args: argparse.Namespace, file_cfg: dict, key: str, default):
    """Flag > config file > default."""
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if key in file_cfg:
        return file_cfg[key]
    return default


def _parse_subspace_dim(raw) -> int | str:
    if raw is None or raw == "auto":
        return "auto"
    try:
        dim = int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"--subspace-dim must be a positive int or 'auto', got {raw!r}")
    if dim < 1:
        raise ConfigError("--subspace-dim must be >= 1")
    return dim


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config)
    case_id = int(_merge(args, cfg, "case", 1))
    seed = int(_merge(args, cfg, "seed", 0))
    out_dir = Path(_merge(args, cfg, "output", None) or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.input:
        clean = read_container(args.input)
        _log(f"loaded clean cube {clean.shape} from {args.input}")
    else:
        clean = synth_clean(args.rows, args.cols, args.bands, args.rank, seed=seed)
        _log(f"synthesized clean cube {clean.shape} (rank {args.rank}, seed {seed})")
    noisy, truth = simulate_case(clean, case_id, seed=seed, profile=args.profile)
    write_container(noisy, out_dir / "noisy.hyc")
    write_container(clean, out_dir / "clean.hyc")
    write_container(truth.mask.astype(np.float64), out_dir / "mask_true.hyc")
    write_json(out_dir / "truth.json", truth.to_dict())
    _log(f"case {case_id} artifacts written to {out_dir}/")
    return EXIT_OK


def cmd_estimate_noise(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config)
    seed = int(_merge(args, cfg, "seed", 0))
    threads = int(_merge(args, cfg, "threads", 1))
    out_dir = Path(_merge(args, cfg, "output", None) or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    cube = read_container(args.input)
    _log(f"estimating noise on {cube.shape} cube")
    est = estimate_noise(cube, em_seed=seed, threads=threads)
    write_json(out_dir / "noise.json", est.to_dict())
    write_container(est.mask.astype(np.float64), out_dir / "mask_est.hyc")
    for w in est.warnings:
        _log(f"warning: {w}")
    _log(f"noise statistics written to {out_dir}/")
    return EXIT_OK


def cmd_denoise(args: argparse.Namespace) -> int:
    cfg = _load_config_file(args.config)
    seed = int(_merge(args, cfg, "seed", 0))
    threads = int(_merge(args, cfg, "threads", 1))
    denoiser = _merge(args, cfg, "denoiser", "dct")
    if denoiser not in REGISTRY:
        raise ConfigError(f"unknown denoiser {denoiser!r}; available: {sorted(REGISTRY)}")
    subspace_dim = _parse_subspace_dim(_merge(args, cfg, "subspace-dim", "auto"))
    pipeline_cfg = PipelineConfig(
        subspace_dim=subspace_dim,
        denoiser=DenoiserSpec(denoiser),
        em_seed=seed,
        threads=threads,
    )
    cube = read_container(args.input)
    _log(f"denoising {cube.shape} cube (subspace={subspace_dim}, denoiser={denoiser})")
    out, report = denoise(cube, pipeline_cfg)
    write_container(out, args.output)
    for name, seconds in report.stages:
        _log(f"  {name:24s} {seconds:8.3f} s")
    for w in report.warnings:
        _log(f"warning: {w}")
    if args.report:
        report.save(args.report)
    _log(f"denoised cube written to {args.output}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    ref = read_container(args.ref)
    test = read_container(args.test)
    est_mask = read_container(args.est_mask) if args.est_mask else None
    true_mask = read_container(args.true_mask) if args.true_mask else None
    report = evaluate(ref, test, peak=args.peak, est_mask=est_mask, true_mask=true_mask)
    report_path = args.report or "metrics.json"
    report.save(report_path)
    csv_path = args.csv or str(Path(report_path).with_suffix(".csv"))
    report.save_csv(csv_path)
    _log(f"MPSNR {report.mpsnr:.2f} dB, MSSIM {report.mssim:.4f}, MSAD {report.msad:.4f}")
    if report.mask_f1 is not None:
        _log(
            f"mask precision {report.mask_precision:.3f} recall "
            f"{report.mask_recall:.3f} F1 {report.mask_f1:.3f}"
        )
    _log(f"metrics written to {report_path} and {csv_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsidenoise",
        description="Mixed-noise estimation and subspace denoising for "
        "hyperspectral cubes (HYC1 containers)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (flags override its keys)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker-thread cap; never changes results")

    p = sub.add_parser("simulate", parents=[common],
                       help="generate a ground-truthed noisy cube")
    p.add_argument("--input", help="clean cube (HYC1); omit to synthesize")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--case", type=int, default=None, help="noise case id 1..18")
    p.add_argument("--profile", default="pavia", choices=["pavia", "dcmall"],
                   help="Gaussian profile for cases 1-4")
    p.add_argument("--rows", type=int, default=64)
    p.add_argument("--cols", type=int, default=64)
    p.add_argument("--bands", type=int, default=60)
    p.add_argument("--rank", type=int, default=8,
                   help="spectral rank of the synthesized clean cube")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("estimate-noise", parents=[common],
                       help="estimate noise stds and the sparse-noise mask")
    p.add_argument("--input", required=True, help="noisy cube (HYC1)")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(fn=cmd_estimate_noise)

    p = sub.add_parser("denoise", parents=[common], help="run the full pipeline")
    p.add_argument("--input", required=True, help="noisy cube (HYC1)")
    p.add_argument("--output", required=True, help="denoised cube path (HYC1)")
    p.add_argument("--subspace-dim", default=None, help="int or 'auto'")
    p.add_argument("--denoiser", default=None, choices=sorted(REGISTRY),
                   help="eigen-image denoiser (default dct)")
    p.add_argument("--report", help="write the run report JSON here")
    p.set_defaults(fn=cmd_denoise)

    p = sub.add_parser("evaluate", parents=[common],
                       help="compare a reconstruction against a reference")
    p.add_argument("--ref", required=True, help="reference cube (HYC1)")
    p.add_argument("--test", required=True, help="cube under test (HYC1)")
    p.add_argument("--est-mask", help="estimated mask (HYC1) for P/R/F1")
    p.add_argument("--true-mask", help="ground-truth mask (HYC1) for P/R/F1")
    p.add_argument("--peak", type=float, default=1.0, help="PSNR peak value")
    p.add_argument("--report", help="metrics JSON path (default metrics.json)")
    p.add_argument("--csv", help="per-band CSV path (default next to the JSON)")
    p.set_defaults(fn=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        _log(f"config error: {err}")
        return EXIT_CONFIG
    except (ContainerError, OSError) as err:
        _log(f"I/O error: {err}")
        return EXIT_IO
    except (NumericalError, PipelineError, np.linalg.LinAlgError) as err:
        _log(f"numerical failure: {err}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
