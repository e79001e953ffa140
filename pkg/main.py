import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from __version__ import __version__
from asymptotics import envelope_drift, envelope_sweep, i_term_table
from config import settings
from discrepancy import (
    GENERATORS,
    NormalizedBox,
    PointSet,
    SpectralConfig,
    agreement,
    l2_direct,
    l2_spectral,
    scaling_study,
)
from errors import ContractError, DomainError, QuadratureError, TruncationError
from heatkernel import build_cutoff, kernel_check
from report_builder import ReportBuilder
from validation import SUITES, run_suites

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

# config-file spellings of the short flag names
KEY_ALIASES = {"kmax": "k_max", "lmax": "lambda_max", "lstep": "lambda_step",
               "test-mode": "test_mode", "s-lambda": "s_lambda"}

# knobs that do not change any payload
NOT_IN_PAYLOAD = {"out", "workers", "points"}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Literal["validate", "discrepancy", "scaling", "kernel", "envelope", "iterm",
                     "generate"]
    n: int = Field(default=1, gt=0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    k_max: int = Field(gt=0)
    lambda_max: float = Field(gt=0)
    lambda_step: float = Field(gt=0)
    samples: int = Field(gt=0)
    reps: int = Field(gt=0)
    workers: int = Field(default=1, gt=0)
    Ns: List[int] = Field(default_factory=lambda: [16, 64, 256, 1024])
    N: int = Field(default=16, gt=0)
    generator: Literal["iid", "jittered"] = "iid"
    suite: Optional[str] = None
    audit: bool = False
    test_mode: bool = False
    s_values: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05])
    s_lambda: float = Field(default=6.0, gt=0)
    nus: List[int] = Field(default_factory=lambda: [50, 102, 202])
    points: Optional[str] = None
    out: Optional[str] = None

    @field_validator("Ns", "s_values", "nus", mode="before")
    @classmethod
    def split_list(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("Ns", "nus")
    @classmethod
    def positive_ints(cls, value: List[int]) -> List[int]:
        if not value or any(v <= 0 for v in value):
            raise ValueError("must be a nonempty list of positive integers")
        return value

    @field_validator("s_values")
    @classmethod
    def unit_interval(cls, value: List[float]) -> List[float]:
        if not value or any(not 0 < v < 1 for v in value):
            raise ValueError("s values must lie in (0, 1)")
        return value

    def spectral(self) -> SpectralConfig:
        return SpectralConfig(k_max=self.k_max, lambda_max=self.lambda_max,
                              lambda_step=self.lambda_step)

    def payload(self) -> Dict[str, Any]:
        return self.model_dump(exclude=NOT_IN_PAYLOAD)


def settings_layer() -> Dict[str, Any]:
    return {
        "seed": settings.seed,
        "k_max": settings.k_max,
        "lambda_max": settings.lambda_max,
        "lambda_step": settings.lambda_step,
        "samples": settings.samples,
        "reps": settings.reps,
        "workers": settings.workers,
    }


def read_config_file(path: str) -> Dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    layer = {}
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractError(f"{path}:{number}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = KEY_ALIASES.get(key, key).replace("-", "_")
        layer[key] = value
    return layer


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the configuration code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog="hdisc", description="Quadratic discrepancy on the Heisenberg group")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file merged under explicit flags")
    common.add_argument("--n", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--kmax", dest="k_max", type=int)
    common.add_argument("--lmax", dest="lambda_max", type=float)
    common.add_argument("--lstep", dest="lambda_step", type=float)
    common.add_argument("--samples", type=int)
    common.add_argument("--reps", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output path (stdout when omitted)")

    validate = subparsers.add_parser("validate", parents=[common], help="run validation suites")
    validate.add_argument("--suite", choices=sorted(SUITES))

    disc = subparsers.add_parser("discrepancy", parents=[common],
                                 help="l2 discrepancy of a point-set CSV")
    disc.add_argument("points", help="point-set CSV file")
    disc.add_argument("--audit", action="store_true", default=None,
                      help="add the Monte Carlo estimate and the agreement ratio")
    disc.add_argument("--test-mode", dest="test_mode", action="store_true", default=None,
                      help="drop the measure term (sum of point masses only)")

    scaling = subparsers.add_parser("scaling", parents=[common], help="scaling experiment")
    scaling.add_argument("--Ns", help="comma-separated target sizes")
    scaling.add_argument("--generator", choices=sorted(GENERATORS))

    generate = subparsers.add_parser("generate", parents=[common], help="write a point set")
    generate.add_argument("--N", type=int)
    generate.add_argument("--generator", choices=sorted(GENERATORS))

    kernel = subparsers.add_parser("kernel", parents=[common], help="K_s bound checks")
    kernel.add_argument("--s", dest="s_values", help="comma-separated s values in (0, 1)")

    envelope = subparsers.add_parser("envelope", parents=[common],
                                     help="averaged lower-envelope sweep")
    envelope.add_argument("--nus", help="comma-separated nu values")

    iterm = subparsers.add_parser("iterm", parents=[common], help="I-term table")
    iterm.add_argument("--s", dest="s_values", help="comma-separated s values in (0, 1)")
    iterm.add_argument("--s-lambda", dest="s_lambda", type=float)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """settings, then the config file, then explicit flags."""
    merged = settings_layer()
    if args.config:
        merged.update(read_config_file(args.config))
    flags = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    merged.update(flags)
    return RunConfig(**merged)


def write_output(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    logger.info("Wrote %s", out)


def cmd_validate(cfg: RunConfig) -> int:
    names = [cfg.suite] if cfg.suite else None
    results = run_suites(names, n=cfg.n, k_max=cfg.k_max, lambda_max=cfg.lambda_max,
                         lambda_step=cfg.lambda_step)
    write_output(ReportBuilder.build_validation_json([r.as_dict() for r in results]), cfg.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def cmd_discrepancy(cfg: RunConfig) -> int:
    try:
        P = PointSet.from_csv(Path(cfg.points).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as e:
        raise ContractError(f"cannot read point set {cfg.points}: {e}") from e
    if P.N == 0 and not cfg.test_mode:
        raise ContractError(f"point set {cfg.points} is empty")
    if cfg.audit and cfg.test_mode:
        raise ContractError("--audit compares against the full discrepancy; drop --test-mode")
    mu = NormalizedBox(P.n)
    logger.info("Point set %s: N=%d, n=%d, generator=%s", cfg.points, P.N, P.n, P.generator)

    estimate = l2_spectral(P, mu, cfg.spectral(), include_measure=not cfg.test_mode,
                           workers=cfg.workers)
    audit = None
    code = EXIT_OK
    if cfg.audit:
        direct = l2_direct(P, mu, samples=cfg.samples, seed=cfg.seed, workers=cfg.workers)
        agrees = agreement(estimate, direct)
        audit = ReportBuilder.build_audit(estimate, direct, agrees)
        if not agrees:
            logger.error("Spectral %.6g and direct %.6g (+-%.2g) disagree",
                         estimate.value, direct.value, direct.stat_stderr)
            code = EXIT_NUMERIC
    write_output(ReportBuilder.build_estimate_json(estimate, cfg.payload(), cfg.seed, audit),
                 cfg.out)
    return code


def cmd_scaling(cfg: RunConfig) -> int:
    result = scaling_study(cfg.generator, cfg.Ns, cfg.reps, cfg.seed, NormalizedBox(cfg.n),
                           samples=cfg.samples, spectral_cfg=cfg.spectral(),
                           workers=cfg.workers, reduced=True)
    logger.info("Scaling %s: slope %.4f +- %.4f", cfg.generator, result.slope,
                result.slope_stderr)
    write_output(ReportBuilder.build_scaling_csv(result), cfg.out)
    if result.audit is not None and not result.audit.agrees:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_generate(cfg: RunConfig) -> int:
    P = GENERATORS[cfg.generator](NormalizedBox(cfg.n), cfg.N, cfg.seed)
    write_output(P.to_csv(), cfg.out)
    return EXIT_OK


def cmd_kernel(cfg: RunConfig) -> int:
    cutoff = build_cutoff()
    checks = [kernel_check(s, cfg.n, cutoff=cutoff) for s in cfg.s_values]
    columns = ("s", "K_origin", "K_origin_scaled", "min_ratio", "C", "A", "bound_holds")
    rows = [(c.s, c.origin, c.scaled_origin, c.min_ratio, c.C, c.A, c.bound_holds)
            for c in checks]
    passed = all(c.passed for c in checks)
    summary = {"min_ratio": min(c.min_ratio for c in checks), "pass": passed}
    write_output(ReportBuilder.build_rows_csv(columns, rows, summary), cfg.out)
    return EXIT_OK if passed else EXIT_NUMERIC


def cmd_envelope(cfg: RunConfig) -> int:
    report = envelope_sweep(cfg.nus, cfg.n)
    drift = envelope_drift(report)
    passed = report.c_min > 0 and drift <= 10.0
    summary = {f"c_min_nu{nu}": value for nu, value in report.c_min_by_nu.items()}
    summary.update({"c_min": report.c_min, "drift": drift, "pass": passed})
    columns = ("nu", "k", "lambda", "avg_square", "envelope", "ratio")
    write_output(ReportBuilder.build_rows_csv(columns, report.rows, summary), cfg.out)
    return EXIT_OK if passed else EXIT_NUMERIC


def cmd_iterm(cfg: RunConfig) -> int:
    rows = i_term_table(cfg.s_values, cfg.s_lambda, cfg.n)
    scaled = [row.scaled for row in rows]
    band = max(scaled) / min(scaled) if min(scaled) > 0 else float("inf")
    passed = band <= 10.0
    summary = {"band": band, "pass": passed}
    write_output(ReportBuilder.build_rows_csv(("s", "Lambda", "i_term", "scaled"), rows, summary),
                 cfg.out)
    return EXIT_OK if passed else EXIT_NUMERIC


HANDLERS = {
    "validate": cmd_validate,
    "discrepancy": cmd_discrepancy,
    "scaling": cmd_scaling,
    "generate": cmd_generate,
    "kernel": cmd_kernel,
    "envelope": cmd_envelope,
    "iterm": cmd_iterm,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg)
    except ValidationError as e:
        logger.error("Invalid configuration: %s", e)
        return EXIT_CONFIG
    except (ContractError, DomainError, OSError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except (QuadratureError, TruncationError) as e:
        logger.error("Numeric tolerance not met: %s", e)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
