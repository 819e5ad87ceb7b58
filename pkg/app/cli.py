"""
Command-line front end.

    trace-limit verify-constants [--primes 2,3,5,7] [--test-corrupt]
    trace-limit sweep [--config run.cfg] [--s-primes 2,3] [--x-grid 1000,10000]
    trace-limit orbital --p 5 --m 0 --a 1 --b 6 [--scaled]
    trace-limit limit-form --p 3

Exit status: 0 when every check passes, 1 on a structural failure, 2 on
resource or parse errors.
"""

import argparse
import json
import sys
import time
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

import structlog

from app.core.config import RunConfig, load_run_config, settings
from app.core.constants import (
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_USAGE,
    REPORT_CONSTANTS_FILE,
    REPORT_HYPERBOLIC_FILE,
    REPORT_LEDGER_FILE,
    REPORT_RESIDUALS_FILE,
    RESIDUAL_COLUMNS,
)
from app.core.errors import ConfigError, ContractError, VerificationError
from app.core.logging import configure_logging
from app.core.padic import PlaceSet, require_prime
from app.core.reports import ReportWriter
from app.models.hyperbolic import hyperbolic_sweep
from app.models.orbital import TestFunctionSpec, orb_split, worb, worb_hat, worb_tilde
from app.models.profiles import load_profile
from app.models.spectral import (
    FAMILIES,
    ledger_report,
    limit_form_check,
    limit_form_terms,
    residual_table,
    verify_constants,
)

logger = structlog.get_logger()

DEFAULT_CHECK_PRIMES = [2, 3, 5, 7]

SWEEP_EPILOG = f"""
residuals.csv columns: {", ".join(RESIDUAL_COLUMNS)}
  residual        = partial_sum - main_term (modulus of the difference for complex families)
  residual_scaled = |residual| / X^alpha
families: {", ".join(FAMILIES)}
"""


def _int_list(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}") from e


def _prime(raw: str) -> int:
    try:
        p = int(raw)
        require_prime(p)
    except (ValueError, ContractError) as e:
        raise argparse.ArgumentTypeError(f"expected a prime, got {raw!r}") from e
    return p


def _prime_list(raw: str) -> list[int]:
    return [_prime(part) for part in raw.split(",") if part.strip()]


def _rational(raw: str) -> Fraction:
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"expected a rational number, got {raw!r}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value run configuration file")
    common.add_argument("--out-dir", type=Path, help="directory for JSON and CSV reports")
    common.add_argument("--precision", type=int, help="decimal digits for high-precision constants")
    common.add_argument("--workers", type=int, help="threads for the hyperbolic sweep")
    common.add_argument("--log-level", default=None, help="structlog level (DEBUG, INFO, ...)")

    parser = argparse.ArgumentParser(
        prog="trace-limit",
        description="Verify the exact local constants and the asymptotic main terms of the limit trace formula.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify-constants", parents=[common], help="run every exact local check")
    verify.add_argument("--primes", type=_prime_list, default=DEFAULT_CHECK_PRIMES, help="primes to check")
    verify.add_argument("--test-corrupt", action="store_true", help="perturb one constant; the run must fail")

    sweep = sub.add_parser(
        "sweep",
        parents=[common],
        help="residual tables on an X grid",
        epilog=SWEEP_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sweep.add_argument("--s-primes", type=_int_list, help="finite primes of S (must contain 2)")
    sweep.add_argument("--x-grid", type=_int_list, help="strictly increasing X values")
    sweep.add_argument("--profile", help="built-in profile name or package.module:factory")
    sweep.add_argument("--families", type=lambda s: s.split(","), default=list(FAMILIES))
    sweep.add_argument("--per-n", action="store_true", help=f"also write {REPORT_HYPERBOLIC_FILE}")

    orbital = sub.add_parser("orbital", parents=[common], help="exact local orbital integrals")
    orbital.add_argument("--p", type=_prime, required=True)
    orbital.add_argument("--m", type=int, default=0)
    orbital.add_argument("--a", type=_rational, required=True)
    orbital.add_argument("--b", type=_rational, required=True)
    orbital.add_argument("--scaled", action="store_true", help="use p^(-m/2) 1_{X_p^m}")

    limit = sub.add_parser("limit-form", parents=[common], help="local limit form at one prime")
    limit.add_argument("--p", type=_prime, required=True)

    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    return load_run_config(
        args.config,
        out_dir=args.out_dir,
        precision=args.precision,
        workers=args.workers,
        s_primes=getattr(args, "s_primes", None),
        x_grid=getattr(args, "x_grid", None),
        profile=getattr(args, "profile", None),
    )


def _emit(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, default=str))


def cmd_verify_constants(args: argparse.Namespace) -> int:
    config = _run_config(args)
    report = verify_constants(args.primes, corrupt=args.test_corrupt)
    ReportWriter(config.out_dir).write_json(REPORT_CONSTANTS_FILE, report)
    failures = [c["name"] for c in report["checks"] if not c["passed"]]
    _emit({"passed": report["passed"], "checks": len(report["checks"]), "failures": failures})
    return EXIT_OK if report["passed"] else EXIT_FAILURE


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _run_config(args)
    start = time.time()
    S = PlaceSet.of(*config.s_primes)
    f = TestFunctionSpec.spherical(S, load_profile(config.profile), config.hecke_m)
    writer = ReportWriter(config.out_dir)

    ledger = ledger_report(S, f, settings.quadrature_tolerance, config.precision)
    writer.write_json(
        REPORT_LEDGER_FILE,
        {"s_primes": config.s_primes, "profile": config.profile, "ledger": ledger.to_json()},
    )
    table = residual_table(config.x_grid, S, f, args.families, config.workers)
    writer.write_frame(REPORT_RESIDUALS_FILE, table)
    if args.per_n:
        writer.write_frame(REPORT_HYPERBOLIC_FILE, hyperbolic_sweep(max(config.x_grid), S, f, config.workers))

    logger.info(
        "Sweep finished",
        s_primes=config.s_primes,
        grid=config.x_grid,
        rows=len(table),
        seconds=round(time.time() - start, 3),
    )
    _emit({"out_dir": str(config.out_dir), "rows": len(table), "families": sorted(set(table["family"]))})
    return EXIT_OK


def cmd_orbital(args: argparse.Namespace) -> int:
    values = {
        name: str(func(args.p, args.m, args.a, args.b, args.scaled))
        for name, func in (("orb", orb_split), ("worb", worb), ("worb_hat", worb_hat), ("worb_tilde", worb_tilde))
    }
    for name, value in values.items():
        print(f"{name} = {value}")
    return EXIT_OK


def cmd_limit_form(args: argparse.Namespace) -> int:
    terms = limit_form_terms(args.p)
    total = limit_form_check(args.p)
    _emit(
        {
            "p": args.p,
            "terms": {name: str(value) for name, value in terms.items()},
            "total": total.to_json(),
            "zero": total.is_zero(),
        }
    )
    return EXIT_OK if total.is_zero() else EXIT_FAILURE


COMMANDS = {
    "verify-constants": cmd_verify_constants,
    "sweep": cmd_sweep,
    "orbital": cmd_orbital,
    "limit-form": cmd_limit_form,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    configure_logging(settings.env, args.log_level or settings.log_level)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("Invalid configuration", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except VerificationError as e:
        logger.error("Verification failed", command=args.command, error=str(e), kind=type(e).__name__)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
