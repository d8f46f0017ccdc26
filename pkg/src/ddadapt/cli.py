"""
Command-line interface.

    ddadapt kl      --config bench.ini --out results/
    ddadapt full    --config bench.ini --workers 8
    ddadapt adapt   --config bench.ini
    ddadapt mc      --config bench.ini --seed 7 --realizations 3
    ddadapt compare --run-a results/adapt --run-b results/full --region 3
    ddadapt bench   --config bench.ini

Exit status is 0 on success, 2 for configuration or input errors and 3
for numerical failures.
"""

import argparse
import logging
import sys
from typing import List, Optional

from ddadapt import __version__
from ddadapt.config import RunConfig
from ddadapt.exceptions import DDAdaptError
from ddadapt.pipeline import StochasticDiffusion

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _region(value: str) -> int:
    """Subdomain label written as 3 or D3."""
    text = value.strip().upper().removeprefix("D")
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid subdomain label: {value!r}"
        ) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddadapt",
        description="Domain-decomposed basis adaptation for lognormal diffusion.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; benchmark defaults when omitted")
    common.add_argument("--out", help="output directory (overrides [run] output_dir)")
    common.add_argument("--seed", type=int, help="base seed (overrides [run] seed)")
    common.add_argument(
        "--workers", type=int, help="solver threads (overrides [run] workers)"
    )
    common.add_argument(
        "--log-level", default="INFO", choices=LOG_LEVELS, help="logging verbosity"
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("kl", parents=[common], help="eigenvalues on D and the subdomains")
    sub.add_parser("full", parents=[common], help="full-dimensional PC solution")
    sub.add_parser("adapt", parents=[common], help="adapted solution, stitched")
    mc = sub.add_parser("mc", parents=[common], help="Monte-Carlo reference")
    mc.add_argument(
        "--realizations",
        type=int,
        help="write the first K sample solutions (overrides [mc] realizations)",
    )
    compare = sub.add_parser(
        "compare", parents=[common], help="errors between two runs"
    )
    compare.add_argument("--run-a", required=True, help="run directory to assess")
    compare.add_argument("--run-b", required=True, help="reference run directory")
    compare.add_argument("--region", type=_region, help="restrict to one subdomain")
    sub.add_parser("bench", parents=[common], help="kl, full, adapt and compare")
    return parser


def run(args: argparse.Namespace) -> None:
    """Execute one parsed command."""
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    config = config.with_overrides(
        seed=args.seed, workers=args.workers, output_dir=args.out
    )
    app = StochasticDiffusion(config)
    logger.info("%r writing to %s", app, app.output_dir)

    if args.command == "kl":
        app.kl()
    elif args.command == "full":
        app.full()
    elif args.command == "adapt":
        app.adapt()
    elif args.command == "mc":
        app.mc(realizations=args.realizations)
    elif args.command == "compare":
        for metric, region, value in app.compare(args.run_a, args.run_b, args.region):
            print(f"{metric:<12} {region:<4} {value:.6e}")
    elif args.command == "bench":
        for stage, solves in app.bench().items():
            print(f"{stage:<12} {solves}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        run(args)
    except DDAdaptError as e:
        logger.error("%s", e)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
