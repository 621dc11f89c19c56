"""
Verify Command
Runs a verification suite and writes its pass/fail report
"""
import logging
import sys

from ..services import SUITES, VerificationService
from ..storage import distortion_from_file, dumps, labelled_path, save_distortion, write_text

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("verify", help="run a verification suite")
    parser.add_argument("suite", choices=list(SUITES), help="suite to run")
    parser.add_argument("--k", default="5", help="exponent k > 4 of Example 1")
    parser.add_argument("--samples", type=int, default=None, help="distortion sample pairs")
    parser.add_argument(
        "--distortion-out", dest="distortion_out", default=None,
        help="write each distortion report to <stem>.<map>.json next to this path",
    )
    return parser


def distortion_table(report) -> str:
    """Per-scale min/max ratios of every certified map"""
    lines = []
    for record in report.distortion:
        lines.append(f"{record.label}: max/min {record.global_max / record.global_min:.4g}")
        lines.append(f"  {'t':>12} {'min':>10} {'max':>10}")
        lines.extend(f"  {row.t:>12.6g} {row.min:>10.4f} {row.max:>10.4f}" for row in record.per_scale)
    return "\n".join(lines)


def handle(args) -> int:
    report = VerificationService.run(
        args.suite,
        t=args.t,
        resolution=args.resolution,
        seed=args.seed,
        k=args.k,
        knot_table=args.knot_table,
        samples=args.samples,
        timings=args.timings,
    )
    write_text(dumps(report), args.out)
    if args.distortion_out:
        for record in report.distortion:
            save_distortion(distortion_from_file(record), labelled_path(args.distortion_out, record.label), record.label)

    failed = [c for c in report.checks if not c.passed]
    for record in failed:
        print(f"FAILED {record.name}: expected {record.expected}, observed {record.observed}", file=sys.stderr)
    if report.distortion:
        print(distortion_table(report), file=sys.stderr)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict} {report.suite}: {len(report.checks) - len(failed)}/{len(report.checks)} checks passed", file=sys.stderr)
    return 0 if report.passed else 1
