"""
Build Command
Writes the model files of the example surfaces and families
"""
import logging
import sys
from typing import Callable, Dict, List, Tuple

from ..constructions import (
    build_bridge,
    build_example1,
    build_example3,
    build_example4,
    build_family_Xi,
    build_family_Yi,
    build_family_Zi,
)
from ..exceptions import InvalidInputError
from ..models import GermModel
from ..storage import labelled_path, save_model

logger = logging.getLogger(__name__)


def _pair(models: Tuple[GermModel, GermModel], labels: Tuple[str, str]) -> List[Tuple[str, GermModel]]:
    return list(zip(labels, models))


BUILDERS: Dict[str, Callable] = {
    "example1": lambda a: _pair(build_example1(a.k), ("X1", "X2")),
    "example3": lambda a: _pair(build_example3(a.knot1, a.knot2, knot_table=a.knot_table), ("X1", "X2")),
    "example4": lambda a: _pair(build_example4(), ("X0", "X1")),
    "family": lambda a: [(f"X{a.i}", build_family_Xi(a.i))],
    "family-knot": lambda a: [(f"Y{a.i}", build_family_Yi(a.i, a.knot, knot_table=a.knot_table))],
    "family-segment": lambda a: [(f"Z{a.i}", build_family_Zi(a.i, a.beta))],
    "bridge": lambda a: [("A", build_bridge(a.q, a.beta, a.p))],
}


def add_parser(subparsers):
    parser = subparsers.add_parser("build", help="write a germ model file")
    parser.add_argument("example", choices=sorted(BUILDERS), help="construction to build")
    parser.add_argument("--k", default="5", help="exponent k > 4 of Example 1")
    parser.add_argument("--i", type=int, default=0, help="twist count of the family")
    parser.add_argument("--q", default="3", help="bridge tangency exponent")
    parser.add_argument("--beta", default="2", help="Holder exponent")
    parser.add_argument("--p", default=None, help="bridge cut exponent, beta < p < q")
    parser.add_argument("--knot", default="trefoil", help="knot spliced into the family")
    parser.add_argument("--knot1", default="trefoil", help="first knot of Example 3")
    parser.add_argument("--knot2", default="figure-eight", help="second knot of Example 3")
    return parser


def _target(out, example: str, label: str, many: bool):
    """Paired builds get the surface label before the suffix"""
    if not many:
        return out
    return labelled_path(out or f"{example}.json", label)


def handle(args) -> int:
    """
    Build the requested construction.

    Single models go to --out or stdout; pairs are written next to --out
    (default ./<example>.<surface>.json).
    """
    if args.i < 0:
        raise InvalidInputError(detail=f"--i must be non-negative, got {args.i}")
    built = BUILDERS[args.example](args)
    many = len(built) > 1
    for label, model in built:
        target = _target(args.out, args.example, label, many)
        save_model(model, target)
        print(
            f"{args.example} {label}: {len(model.sheets)} sheets ({', '.join(model.sheet_names)})"
            + (f" -> {target}" if target else ""),
            file=sys.stderr,
        )
    return 0
