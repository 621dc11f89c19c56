"""
Invariants Command
Computes the invariant report of a model file
"""
import logging
import time

from ..config import settings
from ..constructions import break_bridge
from ..exceptions import InvalidInputError
from ..knots import project_generic
from ..sectioning import section_at
from ..services import EXPONENT_KINDS, SURGERIES, InvariantService
from ..storage import LINK_FORMATS, dumps, load_model, save_diagram, save_link, write_text

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("invariants", help="compute invariants of a model file")
    parser.add_argument("model", help="germ model file")
    parser.add_argument("--surgery", choices=SURGERIES, default=None, help="surgery applied before sectioning")
    parser.add_argument(
        "--exponent", action="append", choices=EXPONENT_KINDS, default=None,
        help="exponent estimates for the first two arcs (repeatable; default tangency)",
    )
    parser.add_argument("--skip-tangent-cone", dest="tangent_cone", action="store_false", help="skip the tangent-cone ladder")
    parser.add_argument("--link-out", dest="link_out", default=None, help="also export the section at --t")
    parser.add_argument("--format", choices=sorted(LINK_FORMATS), default="json", help="format of --link-out")
    parser.add_argument("--diagram-out", dest="diagram_out", default=None, help="also export a generic diagram of the closed components")
    return parser


def handle(args) -> int:
    started = time.perf_counter()
    model = load_model(args.model)
    report = InvariantService.compute(
        model,
        t=args.t,
        resolution=args.resolution,
        seed=args.seed,
        surgery=args.surgery,
        exponents=args.exponent or ("tangency",),
        tangent_cone=args.tangent_cone,
    )
    if args.timings:
        report.parameters["runtime_seconds"] = round(time.perf_counter() - started, 3)
    write_text(dumps(report), args.out)

    if args.link_out or args.diagram_out:
        working = model
        if args.surgery == "break-bridge":
            for bridge in model.bridges:
                working = break_bridge(working, bridge.name)
        link = section_at(working, args.t, args.resolution or settings.DEFAULT_RESOLUTION)
        if args.link_out:
            save_link(link, args.link_out, args.format)
        if args.diagram_out:
            polygons = [c.vertices for c in link.closed_components]
            if not polygons:
                raise InvalidInputError(detail="the section has no closed components to project")
            save_diagram(project_generic(polygons, seed=args.seed), args.diagram_out)
    return 0
