"""Command line pipeline: pack, build, plan and render.

Exit codes: 0 success, 2 unparseable input, 3 invalid input or parameters,
4 solver non-convergence, 5 audit failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .filling import CuspShape, FillingError, certificate, plan_filling
from .io import write_json
from .link import LinkError, reduce_to_knot, render_diagram, synth_fal, trace_components
from .nerve import (
    Dimer,
    DimerError,
    Nerve,
    NerveError,
    dual_with_matching,
    subdivide_with_dimer,
    validate_dimer,
    validate_nerve,
)
from .packing import (
    GeometryMismatchError,
    HolonomyError,
    Layout,
    NonConvergenceError,
    develop_layout,
    max_residual,
    solve_packing_label,
)
from .scoop import AuditError, build_scoop, finite_volume_audit, rectangle_shape, render_packing_svg, scoop_to_dict

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NONCONVERGENCE, EXIT_AUDIT = 0, 2, 3, 4, 5


class ParseError(ValueError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    input: Path
    out: Path
    geometry: Optional[str] = None
    tol: float = 1e-10
    max_iters: int = 1_000_000
    epsilon: Optional[float] = None
    bigR: Optional[float] = None
    delta: Optional[float] = None
    reduce: bool = True
    render: bool = False
    seed: int = 0

    def __post_init__(self):
        if not str(self.input):
            raise ConfigError("input path is empty")
        if not str(self.out):
            raise ConfigError("output path is empty")
        if not self.tol > 0:
            raise ConfigError(f"--tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ConfigError(f"--max-iters must be positive, got {self.max_iters}")


def _read_json(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return data


def load_nerve(path: Path) -> tuple[Nerve, Optional[Dimer]]:
    data = _read_json(path)
    try:
        N, D = Nerve.from_dict(data)
    except (NerveError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    validate_nerve(N)
    return N, D


def _pack(cfg: PipelineConfig, N: Nerve) -> Layout:
    L = solve_packing_label(N, cfg.geometry, tol=cfg.tol, max_iters=cfg.max_iters)
    return develop_layout(N, L)


def run_pack(cfg: PipelineConfig) -> dict:
    N, _ = load_nerve(cfg.input)
    Lyt = _pack(cfg, N)
    cfg.out.mkdir(parents=True, exist_ok=True)
    residuals = {
        "geometry": Lyt.geometry,
        "tol": cfg.tol,
        "angle_sum_residual": max_residual(N, Lyt.label),
        "layout": Lyt.holonomy.to_dict(),
    }
    write_json(cfg.out / "label.json", Lyt.label.to_dict())
    write_json(cfg.out / "layout.json", Lyt.to_dict())
    write_json(cfg.out / "residuals.json", residuals)
    if cfg.render:
        (cfg.out / "packing.svg").write_text(render_packing_svg(Lyt))
    return residuals


def _augmented(cfg: PipelineConfig) -> tuple[Nerve, Dimer, bool]:
    N, D = load_nerve(cfg.input)
    if D is None:
        N, D = subdivide_with_dimer(N)
        return N, D, True
    if not validate_dimer(N, D):
        raise DimerError("supplied dimer leaves some face without exactly one coloured edge")
    return N, D, False


def build_products(cfg: PipelineConfig) -> dict:
    """Scoop and link data for the input nerve, subdividing first if it carries no dimer."""
    N, D, subdivided = _augmented(cfg)
    Lyt = _pack(cfg, N)
    S = build_scoop(N, D, Lyt)
    report = finite_volume_audit(S)
    F = synth_fal(dual_with_matching(N, D), N.genus)
    if cfg.reduce:
        F = reduce_to_knot(F)
    P = trace_components(F)
    shapes = []
    for c in F.crossing_circles:
        r = rectangle_shape(S, c.arc)
        shapes.append({"w": r.w, "b": r.b, "half_twist": c.half_twist})
    fal = F.to_dict(P)
    fal["cusp_shapes"] = shapes
    fal["subdivided"] = subdivided
    return {"nerve": N, "layout": Lyt, "scoop": scoop_to_dict(S, report), "audit": report.to_dict(),
            "diagram": F, "fal": fal}


def run_build(cfg: PipelineConfig) -> dict:
    prod = build_products(cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out / "scoop.json", {**prod["scoop"], "audit": prod["audit"]})
    write_json(cfg.out / "fal.json", prod["fal"])
    (cfg.out / "packing.svg").write_text(render_packing_svg(prod["layout"]))
    (cfg.out / "diagram.svg").write_text(render_diagram(prod["diagram"], prod["layout"]))
    return prod["fal"]


def _require_plan_params(cfg: PipelineConfig) -> tuple[float, float, float]:
    missing = [flag for flag, v in (("--epsilon", cfg.epsilon), ("--bigR", cfg.bigR), ("--delta", cfg.delta))
               if v is None]
    if missing:
        raise ConfigError(f"missing parameters: {', '.join(missing)}")
    for flag, v in (("--epsilon", cfg.epsilon), ("--bigR", cfg.bigR), ("--delta", cfg.delta)):
        if not v > 0:
            raise ConfigError(f"{flag} must be positive, got {v}")
    return cfg.epsilon, cfg.bigR, cfg.delta


def run_plan(cfg: PipelineConfig) -> dict:
    eps, R, delta = _require_plan_params(cfg)
    data = _read_json(cfg.input)
    if "cusp_shapes" in data:
        fal = data
    else:
        fal = build_products(cfg)["fal"]
    try:
        shapes = [CuspShape(float(s["w"]), float(s["b"]), bool(s["half_twist"])) for s in fal["cusp_shapes"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{cfg.input}: malformed cusp shapes ({exc})") from None
    if not shapes:
        raise ConfigError("diagram has no crossing circles")
    plan = plan_filling(shapes, eps, R, delta)
    cert = certificate(eps, R, delta, plan)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_json(cfg.out / "plan.json", plan.to_dict())
    write_json(cfg.out / "certificate.json", cert.to_dict())
    return {"plan": plan.to_dict(), "certificate": cert.to_dict()}


def run_render(cfg: PipelineConfig) -> dict:
    N, D, _ = _augmented(cfg)
    Lyt = _pack(cfg, N)
    F = synth_fal(dual_with_matching(N, D), N.genus)
    if cfg.reduce:
        F = reduce_to_knot(F)
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "packing.svg").write_text(render_packing_svg(Lyt))
    (cfg.out / "diagram.svg").write_text(render_diagram(F, Lyt))
    return {"packing": str(cfg.out / "packing.svg"), "diagram": str(cfg.out / "diagram.svg")}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="nerve JSON (or fal.json for plan)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--geometry", choices=["euclidean", "hyperbolic", "sphere"],
                        help="override the geometry implied by the genus")
    common.add_argument("--tol", type=float, default=1e-10, help="angle-sum tolerance")
    common.add_argument("--max-iters", type=int, default=1_000_000, help="solver iteration budget")
    common.add_argument("--epsilon", type=float, help="bilipschitz slack for the planner")
    common.add_argument("--bigR", type=float, help="radius of the ball to be certified")
    common.add_argument("--delta", type=float,
                        help="thickness: the ball must lie in the delta/(1+epsilon)-thick part")
    common.add_argument("--no-reduce", action="store_true", help="keep all strand components")
    common.add_argument("--render", action="store_true", help="also write SVG output from pack")

    p = argparse.ArgumentParser(prog="falforge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("pack", parents=[common], help="solve the packing label and lay out circles")
    sub.add_parser("build", parents=[common], help="scoop audit and augmented link diagram")
    sub.add_parser("plan", parents=[common], help="Dehn filling plan and certificate")
    sub.add_parser("render", parents=[common], help="SVG pictures of the packing and diagram")
    return p


COMMANDS = {"pack": run_pack, "build": run_build, "plan": run_plan, "render": run_render}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = PipelineConfig(
            input=Path(args.input), out=Path(args.out), geometry=args.geometry, tol=args.tol,
            max_iters=args.max_iters, epsilon=args.epsilon, bigR=args.bigR, delta=args.delta,
            reduce=not args.no_reduce, render=args.render, seed=int(os.environ.get("FALFORGE_SEED", "0")),
        )
        result = COMMANDS[args.command](cfg)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NonConvergenceError as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        print("residual trace: " + " ".join(f"{r:.3e}" for r in exc.trace[-20:]), file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (HolonomyError, AuditError) as exc:
        print(f"audit failure: {exc}", file=sys.stderr)
        return EXIT_AUDIT
    except (ConfigError, NerveError, DimerError, GeometryMismatchError, FillingError, LinkError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _summarize(args.command, result)
    return EXIT_OK


def _summarize(command: str, result: dict) -> None:
    if command == "pack":
        print(f"geometry {result['geometry']}: angle-sum residual {result['angle_sum_residual']:.3e}")
    elif command == "build":
        print(f"crossing circles {len(result['crossing_circles'])}, strand arcs {len(result['strand_arcs'])}, "
              f"components {result['component_count']}")
    elif command == "plan":
        cert = result["certificate"]
        verdict = "pass" if cert["passed"] else "fail"
        print(f"threshold C = {cert['threshold']}, min crossings {cert['min_crossings']}: {verdict}")
    else:
        print(f"wrote {result['packing']} and {result['diagram']}")
