"""Command line experiment harness.

Every subcommand writes its outputs into ``--out-dir`` together with a
``run.json`` record (command, parameters, seed, output files and the
pass/fail flag of each assertion). Exit codes: 0 ok, 1 an assertion
failed, 2 bad input. Errors are reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import io
from .constructions.delta import DeltaParams, SearchSpace, delta_report, delta_search
from .constructions.tower import SpiralTowerParams
from .errors import (
    ConditionUnsatisfiable,
    InvalidParams,
    MeshParseError,
    SpiralPathsError,
)
from .experiments import SweepConfig, spiral_summary, theorem2_sweep
from .geodesic import locate, shortest_path, vertex_point
from .mesh import ball_data, convex_hull
from .metrics import closed_total_curvature, csv_rows, path_report, total_curvature, turning_data

RUN_SCHEMA = "spiralpaths.run/1"


class AssertionFailed(Exception):
    """An acceptance flag of the command is false."""


# ---------------------------------------------------------------------------
# helpers


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidParams(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidParams(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidParams("config must be a JSON object")
    return data


def _dataclass_from(cls, cfg: dict, **extra):
    names = {f.name for f in fields(cls)}
    unknown = set(cfg) - names
    if unknown:
        raise InvalidParams(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    kw = {**cfg, **extra}
    for k, v in kw.items():
        if isinstance(v, list):
            kw[k] = tuple(v)
    try:
        return cls(**kw)
    except TypeError as exc:
        raise InvalidParams(str(exc)) from exc


def _need_mesh(args):
    if args.mesh is None:
        raise InvalidParams("--mesh is required")
    return io.read_mesh(args.mesh)


def _point(poly, spec, name):
    """Surface point from ``[x, y, z]`` or ``{"vertex": i}``."""
    if isinstance(spec, dict) and "vertex" in spec:
        v = int(spec["vertex"])
        if not 0 <= v < poly.n_vertices:
            raise InvalidParams(f"{name}: vertex index out of range")
        return vertex_point(poly, v)
    x = np.asarray(spec, dtype=float)
    if x.shape != (3,) or not np.all(np.isfinite(x)):
        raise InvalidParams(f"{name} must be three finite coordinates")
    gap = np.max(poly.facet_normals @ x - poly.facet_offsets)
    if abs(gap) > 1e-6 * poly.scale:
        raise InvalidParams(f"{name} is not on the surface (plane gap {gap:.3g})")
    return locate(poly, x)


class Run:
    """Collects outputs and assertion flags; writes ``run.json``."""

    def __init__(self, args, params: dict):
        self.args = args
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.params = params
        self.outputs: list[str] = []
        self.flags: dict[str, bool] = {}
        self.result: dict = {}
        self.started = time.time()

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text)
        self.outputs.append(name)
        return path

    def finish(self) -> int:
        # the file carries no timestamps so that reruns are byte-identical
        record = {
            "schema": RUN_SCHEMA,
            "command": self.args.command,
            "params": self.params,
            "seed": self.args.seed,
            "outputs": sorted(self.outputs),
            "flags": self.flags,
        }
        self.write("run.json", io.dumps(record))
        if self.args.json:
            shown = {**record, "result": self.result, "timestamps": {"start": self.started, "end": time.time()}}
            print(io.dumps(shown))
        if not all(self.flags.values()):
            failed = [k for k, v in self.flags.items() if not v]
            raise AssertionFailed(f"assertion(s) failed: {', '.join(failed)}")
        return 0


# ---------------------------------------------------------------------------
# subcommands


def cmd_hull(args) -> int:
    cfg = _load_config(args.config)
    if args.mesh is not None:
        pts = _need_mesh(args).vertices
    elif "points" in cfg:
        pts = np.asarray(cfg["points"], dtype=float)
    else:
        raise InvalidParams("hull needs --mesh or a config with 'points'")
    poly = convex_hull(pts)
    balls = ball_data(poly)
    run = Run(args, {"n_points": int(len(pts))})
    run.write("hull.off", io.off_text(poly))
    run.result = {
        "n_vertices": poly.n_vertices,
        "n_facets": poly.n_facets,
        "r": balls.r,
        "in_center": balls.in_center,
        "R": balls.R,
        "out_center": balls.out_center,
    }
    run.write("hull.json", io.dumps(run.result))
    run.flags["r_le_R"] = bool(balls.r <= balls.R)
    return run.finish()


def cmd_geodesic(args) -> int:
    poly = _need_mesh(args)
    cfg = _load_config(args.config)
    if "a" in cfg and "b" in cfg:
        a = _point(poly, cfg["a"], "a")
        b = _point(poly, cfg["b"], "b")
    else:
        # default: vertex 0 and the vertex farthest from it
        far = int(np.argmax(np.linalg.norm(poly.vertices - poly.vertices[0], axis=1)))
        a, b = vertex_point(poly, 0), vertex_point(poly, far)
    path = shortest_path(poly, a, b, precision=cfg.get("precision"))
    rep = path_report(poly, path, audit=bool(cfg.get("audit", False)))
    run = Run(args, {"mesh": str(args.mesh), **cfg})
    run.write("path.obj", io.polyline_obj(path.xyz))
    run.write("path.json", io.dumps(io.path_record(path)))
    run.write("metrics.json", io.dumps(rep))
    run.result = rep
    run.flags["certified"] = bool(path.certified)
    if "theorem2" in rep:
        run.flags["theorem2"] = all(rep["theorem2"]["flags"].values())
    return run.finish()


def cmd_curvature(args) -> int:
    cfg = _load_config(args.config)
    run = Run(args, cfg)
    if "polygon" in cfg:
        pts = np.asarray(cfg["polygon"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 3:
            raise InvalidParams("polygon needs at least three 3D points")
        if cfg.get("closed", True):
            t = closed_total_curvature(pts)
            run.result = {"closed": True, "t": t, "two_pi": 2 * math.pi}
            run.flags["fenchel"] = bool(t >= 2 * math.pi - 1e-9)
        else:
            t = total_curvature(turning_data(pts))
            run.result = {"closed": False, "t": t}
    else:
        poly = _need_mesh(args)
        if "a" not in cfg or "b" not in cfg:
            raise InvalidParams("curvature needs a config with 'polygon', or --mesh and 'a', 'b'")
        path = shortest_path(poly, _point(poly, cfg["a"], "a"), _point(poly, cfg["b"], "b"))
        run.result = path_report(poly, path, audit=bool(cfg.get("audit", False)))
    run.write("curvature.json", io.dumps(run.result))
    return run.finish()


def cmd_spiral(args) -> int:
    cfg = _load_config(args.config)
    p = _dataclass_from(SpiralTowerParams, cfg, seed=args.seed)
    summ, tower, tp = spiral_summary(p)
    run = Run(args, asdict(p))
    run.write("tower.off", io.off_text(tower.poly))
    run.write(
        "markers.json",
        io.dumps(
            {
                "x0": {"facet": tower.x0.facet, "bary": list(tower.x0.bary)},
                "top_edge": tower.top_edge,
                "markers": tower.markers,
            }
        ),
    )
    run.write("path.obj", io.polyline_obj(tp.path.xyz))
    run.write("spiral.json", io.dumps(summ.as_dict()))
    run.result = {k: v for k, v in summ.as_dict().items() if k != "levels"}
    run.flags.update(
        levels_passed=summ.levels_passed,
        crosses_markers=summ.crosses_markers,
        rate_in_range=summ.rate_ok if p.turn != "alternate" else True,
    )
    if p.turn == "alternate":
        d = summ.level_dphi
        run.flags["alternates"] = all(d[k] * d[k + 1] < 0 for k in range(len(d) - 1))
    return run.finish()


def cmd_theorem2_sweep(args) -> int:
    cfg = _load_config(args.config)
    if args.trials is not None:
        cfg["trials"] = args.trials
    sc = _dataclass_from(SweepConfig, cfg)
    if sc.trials < 0 or sc.paths_per_trial < 1 or not 0 < sc.r_min <= sc.r_max < 1:
        raise InvalidParams("need trials >= 0, paths_per_trial >= 1 and 0 < r_min <= r_max < 1")
    if not 4 <= sc.n_points_min <= sc.n_points_max:
        raise InvalidParams("need 4 <= n_points_min <= n_points_max")
    mesh = _need_mesh(args) if args.mesh is not None else None
    res = theorem2_sweep(sc, seed=args.seed, mesh=mesh)
    run = Run(args, {**asdict(sc), "mesh": None if args.mesh is None else str(args.mesh)})
    run.write("sweep.csv", csv_rows(res.rows))
    run.write("summary.json", io.dumps(res.summary()))
    run.result = res.summary()
    run.flags["no_violations"] = res.violations == 0
    run.flags["lemma1"] = res.lemma1_violations == 0
    return run.finish()


def _delta_outputs(run: Run, D) -> None:
    if D is None:
        return
    run.write("delta.off", io.off_text(D.poly))
    run.write(
        "delta_markers.json",
        io.dumps(
            {
                "b1_prime": {"facet": D.b1_prime.facet, "bary": list(D.b1_prime.bary)},
                "b1_doubleprime": {"facet": D.b1_doubleprime.facet, "bary": list(D.b1_doubleprime.bary)},
            }
        ),
    )


def _delta_evaluate(args, cfg: dict) -> int:
    """Measure one parameter set without searching (``{"evaluate": {...}}``)."""
    fields_ = cfg.pop("evaluate")
    precision = cfg.pop("precision", None)
    if cfg:
        raise InvalidParams(f"unknown delta-search fields: {sorted(cfg)}")
    p = _dataclass_from(DeltaParams, fields_)
    p.validate()
    rep, D = delta_report(p, precision=precision)
    run = Run(args, {"evaluate": asdict(p), "precision": precision})
    run.write("report.json", io.dumps(rep.as_dict()))
    _delta_outputs(run, D)
    run.result = {k: v for k, v in rep.as_dict().items() if k != "params"}
    if rep.beta is not None and p.cone_pullback > 0.0:
        run.flags["beta_positive"] = rep.beta > 0
    return run.finish()


def cmd_delta_search(args) -> int:
    cfg = _load_config(args.config)
    if "evaluate" in cfg:
        return _delta_evaluate(args, cfg)
    budget = int(cfg.pop("budget", 500 if args.trials is None else args.trials))
    opts = {k: cfg.pop(k) for k in ("g_max", "final_samples", "target_gap", "precision", "verify") if k in cfg}
    space = _dataclass_from(SearchSpace, cfg.pop("space", {}))
    base = _dataclass_from(DeltaParams, cfg.pop("base", {})) if "base" in cfg else None
    if cfg:
        raise InvalidParams(f"unknown delta-search fields: {sorted(cfg)}")
    if budget < 1:
        raise InvalidParams("budget must be positive")
    res = delta_search(budget, base=base, space=space, seed=args.seed, **opts)
    run = Run(args, {"budget": budget, **opts, "space": asdict(space), "base": None if base is None else asdict(base)})
    run.write("search.json", io.dumps(res.as_dict()))
    _delta_outputs(run, res.delta)
    final = res.final
    run.result = {
        "evaluations": res.evaluations,
        "best_probe": res.best_probe,
        "final": None if final is None else {k: v for k, v in final.as_dict().items() if k != "params"},
        "passes_2pi": res.passes_2pi,
        "note": res.note,
    }
    # beta is positive whenever the path verifiably crosses the three cones
    run.flags["beta_positive"] = all(t["beta"] > 0 for t in res.trace if t["beta"] is not None) and (
        final is None or final.beta is None or final.beta > 0
    )
    return run.finish()


def cmd_export_obj(args) -> int:
    poly = _need_mesh(args)
    run = Run(args, {"mesh": str(args.mesh)})
    run.write(Path(args.mesh).stem + ".obj", io.obj_text(poly))
    run.result = {"n_vertices": poly.n_vertices, "n_facets": poly.n_facets}
    return run.finish()


COMMANDS = {
    "hull": cmd_hull,
    "geodesic": cmd_geodesic,
    "curvature": cmd_curvature,
    "spiral": cmd_spiral,
    "theorem2-sweep": cmd_theorem2_sweep,
    "delta-search": cmd_delta_search,
    "export-obj": cmd_export_obj,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spiralpaths", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--mesh", help="OFF or OBJ mesh file")
    parser.add_argument("--config", help="JSON file with command parameters")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("--trials", type=int, help="trial count (theorem2-sweep) or budget (delta-search)")
    parser.add_argument("--json", action="store_true", help="print the run record and result to stdout")
    return parser


def _error(exc: BaseException, code: str) -> None:
    print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return COMMANDS[args.command](args)
    except AssertionFailed as exc:
        _error(exc, "AssertionFailed")
        return 1
    except (MeshParseError, InvalidParams) as exc:
        _error(exc, exc.code)
        return 2
    except ConditionUnsatisfiable as exc:
        _error(exc, exc.code)
        return 1
    except SpiralPathsError as exc:
        _error(exc, exc.code)
        return 2
    except (ValueError, TypeError) as exc:
        _error(exc, "InvalidInput")
        return 2


if __name__ == "__main__":
    sys.exit(main())
