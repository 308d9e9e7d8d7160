"""``doorscape`` command line.

Every subcommand reads optional defaults from ``--config file.toml`` (a table
named after the subcommand, plus top-level ``seed`` and ``out_dir``); command
line flags win over the file. Exit status: 0 success, 2 invalid input, 1
internal error.
"""
import argparse
import json
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from doorscape import __version__, dataset_io, detection_eval, mesh_grid, navgraph, posesampler, render
from doorscape._io import atomic_write_bytes, atomic_write_text
from doorscape.errors import ConfigError, DoorscapeError, UnknownFormat

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib


@dataclass
class PipelineManifest:
    """Parsed ``--config`` file: per-command tables plus shared settings."""

    mesh: str = None
    out_dir: str = None
    seed: int = 0
    tables: dict = field(default_factory=dict)

    def table(self, name):
        return self.tables.get(name, {})


def load_manifest(path):
    if path is None:
        return PipelineManifest()
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    tables = {k: v for k, v in doc.items() if isinstance(v, dict)}
    known = {"slice", "graph", "sample", "split", "eval", "sweep", "report", "render"}
    unknown = set(tables) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config tables {sorted(unknown)}")
    return PipelineManifest(doc.get("mesh"), doc.get("out_dir"), int(doc.get("seed", 0)), tables)


def _pick(args, manifest, table, key, default=None):
    """Flag value, else config table value, else ``default``."""
    v = getattr(args, key, None)
    if v is not None:
        return v
    t = manifest.table(table)
    if key in t:
        return t[key]
    if table == "slice" and key == "mesh" and manifest.mesh:
        return manifest.mesh
    return default


def _out_dir(args, manifest):
    d = args.out_dir or manifest.out_dir or "."
    return Path(d)


def _require_file(path, what):
    if path is None:
        raise ConfigError(f"missing required input: {what}")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} not found: {p}")
    return p


def _log(msg):
    print(msg, file=sys.stderr)


# -- commands -----------------------------------------------------------------

def cmd_slice(args, manifest):
    mesh_path = _require_file(_pick(args, manifest, "slice", "mesh"), "--mesh")
    cfg = mesh_grid.SliceConfig(
        z_min=float(_pick(args, manifest, "slice", "z_min", 0.1)),
        z_max=float(_pick(args, manifest, "slice", "z_max", 1.8)),
        z_step=float(_pick(args, manifest, "slice", "z_step", 0.1)),
        resolution=float(_pick(args, manifest, "slice", "resolution", 0.05)),
        padding=int(_pick(args, manifest, "slice", "padding", 2)),
    )
    max_cells = int(_pick(args, manifest, "slice", "max_cells", mesh_grid.DEFAULT_MAX_CELLS))
    mesh = mesh_grid.load_mesh(mesh_path)
    grid = mesh_grid.rasterize_slices(mesh_grid.slice_mesh(mesh, cfg), cfg.resolution,
                                      cfg.padding, max_cells)
    seed = _pick(args, manifest, "slice", "free_point")
    if seed is None:
        seed = mesh_grid.default_seed(grid)
    if seed is None:
        _log("doorscape: warning: no enclosed free region; map left unclassified")
    else:
        grid = mesh_grid.classify_free_space(grid, tuple(float(v) for v in seed))
    pgm, meta = mesh_grid.save_map(grid, _out_dir(args, manifest))
    _log(f"wrote {pgm} and {meta} ({grid.width}x{grid.height} cells)")


def cmd_graph(args, manifest):
    map_path = _require_file(_pick(args, manifest, "graph", "map"), "--map")
    grid = mesh_grid.load_map(map_path)
    cfg = navgraph.GraphConfig(
        min_clearance=float(_pick(args, manifest, "graph", "min_clearance", 0.3)),
        spur_prune_length=float(_pick(args, manifest, "graph", "spur_prune_length", 0.5)),
    )
    graph = navgraph.graph_from_grid(grid, cfg)
    out = _out_dir(args, manifest) / "graph.json"
    graph.save(out)
    _log(f"wrote {out} ({len(graph.nodes)} nodes, {len(graph.edges)} edges)")


def cmd_sample(args, manifest):
    graph_path = _require_file(_pick(args, manifest, "sample", "graph"), "--graph")
    graph = navgraph.NavGraph.load(graph_path)
    seed = args.seed if args.seed is not None else manifest.seed
    cfg = posesampler.SamplerConfig(
        min_distance=float(_pick(args, manifest, "sample", "min_distance", 1.0)),
        heights=tuple(_pick(args, manifest, "sample", "heights", (0.1, 0.7))),
        yaw_count=int(_pick(args, manifest, "sample", "yaw_count", 8)),
        yaw_start=float(_pick(args, manifest, "sample", "yaw_start", 0.0)),
        rng_seed=int(seed),
    )
    positions = posesampler.sample_positions(graph, cfg)
    poses = posesampler.enumerate_camera_poses(positions, cfg)
    if _pick(args, manifest, "sample", "shuffle", False):
        poses = posesampler.shuffle_poses(poses, cfg.rng_seed)
    out_dir = _out_dir(args, manifest)
    posesampler.save_poses(poses, out_dir / "poses.jsonl")
    if _pick(args, manifest, "sample", "csv", False):
        posesampler.save_poses(poses, out_dir / "poses.csv", fmt="csv")
    _log(f"wrote {out_dir / 'poses.jsonl'} ({len(positions)} positions, {len(poses)} poses)")


def cmd_split(args, manifest):
    rec_path = _require_file(_pick(args, manifest, "split", "records"), "--records")
    env = _pick(args, manifest, "split", "env")
    if env is None:
        raise ConfigError("missing required input: --env")
    seed = args.seed if args.seed is not None else manifest.seed
    records = dataset_io.load_records(rec_path)
    loo = dataset_io.leave_one_out(records, env)
    plan = dataset_io.split_environment(loo.env_set, seed=int(seed))
    sets = dataset_io.compose_finetune_sets(plan)
    out_dir = _out_dir(args, manifest)
    doc = {
        "plan": plan.to_dict(),
        "sets": dict(sets),
        "general_train": sorted(r.image_id for r in loo.general_train),
    }
    atomic_write_text(out_dir / "split.json", json.dumps(doc, indent=1) + "\n")
    dataset_io.save_records(loo.general_train, out_dir / "general_train.jsonl")
    for name, ids in sets.items():
        dataset_io.save_records(dataset_io.select(loo.env_set, ids), out_dir / f"{name}.jsonl")
    _log(f"wrote {out_dir / 'split.json'} (quarters {[len(q) for q in plan.quarters]})")


def _eval_config(args, manifest, table):
    return detection_eval.EvalConfig(
        iou_threshold=float(_pick(args, manifest, table, "rho_a", 0.5)),
        confidence_threshold=float(_pick(args, manifest, table, "rho_c", 0.75)),
        max_detections=int(_pick(args, manifest, table, "max_detections", 10)),
    )


def _load_eval_inputs(args, manifest, table):
    gt = dataset_io.load_records(_require_file(_pick(args, manifest, table, "gt"), "--gt"), kind="gt")
    pred = dataset_io.load_records(_require_file(_pick(args, manifest, table, "pred"), "--pred"),
                                   kind="pred")
    return gt, pred


def cmd_eval(args, manifest):
    gt, pred = _load_eval_inputs(args, manifest, "eval")
    cfg = _eval_config(args, manifest, "eval")
    report = detection_eval.evaluate(pred, gt, cfg)
    out_dir = _out_dir(args, manifest)
    atomic_write_text(out_dir / "report.json", json.dumps(report.to_dict(), indent=1) + "\n")
    name = _pick(args, manifest, "eval", "name", "detector")
    rows = [(env, name, c) for env, (c, _) in sorted(report.per_env.items())]
    atomic_write_text(out_dir / "report.md", detection_eval.render_counts_table(rows))
    c = report.counts
    _log(f"GT {c.gt}  TP {c.tp}  FP {c.fp}  BFD {c.bfd}  "
         f"AP closed {report.ap_closed}  AP open {report.ap_open}")


def cmd_sweep(args, manifest):
    gt, pred = _load_eval_inputs(args, manifest, "sweep")
    cfg = _eval_config(args, manifest, "sweep")
    thresholds = _pick(args, manifest, "sweep", "thresholds")
    if thresholds is None:
        thresholds = detection_eval.default_thresholds(int(_pick(args, manifest, "sweep", "steps", 21)))
    reports = detection_eval.sweep_confidence(pred, gt, [float(t) for t in thresholds], cfg)
    doc = {
        "config": cfg.to_dict(),
        "sweep": [{"threshold": t, **r.counts.to_dict()} for t, r in zip(thresholds, reports)],
    }
    out_dir = _out_dir(args, manifest)
    atomic_write_text(out_dir / "sweep.json", json.dumps(doc, indent=1) + "\n")
    rows = [(f"{t:.2f}", "rho_c", r.counts) for t, r in zip(thresholds, reports)]
    atomic_write_text(out_dir / "sweep.md", detection_eval.render_counts_table(rows))
    _log(f"wrote {out_dir / 'sweep.json'} ({len(reports)} thresholds)")


def cmd_report(args, manifest):
    entries = args.entry or manifest.table("report").get("entry", [])
    if not entries:
        raise ConfigError("report needs at least one --entry NAME ENV REPORT_JSON")
    detectors = {}
    order = []
    for name, env, path in entries:
        p = _require_file(path, f"report for {name}/{env}")
        try:
            rep = detection_eval.EvalReport.from_dict(json.loads(p.read_text()))
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"{p}: not a doorscape report ({exc})") from None
        if name not in detectors:
            detectors[name] = {}
            order.append(name)
        detectors[name][env] = rep
    table = detection_eval.compare_reports([(n, detectors[n]) for n in order])
    rows = [(env, n, detectors[n][env].counts) for env in sorted(detectors[order[0]]) for n in order]
    out_dir = _out_dir(args, manifest)
    atomic_write_text(out_dir / "comparison.md",
                      detection_eval.render_ap_table(table) + "\n"
                      + detection_eval.render_counts_table(rows))
    atomic_write_text(out_dir / "comparison.json",
                      json.dumps(detection_eval.comparison_to_dict(table), indent=1) + "\n")
    _log(f"wrote {out_dir / 'comparison.md'}")


def cmd_render(args, manifest):
    fmt = render.check_format(_pick(args, manifest, "render", "format", "svg"))
    grid = graph = poses = None
    m = _pick(args, manifest, "render", "map")
    if m is not None:
        p = _require_file(m, "--map")
        if p.suffix not in (".yaml", ".yml"):
            raise UnknownFormat(f"{p}: expected a .yaml map sidecar")
        grid = mesh_grid.load_map(p)
    g = _pick(args, manifest, "render", "graph")
    if g is not None:
        p = _require_file(g, "--graph")
        if p.suffix != ".json":
            raise UnknownFormat(f"{p}: expected a .json graph")
        graph = navgraph.NavGraph.load(p)
    ps = _pick(args, manifest, "render", "poses")
    if ps is not None:
        p = _require_file(ps, "--poses")
        if p.suffix != ".jsonl":
            raise UnknownFormat(f"{p}: expected a .jsonl pose file")
        poses = posesampler.load_poses(p)
    if grid is None and graph is None and poses is None:
        raise ConfigError("render needs at least one of --map, --graph, --poses")
    out_dir = _out_dir(args, manifest)
    if fmt == "svg":
        px = float(_pick(args, manifest, "render", "px_per_m", 50.0))
        atomic_write_text(out_dir / "render.svg", render.render_svg(grid, graph, poses, px))
        _log(f"wrote {out_dir / 'render.svg'}")
    else:
        if grid is None:
            raise ConfigError("PGM rendering needs --map")
        atomic_write_bytes(out_dir / "render.pgm", render.render_pgm(grid, graph, poses))
        _log(f"wrote {out_dir / 'render.pgm'}")


# -- parser -------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="doorscape", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"doorscape {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with per-command defaults")
    common.add_argument("-o", "--out-dir", help="directory for all outputs")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("slice", parents=[common], help="mesh -> occupancy grid (map.pgm + map.yaml)")
    p.add_argument("--mesh")
    p.add_argument("--z-min", dest="z_min", type=float)
    p.add_argument("--z-max", dest="z_max", type=float)
    p.add_argument("--z-step", dest="z_step", type=float)
    p.add_argument("--resolution", type=float)
    p.add_argument("--padding", type=int)
    p.add_argument("--max-cells", dest="max_cells", type=int)
    p.add_argument("--free-point", dest="free_point", type=float, nargs=2, metavar=("X", "Y"),
                   help="world point inside the reachable free space")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("graph", parents=[common], help="map -> navigation graph (graph.json)")
    p.add_argument("--map", help="map .yaml sidecar")
    p.add_argument("--min-clearance", dest="min_clearance", type=float)
    p.add_argument("--spur-prune-length", dest="spur_prune_length", type=float)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("sample", parents=[common], help="graph -> camera poses (poses.jsonl)")
    p.add_argument("--graph")
    p.add_argument("--min-distance", dest="min_distance", type=float)
    p.add_argument("--heights", type=float, nargs="+")
    p.add_argument("--yaw-count", dest="yaw_count", type=int)
    p.add_argument("--yaw-start", dest="yaw_start", type=float)
    p.add_argument("--csv", action="store_true", default=None, help="also write poses.csv")
    p.add_argument("--shuffle", action="store_true", default=None,
                   help="permute the pose list with --seed")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("split", parents=[common], help="leave-one-out + quarter splits")
    p.add_argument("--records")
    p.add_argument("--env")
    p.set_defaults(func=cmd_split)

    for name, func, helptext in (("eval", cmd_eval, "TP/FP/BFD and per-class AP"),
                                 ("sweep", cmd_sweep, "counts over confidence thresholds")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--gt")
        p.add_argument("--pred")
        p.add_argument("--rho-a", dest="rho_a", type=float)
        p.add_argument("--rho-c", dest="rho_c", type=float)
        p.add_argument("--max-detections", dest="max_detections", type=int)
        if name == "eval":
            p.add_argument("--name", help="detector label used in report.md")
        else:
            p.add_argument("--thresholds", type=float, nargs="+")
            p.add_argument("--steps", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("report", parents=[common], help="compare detectors across environments")
    p.add_argument("--entry", nargs=3, action="append", metavar=("NAME", "ENV", "REPORT_JSON"),
                   help="one report.json per detector and environment, in table order")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("render", parents=[common], help="SVG/PGM picture of map, graph, poses")
    p.add_argument("--map")
    p.add_argument("--graph")
    p.add_argument("--poses")
    p.add_argument("--format")
    p.add_argument("--px-per-m", dest="px_per_m", type=float)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        manifest = load_manifest(args.config)
        args.func(args, manifest)
    except DoorscapeError as exc:
        print(f"doorscape {args.command}: error [{exc.module}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"doorscape {args.command}: error [io]: {exc}", file=sys.stderr)
        return 2
    except Exception:  # noqa: BLE001 - report anything else as an internal error
        traceback.print_exc()
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
