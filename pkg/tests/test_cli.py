import json
from pathlib import Path

import pytest

from doorscape import __version__, cli
from doorscape.fixtures import bundled_path

MALFORMED = Path(str(bundled_path("malformed")))
MESH = str(bundled_path("two_room.obj"))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert cli.main(["slice", "--mesh", MESH, "-o", str(out)]) == 0
    assert cli.main(["graph", "--map", str(out / "map.yaml"), "-o", str(out)]) == 0
    assert cli.main(["sample", "--graph", str(out / "graph.json"), "--min-distance", "1.0",
                     "--csv", "-o", str(out)]) == 0
    return out


def test_slice_graph_sample(pipeline):
    for name in ("map.pgm", "map.yaml", "graph.json", "poses.jsonl", "poses.csv"):
        assert (pipeline / name).is_file()
    poses = [json.loads(s) for s in (pipeline / "poses.jsonl").read_text().splitlines()]
    assert len(poses) % 16 == 0 and poses
    assert set(poses[0]) == {"x", "y", "height", "yaw_deg", "node_id"}
    first = poses[:16]
    assert len({(p["x"], p["y"]) for p in first}) == 1
    assert sorted({p["yaw_deg"] for p in first}) == [45.0 * k for k in range(8)]


def test_no_temp_files_left(pipeline):
    assert not [p for p in pipeline.iterdir() if p.name.startswith(".")]


def test_render_both_formats(pipeline, tmp_path):
    common = ["--map", str(pipeline / "map.yaml"), "--graph", str(pipeline / "graph.json"),
              "--poses", str(pipeline / "poses.jsonl"), "-o", str(tmp_path)]
    assert cli.main(["render", *common]) == 0
    assert cli.main(["render", "--format", "pgm", *common]) == 0
    assert (tmp_path / "render.svg").read_text().startswith("<?xml")
    assert (tmp_path / "render.pgm").read_bytes().startswith(b"P5\n")


def test_render_unknown_format(pipeline, tmp_path, capsys):
    code = cli.main(["render", "--map", str(pipeline / "map.yaml"), "--format", "gif",
                     "-o", str(tmp_path)])
    assert code == 2
    assert "[render]" in capsys.readouterr().err


def write_records(path, recs):
    path.write_text("".join(json.dumps(r) + "\n" for r in recs))


def gt_and_pred(tmp_path):
    gts, preds = [], []
    for k in range(8):
        env = "e1" if k < 4 else "e2"
        box = {"x_min": 10, "y_min": 10, "x_max": 50, "y_max": 90, "status": "closed"}
        gts.append({"image_id": f"i{k}", "env_id": env, "width": 100, "height": 100,
                    "boxes": [box]})
        hit = dict(box, x_min=12, confidence=0.5 + 0.05 * k)
        preds.append({"image_id": f"i{k}", "env_id": env, "width": 100, "height": 100,
                      "boxes": [hit]})
    write_records(tmp_path / "gt.jsonl", gts)
    write_records(tmp_path / "pred.jsonl", preds)
    return tmp_path / "gt.jsonl", tmp_path / "pred.jsonl"


def test_eval_sweep_report(tmp_path):
    gt, pred = gt_and_pred(tmp_path)
    assert cli.main(["eval", "--gt", str(gt), "--pred", str(pred), "--rho-a", "0.5",
                     "--rho-c", "0.75", "-o", str(tmp_path / "ev")]) == 0
    rep = json.loads((tmp_path / "ev" / "report.json").read_text())
    assert rep["totals"]["GT"] == 8
    assert rep["totals"]["TP"] == 3  # confidences 0.75, 0.8, 0.85
    assert rep["per_class_ap"]["closed"] == 1.0
    assert rep["per_class_ap"]["open"] is None
    assert "| e2 | detector | 4 | 3 (75%)" in (tmp_path / "ev" / "report.md").read_text()

    assert cli.main(["sweep", "--gt", str(gt), "--pred", str(pred), "--steps", "11",
                     "-o", str(tmp_path / "sw")]) == 0
    sweep = json.loads((tmp_path / "sw" / "sweep.json").read_text())["sweep"]
    assert len(sweep) == 11
    tps = [row["TP"] for row in sweep]
    assert tps == sorted(tps, reverse=True)

    r = str(tmp_path / "ev" / "report.json")
    assert cli.main(["report", "--entry", "GD", "e1", r, "--entry", "GD", "e2", r,
                     "--entry", "QD", "e1", r, "--entry", "QD", "e2", r,
                     "-o", str(tmp_path / "cmp")]) == 0
    md = (tmp_path / "cmp" / "comparison.md").read_text()
    assert md.splitlines()[0] == "| Exp. | Label | AP | σ | Increment | σ |"
    assert "| QD | Closed | 100 | 0 | 0% | 0 |" in md


def test_split(tmp_path):
    recs = [{"image_id": f"{env}_{k:03d}", "env_id": env, "width": 10, "height": 10, "boxes": []}
            for env in ("a", "b") for k in range(10)]
    write_records(tmp_path / "all.jsonl", recs)
    assert cli.main(["split", "--records", str(tmp_path / "all.jsonl"), "--env", "b",
                     "-o", str(tmp_path / "s")]) == 0
    doc = json.loads((tmp_path / "s" / "split.json").read_text())
    assert [len(q) for q in doc["plan"]["quarters"]] == [3, 3, 2, 2]
    assert doc["plan"]["seed"] == 0
    assert len(doc["general_train"]) == 10
    lines = (tmp_path / "s" / "train_75.jsonl").read_text().splitlines()
    assert len(lines) == 8


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'mesh = "{MESH}"\n[slice]\nresolution = 0.1\n')
    assert cli.main(["slice", "--config", str(cfg), "-o", str(tmp_path / "a")]) == 0
    assert "resolution: 0.1" in (tmp_path / "a" / "map.yaml").read_text()
    assert cli.main(["slice", "--config", str(cfg), "--resolution", "0.2",
                     "-o", str(tmp_path / "b")]) == 0
    assert "resolution: 0.2" in (tmp_path / "b" / "map.yaml").read_text()


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_missing_input_is_validation_error(tmp_path, capsys):
    assert cli.main(["graph", "-o", str(tmp_path)]) == 2
    assert "--map" in capsys.readouterr().err


def test_internal_error_exit_code(monkeypatch, tmp_path):
    def boom(*_):
        raise RuntimeError("bug")
    monkeypatch.setattr(cli.mesh_grid, "load_mesh", boom)
    assert cli.main(["slice", "--mesh", MESH, "-o", str(tmp_path)]) == 1


def bad(name):
    return str(MALFORMED / name)


@pytest.mark.parametrize("argv,needle", [
    (["slice", "--mesh", bad("bad_vertex.obj")], "line 3"),
    (["slice", "--mesh", bad("face_index_out_of_range.obj")], "line 4"),
    (["slice", "--mesh", bad("no_faces.obj")], "[mesh_grid]"),
    (["split", "--records", bad("inverted_box.jsonl"), "--env", "hall"], "hall_0007"),
    (["split", "--records", bad("bad_status.jsonl"), "--env", "hall"], "hall_0003"),
    (["split", "--records", bad("not_json.jsonl"), "--env", "hall"], "line 2"),
    (["split", "--records", bad("missing_width.jsonl"), "--env", "hall"], "hall_0004"),
    (["eval", "--gt", bad("bad_status.jsonl"), "--pred", bad("pred_without_confidence.jsonl")],
     "hall_0003"),
    (["render", "--graph", bad("dangling_edge.json")], "[navgraph]"),
    (["graph", "--map", bad("stray_pixel.yaml")], "[mesh_grid]"),
    (["slice", "--mesh", MESH, "--config", bad("negative_resolution.toml")], "resolution"),
    (["slice", "--mesh", MESH, "--config", bad("unknown_table.toml")], "slicer"),
])
def test_malformed_fixtures_exit_2(tmp_path, capsys, argv, needle):
    assert cli.main([*argv, "-o", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert err.startswith(f"doorscape {argv[0]}: error [")
    assert needle in err


def test_pred_without_confidence_named(tmp_path, capsys):
    gt = tmp_path / "gt.jsonl"
    gt.write_text('{"image_id": "hall_0005", "env_id": "hall", "width": 320, "height": 240, '
                  '"boxes": []}\n')
    code = cli.main(["eval", "--gt", str(gt), "--pred",
                     str(MALFORMED / "pred_without_confidence.jsonl"), "-o", str(tmp_path)])
    assert code == 2
    assert "hall_0005" in capsys.readouterr().err


def test_pipeline_is_byte_deterministic(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert cli.main(["slice", "--mesh", MESH, "-o", str(out)]) == 0
        assert cli.main(["graph", "--map", str(out / "map.yaml"), "-o", str(out)]) == 0
        assert cli.main(["sample", "--graph", str(out / "graph.json"), "-o", str(out)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1]
