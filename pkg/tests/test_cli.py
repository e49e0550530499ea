import numpy as np
import pytest

from easygt import RgbImage, save_image, save_mask
from easygt.cli import main
from easygt.masks import load_mask
from easygt.thresholding import BinaryMask

from conftest import small_phantom, write_phantom_folder


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- phantom -----------------------------------------------------------------


def test_phantom_writes_pairs_deterministically(tmp_path, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert run(capsys, "phantom", "--count", "3", "--seed", "9", "--output", str(out_a))[0] == 0
    assert run(capsys, "phantom", "--count", "3", "--seed", "9", "--output", str(out_b))[0] == 0
    names = sorted(p.name for p in out_a.iterdir())
    assert names == ["gt_0001.png", "gt_0002.png", "gt_0003.png",
                     "img_0001.png", "img_0002.png", "img_0003.png"]
    for name in names:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_phantom_rejects_zero_count(tmp_path, capsys):
    code, _, err = run(capsys, "phantom", "--count", "0", "--output", str(tmp_path / "x"))
    assert code == 1
    assert "count" in err


def test_phantom_mask_dimensions_match(tmp_path, capsys):
    out = tmp_path / "suite"
    run(capsys, "phantom", "--count", "2", "--seed", "4", "--output", str(out))
    from easygt import load_image

    for i in (1, 2):
        img = load_image(out / f"img_{i:04d}.png")
        mask = load_mask(out / f"gt_{i:04d}.png")
        assert (mask.height, mask.width) == (img.height, img.width)


# -- segment -----------------------------------------------------------------


@pytest.fixture()
def phantom_dir(tmp_path):
    folder = tmp_path / "phantoms"
    write_phantom_folder(folder, count=3, seed=21)
    return folder


def test_segment_processes_only_source_images(phantom_dir, tmp_path, capsys):
    out = tmp_path / "masks"
    code, stdout, stderr = run(capsys, "segment", "--input", str(phantom_dir), "--output", str(out))
    assert code == 0
    mask_names = sorted(p.name for p in out.iterdir())
    assert mask_names == ["img_0001.png", "img_0002.png", "img_0003.png"]
    lines = stdout.strip().splitlines()
    assert lines[0] == "image,thv1,thv2,uthv,effective"
    assert len(lines) == 4
    assert "ms" in stderr  # per-image latency on stderr


def test_segment_alpha_validation(phantom_dir, tmp_path, capsys):
    code, _, err = run(capsys, "segment", "--input", str(phantom_dir),
                       "--output", str(tmp_path / "o"), "--alpha", "1.5")
    assert code == 1
    assert "alpha must be in [0,1]" in err


def test_segment_missing_input(tmp_path, capsys):
    code, _, _ = run(capsys, "segment", "--input", str(tmp_path / "none"),
                     "--output", str(tmp_path / "o"))
    assert code == 1


def test_segment_degenerate_image_exit_2(phantom_dir, tmp_path, capsys):
    save_image(RgbImage(np.zeros((16, 16, 3), dtype=np.uint8)), phantom_dir / "black.png")
    out = tmp_path / "masks"
    code, stdout, stderr = run(capsys, "segment", "--input", str(phantom_dir), "--output", str(out))
    assert code == 2
    assert "black.png" in stderr
    assert len(list(out.iterdir())) == 3  # the three good ones still segmented


def test_segment_byte_deterministic(phantom_dir, tmp_path, capsys):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    code_a, stdout_a, _ = run(capsys, "segment", "--input", str(phantom_dir), "--output", str(out_a))
    code_b, stdout_b, _ = run(capsys, "segment", "--input", str(phantom_dir), "--output", str(out_b))
    assert code_a == code_b == 0
    assert stdout_a == stdout_b
    for p in sorted(out_a.iterdir()):
        assert p.read_bytes() == (out_b / p.name).read_bytes()


# -- eval ---------------------------------------------------------------------


def test_eval_identity_scores_100(phantom_dir, tmp_path, capsys):
    code, stdout, _ = run(capsys, "eval", "--pred", str(phantom_dir), "--gt", str(phantom_dir))
    # pred dir contains both img_ and gt_ pngs; every file matches itself
    assert code == 0
    rows = stdout.strip().splitlines()[1:]
    assert all(row.endswith("100.00,100.00,100.00") for row in rows)
    assert rows[-1].startswith("MEAN,")


def test_eval_constructed_superset(tmp_path, capsys):
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    truth = np.zeros((20, 20), dtype=bool)
    truth.flat[:100] = True
    pred = np.zeros((20, 20), dtype=bool)
    pred.flat[:150] = True
    save_mask(BinaryMask(truth), gt_dir / "m.png")
    save_mask(BinaryMask(pred), pred_dir / "m.png")
    code, stdout, _ = run(capsys, "eval", "--pred", str(pred_dir), "--gt", str(gt_dir))
    assert code == 0
    assert "m.png,100.00,66.67,80.00" in stdout


def test_eval_pairs_phantom_layout(phantom_dir, tmp_path, capsys):
    out = tmp_path / "masks"
    run(capsys, "segment", "--input", str(phantom_dir), "--output", str(out))
    code, stdout, _ = run(capsys, "eval", "--pred", str(out), "--gt", str(phantom_dir))
    assert code == 0
    assert stdout.count("img_") == 3


def test_eval_unmatched_filename(tmp_path, capsys):
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    mask = BinaryMask(np.ones((4, 4), dtype=bool))
    save_mask(mask, pred_dir / "solo.png")
    code, _, err = run(capsys, "eval", "--pred", str(pred_dir), "--gt", str(gt_dir))
    assert code == 1
    assert "solo.png" in err


def test_eval_dimension_mismatch(tmp_path, capsys):
    pred_dir = tmp_path / "pred"
    gt_dir = tmp_path / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    save_mask(BinaryMask(np.ones((4, 4), dtype=bool)), pred_dir / "m.png")
    save_mask(BinaryMask(np.ones((5, 5), dtype=bool)), gt_dir / "m.png")
    code, _, err = run(capsys, "eval", "--pred", str(pred_dir), "--gt", str(gt_dir))
    assert code == 1
    assert "shapes differ" in err


# -- sweep -------------------------------------------------------------------------


def test_sweep_default_grid_and_json(phantom_dir, tmp_path, capsys):
    json_path = tmp_path / "report.json"
    code, stdout, _ = run(capsys, "sweep", "--input", str(phantom_dir),
                          "--gt", str(phantom_dir), "--json", str(json_path))
    assert code == 0
    lines = stdout.strip().splitlines()
    assert lines[0] == "alpha,sensitivity_pct,precision_pct,dsc_pct"
    assert len(lines) == 13  # header + 11 rows + best_alpha line
    assert lines[-1].startswith("best_alpha,")
    import json

    report = json.loads(json_path.read_text())
    assert report["dataset_size"] == 3
    assert len(report["rows"]) == 11


def test_sweep_single_point_grid(phantom_dir, capsys):
    code, stdout, _ = run(capsys, "sweep", "--input", str(phantom_dir),
                          "--gt", str(phantom_dir), "--alphas", "0.3:0.3:0.1")
    assert code == 0
    lines = stdout.strip().splitlines()
    assert len(lines) == 3
    assert lines[1].startswith("0.3,")


def test_sweep_byte_deterministic(phantom_dir, tmp_path, capsys):
    j1, j2 = tmp_path / "r1.json", tmp_path / "r2.json"
    _, out_a, _ = run(capsys, "sweep", "--input", str(phantom_dir), "--gt", str(phantom_dir),
                      "--json", str(j1))
    _, out_b, _ = run(capsys, "sweep", "--input", str(phantom_dir), "--gt", str(phantom_dir),
                      "--json", str(j2))
    assert out_a == out_b
    assert j1.read_bytes() == j2.read_bytes()


def test_sweep_bad_grid(phantom_dir, capsys):
    code, _, err = run(capsys, "sweep", "--input", str(phantom_dir),
                       "--gt", str(phantom_dir), "--alphas", "0:1:0")
    assert code == 1


# -- audit --------------------------------------------------------------------------


def test_audit_clean_and_violations(tmp_path, capsys):
    folder = tmp_path / "work"
    folder.mkdir()
    for i in range(2):
        img, _ = small_phantom(seed=500 + i)
        save_image(img, folder / f"c{i}.png")
    from easygt import open_session

    s = open_session(folder)
    s.accept()
    code, stdout, _ = run(capsys, "audit", "--folder", str(folder))
    assert code == 0
    assert "audit clean" in stdout

    (folder / s.records[s.order[0]].mask_path).unlink()
    code, stdout, _ = run(capsys, "audit", "--folder", str(folder))
    assert code == 2
    assert "missing_mask" in stdout


def test_audit_missing_folder(tmp_path, capsys):
    code, _, _ = run(capsys, "audit", "--folder", str(tmp_path / "nope"))
    assert code == 1


# -- serve ----------------------------------------------------------------------------


def test_serve_busy_port(tmp_path, capsys):
    import socket

    img, _ = small_phantom(seed=700)
    save_image(img, tmp_path / "one.png")
    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    port = blocker.getsockname()[1]
    try:
        code, _, err = run(capsys, "serve", "--folder", str(tmp_path), "--port", str(port))
        assert code == 1
        assert "cannot bind" in err
    finally:
        blocker.close()


def test_serve_alpha_echoed_in_summary(tmp_path):
    import json
    import threading
    import urllib.request

    img, _ = small_phantom(seed=701)
    save_image(img, tmp_path / "one.png")
    from easygt.service import create_server

    srv = create_server(str(tmp_path), port=0, alpha=0.2)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    try:
        port = srv.server_address[1]
        with urllib.request.urlopen(f"http://127.0.0.1:{port}/api/session") as resp:
            summary = json.loads(resp.read())
        assert summary["default_alpha"] == 0.2
        assert summary["pending"] == 1
    finally:
        srv.shutdown()
        srv.server_close()
        thread.join(timeout=5)


# -- usage ------------------------------------------------------------------------------


def test_unknown_subcommand_usage_error(capsys):
    assert main(["frobnicate"]) == 1
