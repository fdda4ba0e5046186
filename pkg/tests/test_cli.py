import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from starenh import nn as snn
from starenh.cli import build_parser, default_styles, main
from starenh.imgio import decode_image, encode_png, load_image, save_image


@pytest.fixture(autouse=True)
def _no_env_model(monkeypatch):
    monkeypatch.delenv("STARENH_MODEL", raising=False)


def _write_pngs(tmp_path, count=3, size=24, seed=0):
    tmp_path.mkdir(parents=True, exist_ok=True)
    rng = np.random.RandomState(seed)
    paths = []
    for n in range(count):
        data = np.rint(rng.uniform(0, 1, (3, size, size)) * 255) / 255
        path = tmp_path / f"img{n}.png"
        save_image(path, data, bit_depth=8)
        paths.append(path)
    return paths


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_enhance_missing_model_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["enhance", "--in", "a.png", "--out", "b.png", "--source", "s", "--target", "t"])
    assert exc.value.code == 2
    assert "--model" in capsys.readouterr().err


def test_model_defaults_to_env_var(monkeypatch, tmp_path):
    monkeypatch.setenv("STARENH_MODEL", str(tmp_path / "m.bin"))
    args = build_parser().parse_args(
        ["enhance", "--in", "a.png", "--out", "b.png", "--source", "s", "--target", "t"]
    )
    assert args.model == str(tmp_path / "m.bin")


def test_runtime_error_exits_1(tmp_path, capsys):
    rc = main(
        [
            "enhance",
            "--in", str(tmp_path / "missing.png"),
            "--out", str(tmp_path / "out.png"),
            "--source", "s",
            "--target", "t",
            "--model", str(tmp_path / "missing.bin"),
        ]
    )
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_synth_writes_dataset(tmp_path, capsys):
    out = tmp_path / "data"
    rc = main(["synth", "--out", str(out), "--images", "4", "--size", "16", "--num-styles", "2"])
    assert rc == 0
    assert (out / "styles.json").exists()
    assert len(list((out / "base").glob("*.png"))) == 4
    assert len(list((out / "style_1").glob("*.png"))) == 4


def test_synth_too_many_styles_exits_1(tmp_path):
    rc = main(["synth", "--out", str(tmp_path / "d"), "--images", "2", "--num-styles", "99"])
    assert rc == 1


def test_default_styles_are_valid_and_distinct():
    styles = default_styles(6)
    assert len({json.dumps(s.to_dict()) for s in styles.values()}) == 6


def test_bench_reports_consistent_fps(tmp_path, capsys):
    rc = main(["bench", "--size", "64x48", "--repeats", "2"])
    assert rc == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("64x48:")
    ms = float(line.split(":")[1].split("ms")[0])
    fps = float(line.split(",")[1].split("FPS")[0])
    assert fps == pytest.approx(1000.0 / ms, rel=1e-2)


def test_bench_bad_size_exits_1(capsys):
    assert main(["bench", "--size", "huge"]) == 1
    assert "expected WxH" in capsys.readouterr().err


def test_embed_enhance_pipeline_and_server_parity(tmp_path, capsys):
    # save an untrained model, embed two galleries, enhance via CLI, and
    # check the server export for the same inputs is bit-identical
    cfg = snn.ModelConfig(downsample_size=16, num_styles=2)
    bundle = snn.fixup_init(cfg, seed=3)
    import torch

    with torch.no_grad():
        bundle.curve_encoder.head.weight.normal_(
            0, 0.01, generator=torch.Generator().manual_seed(5)
        )
    model = tmp_path / "model.bin"
    snn.save_weights(model, bundle)

    gallery_a = _write_pngs(tmp_path / "a", seed=1)
    gallery_b = _write_pngs(tmp_path / "b", seed=2)
    latent_a = tmp_path / "src.json"
    latent_b = tmp_path / "dst.json"
    assert main(["embed", "--model", str(model), "--out", str(latent_a), *map(str, gallery_a)]) == 0
    assert main(["embed", "--model", str(model), "--out", str(latent_b), *map(str, gallery_b)]) == 0

    (photo,) = _write_pngs(tmp_path / "photo", count=1, seed=4)
    out_path = tmp_path / "out.png"
    rc = main(
        [
            "enhance",
            "--in", str(photo),
            "--out", str(out_path),
            "--source", str(latent_a),
            "--target", str(latent_b),
            "--model", str(model),
            "--curves-out", str(tmp_path / "curves.json"),
        ]
    )
    assert rc == 0
    assert json.loads((tmp_path / "curves.json").read_text())["version"] == 1

    from starenh.service import create_app

    client = TestClient(create_app(snn.load_weights(model)))
    for name, gallery in (("src", gallery_a), ("dst", gallery_b)):
        files = [("images", (p.name, p.read_bytes(), "image/png")) for p in gallery]
        assert client.post("/styles", files=files, data={"name": name}).status_code == 200
    resp = client.post(
        "/enhance",
        files={"image": (photo.name, photo.read_bytes(), "image/png")},
        data={"source": "src", "target": "dst"},
    )
    sid = resp.json()["session_id"]
    export = client.post(f"/sessions/{sid}/export", json={})
    assert export.content == out_path.read_bytes()


def test_enhance_with_sliders_scales_residual(tmp_path):
    cfg = snn.ModelConfig(downsample_size=16, num_styles=2)
    bundle = snn.fixup_init(cfg, seed=6)
    import torch

    with torch.no_grad():
        bundle.curve_encoder.head.weight.normal_(
            0, 0.02, generator=torch.Generator().manual_seed(7)
        )
    model = tmp_path / "model.bin"
    snn.save_weights(model, bundle)
    gallery = _write_pngs(tmp_path, seed=8)
    latent = tmp_path / "style.json"
    assert main(["embed", "--model", str(model), "--out", str(latent), *map(str, gallery)]) == 0
    (photo,) = _write_pngs(tmp_path / "p", count=1, seed=9)

    sliders = tmp_path / "sliders.json"
    sliders.write_text(json.dumps({f"{i}_to_{j}": 0.0 for i in "rgbxy" for j in "rgb"}))
    out_path = tmp_path / "out.png"
    rc = main(
        [
            "enhance",
            "--in", str(photo),
            "--out", str(out_path),
            "--source", str(latent),
            "--target", str(latent),
            "--model", str(model),
            "--sliders", str(sliders),
        ]
    )
    assert rc == 0
    # zeroed sliders remove the whole residual
    np.testing.assert_array_equal(load_image(out_path).data, load_image(photo).data)


def test_unknown_style_name_exits_1(tmp_path, capsys):
    cfg = snn.ModelConfig(downsample_size=16, num_styles=2)
    model = tmp_path / "model.bin"
    snn.save_weights(model, snn.fixup_init(cfg, seed=0))
    (photo,) = _write_pngs(tmp_path, count=1)
    rc = main(
        [
            "enhance",
            "--in", str(photo),
            "--out", str(tmp_path / "o.png"),
            "--source", "nosuch",
            "--target", "nosuch",
            "--styles-dir", str(tmp_path),
            "--model", str(model),
        ]
    )
    assert rc == 1
    assert "no latent file" in capsys.readouterr().err
