import json
import os
import subprocess

import numpy as np
import pytest

import paintdomain as pd


def rand_image(rng, h, w, c=3):
    return rng.random((h, w, c))


def test_pyramid_round_trip():
    img = rand_image(np.random.default_rng(0), 37, 29)
    bands, residual = pd.build_laplacian_pyramid(img, 4)
    assert len(bands) == 3
    assert bands[0].shape == img.shape
    assert residual.shape[:2] == (5, 4)
    assert np.abs(pd.reconstruct(bands, residual) - img).max() < 1e-12
    assert pd.max_pyramid_levels(64, 64) == 7


def test_laplacian_transfer_fixed_point_and_range():
    rng = np.random.default_rng(1)
    s = rand_image(rng, 64, 64)
    assert np.abs(pd.laplacian_style_transfer(s, s, levels=5, clamp=False) - s).max() < 2.0 / 256
    out = pd.laplacian_style_transfer(s, rand_image(rng, 48, 80), levels=5)
    assert out.shape == s.shape
    assert out.min() >= 0.0 and out.max() <= 1.0
    with pytest.raises(ValueError):
        pd.laplacian_style_transfer(s, s, color_mode="hsv")


def test_neural_transfer_is_deterministic_and_monotone():
    rng = np.random.default_rng(2)
    s, r = rand_image(rng, 16, 16), rand_image(rng, 16, 16)
    img1, traj1 = pd.neural_style_transfer(s, r, iterations=8, seed=3)
    img2, traj2 = pd.neural_style_transfer(s, r, iterations=8, seed=3)
    assert np.array_equal(img1, img2)
    assert traj1 == traj2
    assert len(traj1) == 9
    assert all(b <= a for a, b in zip(traj1, traj1[1:]))


def test_descriptor_lengths_and_flip():
    img = rand_image(np.random.default_rng(4), 32, 32)
    assert pd.phog(img).shape == (189,)
    assert pd.plbp(img).shape == (1239,)
    assert np.array_equal(pd.hflip(pd.hflip(img)), img)
    assert np.array_equal(pd.rotate(img, 0.0), img)


def test_classifiers_and_metrics():
    rng = np.random.default_rng(5)
    x = np.vstack([rng.normal(-2, 0.5, (20, 2)), rng.normal(2, 0.5, (20, 2))])
    y = np.array([0] * 20 + [1] * 20)
    for model in (pd.train_softmax(x, y, ["a", "b"]), pd.train_rbf_svm(x, y, ["a", "b"], c=1.0, gamma=0.5)):
        assert model.class_names == ["a", "b"]
        scores = model.scores(x)
        assert scores.shape == (40, 2)
        assert pd.topk_accuracy(scores, y, 1) == 1.0
        assert pd.topk_accuracy(scores, y, 2) == 1.0
        assert [t[0] for t in model.topk(x, 1)] == list(y)
    assert pd.topk_from_scores([0.1, 0.7, 0.2], 2) == [1, 2]
    cm = pd.confusion_matrix(np.array([0, 1, 1]), np.array([0, 0, 1]), 2)
    assert cm.tolist() == [[1, 1], [0, 1]]
    mean, std = pd.stochastic_stats([0.60, 0.62])
    assert mean == pytest.approx(0.61)
    assert std == pytest.approx(0.0141421356, rel=1e-6)
    assert pd.stochastic_stats([0.5])[1] is None
    assert pd.added_image_ratio(11372, 5984) == pytest.approx(190.04, abs=0.01)


def test_model_save_load(tmp_path):
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    model = pd.train_rbf_svm(x, y, c=10.0, gamma=2.0)
    path = tmp_path / "xor.model"
    model.save(path)
    loaded = pd.Model.load(path)
    assert loaded.kind == "svm"
    assert np.allclose(loaded.scores(x), model.scores(x))


def _write_png_corpus(tmp_path):
    from PIL import Image

    rng = np.random.default_rng(6)
    rows = ["# path\tgenre\tstyle\tdomain\tsplit\tprovenance"]
    for i in range(12):
        arr = np.zeros((20, 20, 3))
        stripes = (np.arange(20) // 3 % 2) * 0.7
        arr[:] = (stripes[None, :] if i % 2 else stripes[:, None])[..., None]
        arr += 0.2 * rng.random(arr.shape)
        name = f"i{i}.png"
        Image.fromarray((np.clip(arr, 0, 1) * 255).astype(np.uint8)).save(tmp_path / name)
        rows.append(f"{name}\t{'portrait' if i % 2 else 'landscape'}\t-\tpainting\tunassigned")
    (tmp_path / "paintings.tsv").write_text("\n".join(rows) + "\n")
    config = {
        "paintings": "paintings.tsv",
        "classes": ["landscape", "portrait"],
        "caps": [4],
        "transfer_classes": {},
        "sources": [],
        "descriptor": "phog",
        "classifier": "softmax",
        "epochs": 50,
        "topk": [1],
        "seeds": [0, 1],
    }
    (tmp_path / "config.json").write_text(json.dumps(config))
    return tmp_path / "config.json"


def test_run_experiment(tmp_path):
    config = _write_png_corpus(tmp_path)
    table, text = pd.run_experiment(config)
    report = json.loads(text)
    assert report["domains"] == ["None"]
    assert len(report["cells"][0]["accuracies"]) == 2
    assert "None" in table
    assert pd.run_experiment(config, threads=2)[1] == text


def test_cli_in_process_and_subprocess(tmp_path):
    assert pd.cli(["metrics", "stats", "--values", "0.60,0.62", "--out", str(tmp_path / "a.json")]) == 0
    assert pd.cli(["bogus"]) == 1
    exe = os.environ.get("PAINTDOMAIN_CLI")
    if not exe:
        pytest.skip("PAINTDOMAIN_CLI not set")
    done = subprocess.run([exe, "metrics", "stats", "--values", "0.60,0.62", "--out", str(tmp_path / "b.json")])
    assert done.returncode == 0
    assert (tmp_path / "b.json").read_text() == (tmp_path / "a.json").read_text()
    assert subprocess.run([exe, "stylize", "laplacian"], capture_output=True).returncode == 1
