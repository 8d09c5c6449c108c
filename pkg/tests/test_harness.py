import csv
import json
import struct

import numpy as np
import pytest

from _oracles import naive_fooling_rate
from ftuap.attack import Perturbation, random_sign_perturbation, zero_perturbation
from ftuap.bands import parse_band_spec
from ftuap.blockdct import DctStack
from ftuap.cli import main
from ftuap.harness.formats import (
    load_model,
    load_perturbation,
    model_from_bytes,
    model_to_bytes,
    perturbation_from_bytes,
    perturbation_to_bytes,
    save_model,
    save_perturbation,
)
from ftuap.harness.histograms import band_histogram, spatial_histogram, write_histogram
from ftuap.harness.imageio import load_dataset, load_image, save_dataset, save_image
from ftuap.harness.metrics import fooling_rate, transfer_matrix
from ftuap.jnd import jnd_matrix
from ftuap.tinynet import Classifier, LabeledDataset, TrainConfig, make_dataset, train


@pytest.fixture(scope="module")
def models():
    ds = make_dataset(100, 2)
    a = train(ds, TrainConfig(arch="a", epochs=1, seed=0))
    b = train(ds, TrainConfig(arch="b", epochs=2, width=32, seed=0))
    return a, b, make_dataset(60, 77)


def spatial(value, shape=(32, 32, 1)):
    return Perturbation("spatial", np.full(shape, float(value)), epsilon=10.0)


def test_fooling_rate_zero_perturbation(models):
    a, _, val = models
    rep = fooling_rate(a, zero_perturbation((32, 32, 1)), val)
    assert rep.fooling_rate == 0.0
    assert rep.top1_accuracy == rep.clean_accuracy
    assert len(rep.pairs) == len(val) == rep.n


def test_fooling_rate_counts_pairs(models):
    _, b, val = models
    rep = fooling_rate(b, spatial(-10), val)
    flips = sum(1 for c, p, *_ in rep.pairs if c != p)
    assert rep.fooling_rate == flips / len(val)
    assert all(0 < pc <= 1 and 0 < cc <= 1 for _, _, cc, pc in rep.pairs)


def test_fooling_rate_matches_naive_loop(models):
    a, b, val = models
    thr = jnd_matrix(2.0)
    for m in (a, b):
        for p in (spatial(7), spatial(-10), random_sign_perturbation(thr, (32, 32, 1), 3)):
            assert fooling_rate(m, p, val).fooling_rate == naive_fooling_rate(m, p, val.images)


def test_fooling_rate_rejects_bad_input(models):
    a, _, val = models
    with pytest.raises(ValueError):
        fooling_rate(a, spatial(1), LabeledDataset(np.zeros((0, 32, 32, 1)), np.zeros(0, int)))
    with pytest.raises(ValueError):
        fooling_rate(a, spatial(1, (16, 16, 1)), val)


def test_transfer_matrix_entries(models):
    a, b, val = models
    perts = [spatial(9), spatial(-9)]
    mat = transfer_matrix([a, b], perts, val)
    for i, p in enumerate(perts):
        for j, m in enumerate((a, b)):
            assert mat[i, j] == fooling_rate(m, p, val).fooling_rate
    with pytest.raises(ValueError):
        transfer_matrix([a, b], perts[:1], val)


def test_spatial_histogram_bounds():
    d = np.random.default_rng(0).uniform(-10, 10, (16, 16, 1))
    spec = spatial_histogram(Perturbation("spatial", d, epsilon=10.0), bins=21)
    assert spec.total == d.size
    assert spec.bin_edges[0] == pytest.approx(-10 / 255) and spec.bin_edges[-1] == pytest.approx(10 / 255)
    assert spec.std == pytest.approx(np.std(d / 255))


def test_band_histogram_masked_band_is_all_zero():
    thr = jnd_matrix(2.0, mask=parse_band_spec("mf"))
    p = random_sign_perturbation(thr, (32, 32, 1), 0)
    spec = band_histogram(p, 0, 0, bins=5)
    assert spec.bounds == (0.0, 0.0) and spec.total == 16
    assert spec.counts[len(spec.counts) // 2] == 16
    spec = band_histogram(p, 2, 3, bins=4)
    assert spec.counts[0] + spec.counts[-1] == 16
    with pytest.raises(ValueError):
        band_histogram(p, 8, 0)


def test_write_histogram(tmp_path):
    spec = spatial_histogram(spatial(3, (8, 8, 1)), bins=3)
    csv_path, side = write_histogram(spec, tmp_path / "h.csv", seed=4)
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["bin_low", "bin_high", "count"] and len(rows) == 4
    assert sum(int(r[2]) for r in rows[1:]) == 64
    assert "seed: 4" in side.read_text()


@pytest.mark.parametrize("plain", [False, True])
@pytest.mark.parametrize("channels", [1, 3])
def test_image_round_trip(tmp_path, plain, channels):
    img = np.random.default_rng(channels).integers(0, 256, (16, 8, channels)).astype(float)
    path = save_image(tmp_path / ("x.pgm" if channels == 1 else "x.ppm"), img, plain=plain)
    assert np.array_equal(load_image(path), img)


def test_image_rejects_bad_files(tmp_path):
    (tmp_path / "odd.pgm").write_bytes(b"P5\n10 8\n255\n" + bytes(80))
    with pytest.raises(ValueError):
        load_image(tmp_path / "odd.pgm")
    (tmp_path / "deep.pgm").write_bytes(b"P5\n8 8\n65535\n" + bytes(128))
    with pytest.raises(ValueError):
        load_image(tmp_path / "deep.pgm")
    (tmp_path / "short.pgm").write_bytes(b"P5\n8 8\n255\n" + bytes(10))
    with pytest.raises(ValueError):
        load_image(tmp_path / "short.pgm")


def test_save_image_clamps(tmp_path):
    path = save_image(tmp_path / "c.pgm", np.array([[-3.0, 300.0] * 4] * 8))
    assert load_image(path)[0, :2, 0].tolist() == [0.0, 255.0]


def test_dataset_round_trip(tmp_path):
    ds = make_dataset(20, 1)
    save_dataset(tmp_path / "d", {"train": ds})
    back = load_dataset(tmp_path / "d", "train")
    assert np.array_equal(back.images, ds.images) and np.array_equal(back.labels, ds.labels)
    with pytest.raises(ValueError):
        load_dataset(tmp_path / "d", "test")


@pytest.mark.parametrize("arch", ["a", "b"])
def test_model_round_trip(tmp_path, arch):
    c = Classifier.initialize(arch, (16, 16, 1), 4, seed=1)
    save_model(c, tmp_path / "m.bin")
    back = load_model(tmp_path / "m.bin")
    assert back.arch == arch and back.input_shape == (16, 16, 1)
    img = np.random.default_rng(0).uniform(0, 255, (16, 16, 1))
    assert np.array_equal(back.logits(img), c.logits(img))


def test_model_container_is_versioned():
    blob = model_to_bytes(Classifier.initialize("b", (8, 8, 1), 2, width=3))
    magic, version, hlen = struct.unpack_from("<8sHI", blob)
    assert magic == b"FTUAPNN\0" and version == 1
    header = json.loads(blob[14:14 + hlen])
    assert header["arch"] == "b"
    bad = bytearray(blob)
    bad[8] = 9
    with pytest.raises(ValueError):
        model_from_bytes(bytes(bad))
    with pytest.raises(ValueError):
        model_from_bytes(blob[:-8])
    with pytest.raises(ValueError):
        perturbation_from_bytes(blob)


def test_perturbation_round_trip(tmp_path):
    thr = jnd_matrix(1.5, mask=parse_band_spec("custom:3,4"))
    p = random_sign_perturbation(thr, (16, 16, 3), 2)
    save_perturbation(p, tmp_path / "p.bin")
    q = load_perturbation(tmp_path / "p.bin")
    assert np.array_equal(q.values.blocks, p.values.blocks)
    assert np.array_equal(q.thresholds.thresholds, thr.thresholds)
    assert q.thresholds.mask == thr.mask and q.thresholds.lam == 1.5
    s = spatial(-4, (8, 16, 1))
    r = perturbation_from_bytes(perturbation_to_bytes(s))
    assert r.epsilon == 10.0 and np.array_equal(r.values, s.values)


def test_cli_end_to_end(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["gen-dataset", "--out", str(data), "--train-size", "40", "--val-size", "20"]) == 0
    model = tmp_path / "b.bin"
    report = tmp_path / "r.jsonl"
    assert main(["train-classifier", "--arch", "b", "--data", str(data), "--epochs", "2",
                 "--out", str(model), "--report", str(report)]) == 0
    pert = tmp_path / "p.bin"
    assert main(["attack", "--model", str(model), "--data", str(data), "--bands", "mf",
                 "--epochs", "1", "--max-images", "10", "--out", str(pert), "--seed", "1",
                 "--report", str(report)]) == 0
    assert main(["eval", "--model", str(model), "--pert", str(pert), "--data", str(data),
                 "--pairs", str(tmp_path / "pairs.csv"), "--report", str(report)]) == 0
    assert main(["transfer", "--model", str(model), "--pert", str(pert), "--data", str(data),
                 "--csv", str(tmp_path / "t.csv")]) == 0
    assert main(["histogram", "--pert", str(pert), "--domain", "band:0,0",
                 "--out", str(tmp_path / "h.csv")]) == 0
    img = data / "validation" / "00000.pgm"
    assert main(["apply", "--pert", str(pert), "--image", str(img), "--out", str(tmp_path / "o.pgm")]) == 0
    assert load_image(tmp_path / "o.pgm").shape == (32, 32, 1)
    records = [json.loads(line) for line in report.read_text().splitlines()]
    assert [r["command"] for r in records] == ["train-classifier", "attack", "eval"]
    assert records[1]["config"]["bands"] == "MF"
    # masked DC band stays exactly zero
    h = list(csv.reader((tmp_path / "h.csv").open()))[1:]
    assert sum(int(r[2]) for r in h) == 16
    assert load_perturbation(pert).values.coefficient(0, 0).max() == 0.0


def test_cli_jnd_table(tmp_path, capsys):
    assert main(["jnd-table", "--lambda", "2", "--csv", str(tmp_path / "t.csv")]) == 0
    out = capsys.readouterr().out
    assert "34.61" in out and "68.78" in out and "6.32" in out
    rows = list(csv.reader((tmp_path / "t.csv").open()))
    assert len(rows) >= 64


def test_cli_reports_errors(tmp_path, capsys):
    assert main(["histogram", "--pert", str(tmp_path / "missing.bin"), "--out", str(tmp_path / "h.csv")]) == 2
    assert "error" in capsys.readouterr().err
