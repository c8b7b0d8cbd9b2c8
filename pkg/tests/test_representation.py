import json

import numpy as np
import pytest

from src.representation import (
    ModelOutputs, Representation, load_outputs, load_representation, read_csv_matrix, read_npy,
    save_representation
)
from src.utils import MeasureError


def test_csv_without_header(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("1,2\n3,4\n")
    np.testing.assert_array_equal(read_csv_matrix(path), [[1.0, 2.0], [3.0, 4.0]])


def test_csv_with_header(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("u0,u1\n1.5,2\n3,-4e-1\n")
    np.testing.assert_allclose(read_csv_matrix(path), [[1.5, 2.0], [3.0, -0.4]])


def test_csv_nan_is_rejected(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("1,2\nnan,4\n")
    with pytest.raises(MeasureError):
        load_representation(path)


@pytest.mark.parametrize("dtype", ["<f8", "<f4"])
def test_npy_float(tmp_path, dtype):
    data = np.arange(12, dtype=dtype).reshape(4, 3)
    path = tmp_path / "r.npy"
    np.save(path, data)
    out = read_npy(path)
    assert out.dtype == np.float64
    np.testing.assert_array_equal(out, data.astype(np.float64))


def test_npy_fortran_order(tmp_path):
    data = np.asfortranarray(np.arange(6, dtype="<f8").reshape(2, 3))
    path = tmp_path / "r.npy"
    np.save(path, data)
    out = read_npy(path)
    np.testing.assert_array_equal(out, [[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    assert out.flags["C_CONTIGUOUS"]


def test_npy_rejects_ints_and_3d(tmp_path):
    ints = tmp_path / "ints.npy"
    np.save(ints, np.arange(6, dtype="<i8").reshape(2, 3))
    with pytest.raises(MeasureError):
        read_npy(ints)

    cube = tmp_path / "cube.npy"
    np.save(cube, np.zeros((2, 2, 2)))
    with pytest.raises(MeasureError):
        read_npy(cube)


def test_sidecar_metadata(tmp_path):
    path = tmp_path / "layer3.npy"
    np.save(path, np.ones((3, 2)))
    (tmp_path / "layer3.json").write_text(json.dumps({"model_id": "resnet", "layer": 3, "group": "a"}))

    rep = load_representation(path)
    assert (rep.model_id, rep.layer, rep.group) == ("resnet", 3, "a")

    override = load_representation(path, model_id="other", layer=1)
    assert (override.model_id, override.layer, override.group) == ("other", 1, "a")


def test_defaults_without_sidecar(tmp_path):
    path = tmp_path / "plain.npy"
    np.save(path, np.ones((3, 2)))
    rep = load_representation(path)
    assert rep.model_id == "plain"
    assert rep.layer == 0
    assert rep.group is None


def test_save_and_load(tmp_path, rng):
    rep = Representation(data=rng.standard_normal((5, 3)), model_id="m", layer=2, group="g")
    path = save_representation(rep, tmp_path / "sub" / "m.npy")
    loaded = load_representation(path)
    np.testing.assert_array_equal(loaded.data, rep.data)
    assert (loaded.model_id, loaded.layer, loaded.group) == ("m", 2, "g")


def test_representation_is_read_only(rng):
    rep = Representation(data=rng.standard_normal((4, 2)))
    with pytest.raises(ValueError):
        rep.data[0, 0] = 1.0
    assert (rep.n_instances, rep.n_features) == (4, 2)


def test_representation_validation():
    with pytest.raises(MeasureError):
        Representation(data=np.ones((1, 3)))
    with pytest.raises(MeasureError):
        Representation(data=np.array([[1.0, np.inf], [0.0, 1.0]]))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_representation(tmp_path / "missing.npy")


class TestModelOutputs:
    def test_valid(self):
        outs = ModelOutputs(probs=[[0.2, 0.8], [0.6, 0.4]], labels=[1, 0])
        assert (outs.n_instances, outs.n_classes) == (2, 2)

    def test_rows_must_sum_to_one(self):
        with pytest.raises(MeasureError):
            ModelOutputs(probs=[[0.2, 0.7], [0.6, 0.4]], labels=[1, 0])

    def test_label_range(self):
        with pytest.raises(MeasureError):
            ModelOutputs(probs=[[0.2, 0.8], [0.6, 0.4]], labels=[2, 0])

    def test_label_count(self):
        with pytest.raises(MeasureError):
            ModelOutputs(probs=[[0.2, 0.8], [0.6, 0.4]], labels=[1])

    def test_load(self, tmp_path):
        np.save(tmp_path / "p.npy", np.array([[0.1, 0.9], [0.5, 0.5], [1.0, 0.0]]))
        np.save(tmp_path / "y.npy", np.array([1, 0, 0]))
        outs = load_outputs(tmp_path / "p.npy", tmp_path / "y.npy")
        assert outs.model_id == "p"
        np.testing.assert_array_equal(outs.labels, [1, 0, 0])

    def test_load_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_outputs(tmp_path / "p.npy", tmp_path / "y.npy")
