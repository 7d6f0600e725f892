"""Dataset CSV, scenario/experiment files and model files."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locfuse.config import (
    ConfigError,
    dumps_experiment,
    dumps_scenario,
    loads_experiment,
    loads_scenario,
)
from locfuse.csvio import DatasetParseError, dumps_samples, fmt_number, load_dataset_csv, loads_dataset, save_dataset_csv
from locfuse.evaluation import ExperimentConfig
from locfuse.forest import ForestParams, dumps_forest, fit_forest, predict_positions
from locfuse.model import Dataset, LocfuseError, Selector, feature_matrix
from locfuse.modelfile import load_model, loads_model, save_model
from locfuse.propagation import generate_dataset


class TestDatasetCsv:
    def test_round_trip(self, ref_dataset, tmp_path):
        path = tmp_path / "d.csv"
        save_dataset_csv(ref_dataset, path)
        assert load_dataset_csv(path, ref_dataset.roster, ref_dataset.zones) == ref_dataset

    def test_round_trip_with_ranges(self, scenario, tmp_path):
        ds = generate_dataset(scenario, 30, 4, with_ranges=True)
        path = tmp_path / "d.csv"
        save_dataset_csv(ds, path)
        assert load_dataset_csv(path, ds.roster, ds.zones) == ds

    def test_header_bytes(self, ref_dataset, tmp_path):
        path = tmp_path / "d.csv"
        save_dataset_csv(ref_dataset, path)
        raw = path.read_bytes()
        assert raw.splitlines()[0] == (
            b"sample_id,x_m,y_m,zone,rssi_g1,rssi_g2,rssi_g3,rssi_w1,rssi_w2,rssi_w3,"
            b"range_g1,range_g2,range_g3,range_w1,range_w2,range_w3"
        )
        assert b"\r" not in raw and raw.endswith(b"\n")

    def test_bad_cell_names_its_line(self, ref_dataset):
        lines = dumps_samples(ref_dataset.samples[:10], ref_dataset.roster).splitlines()
        cells = lines[6].split(",")
        cells[4] = "abc"
        lines[6] = ",".join(cells)
        with pytest.raises(DatasetParseError) as exc:
            loads_dataset("\n".join(lines) + "\n", ref_dataset.roster)
        assert exc.value.line == 7
        assert "line 7" in str(exc.value)

    def test_empty_cell_is_absent(self, ref_dataset):
        text = "sample_id,x_m,y_m,zone,rssi_g1,rssi_w1\ns1,1,1,lab1,-60,\n"
        ds = loads_dataset(text, ref_dataset.roster, ref_dataset.zones)
        s = ds.samples[0]
        assert s.rssi == {"g1": -60.0}
        assert s.ranges is None
        assert feature_matrix(ds, Selector.WIFI).rows.tolist() == [[-120.0, -120.0, -120.0]]

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "id,x_m,y_m,zone\n",
            "sample_id,x_m,y_m,zone,rssi_zz\n",
            "sample_id,x_m,y_m,zone,power_g1\n",
            "sample_id,x_m,y_m,zone,rssi_g1\ns1,1,1\n",
        ],
    )
    def test_malformed(self, ref_dataset, text):
        with pytest.raises(DatasetParseError):
            loads_dataset(text, ref_dataset.roster)

    @settings(max_examples=300)
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_number_format_lossless(self, v):
        assert float(fmt_number(v)) == v

    def test_nine_significant_digits(self):
        assert fmt_number(-61.3) == "-61.3"
        assert fmt_number(1.0) == "1"


class TestScenarioFile:
    def test_round_trip(self, scenario):
        text = dumps_scenario(scenario)
        again = loads_scenario(text)
        assert again == scenario
        assert dumps_scenario(again) == text

    def test_same_data_from_reloaded_scenario(self, scenario):
        again = loads_scenario(dumps_scenario(scenario))
        assert generate_dataset(again, 20, 3) == generate_dataset(scenario, 20, 3)

    @pytest.mark.parametrize(
        "text",
        [
            "[scenario]\nsampling_region = 0, 0, 1\n",
            "[ap.g1]\ntech = lte\nposition = 0, 0, 1\n",
            "[ap.g1]\ntech = 5g\nposition = a, b, c\n",
            "not an ini file",
        ],
    )
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            loads_scenario(text)


class TestExperimentFile:
    def test_defaults(self):
        cfg = loads_experiment("")
        assert cfg == ExperimentConfig()

    def test_round_trip(self):
        cfg = ExperimentConfig(
            test_fraction=0.25,
            n_iterations=7,
            master_seed=99,
            classify_params=ForestParams(n_trees=11, max_depth=4, min_samples_leaf=1),
            regress_params=ForestParams(n_trees=5, features_per_split=2, bootstrap=False),
            technologies=(Selector.WIFI, Selector.FUSION),
        )
        assert loads_experiment(dumps_experiment(cfg)) == cfg

    def test_errors(self):
        with pytest.raises(ConfigError):
            loads_experiment("[experiment]\nn_iterations = many\n")
        with pytest.raises(ConfigError):
            loads_experiment("[surprise]\n")


class TestModelFile:
    def test_round_trip(self, ref_dataset, tmp_path):
        fm = feature_matrix(ref_dataset, Selector.FUSION)
        forest = fit_forest(fm.rows, ref_dataset.positions(), ForestParams(n_trees=5, seed=2), fm.columns)
        path = tmp_path / "f.model"
        save_model(path, forest, ref_dataset.zones)
        again, zones = load_model(path)
        assert again == forest
        assert zones == ref_dataset.zones
        np.testing.assert_array_equal(predict_positions(again, fm.rows), predict_positions(forest, fm.rows))

    def test_bad_trailer(self, ref_dataset):
        fm = feature_matrix(ref_dataset, Selector.WIFI)
        forest = fit_forest(fm.rows, ref_dataset.labels(), ForestParams(n_trees=1), fm.columns)
        with pytest.raises(LocfuseError):
            loads_model(dumps_forest(forest) + "Q nonsense\n")


def test_dataset_equality_is_structural(ref_dataset):
    assert Dataset(ref_dataset.roster, ref_dataset.zones, list(ref_dataset.samples)) == ref_dataset
