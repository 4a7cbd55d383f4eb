"""Tests for experiment configuration parsing and presets."""
import numpy as np
import pytest
import yaml

from dynaq.classifiers import GbmHyperParams
from dynaq.config import (
    DatasetSpec,
    ExperimentConfig,
    config_from_mapping,
    config_to_mapping,
    desk_config,
    load_config,
    paper_scale_config,
    resolve_dataset,
)
from dynaq.dynamics import DynamicsParams
from dynaq.engine import METHOD_ORDER
from dynaq.errors import SchemaError


class TestDatasetSpec:
    def test_kind_validation(self):
        with pytest.raises(SchemaError, match="unknown dataset kind"):
            DatasetSpec(kind="parquet")

    def test_path_requirements(self):
        with pytest.raises(SchemaError):
            DatasetSpec(kind="nslkdd")
        with pytest.raises(SchemaError):
            DatasetSpec(kind="csv")
        DatasetSpec(kind="synthetic")  # no paths needed

    def test_resolve_synthetic(self):
        data, fixed = resolve_dataset(DatasetSpec(kind="synthetic", n_rows=300, seed=1))
        assert data.n_rows == 300
        assert fixed is None

    def test_resolve_shifted_fixed_eval(self):
        spec = DatasetSpec(kind="synthetic-shifted", n_pool=400, n_eval=250, seed=1)
        data, fixed = resolve_dataset(spec)
        assert data.n_rows == 650
        assert np.array_equal(fixed, np.arange(400, 650))

    def test_resolve_csv(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,label\n1,2,0\n3,4,1\n")
        data, fixed = resolve_dataset(DatasetSpec(kind="csv", path=str(p)))
        assert data.n_rows == 2 and fixed is None


class TestExperimentConfig:
    def test_validation(self):
        ds = DatasetSpec(kind="synthetic")
        with pytest.raises(SchemaError):
            ExperimentConfig(dataset=ds, query_size=1)
        with pytest.raises(SchemaError):
            ExperimentConfig(dataset=ds, total_queries=10, query_size=40)
        with pytest.raises(SchemaError):
            ExperimentConfig(dataset=ds, sims=0)
        with pytest.raises(SchemaError):
            ExperimentConfig(dataset=ds, labeled0=1)
        with pytest.raises(SchemaError):
            ExperimentConfig(dataset=ds, methods=("jas.main", "mystery"))
        with pytest.raises(SchemaError):
            ExperimentConfig(dataset=ds, gbm="autotune")

    def test_iterations(self):
        cfg = ExperimentConfig(dataset=DatasetSpec(kind="synthetic"),
                               total_queries=2000, query_size=40)
        assert cfg.iterations == 50
        cfg = ExperimentConfig(dataset=DatasetSpec(kind="synthetic"),
                               total_queries=2010, query_size=40)
        assert cfg.iterations == 50  # floor

    def test_tune_directive_allowed(self):
        cfg = ExperimentConfig(dataset=DatasetSpec(kind="synthetic"),
                               gbm="tune", dynamics="tune")
        assert cfg.gbm == "tune" and cfg.dynamics == "tune"


class TestMappingParse:
    def test_minimal(self):
        cfg = config_from_mapping({"dataset": {"kind": "synthetic"}})
        assert cfg.methods == METHOD_ORDER
        assert isinstance(cfg.gbm, GbmHyperParams)
        assert isinstance(cfg.dynamics, DynamicsParams)

    def test_full(self):
        cfg = config_from_mapping({
            "dataset": {"kind": "synthetic", "n_rows": 500, "seed": 3},
            "labeled0": 50, "query_size": 20, "total_queries": 400,
            "sims": 2, "seed": 7, "methods": ["jas.main", "jas.rand"],
            "gbm": {"ntrees": 30, "max_depth": 4},
            "dynamics": {"alpha_a0": 0.4, "tau": 0.002},
        })
        assert cfg.dataset.n_rows == 500
        assert cfg.gbm.ntrees == 30
        assert cfg.dynamics.alpha_a0 == 0.4
        assert cfg.methods == ("jas.main", "jas.rand")

    def test_tune_strings(self):
        cfg = config_from_mapping({"dataset": {"kind": "synthetic"},
                                   "gbm": "tune", "dynamics": "tune"})
        assert cfg.gbm == "tune" and cfg.dynamics == "tune"

    def test_unknown_key_rejected(self):
        with pytest.raises(SchemaError, match="unknown config keys"):
            config_from_mapping({"dataset": {"kind": "synthetic"}, "qsize": 40})

    def test_missing_dataset(self):
        with pytest.raises(SchemaError, match="dataset"):
            config_from_mapping({"labeled0": 10})

    def test_non_mapping_root(self):
        with pytest.raises(SchemaError):
            config_from_mapping(["nope"])


class TestYamlRoundtrip:
    def test_load_config(self, tmp_path):
        p = tmp_path / "cfg.yaml"
        p.write_text(yaml.safe_dump({
            "dataset": {"kind": "synthetic", "n_rows": 400},
            "query_size": 20, "total_queries": 200, "sims": 2,
        }))
        cfg = load_config(p)
        assert cfg.dataset.n_rows == 400
        assert cfg.iterations == 10

    def test_to_mapping_reparses(self):
        cfg = desk_config(out_dir="runs/x", seed=4)
        again = config_from_mapping(config_to_mapping(cfg))
        assert again.dataset == cfg.dataset
        assert again.gbm == cfg.gbm
        assert again.dynamics == cfg.dynamics
        assert again.seed == cfg.seed
        assert again.iterations == cfg.iterations


class TestPresets:
    def test_desk(self):
        cfg = desk_config()
        assert cfg.dataset.kind == "synthetic-shifted"
        assert cfg.labeled0 == 125
        assert cfg.query_size == 40
        assert cfg.iterations == 50
        assert cfg.sims == 5

    def test_paper_scale(self):
        cfg = paper_scale_config("train.csv", "test.csv")
        assert cfg.dataset.kind == "nslkdd"
        assert cfg.total_queries == 15000
        assert cfg.iterations == 375
        assert cfg.sims == 30
        assert cfg.gbm == "tune" and cfg.dynamics == "tune"
