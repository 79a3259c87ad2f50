import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from miscclust.data import DataMatrix, GeneratorSpec, two_view_blobs
from miscclust.errors import StageError
from miscclust.pipeline import (
    PipelineConfig,
    config_from_mapping,
    read_config_file,
    run_misc,
    run_pipeline,
)

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "report.schema.json").read_text())


@pytest.fixture(scope="module")
def small_views():
    return two_view_blobs(200, seed=3)


@pytest.fixture(scope="module")
def small_report(small_views):
    return run_misc(small_views.data, PipelineConfig(seed=3, max_iter=100), small_views.views)


def test_report_shape(small_report):
    assert small_report.v == len(small_report.clusterings) == len(small_report.per_subspace)
    assert small_report.partition.d == 4
    assert all(c.n == 200 for c in small_report.clusterings)


def test_report_validates_against_schema(small_report):
    jsonschema.validate(json.loads(small_report.to_json()), SCHEMA)


def test_timings_cover_every_stage(small_report):
    assert set(small_report.timings) == {"standardize", "whiten", "ica", "merge", "select_k", "factorize", "kmeans"}
    assert all(ms >= 0 for ms in small_report.timings.values())


def test_deterministic_report(small_views, small_report):
    again = run_misc(small_views.data, PipelineConfig(seed=3, max_iter=100), small_views.views)
    assert again.to_json(include_timings=False) == small_report.to_json(include_timings=False)


def test_v_override_one(small_views):
    report = run_misc(small_views.data, PipelineConfig(seed=0, v_override=1, max_iter=50))
    assert report.v == 1 and len(report.clusterings) == 1
    assert report.partition.groups == ((0, 1, 2, 3),)


def test_v_override_too_large(small_views):
    with pytest.raises(StageError) as err:
        run_misc(small_views.data, PipelineConfig(v_override=9))
    assert err.value.stage == "merge"


def test_k_override(small_views):
    report = run_misc(small_views.data, PipelineConfig(seed=0, k_override=(3,), max_iter=50))
    assert all(s.k == 3 for s in report.per_subspace)


def test_single_feature():
    x = np.concatenate([np.zeros(30), np.full(30, 5.0)]) + np.random.default_rng(0).normal(0, 0.3, 60)
    report = run_misc(DataMatrix(x[None, :]), PipelineConfig(seed=0, max_iter=50))
    assert report.v == 1 and len(report.clusterings) == 1
    assert len(report.merge_trace) == 1  # no merge steps


def test_stage_tagged_errors():
    row = np.random.default_rng(0).normal(size=40)
    with pytest.raises(StageError) as err:
        run_misc(DataMatrix(np.vstack([row, 2 * row])))
    assert err.value.stage == "whiten"


def test_parallel_matches_sequential(small_views):
    a = run_misc(small_views.data, PipelineConfig(seed=1, max_iter=60))
    b = run_misc(small_views.data, PipelineConfig(seed=1, max_iter=60, parallel=True))
    assert a.to_json(include_timings=False) == b.to_json(include_timings=False)


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("MISC_SEED", "42")
    assert PipelineConfig().seed == 42
    assert PipelineConfig(seed=3).seed == 3
    monkeypatch.delenv("MISC_SEED")
    assert PipelineConfig().seed == 0


def test_config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("lambda = 2.5\neps_neighbors = 4\nk_override = 2, 3\nkernel_width = 1.5  # fixed\n")
    cfg = config_from_mapping(read_config_file(path))
    assert (cfg.lam, cfg.eps_neighbors, cfg.k_override, cfg.kernel.width) == (2.5, 4, (2, 3), 1.5)


def test_config_rejects_unknown_key():
    with pytest.raises(ValueError):
        config_from_mapping({"lamda": 1.0})


def test_run_pipeline_writes_outputs(tmp_path):
    cfg = PipelineConfig(input=GeneratorSpec("gaussian_blobs", 60, {"k": 2}, 0), seed=0,
                         max_iter=50, output_dir=str(tmp_path / "out"))
    report = run_pipeline(cfg)
    files = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert files == [f"clustering_{i}.csv" for i in range(1, report.v + 1)] + ["report.json"]
    lines = (tmp_path / "out" / "clustering_1.csv").read_text().splitlines()
    assert lines[0] == "sample_index,label" and len(lines) == 61
    assert "metrics" in json.loads((tmp_path / "out" / "report.json").read_text())


def test_merge_time_scales_subcubically():
    # stage-2 (subspace merging) cost is dominated by O(n^2) KDE sums: doubling n should cost ~4x.
    # v_override=1 runs the merge to a single group, so both sizes do the same number of steps.
    def merge_ms(n):
        ds = two_view_blobs(n, seed=0)
        cfg = PipelineConfig(seed=0, v_override=1, k_override=(2,), max_iter=1)
        return min(run_misc(ds.data, cfg).timings["merge"] for _ in range(3))

    small, large = merge_ms(300), merge_ms(600)
    assert large / small <= 4.5
