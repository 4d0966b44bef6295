import hashlib
import math

import pytest

from simcull.dataset_index import ClassLabel, SetTag, build_index
from simcull.errors import UnachievableTarget
from simcull.fingerprint import fingerprint_all
from simcull.matcher import match_pairs, tile_score
from simcull.synth_corpus import (DupSpec, PlantKind, PlantSpec, generate,
                                  read_truth_csv)


def fps_by_name(out_dir, set_tag=SetTag.TRAIN):
    index = build_index(out_dir, set_tag)
    fps, _ = fingerprint_all(index)
    return index, {index.by_id(fp.entry_id).path: fp for fp in fps}


def test_empty_spec_no_close_pairs(tmp_path):
    spec = PlantSpec(base_count=6, seed=3)
    corpus = generate(spec, tmp_path / "c")
    assert corpus.truth == []
    assert read_truth_csv(corpus.truth_path) == []
    index, by_path = fps_by_name(tmp_path / "c")
    fps = list(by_path.values())
    for i in range(len(fps)):
        for j in range(i + 1, len(fps)):
            assert tile_score(fps[i], fps[j]) == 0.0  # D > 300 clamps to 0


@pytest.mark.parametrize("target_d", [5, 17, 35, 42])
def test_planted_pair_measured_d(tmp_path, target_d):
    spec = PlantSpec(base_count=3, seed=11,
                     dup_specs=[DupSpec(base_index=0, target_d=target_d)])
    corpus = generate(spec, tmp_path / "c")
    row = corpus.truth[0]
    assert row.analytic_d == pytest.approx(target_d, abs=1e-9)

    index, by_path = fps_by_name(tmp_path / "c")
    base = by_path[str(tmp_path / "c" / row.first)]
    dup = by_path[str(tmp_path / "c" / row.second)]
    measured_d = 100.0 - tile_score(base, dup)
    assert measured_d == pytest.approx(row.analytic_d, abs=1.0)

    # threshold boundary: matches at floor(100 - D), not one above
    fps = list(by_path.values())
    boundary = row.match_max_t
    hit = match_pairs(fps, boundary, index)
    assert {(m.first, m.second) for m in hit} == \
        {(min(base.entry_id, dup.entry_id), max(base.entry_id, dup.entry_id))}
    assert match_pairs(fps, boundary + 1, index) == []


def test_fractional_target(tmp_path):
    spec = PlantSpec(base_count=2, seed=5,
                     dup_specs=[DupSpec(base_index=0, target_d=17.4)])
    corpus = generate(spec, tmp_path / "c")
    assert corpus.truth[0].analytic_d == pytest.approx(17.4, abs=0.5 / 225)


def test_copy_plant_byte_identical(tmp_path):
    spec = PlantSpec(base_count=2, seed=7,
                     dup_specs=[DupSpec(base_index=0,
                                        kind=PlantKind.COPY)])
    corpus = generate(spec, tmp_path / "c")
    row = corpus.truth[0]
    assert row.match_max_t == 100
    a = (tmp_path / "c" / row.first).read_bytes()
    b = (tmp_path / "c" / row.second).read_bytes()
    assert a == b
    index, by_path = fps_by_name(tmp_path / "c")
    assert len(match_pairs(list(by_path.values()), 100, index)) == 1


def test_reencode_plant_pixel_equal_byte_different(tmp_path):
    spec = PlantSpec(base_count=2, seed=9,
                     dup_specs=[DupSpec(base_index=0,
                                        kind=PlantKind.REENCODE)])
    corpus = generate(spec, tmp_path / "c")
    row = corpus.truth[0]
    assert row.match_max_t == 99
    a = (tmp_path / "c" / row.first).read_bytes()
    b = (tmp_path / "c" / row.second).read_bytes()
    assert a != b
    index, by_path = fps_by_name(tmp_path / "c")
    fps = list(by_path.values())
    assert match_pairs(fps, 100, index) == []
    assert len(match_pairs(fps, 99, index)) == 1


def test_same_seed_byte_identical(tmp_path):
    spec = PlantSpec(base_count=4, seed=21,
                     dup_specs=[DupSpec(base_index=1, target_d=20)])
    c1 = generate(spec, tmp_path / "one")
    c2 = generate(spec, tmp_path / "two")
    assert c1.image_paths == c2.image_paths
    for rel in c1.image_paths + ["truth.csv"]:
        h1 = hashlib.sha256((tmp_path / "one" / rel).read_bytes()).hexdigest()
        h2 = hashlib.sha256((tmp_path / "two" / rel).read_bytes()).hexdigest()
        assert h1 == h2


def test_unachievable_target(tmp_path):
    spec = PlantSpec(base_count=2, seed=1,
                     dup_specs=[DupSpec(base_index=0, target_d=800)])
    with pytest.raises(UnachievableTarget):
        generate(spec, tmp_path / "c")


def test_set_and_class_routing(tmp_path):
    spec = PlantSpec(
        base_count=2, seed=13,
        base_overrides={0: (SetTag.TRAIN, ClassLabel.INFECTION)},
        dup_specs=[DupSpec(base_index=0, target_d=10,
                           set_tag=SetTag.TEST,
                           class_label=ClassLabel.NONE)])
    corpus = generate(spec, tmp_path / "c")
    assert (tmp_path / "c" / "train" / "infection" / "base_0000.png").exists()
    assert (tmp_path / "c" / "test" / "none").is_dir()
    assert corpus.truth[0].second.startswith("test")


def test_implied_pair_between_two_plants(tmp_path):
    spec = PlantSpec(base_count=2, seed=17,
                     dup_specs=[DupSpec(base_index=0, target_d=10),
                                DupSpec(base_index=0, target_d=30)])
    corpus = generate(spec, tmp_path / "c")
    assert len(corpus.truth) == 3  # two planted + one implied
    implied = corpus.truth[-1]
    index, by_path = fps_by_name(tmp_path / "c")
    a = by_path[str(tmp_path / "c" / implied.first)]
    b = by_path[str(tmp_path / "c" / implied.second)]
    assert 100.0 - tile_score(a, b) == pytest.approx(implied.analytic_d,
                                                     abs=1.0)


def test_truth_match_range_consistency(tmp_path):
    spec = PlantSpec(base_count=3, seed=29,
                     dup_specs=[DupSpec(base_index=0, target_d=d)
                                for d in (5, 42)])
    corpus = generate(spec, tmp_path / "c")
    for row in corpus.truth:
        if row.analytic_d <= 99:
            assert row.match_max_t == min(99, math.floor(100 - row.analytic_d))
