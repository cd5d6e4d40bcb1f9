import json

import pytest

from procap.dataset import (
    Dataset,
    MemeRecord,
    convert,
    load_dataset,
    read_manifest,
    split_stats,
    write_dataset,
)
from procap.errors import DatasetError


def _write(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


def row(i, label=0, split="train", **kw):
    return {"id": f"m{i}", "img": f"img/m{i}.png", "text": f"text {i}", "label": label, "split": split, **kw}


def test_round_trip(tmp_path):
    recs = [MemeRecord("a", "img/a.png", "hello", 1, "train", ("tag one",)),
            MemeRecord("b", "img/b.png", "world", 0, "test")]
    path = write_dataset(recs, tmp_path / "m.jsonl")
    assert read_manifest(path) == recs


def test_load_dataset_filters_split_and_resolves_images(tmp_path):
    path = _write(tmp_path / "m.jsonl", [row(1), row(2, 1, "test"), row(3, 1)])
    train = load_dataset(path, "train")
    assert [r.id for r in train] == ["m1", "m3"]
    assert train.image_path(train.records[0]) == tmp_path / "img/m1.png"
    assert train.name == "m"


@pytest.mark.parametrize("bad, message", [
    ("{not json", "malformed"),
    (json.dumps({"id": "x", "img": "a", "text": "t", "split": "train", "label": 2}), "unknown label"),
    (json.dumps({"id": "x", "img": "a", "split": "train", "label": 0}), "text"),
    (json.dumps({"id": "x", "img": "a", "text": "t", "split": "dev", "label": 0}), "split"),
])
def test_malformed_records_rejected(tmp_path, bad, message):
    path = tmp_path / "m.jsonl"
    path.write_text(bad + "\n", encoding="utf-8")
    with pytest.raises(DatasetError, match=message):
        read_manifest(path)


def test_duplicate_ids_rejected(tmp_path):
    path = _write(tmp_path / "m.jsonl", [row(1), row(1, split="test")])
    with pytest.raises(DatasetError, match="duplicate"):
        read_manifest(path)


def test_unlabeled_only_in_test_inference(tmp_path):
    path = _write(tmp_path / "m.jsonl", [row(1), row(2, None, "test")])
    with pytest.raises(DatasetError, match="no label"):
        load_dataset(path, "test")
    assert load_dataset(path, "test", inference=True).records[0].label is None
    bad = _write(tmp_path / "n.jsonl", [row(1, None)])
    with pytest.raises(DatasetError):
        load_dataset(bad, "train", inference=True)


def test_split_stats_counts():
    recs = [MemeRecord(str(i), "x", "t", i % 3 if i % 3 < 2 else None, "test") for i in range(9)]
    assert split_stats(Dataset(recs)) == (3, 3, 3)
    assert split_stats(Dataset(recs)).total == 9


def test_convert_fhm_appends_splits(tmp_path):
    train = _write(tmp_path / "train.jsonl", [{"id": 1, "img": "img/1.png", "label": 1, "text": "a"}])
    dev = _write(tmp_path / "dev.jsonl", [{"id": 2, "img": "img/2.png", "label": 0, "text": "b"}])
    out = tmp_path / "manifest.jsonl"
    convert("fhm", train, out, "train")
    convert("fhm", dev, out, "test")
    recs = read_manifest(out)
    assert [(r.id, r.label, r.split) for r in recs] == [("1", 1, "train"), ("2", 0, "test")]
    with pytest.raises(DatasetError, match="duplicate"):
        convert("fhm", dev, out, "test")


def test_convert_harm_merges_levels(tmp_path):
    raw = _write(tmp_path / "harm.jsonl", [
        {"id": "a", "image": "a.png", "labels": ["not harmful"], "text": "x"},
        {"id": "b", "image": "b.png", "labels": ["somewhat harmful", "individual"], "text": "y"},
        {"id": "c", "image": "c.png", "labels": ["very harmful"], "text": "z"},
    ])
    out = convert("harm", raw, tmp_path / "m.jsonl", "train")
    assert [r.label for r in read_manifest(out)] == [0, 1, 1]
    bad = _write(tmp_path / "bad.jsonl", [{"id": "d", "image": "d.png", "labels": ["lethal"], "text": "w"}])
    with pytest.raises(DatasetError, match="HarM"):
        convert("harm", bad, tmp_path / "n.jsonl", "train")


def test_convert_mami_tsv(tmp_path):
    raw = tmp_path / "training.csv"
    raw.write_text("file_name\tmisogynous\tText Transcription\n1.jpg\t1\tsome text\n2.jpg\t0\tother\n",
                   encoding="utf-8")
    recs = read_manifest(convert("mami", raw, tmp_path / "m.jsonl", "train"))
    assert [(r.id, r.image_ref, r.label) for r in recs] == [("1", "1.jpg", 1), ("2", "2.jpg", 0)]


def test_convert_unknown_dataset(tmp_path):
    with pytest.raises(DatasetError):
        convert("imgflip", tmp_path / "x", tmp_path / "y", "train")
