"""Meme manifests: loading, validation, statistics and raw-release conversion.

A manifest is UTF-8 newline-delimited JSON, one meme per line::

    {"id": "42953", "img": "img/42953.png", "text": "...", "label": 0,
     "split": "train", "tags": ["muslim", "mosque"]}

``label`` is 0 (non-hateful) or 1 (hateful); it may be null/absent only for
test records loaded in inference mode. ``tags`` is optional.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence

from .errors import DatasetError

NON_HATEFUL = 0
HATEFUL = 1
LABELS = (NON_HATEFUL, HATEFUL)
SPLITS = ("train", "test")


@dataclass(frozen=True)
class MemeRecord:
    id: str
    image_ref: str
    text: str
    label: Optional[int]
    split: str
    tags: tuple[str, ...] = ()

    def to_json(self) -> dict:
        row = {
            "id": self.id,
            "img": self.image_ref,
            "text": self.text,
            "label": self.label,
            "split": self.split,
        }
        if self.tags:
            row["tags"] = list(self.tags)
        return row


@dataclass
class Dataset:
    records: list[MemeRecord]
    name: str = ""
    root: Optional[Path] = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def by_id(self) -> dict[str, MemeRecord]:
        return {r.id: r for r in self.records}

    def image_path(self, record: MemeRecord) -> Path:
        """Resolve a record's image reference against the manifest directory."""
        path = Path(record.image_ref)
        if not path.is_absolute() and self.root is not None:
            path = self.root / path
        return path


class SplitStats(NamedTuple):
    hateful: int
    non_hateful: int
    unlabeled: int

    @property
    def total(self) -> int:
        return self.hateful + self.non_hateful + self.unlabeled


def _parse_record(obj, lineno: int, path: Path) -> MemeRecord:
    where = f"{path}:{lineno}"
    if not isinstance(obj, dict):
        raise DatasetError(f"{where}: record is not a JSON object")
    for key in ("id", "img", "text", "split"):
        if key not in obj:
            raise DatasetError(f"{where}: record missing required field '{key}'")
    rid = obj["id"]
    if isinstance(rid, bool) or not isinstance(rid, (str, int)):
        raise DatasetError(f"{where}: id must be a string")
    rid = str(rid)
    if not rid:
        raise DatasetError(f"{where}: empty id")
    if not isinstance(obj["img"], str) or not obj["img"]:
        raise DatasetError(f"{where}: img must be a nonempty path string")
    if not isinstance(obj["text"], str):
        raise DatasetError(f"{where}: text must be a string")
    split = obj["split"]
    if split not in SPLITS:
        raise DatasetError(f"{where}: unknown split {split!r}")
    label = obj.get("label")
    if label is not None and (isinstance(label, bool) or label not in LABELS):
        raise DatasetError(f"{where}: unknown label value {label!r} for id {rid}")
    tags = obj.get("tags") or []
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise DatasetError(f"{where}: tags must be a list of strings")
    return MemeRecord(rid, obj["img"], obj["text"], label, split, tuple(tags))


def read_manifest(manifest_path) -> list[MemeRecord]:
    """Parse every record in a manifest, all splits, in file order."""
    path = Path(manifest_path)
    if not path.is_file():
        raise DatasetError(f"manifest not found: {path}")
    records = []
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            record = _parse_record(obj, lineno, path)
            if record.id in seen:
                raise DatasetError(f"{path}:{lineno}: duplicate id {record.id!r}")
            seen.add(record.id)
            records.append(record)
    return records


def load_dataset(manifest_path, split: str, inference: bool = False, name: str = "") -> Dataset:
    """Load the records of one split.

    Unlabeled records are rejected unless ``split == "test"`` and
    ``inference`` is set.
    """
    if split not in SPLITS:
        raise DatasetError(f"unknown split {split!r}")
    path = Path(manifest_path)
    records = [r for r in read_manifest(path) if r.split == split]
    allow_unlabeled = inference and split == "test"
    if not allow_unlabeled:
        for r in records:
            if r.label is None:
                raise DatasetError(f"record {r.id!r} has no label (unlabeled records need test split + inference mode)")
    return Dataset(records, name=name or path.stem, root=path.parent)


def write_dataset(dataset: Dataset | Iterable[MemeRecord], manifest_path) -> Path:
    path = Path(manifest_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = dataset.records if isinstance(dataset, Dataset) else list(dataset)
    with path.open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")
    return path


def split_stats(dataset: Dataset) -> SplitStats:
    hateful = sum(1 for r in dataset.records if r.label == HATEFUL)
    non_hateful = sum(1 for r in dataset.records if r.label == NON_HATEFUL)
    return SplitStats(hateful, non_hateful, len(dataset.records) - hateful - non_hateful)


# Raw-release conversion. Each converter yields records for one split; the
# caller decides which raw file is which split. For FHM the labelled
# evaluation file is usually ``dev_seen.jsonl`` (the public test split has no
# labels), but releases differ, so the mapping is left to the user.

HARM_LABELS = {
    "not harmful": NON_HATEFUL,
    "somewhat harmful": HATEFUL,
    "partially harmful": HATEFUL,
    "very harmful": HATEFUL,
}


def _iter_jsonl(path: Path):
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    yield lineno, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None


def convert_fhm(raw: Path, split: str) -> list[MemeRecord]:
    """FHM jsonl: ``{"id", "img", "label", "text"}`` per line."""
    out = []
    for lineno, obj in _iter_jsonl(raw):
        try:
            label = obj.get("label")
            out.append(MemeRecord(str(obj["id"]), obj["img"], obj["text"],
                                  None if label is None else int(label), split))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{raw}:{lineno}: cannot convert FHM record ({exc})") from None
    return out


def convert_harm(raw: Path, split: str) -> list[MemeRecord]:
    """HarM jsonl: ``{"id", "image", "labels": [harm level, ...], "text"}``.

    "somewhat/partially harmful" and "very harmful" are merged into hateful.
    """
    out = []
    for lineno, obj in _iter_jsonl(raw):
        try:
            labels = obj["labels"]
            level = (labels[0] if isinstance(labels, list) else labels).strip().lower()
            if level not in HARM_LABELS:
                raise DatasetError(f"{raw}:{lineno}: unknown HarM label {level!r}")
            out.append(MemeRecord(str(obj["id"]), obj.get("image") or obj["img"], obj["text"],
                                  HARM_LABELS[level], split))
        except (KeyError, IndexError, AttributeError) as exc:
            raise DatasetError(f"{raw}:{lineno}: cannot convert HarM record ({exc})") from None
    return out


def convert_mami(raw: Path, split: str) -> list[MemeRecord]:
    """MAMI tab-separated file with ``file_name``, ``misogynous`` and ``Text Transcription`` columns."""
    out = []
    with raw.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        for lineno, row in enumerate(reader, 2):
            try:
                name = row["file_name"]
                label = row.get("misogynous")
                out.append(MemeRecord(Path(name).stem, name, row["Text Transcription"],
                                      None if label in (None, "") else int(label), split))
            except (KeyError, ValueError) as exc:
                raise DatasetError(f"{raw}:{lineno}: cannot convert MAMI row ({exc})") from None
    return out


CONVERTERS = {"fhm": convert_fhm, "harm": convert_harm, "mami": convert_mami}


def convert(dataset: str, raw_path, out_path, split: str) -> Path:
    if dataset not in CONVERTERS:
        raise DatasetError(f"unknown dataset {dataset!r}; expected one of {sorted(CONVERTERS)}")
    if split not in SPLITS:
        raise DatasetError(f"unknown split {split!r}")
    raw = Path(raw_path)
    if not raw.is_file():
        raise DatasetError(f"raw file not found: {raw}")
    records = CONVERTERS[dataset](raw, split)
    for r in records:
        if r.label is not None and r.label not in LABELS:
            raise DatasetError(f"unknown label value {r.label!r} for id {r.id}")
    out = Path(out_path)
    existing: Sequence[MemeRecord] = read_manifest(out) if out.exists() else []
    # appending lets train and test land in one manifest
    ids = set()
    for r in list(existing) + records:
        if r.id in ids:
            raise DatasetError(f"duplicate id {r.id!r} while writing {out}")
        ids.add(r.id)
    return write_dataset(list(existing) + records, out)
