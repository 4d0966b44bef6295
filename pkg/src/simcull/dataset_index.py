"""Image discovery, set tagging, and ground-truth label attachment.

The index establishes the canonical ordering (ascending lexicographic
byte order of the full path) that every downstream stage relies on for
deterministic ids, group representatives, and keep-first decisions.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .errors import AmbiguousLabel, DuplicateLabelRow, MissingRoot, UnknownSchema

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp"}


class SetTag(Enum):
    TRAIN = "train"
    TEST = "test"
    UNTAGGED = "untagged"


class ClassLabel(Enum):
    NONE = "none"
    INFECTION = "infection"
    ISCHAEMIA = "ischaemia"
    BOTH = "both"
    UNLABELLED = "unlabelled"


# header spellings accepted for the one-hot schema; British and American
# spellings of ischaemia both occur in the wild
_ONEHOT_COLUMNS = ("none", "infection", "ischaemia", "both")
_SPELLINGS = {"ischemia": "ischaemia"}


@dataclass(frozen=True)
class ImageEntry:
    id: int
    path: str
    set_tag: SetTag
    class_label: ClassLabel
    byte_size: int
    mtime: float


@dataclass
class ScanReport:
    found: int = 0
    skipped: int = 0
    skipped_paths: list = field(default_factory=list)


@dataclass
class DatasetIndex:
    entries: list[ImageEntry]
    label_source: str | None = None

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def by_id(self, entry_id: int) -> ImageEntry:
        return self.entries[entry_id]


def _canonical_key(path: str) -> bytes:
    return os.fsencode(path)


def scan_images(root, set_tag: SetTag = SetTag.UNTAGGED,
                report: ScanReport | None = None) -> list[ImageEntry]:
    """Enumerate decodable raster files under ``root`` in canonical order.

    Non-image files and symlinks are skipped and counted in ``report``.
    Raises MissingRoot if the directory does not exist.  An empty result
    is legal (warning-level for callers, not an error here).
    """
    root = Path(root)
    if not root.is_dir():
        raise MissingRoot(f"scan root does not exist: {root}")
    if report is None:
        report = ScanReport()

    paths = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in filenames:
            full = Path(dirpath) / name
            if full.is_symlink():
                report.skipped += 1
                report.skipped_paths.append(str(full))
                continue
            if full.suffix.lower() in IMAGE_EXTENSIONS:
                paths.append(full)
            else:
                report.skipped += 1
                report.skipped_paths.append(str(full))

    paths.sort(key=lambda p: _canonical_key(str(p)))
    entries = []
    for i, p in enumerate(paths):
        st = p.stat()
        entries.append(ImageEntry(
            id=i, path=str(p), set_tag=set_tag,
            class_label=ClassLabel.UNLABELLED,
            byte_size=st.st_size, mtime=st.st_mtime,
        ))
    report.found = len(entries)
    return entries


def build_index(root, set_tag: SetTag = SetTag.UNTAGGED,
                report: ScanReport | None = None) -> DatasetIndex:
    return DatasetIndex(entries=scan_images(root, set_tag, report))


def merge_indexes(*indexes: DatasetIndex) -> DatasetIndex:
    """Union of several indexes under a fresh canonical ordering.

    Set tags and class labels are preserved; ids are reassigned densely.
    Duplicate paths are collapsed (first occurrence wins).
    """
    seen: dict[str, ImageEntry] = {}
    for idx in indexes:
        for e in idx.entries:
            seen.setdefault(e.path, e)
    ordered = sorted(seen.values(), key=lambda e: _canonical_key(e.path))
    entries = [replace(e, id=i) for i, e in enumerate(ordered)]
    return DatasetIndex(entries=entries)


def _normalize_header(name: str) -> str:
    name = name.strip().lower()
    return _SPELLINGS.get(name, name)


def load_labels(csv_path) -> dict[str, ClassLabel]:
    """Parse a ground-truth CSV into {base filename: class label}.

    Two schemas are accepted: one-hot columns (image,none,infection,
    ischaemia,both with exactly one 1 per row) or a two-column
    image,class form.
    """
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise UnknownSchema(f"empty label file: {csv_path}")
        cols = [_normalize_header(c) for c in header]

        labels: dict[str, ClassLabel] = {}
        if len(cols) >= 5 and cols[0] == "image" and set(_ONEHOT_COLUMNS) <= set(cols[1:]):
            positions = {c: cols.index(c) for c in _ONEHOT_COLUMNS}
            for row in reader:
                if not row:
                    continue
                name = os.path.basename(row[0].strip())
                hot = [c for c in _ONEHOT_COLUMNS if row[positions[c]].strip() == "1"]
                zeros = [c for c in _ONEHOT_COLUMNS if row[positions[c]].strip() == "0"]
                if len(hot) != 1 or len(hot) + len(zeros) != len(_ONEHOT_COLUMNS):
                    raise AmbiguousLabel(f"row for {name!r} is not one-hot: {row}")
                label = ClassLabel(hot[0])
                _record_label(labels, name, label)
        elif len(cols) == 2 and cols[0] == "image" and cols[1] == "class":
            for row in reader:
                if not row:
                    continue
                name = os.path.basename(row[0].strip())
                value = _normalize_header(row[1])
                try:
                    label = ClassLabel(value)
                except ValueError:
                    raise UnknownSchema(f"unknown class value {row[1]!r} for {name!r}")
                _record_label(labels, name, label)
        else:
            raise UnknownSchema(f"unrecognized label header: {header}")
    return labels


def _record_label(labels, name, label):
    if name in labels and labels[name] is not label:
        raise DuplicateLabelRow(
            f"{name!r} appears twice with conflicting labels "
            f"({labels[name].value} vs {label.value})")
    labels[name] = label


@dataclass
class JoinReport:
    matched: int = 0
    unmatched_labels: list = field(default_factory=list)


def attach_labels(index: DatasetIndex, labels: dict[str, ClassLabel],
                  label_source: str | None = None,
                  report: JoinReport | None = None) -> DatasetIndex:
    """Join labels onto the index by base filename; unmatched label rows
    are reported, never fatal.  Entries with no label stay Unlabelled."""
    if report is None:
        report = JoinReport()
    used = set()
    entries = []
    for e in index.entries:
        base = os.path.basename(e.path)
        if base in labels:
            entries.append(replace(e, class_label=labels[base]))
            used.add(base)
            report.matched += 1
        else:
            entries.append(replace(e, class_label=ClassLabel.UNLABELLED))
    report.unmatched_labels = sorted(set(labels) - used)
    return DatasetIndex(entries=entries, label_source=label_source)
