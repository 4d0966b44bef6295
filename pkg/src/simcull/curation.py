"""Keep-first curation: turn similarity groups into keep/remove
decisions, materialize curated training sets, and verify the result.

The pipeline is strictly non-destructive to the source tree: kept files
are copied (or hard-linked) into a fresh destination directory that
mirrors any class subdirectory structure.
"""

from __future__ import annotations

import csv
import os
import random
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from .dataset_index import ClassLabel, DatasetIndex, ScanReport, scan_images
from .errors import DestNotEmpty, IndexMismatch, MissingSource, SampleTooLarge
from .grouping import SimilarityGroup

KEEP = "keep"
REMOVE = "remove"


@dataclass(frozen=True)
class Decision:
    group_id: int
    filename: str  # path relative to the source root
    class_label: str
    action: str


@dataclass
class CurationManifest:
    threshold: int
    decisions: list[Decision]
    total_images: int
    removed: int
    remaining: int

    def kept(self):
        return [d for d in self.decisions if d.action == KEEP]

    def removed_decisions(self):
        return [d for d in self.decisions if d.action == REMOVE]


def plan_curation(groups: list[SimilarityGroup], index: DatasetIndex,
                  threshold: int, source_root) -> CurationManifest:
    """Keep each group's representative, remove the rest.

    Images in no group are implicitly kept: they are absent from the
    decisions and counted in ``remaining``.
    """
    source_root = str(source_root)
    decisions = []
    removed = 0
    for g in groups:
        for k, member in enumerate(g.members):
            if not 0 <= member < len(index):
                raise IndexMismatch(f"group {g.group_id} references unknown "
                                    f"entry id {member}")
            entry = index.by_id(member)
            action = KEEP if k == 0 else REMOVE
            if action == REMOVE:
                removed += 1
            decisions.append(Decision(
                group_id=g.group_id,
                filename=os.path.relpath(entry.path, source_root),
                class_label=entry.class_label.value,
                action=action))
    total = len(index)
    return CurationManifest(threshold=threshold, decisions=decisions,
                            total_images=total, removed=removed,
                            remaining=total - removed)


def write_manifest_csv(manifest: CurationManifest, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "group_id", "filename", "class", "action"])
        for d in manifest.decisions:
            writer.writerow([manifest.threshold, d.group_id, d.filename,
                             d.class_label, d.action])


def read_manifest_csv(path, total_images: int | None = None) -> CurationManifest:
    decisions = []
    threshold = 0
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            threshold = int(row["threshold"])
            decisions.append(Decision(
                group_id=int(row["group_id"]), filename=row["filename"],
                class_label=row["class"], action=row["action"]))
    removed = sum(1 for d in decisions if d.action == REMOVE)
    total = total_images if total_images is not None else 0
    return CurationManifest(threshold=threshold, decisions=decisions,
                            total_images=total, removed=removed,
                            remaining=total - removed)


@dataclass
class ApplyReport:
    copied: int = 0
    per_class: dict = field(default_factory=dict)


def apply_curation(manifest: CurationManifest, source_root, dest_root,
                   mode: str = "copy") -> ApplyReport:
    """Copy every source image except the Remove-listed ones into
    ``dest_root``, preserving directory structure.

    ``dest_root`` must be empty or absent.  ``mode`` is "copy" (the
    default) or "link" (hard links, for desk-scale speed).
    """
    source_root = Path(source_root)
    dest_root = Path(dest_root)
    if dest_root.exists() and any(dest_root.iterdir()):
        raise DestNotEmpty(f"destination is not empty: {dest_root}")

    entries = scan_images(source_root, report=ScanReport())
    present = {os.path.relpath(e.path, source_root) for e in entries}
    removed = {d.filename for d in manifest.removed_decisions()}
    for d in manifest.kept():
        if d.filename not in present:
            raise MissingSource(f"kept file vanished: {d.filename}")

    class_by_file = {d.filename: d.class_label for d in manifest.decisions}
    report = ApplyReport()
    dest_root.mkdir(parents=True, exist_ok=True)
    for e in entries:
        rel = os.path.relpath(e.path, source_root)
        if rel in removed:
            continue
        target = dest_root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        if mode == "link":
            os.link(e.path, target)
        else:
            shutil.copy2(e.path, target)
        report.copied += 1
        cls = class_by_file.get(rel, _class_from_path(rel))
        report.per_class[cls] = report.per_class.get(cls, 0) + 1
    return report


def _class_from_path(rel: str) -> str:
    head = rel.split(os.sep)[0] if os.sep in rel else ""
    return head or ClassLabel.UNLABELLED.value


def merge_labels_csv(group_csv, labels: dict[str, ClassLabel], out_path):
    """Join a group CSV with ground-truth labels by base filename.

    Output rows are (group_id, filename, class); files with no label get
    class "unlabelled".  Returns the count of unmatched filenames.
    """
    unmatched = 0
    with open(group_csv, newline="") as src, \
            open(out_path, "w", newline="") as dst:
        reader = csv.DictReader(src)
        writer = csv.writer(dst, lineterminator="\n")
        writer.writerow(["group_id", "filename", "class"])
        for row in reader:
            base = os.path.basename(row["filename"])
            label = labels.get(base)
            if label is None:
                label = ClassLabel.UNLABELLED
                unmatched += 1
            writer.writerow([row["group_id"], row["filename"], label.value])
    return unmatched


@dataclass
class Violation:
    category: str
    detail: str


@dataclass
class VerificationReport:
    kept: int = 0
    removed: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary_line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"VERIFY {verdict} kept={self.kept} removed={self.removed} "
                f"violations={len(self.violations)}")


def verify_curation(manifest: CurationManifest, dest_root,
                    labels: dict[str, ClassLabel] | None = None) -> VerificationReport:
    """Check a curated destination against its manifest.

    Violation categories: "kept file missing", "removed file present",
    "label mismatch" (manifest class disagrees with the ground truth),
    and "file count mismatch" (dest holds files the manifest does not
    account for).
    """
    dest_root = Path(dest_root)
    report = VerificationReport(
        kept=len(manifest.kept()), removed=len(manifest.removed_decisions()))

    dest_files = set()
    if dest_root.is_dir():
        for e in scan_images(dest_root, report=ScanReport()):
            dest_files.add(os.path.relpath(e.path, dest_root))

    for d in manifest.kept():
        if d.filename not in dest_files:
            report.violations.append(
                Violation("kept file missing", d.filename))
    for d in manifest.removed_decisions():
        if d.filename in dest_files:
            report.violations.append(
                Violation("removed file present", d.filename))
    if labels:
        for d in manifest.decisions:
            truth = labels.get(os.path.basename(d.filename))
            if truth is not None and truth.value != d.class_label:
                report.violations.append(Violation(
                    "label mismatch",
                    f"{d.filename}: manifest={d.class_label} "
                    f"truth={truth.value}"))
    if manifest.total_images and len(dest_files) != manifest.remaining:
        report.violations.append(Violation(
            "file count mismatch",
            f"dest holds {len(dest_files)} images, manifest expects "
            f"{manifest.remaining}"))
    return report


def sample_spotcheck(dest_root, n: int, seed: int) -> list[str]:
    """Deterministic uniform sample without replacement of dest files."""
    dest_root = Path(dest_root)
    files = sorted(os.path.relpath(e.path, dest_root)
                   for e in scan_images(dest_root, report=ScanReport()))
    if n > len(files):
        raise SampleTooLarge(f"asked for {n} of {len(files)} files")
    return random.Random(seed).sample(files, n)
