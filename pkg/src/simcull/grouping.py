"""Similarity groups: connected components of the pairwise match graph.

Transitivity is by construction: if (A,B) and (B,C) match, A and C share
a group even when their own score is below the threshold.  Group IDs are
sequential from 1 in ascending order of each group's representative,
which is its canonically smallest member.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .matcher import MatchRecord


@dataclass(frozen=True)
class SimilarityGroup:
    group_id: int
    members: tuple[int, ...]  # ascending entry ids

    @property
    def representative(self) -> int:
        return self.members[0]


class UnionFind:
    """Disjoint sets with path compression and union by size."""

    def __init__(self):
        self.parent: dict[int, int] = {}
        self.size: dict[int, int] = {}

    def find(self, x: int) -> int:
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1
            return x
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int):
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]


def build_groups(matches: list[MatchRecord]) -> list[SimilarityGroup]:
    """Connected components of the match graph, as numbered groups."""
    uf = UnionFind()
    for m in matches:
        uf.union(m.first, m.second)
    components: dict[int, list[int]] = {}
    for m in matches:
        for v in (m.first, m.second):
            components.setdefault(uf.find(v), []).append(v)
    groups = []
    for members in components.values():
        groups.append(tuple(sorted(set(members))))
    groups.sort(key=lambda g: g[0])
    return [SimilarityGroup(group_id=i + 1, members=g)
            for i, g in enumerate(groups)]


@dataclass(frozen=True)
class GroupStats:
    group_count: int
    similar_image_count: int  # sum of (|g| - 1): what keep-first removes
    images_involved: int


def group_stats(groups: list[SimilarityGroup]) -> GroupStats:
    return GroupStats(
        group_count=len(groups),
        similar_image_count=sum(len(g.members) - 1 for g in groups),
        images_involved=sum(len(g.members) for g in groups))


def write_group_csv(groups, index, path, root=None):
    """Group CSV: group_id,filename rows sorted by group id then member
    order.  Filenames are relative to ``root`` when given."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group_id", "filename"])
        for g in groups:
            for member in g.members:
                writer.writerow([g.group_id, _name(index.by_id(member), root)])


def _name(entry, root):
    if root is None:
        return entry.path
    import os
    return os.path.relpath(entry.path, root)
