"""Proposal selection: overlap suppression for open curves, confidence and IoU clustering for closed ones."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .closed_proposals import ClosedProposal
from .geometry import EmptySet, canonical_samples, chamfer_distance
from .open_proposals import OpenProposal


@dataclass(frozen=True)
class SelectionConfig:
    tau_o: float = 0.8
    tau_gamma: float = 0.6
    tau_iou: float = 0.6

    def __post_init__(self):
        for name in ("tau_o", "tau_gamma", "tau_iou"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")


@dataclass
class CurveSet:
    open: list = field(default_factory=list)
    closed: list = field(default_factory=list)

    @property
    def curves(self) -> list:
        return [p.curve for p in self.open] + [p.circle for p in self.closed]

    def __len__(self) -> int:
        return len(self.open) + len(self.closed)


def _as_set(idx) -> set:
    if isinstance(idx, (set, frozenset)):
        return set(idx)
    return set(np.asarray(idx).reshape(-1).tolist())


def overlap(a, b) -> float:
    A, B = _as_set(a), _as_set(b)
    if not A or not B:
        raise EmptySet("overlap needs non-empty index sets")
    inter = len(A & B)
    return max(inter / len(A), inter / len(B))


def iou(a, b) -> float:
    A, B = _as_set(a), _as_set(b)
    union = len(A | B)
    if union == 0:
        raise EmptySet("iou needs at least one non-empty set")
    return len(A & B) / union


def select_open(proposals: Sequence[OpenProposal], cfg: SelectionConfig = SelectionConfig()) -> list[OpenProposal]:
    """Greedy by member count (ties: lower residual, then pair index); drop anything overlapping a keeper by more than tau_o."""
    order = sorted(proposals, key=lambda p: (-len(p.members), p.fit_residual, p.pair.index))
    kept: list[OpenProposal] = []
    for p in order:
        if all(overlap(p.members, q.members) <= cfg.tau_o for q in kept):
            kept.append(p)
    kept.sort(key=lambda p: p.pair.index)
    return kept


def _components(n: int, edges) -> list[list[int]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups)]


def select_closed(proposals: Sequence[ClosedProposal], cfg: SelectionConfig = SelectionConfig(),
                  samples: int = 64) -> list[ClosedProposal]:
    """Confidence filter, single-linkage IoU clustering, best member per cluster.

    The kept proposal's circle is then swapped for whichever circle in its
    cluster lies closest (Chamfer) to the kept member points.
    """
    live = [p for p in proposals if p.confidence >= cfg.tau_gamma]
    n = len(live)
    sets = [_as_set(p.members) for p in live]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            union = len(sets[i] | sets[j])
            if union and len(sets[i] & sets[j]) / union > cfg.tau_iou:
                edges.append((i, j))
    out = []
    for comp in _components(n, edges):
        best = min(comp, key=lambda i: (-live[i].confidence, -len(live[i].members), live[i].seed))
        keep = live[best]
        if len(comp) > 1:
            target = keep.member_points
            scored = [(chamfer_distance(canonical_samples(live[i].circle, samples), target), live[i].seed, i)
                      for i in comp]
            _, _, winner = min(scored)
            if winner != best:
                keep = dataclasses.replace(keep, circle=live[winner].circle)
        out.append(keep)
    out.sort(key=lambda p: p.seed)
    return out


def select(open_props: Sequence[OpenProposal], closed_props: Sequence[ClosedProposal],
           cfg: SelectionConfig = SelectionConfig()) -> CurveSet:
    return CurveSet(select_open(open_props, cfg), select_closed(closed_props, cfg))
