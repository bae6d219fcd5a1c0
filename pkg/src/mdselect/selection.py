"""Rank scored sentences, split into segments, and draw seeded samples.

The workflow mirrors the standard recipe: sort by score, split into S
contiguous segments (index S-1 holds the highest values under the default
ascending order), then Fisher-Yates sample n ids per seed from one segment.
Every run is captured in an immutable manifest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import MdsError
from .metrics import ScoreTable
from .rng import ALGORITHM_ID, Xoshiro256StarStar

MISSING_POLICIES = ("exclude", "rank_lowest", "rank_highest")

# Highest segment holds the highest scores; methods where low scores mark
# valuable data default to segment 0 instead.
HIGH_SEGMENT_METHODS = ("el2n", "avg_entropy", "perents")
LOW_SEGMENT_METHODS = ("selfsup", "qe")


@dataclass
class SelectionManifest:
    method: str
    params: dict
    direction: str
    missing_policy: str
    segment_count: int
    boundaries: list              # [start, end) rank ranges, one per segment
    segment_index: int
    sample_size: int
    seed: int
    prng: str
    selected_ids: list
    unscored_ids: list
    segment_stats: list           # per segment: {count, min, max, mean}
    bundle_digest: str = ""
    tool_version: str = __version__

    def to_json(self) -> str:
        return json.dumps(self.__dict__, ensure_ascii=False, indent=2) + "\n"

    @property
    def filename(self) -> str:
        return f"{self.method}_{self.segment_count}seg_{self.segment_index}_{self.seed}.manifest"


def rank(scores: ScoreTable, direction: str = "ascending",
         missing_policy: str = "exclude") -> tuple[list[str], list[str]]:
    """Stable sort by value; ties keep corpus order.  Returns (ranked, unscored)."""
    if direction not in ("ascending", "descending"):
        raise MdsError(f"unknown direction '{direction}'")
    if missing_policy not in MISSING_POLICIES:
        raise MdsError(f"unknown missing policy '{missing_policy}'")

    unscored = [rid for rid, v in scores.entries.items() if v is None]
    if missing_policy == "exclude":
        items = [(rid, v) for rid, v in scores.entries.items() if v is not None]
        if not items:
            raise MdsError("no scored entries to rank")
    else:
        fill = -math.inf if missing_policy == "rank_lowest" else math.inf
        items = [(rid, v if v is not None else fill)
                 for rid, v in scores.entries.items()]
        unscored = []
    sign = 1.0 if direction == "ascending" else -1.0
    ranked = [rid for rid, _ in sorted(items, key=lambda kv: sign * kv[1])]
    return ranked, unscored


def segment(ranked: list[str], segment_count: int) -> list[list[str]]:
    """S contiguous runs; the first |ranked| mod S segments get the extra id."""
    n = len(ranked)
    if segment_count == 0:
        raise MdsError("segment count must be >= 1")
    if segment_count > n:
        raise MdsError(f"cannot split {n} ids into {segment_count} segments")
    q, r = divmod(n, segment_count)
    out, pos = [], 0
    for i in range(segment_count):
        size = q + (1 if i < r else 0)
        out.append(ranked[pos:pos + size])
        pos += size
    return out


def sample(segment_ids: list[str], n: int, seed: int) -> list[str]:
    """First min(n, |segment|) ids of a seeded Fisher-Yates shuffle."""
    if n == 0:
        raise MdsError("sample size must be >= 1")
    pool = list(segment_ids)
    Xoshiro256StarStar(seed).shuffle(pool)
    return pool[:min(n, len(pool))]


def default_segment_index(method: str, segment_count: int) -> int:
    return segment_count - 1 if method in HIGH_SEGMENT_METHODS else 0


def select(scores: ScoreTable, segment_count: int, sample_size: int,
           seeds: list[int], segment_index: Optional[int] = None,
           direction: str = "ascending",
           missing_policy: str = "exclude") -> list[SelectionManifest]:
    """One manifest per seed from the chosen (or method-default) segment."""
    if segment_index is not None and not 0 <= segment_index < segment_count:
        raise MdsError(f"segment index {segment_index} out of range for S={segment_count}")
    idx = (segment_index if segment_index is not None
           else default_segment_index(scores.method.name, segment_count))

    ranked, unscored = rank(scores, direction, missing_policy)
    segments = segment(ranked, segment_count)

    boundaries, stats, pos = [], [], 0
    for seg in segments:
        boundaries.append([pos, pos + len(seg)])
        pos += len(seg)
        values = [scores.entries[rid] for rid in seg if scores.entries[rid] is not None]
        stats.append({
            "count": len(seg),
            "min": min(values) if values else None,
            "max": max(values) if values else None,
            "mean": sum(values) / len(values) if values else None,
        })

    manifests = []
    for seed in seeds:
        manifests.append(SelectionManifest(
            method=scores.method.name,
            params=scores.method.params(),
            direction=direction,
            missing_policy=missing_policy,
            segment_count=segment_count,
            boundaries=boundaries,
            segment_index=idx,
            sample_size=sample_size,
            seed=seed,
            prng=ALGORITHM_ID,
            selected_ids=sample(segments[idx], sample_size, seed),
            unscored_ids=unscored,
            segment_stats=stats,
            bundle_digest=scores.bundle_digest,
        ))
    return manifests


def write_manifest(manifest: SelectionManifest, outdir) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / manifest.filename
    path.write_text(manifest.to_json(), encoding="utf-8")
    # companion id list for downstream fine-tuning tools
    ids_path = path.with_suffix(".ids")
    ids_path.write_text("".join(rid + "\n" for rid in manifest.selected_ids),
                        encoding="utf-8")
    return path


def load_manifest(path) -> SelectionManifest:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return SelectionManifest(**obj)
