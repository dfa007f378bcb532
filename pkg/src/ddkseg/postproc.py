"""Frame labels, segments, and the frame-to-segment conversion rules.

Class indices are fixed package-wide: OTHER=0, VOT=1, VOWEL=2. Argmax ties
therefore resolve toward OTHER first, then VOT.

Conversion applies three rules in order: group equal-labeled frames into
maximal runs; relabel too-short VOT (< 5 ms) and vowel (< 20 ms) runs as
OTHER; then absorb short OTHER gaps (< 20 ms) sitting between two VOT
segments into a single VOT segment, repeated to a fixpoint.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, LabelError

OTHER, VOT, VOWEL = 0, 1, 2
LABEL_NAMES = {OTHER: "other", VOT: "vot", VOWEL: "vowel"}
LABEL_IDS = {name: idx for idx, name in LABEL_NAMES.items()}

MIN_VOT_MS = 5
MIN_VOWEL_MS = 20
MAX_VOT_GAP_MS = 20

SEGMENT_CSV_HEADER = ["onset_ms", "offset_ms", "label"]


@dataclass(frozen=True, order=True)
class Segment:
    onset_ms: int
    offset_ms: int
    label: int

    def __post_init__(self):
        if self.label not in LABEL_NAMES:
            raise LabelError(f"unknown label id {self.label}")
        if not 0 <= self.onset_ms < self.offset_ms:
            raise ValueError(f"need 0 <= onset < offset, got [{self.onset_ms}, {self.offset_ms})")

    @property
    def duration_ms(self) -> int:
        return self.offset_ms - self.onset_ms

    @property
    def name(self) -> str:
        return LABEL_NAMES[self.label]


def validate_sequence(segments: list[Segment]) -> None:
    """Check ordering and non-overlap (raises ValueError)."""
    for a, b in zip(segments, segments[1:]):
        if b.onset_ms < a.offset_ms:
            raise ValueError(f"segments overlap or are unordered: {a} then {b}")


def group_frames(frames: np.ndarray) -> list[Segment]:
    """Run-length encode a 1 ms label sequence into maximal segments."""
    frames = np.asarray(frames)
    if frames.size == 0:
        return []
    change = np.flatnonzero(np.diff(frames)) + 1
    bounds = np.concatenate([[0], change, [len(frames)]])
    return [Segment(int(lo), int(hi), int(frames[lo])) for lo, hi in zip(bounds[:-1], bounds[1:])]


def rasterize(segments: list[Segment], total_ms: int) -> np.ndarray:
    """Inverse of group_frames: paint segments onto a label array.

    Frames not covered by any segment default to OTHER, so sequences that
    carry only speech segments (e.g. loaded from CSV) rasterize correctly
    against the known audio duration.
    """
    frames = np.full(total_ms, OTHER, dtype=np.int8)
    for seg in segments:
        frames[seg.onset_ms:min(seg.offset_ms, total_ms)] = seg.label
    return frames


def _merge_adjacent(segments: list[Segment]) -> list[Segment]:
    out: list[Segment] = []
    for seg in segments:
        if out and out[-1].label == seg.label and out[-1].offset_ms == seg.onset_ms:
            out[-1] = Segment(out[-1].onset_ms, seg.offset_ms, seg.label)
        else:
            out.append(seg)
    return out


def apply_min_durations(segments: list[Segment]) -> list[Segment]:
    """Relabel sub-threshold VOT/vowel segments as OTHER and re-merge runs."""
    relabeled = [
        Segment(s.onset_ms, s.offset_ms, OTHER)
        if (s.label == VOT and s.duration_ms < MIN_VOT_MS)
        or (s.label == VOWEL and s.duration_ms < MIN_VOWEL_MS)
        else s
        for s in segments
    ]
    return _merge_adjacent(relabeled)


def merge_vot_gaps(segments: list[Segment]) -> list[Segment]:
    """Collapse (VOT, short OTHER, VOT) triples into one VOT, to a fixpoint."""
    segs = list(segments)
    changed = True
    while changed:
        changed = False
        out: list[Segment] = []
        i = 0
        while i < len(segs):
            if (i + 2 < len(segs)
                    and segs[i].label == VOT
                    and segs[i + 1].label == OTHER
                    and segs[i + 1].duration_ms < MAX_VOT_GAP_MS
                    and segs[i + 1].onset_ms == segs[i].offset_ms
                    and segs[i + 2].label == VOT
                    and segs[i + 2].onset_ms == segs[i + 1].offset_ms):
                out.append(Segment(segs[i].onset_ms, segs[i + 2].offset_ms, VOT))
                changed = True
                i += 3
            else:
                out.append(segs[i])
                i += 1
        segs = _merge_adjacent(out)
    return segs


def postprocess(frames: np.ndarray) -> list[Segment]:
    """Frame labels -> segments via grouping, minimum durations, gap merging."""
    return merge_vot_gaps(apply_min_durations(group_frames(frames)))


def speech_segments(segments: list[Segment]) -> list[Segment]:
    """Drop OTHER segments, keeping VOT and vowel intervals only."""
    return [s for s in segments if s.label != OTHER]


def write_segments_csv(path, segments: list[Segment], include_other: bool = False) -> None:
    rows = segments if include_other else speech_segments(segments)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SEGMENT_CSV_HEADER)
        for seg in rows:
            writer.writerow([seg.onset_ms, seg.offset_ms, seg.name])


def read_segments_csv(path) -> list[Segment]:
    """Load a segment CSV, validating the label vocabulary and ordering."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SEGMENT_CSV_HEADER:
            raise DataError(f"{path}: expected header {','.join(SEGMENT_CSV_HEADER)}")
        segments = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 columns")
            try:
                onset, offset = int(row[0]), int(row[1])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-integer boundary") from exc
            name = row[2].strip().lower()
            if name not in LABEL_IDS:
                raise DataError(f"{path}:{lineno}: unknown label {row[2]!r}")
            try:
                segments.append(Segment(onset, offset, LABEL_IDS[name]))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    try:
        validate_sequence(segments)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return segments


def write_textgrid(path, segments: list[Segment], total_ms: int, tier_name: str = "segments") -> None:
    """Praat-style interval tier export for inspection in annotation tools."""
    total_s = total_ms / 1000.0
    intervals = []
    cursor = 0
    for seg in speech_segments(segments):
        if seg.onset_ms > cursor:
            intervals.append((cursor / 1000.0, seg.onset_ms / 1000.0, ""))
        intervals.append((seg.onset_ms / 1000.0, seg.offset_ms / 1000.0, seg.name))
        cursor = seg.offset_ms
    if cursor < total_ms:
        intervals.append((cursor / 1000.0, total_s, ""))
    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        "xmin = 0",
        f"xmax = {total_s:.3f}",
        "tiers? <exists>",
        "size = 1",
        "item []:",
        "    item [1]:",
        '        class = "IntervalTier"',
        f'        name = "{tier_name}"',
        "        xmin = 0",
        f"        xmax = {total_s:.3f}",
        f"        intervals: size = {len(intervals)}",
    ]
    for k, (lo, hi, text) in enumerate(intervals, start=1):
        lines += [
            f"        intervals [{k}]:",
            f"            xmin = {lo:.3f}",
            f"            xmax = {hi:.3f}",
            f'            text = "{text}"',
        ]
    Path(path).write_text("\n".join(lines) + "\n")
