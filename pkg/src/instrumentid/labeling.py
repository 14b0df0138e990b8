"""From per-time activation confidences to per-clip binary labels.

Covers the full labeling chain: smoothing the confidence curves, thresholding
their per-clip maxima, collapsing the raw instrument vocabulary into the final
class set, and the track-level stratified train/test split.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

OTHER_CLASS = "OTHER"
DEFAULT_WINDOW_SECONDS = 0.1
DEFAULT_THRESHOLD = 0.5
DEFAULT_MIN_SONGS = 20


@dataclass
class ActivationTable:
    """Time-indexed activation confidences for one track.

    ``conf`` is ``[time_steps, len(columns)]`` with values in [0, 1]; the time
    grid must be strictly increasing with a uniform step.
    """

    track_id: str
    times: np.ndarray
    columns: list[str]
    conf: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.conf = np.asarray(self.conf, dtype=np.float64)
        if self.times.ndim != 1 or len(self.times) < 2:
            raise ValueError(f"need at least 2 time steps, got {self.times.shape}")
        if self.conf.shape != (len(self.times), len(self.columns)):
            raise ValueError(
                f"conf shape {self.conf.shape} does not match "
                f"{len(self.times)} times x {len(self.columns)} instruments"
            )
        diffs = np.diff(self.times)
        if (diffs <= 0).any():
            raise ValueError(f"times not strictly increasing in track {self.track_id}")
        step = diffs[0]
        if np.abs(diffs - step).max() > 1e-9:
            raise ValueError(f"non-uniform time step in track {self.track_id}")
        if self.conf.min() < -1e-9 or self.conf.max() > 1.0 + 1e-9:
            raise ValueError(f"confidence values outside [0, 1] in track {self.track_id}")
        self.conf = np.clip(self.conf, 0.0, 1.0)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])


def parse_activation_csv(text: str, track_id: str) -> ActivationTable:
    """Parse the "time,<instrument>,..." comma-separated annotation layout."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty activation file for track {track_id}")
    header = [c.strip() for c in lines[0].split(",")]
    if header[0].lower() != "time" or len(header) < 2:
        raise ValueError(f"bad activation header {lines[0]!r} in track {track_id}")
    columns = header[1:]
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ValueError(f"row with {len(cells)} cells, expected {len(header)}: {ln!r}")
        rows.append([float(c) for c in cells])
    arr = np.asarray(rows, dtype=np.float64)
    return ActivationTable(track_id, arr[:, 0], columns, arr[:, 1:])


def window_samples(step_seconds: float, window_seconds: float) -> int:
    """Number of samples covered by the smoothing window; must be >= 1 step."""
    if step_seconds <= 0:
        raise ValueError(f"time step must be positive, got {step_seconds}")
    w = int(round(window_seconds / step_seconds))
    if w < 1:
        raise ValueError(
            f"window of {window_seconds}s shorter than one {step_seconds}s time step"
        )
    return w


def moving_average(values, step_seconds: float, window_seconds: float = DEFAULT_WINDOW_SECONDS):
    """Centered moving average with edge windows truncated to available samples.

    The window spans ``w = round(window_seconds / step_seconds)`` samples,
    covering indices ``[i - (w-1)//2, i + w//2]``. Works on a 1-D series or
    column-wise on a ``[time, instruments]`` matrix.
    """
    values = np.asarray(values, dtype=np.float64)
    w = window_samples(step_seconds, window_seconds)
    if w == 1:
        return values.copy()
    n = values.shape[0]
    left = (w - 1) // 2
    right = w // 2
    csum = np.concatenate([np.zeros((1,) + values.shape[1:]), np.cumsum(values, axis=0)])
    lo = np.clip(np.arange(n) - left, 0, n)
    hi = np.clip(np.arange(n) + right + 1, 0, n)
    sums = csum[hi] - csum[lo]
    counts = (hi - lo).reshape((n,) + (1,) * (values.ndim - 1))
    return sums / counts


def clip_label(table: ActivationTable, clip_start: float, clip_end: float,
               threshold: float = DEFAULT_THRESHOLD,
               window_seconds: float = DEFAULT_WINDOW_SECONDS) -> np.ndarray:
    """Binary activity per instrument: max of the smoothed confidence >= threshold.

    The maximum runs over annotation samples with time in
    ``[clip_start, clip_end)``. Clips outside the annotated range (beyond one
    time step of slack at either end) are rejected.
    """
    if clip_end <= clip_start:
        raise ValueError(f"empty clip interval [{clip_start}, {clip_end})")
    step = table.step
    if clip_start < table.times[0] - step or clip_end > table.times[-1] + step:
        raise ValueError(
            f"clip [{clip_start}, {clip_end}) outside annotation range "
            f"[{table.times[0]}, {table.times[-1]}] of track {table.track_id}"
        )
    mask = (table.times >= clip_start) & (table.times < clip_end)
    if not mask.any():
        raise ValueError(
            f"no annotation samples inside clip [{clip_start}, {clip_end}) "
            f"of track {table.track_id}"
        )
    smoothed = moving_average(table.conf, step, window_seconds)
    return (smoothed[mask].max(axis=0) >= threshold).astype(np.uint8)


@dataclass
class Taxonomy:
    """Two-level instrument vocabulary: raw name -> category -> final class.

    Raw names missing from the map pass through as their own category, which
    then lands in OTHER unless it was kept. ``classes`` is the ordered final
    class list; OTHER is always last.
    """

    raw_to_category: dict
    category_to_class: dict
    classes: list

    def category_of(self, raw_name: str) -> str:
        return self.raw_to_category.get(raw_name, raw_name)

    def class_of(self, raw_name: str) -> str:
        return self.category_to_class.get(self.category_of(raw_name), OTHER_CLASS)

    def class_index(self, name: str) -> int:
        return self.classes.index(name)


def build_taxonomy(track_instruments: dict, raw_to_category: dict,
                   min_songs: int = DEFAULT_MIN_SONGS) -> Taxonomy:
    """Collapse categories that appear in fewer than ``min_songs`` tracks.

    ``track_instruments`` maps track id -> set of raw instrument names present
    in that track. A category survives iff it appears in at least
    ``min_songs`` distinct tracks; everything else maps to OTHER. Kept
    categories are ordered alphabetically, OTHER last.
    """
    if min_songs < 1:
        raise ValueError(f"min_songs must be >= 1, got {min_songs}")
    counts: dict[str, int] = {}
    for raws in track_instruments.values():
        cats = {raw_to_category.get(r, r) for r in raws}
        for c in cats:
            counts[c] = counts.get(c, 0) + 1
    kept = sorted(c for c, n in counts.items() if n >= min_songs and c != OTHER_CLASS)
    category_to_class = {c: (c if c in kept else OTHER_CLASS) for c in counts}
    return Taxonomy(dict(raw_to_category), category_to_class, kept + [OTHER_CLASS])


def collapse_labels(raw_bits, raw_names: list, taxonomy: Taxonomy) -> np.ndarray:
    """OR the raw instrument bits into the final class vector."""
    raw_bits = np.asarray(raw_bits)
    if raw_bits.shape != (len(raw_names),):
        raise ValueError(f"bit vector shape {raw_bits.shape} != {len(raw_names)} raw names")
    out = np.zeros(len(taxonomy.classes), dtype=np.uint8)
    for bit, name in zip(raw_bits, raw_names):
        if bit:
            out[taxonomy.class_index(taxonomy.class_of(name))] = 1
    return out


def load_category_map(path) -> dict:
    """Read "rawName<TAB>category" lines; '#' lines are comments."""
    mapping = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'name<TAB>category', got {line!r}")
        src, dst = parts[0].strip(), parts[1].strip()
        if src in mapping and mapping[src] != dst:
            raise ValueError(f"{path}:{lineno}: conflicting mapping for {src!r}")
        mapping[src] = dst
    return mapping


def write_taxonomy(path, taxonomy: Taxonomy) -> None:
    """Write the resolved two-level map, one mapping per line."""
    lines = ["# classes: " + ",".join(taxonomy.classes)]
    for raw in sorted(taxonomy.raw_to_category):
        lines.append(f"{raw}\t{taxonomy.raw_to_category[raw]}")
    for cat in sorted(taxonomy.category_to_class):
        lines.append(f"{cat}\t{taxonomy.category_to_class[cat]}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class SplitResult:
    """Disjoint track-level split with per-class positive counts."""

    train_ids: list
    test_ids: list
    label_coverage: np.ndarray  # [2, n_labels]: row 0 train, row 1 test


def stratified_split(track_labels: dict, test_fraction: float = 0.2,
                     seed: int = 0) -> SplitResult:
    """Greedy iterative stratification of tracks into train/test sides.

    Repeatedly takes the label with the fewest remaining positive tracks and
    assigns its tracks one by one to the side with the larger remaining
    per-label quota (ties: larger overall quota, then a seeded coin flip).
    When a track is the last remaining positive for some label that one side
    still lacks entirely, it is forced to that side, so every label with at
    least two positive tracks ends up represented on both sides.
    """
    if not track_labels:
        raise ValueError("empty track set")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test fraction must be in (0, 1), got {test_fraction}")
    ids = sorted(track_labels)
    labels = np.asarray([np.asarray(track_labels[t]).ravel() for t in ids])
    if labels.ndim != 2:
        raise ValueError("track label vectors must share one length")
    n_tracks, n_labels = labels.shape
    rng = np.random.default_rng(seed)

    fractions = np.array([1.0 - test_fraction, test_fraction])  # train, test
    totals = labels.sum(axis=0).astype(np.float64)
    desired_label = fractions[:, None] * totals[None, :]  # [2, n_labels]
    desired_total = fractions * n_tracks
    assigned_count = np.zeros((2, n_labels), dtype=np.int64)
    remaining = totals.astype(np.int64).copy()  # unassigned positives per label
    side_of = np.full(n_tracks, -1, dtype=np.int64)

    def choose_side(track: int, focus_label: int) -> int:
        forced = set()
        for l in np.nonzero(labels[track])[0]:
            if totals[l] >= 2 and remaining[l] == 1:
                for s in (0, 1):
                    if assigned_count[s, l] == 0:
                        forced.add(s)
        if len(forced) == 1:
            return forced.pop()
        q = desired_label[:, focus_label]
        if q[0] != q[1]:
            return int(np.argmax(q))
        if desired_total[0] != desired_total[1]:
            return int(np.argmax(desired_total))
        return int(rng.integers(2))

    def assign(track: int, side: int) -> None:
        side_of[track] = side
        for l in np.nonzero(labels[track])[0]:
            desired_label[side, l] -= 1.0
            assigned_count[side, l] += 1
            remaining[l] -= 1
        desired_total[side] -= 1.0

    while True:
        candidates = [l for l in range(n_labels) if remaining[l] > 0]
        if not candidates:
            break
        focus = min(candidates, key=lambda l: (remaining[l], l))
        for track in range(n_tracks):
            if side_of[track] < 0 and labels[track, focus]:
                assign(track, choose_side(track, focus))

    for track in range(n_tracks):  # leftovers: all-zero label vectors
        if side_of[track] < 0:
            if desired_total[0] != desired_total[1]:
                side = int(np.argmax(desired_total))
            else:
                side = int(rng.integers(2))
            assign(track, side)

    train_ids = [ids[i] for i in range(n_tracks) if side_of[i] == 0]
    test_ids = [ids[i] for i in range(n_tracks) if side_of[i] == 1]
    return SplitResult(train_ids, test_ids, assigned_count)


def write_split_file(path, track_ids) -> None:
    Path(path).write_text("".join(f"{t}\n" for t in track_ids))


def read_split_file(path) -> list:
    return [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
