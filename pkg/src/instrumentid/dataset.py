"""Dataset preparation: taxonomy, track split, clip manifests."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import CLIP_SAMPLES, SAMPLE_RATE, parse_wav
from .config import RunConfig
from .labeling import (
    build_taxonomy, clip_label, collapse_labels, load_category_map,
    moving_average, parse_activation_csv, stratified_split,
    write_split_file, write_taxonomy,
)

MANIFEST_HEADER = "# instrument clip manifest v1"


@dataclass
class ManifestRow:
    track_id: str
    clip_index: int
    source_path: str
    byte_offset: int
    labels: np.ndarray


def write_manifest(path, rows, classes) -> None:
    """Tab-separated clip records with the class list pinned in the header."""
    lines = [
        MANIFEST_HEADER,
        "# classes: " + ",".join(classes),
        "# columns: track_id\tclip_index\tsource_path\tbyte_offset\t" +
        "\t".join(f"label:{c}" for c in classes),
    ]
    for row in rows:
        bits = "\t".join(str(int(b)) for b in row.labels)
        lines.append(f"{row.track_id}\t{row.clip_index}\t{row.source_path}\t"
                     f"{row.byte_offset}\t{bits}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path):
    """:returns: ``(rows, classes)``"""
    classes = None
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.startswith("#"):
            if line.startswith("# classes:"):
                classes = [c for c in line.split(":", 1)[1].strip().split(",") if c]
            continue
        if not line.strip():
            continue
        parts = line.split("\t")
        if classes is None:
            raise ValueError(f"{path}: data row before '# classes:' header")
        if len(parts) != 4 + len(classes):
            raise ValueError(
                f"{path}:{lineno}: expected {4 + len(classes)} columns, got {len(parts)}"
            )
        labels = np.array([int(b) for b in parts[4:]], dtype=np.uint8)
        if not np.isin(labels, (0, 1)).all():
            raise ValueError(f"{path}:{lineno}: label bits must be 0/1")
        rows.append(ManifestRow(parts[0], int(parts[1]), parts[2], int(parts[3]), labels))
    if classes is None:
        raise ValueError(f"{path}: missing '# classes:' header")
    return rows, classes


def find_activation_file(activation_dir, track_id: str):
    for name in (f"{track_id}_ACTIVATION_CONF.lab", f"{track_id}.lab", f"{track_id}.csv"):
        candidate = Path(activation_dir) / name
        if candidate.exists():
            return candidate
    return None


def track_instrument_presence(table, threshold: float, window_seconds: float) -> set:
    """Raw instruments whose smoothed confidence ever reaches the threshold."""
    smoothed = moving_average(table.conf, table.step, window_seconds)
    peaks = smoothed.max(axis=0)
    return {name for name, peak in zip(table.columns, peaks) if peak >= threshold}


def prepare_dataset(config: RunConfig, log=print):
    """Build taxonomy, split tracks, slice and label clips, write manifests.

    Tracks without an activation file are reported and skipped. Clips not
    covered by the annotation range are skipped likewise. Returns the
    ``(train_manifest, test_manifest)`` paths.
    """
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    wavs = sorted(Path(config.audio_dir).glob("*.wav"))
    if not wavs:
        raise FileNotFoundError(f"no .wav files in {config.audio_dir}")

    raw_map = load_category_map(config.taxonomy_file)
    tables = {}
    track_paths = {}
    for wav in wavs:
        track_id = wav.stem
        act = find_activation_file(config.activation_dir, track_id)
        if act is None:
            log(f"skip track={track_id} reason=missing-activation-file")
            continue
        tables[track_id] = parse_activation_csv(act.read_text(), track_id)
        track_paths[track_id] = wav
    if not tables:
        raise FileNotFoundError(f"no track has an activation file in {config.activation_dir}")

    presence = {
        tid: track_instrument_presence(t, config.activation_threshold, config.activation_window)
        for tid, t in tables.items()
    }
    taxonomy = build_taxonomy(presence, raw_map, config.min_songs)
    write_taxonomy(out / "taxonomy_resolved.tsv", taxonomy)
    log(f"taxonomy classes={len(taxonomy.classes)}")

    track_classes = {
        tid: collapse_labels(np.ones(len(raws), dtype=np.uint8), sorted(raws), taxonomy)
        if raws else np.zeros(len(taxonomy.classes), dtype=np.uint8)
        for tid, raws in presence.items()
    }
    split = stratified_split(track_classes, config.test_fraction, config.split_seed)
    write_split_file(out / "split_train.txt", split.train_ids)
    write_split_file(out / "split_test.txt", split.test_ids)
    log(f"split train_tracks={len(split.train_ids)} test_tracks={len(split.test_ids)}")

    def rows_for(track_ids):
        rows = []
        for tid in track_ids:
            wav = track_paths[tid]
            buffer, layout = parse_wav(wav.read_bytes())
            if buffer.sample_rate != SAMPLE_RATE:
                raise ValueError(f"track {tid}: sample rate {buffer.sample_rate} != {SAMPLE_RATE}")
            table = tables[tid]
            n_clips = len(buffer.samples) // CLIP_SAMPLES
            for i in range(n_clips):
                try:
                    raw_bits = clip_label(table, float(i), float(i + 1),
                                          config.activation_threshold,
                                          config.activation_window)
                except ValueError:
                    log(f"skip clip track={tid} clip={i} reason=outside-annotation-range")
                    continue
                labels = collapse_labels(raw_bits, table.columns, taxonomy)
                offset = layout.data_offset + i * CLIP_SAMPLES * layout.block_align
                rows.append(ManifestRow(tid, i, str(wav), offset, labels))
        return rows

    train_rows = rows_for(split.train_ids)
    test_rows = rows_for(split.test_ids)
    write_manifest(config.train_manifest(), train_rows, taxonomy.classes)
    write_manifest(config.test_manifest(), test_rows, taxonomy.classes)
    log(f"manifests train_clips={len(train_rows)} test_clips={len(test_rows)}")
    return config.train_manifest(), config.test_manifest()
