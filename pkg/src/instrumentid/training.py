"""CNN training pipeline: clip loading, contrast normalization, the SGD loop."""

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import CLIP_SAMPLES, SAMPLE_RATE, decode_wav
from .config import RunConfig
from .metrics import EvalReport, evaluate
from .nn import (
    FULL_INPUT_LENGTH, NUM_CLASSES, REDUCED_INPUT_LENGTH,
    backward, bce_loss, forward, infer_shapes, init_params, param_shapes,
    load_checkpoint, reduced_layers, save_checkpoint, sgd_step, table1_layers,
)

GCN_STD_FLOOR = 1e-8
EVAL_BATCH = 64


def global_contrast_normalize(clip):
    """Per-clip standardization to zero mean, unit variance (guarded divide)."""
    clip = np.asarray(clip)
    x = clip.astype(np.float64)
    centered = x - x.mean()
    std = x.std()
    out = centered / max(std, GCN_STD_FLOOR)
    return out.astype(clip.dtype if clip.dtype.kind == "f" else np.float64)


def architecture(config: RunConfig):
    """Layer specs plus expected input length for the configured variant."""
    if config.reduced:
        return reduced_layers(config.drop_rate), REDUCED_INPUT_LENGTH
    return table1_layers(config.drop_rate), FULL_INPUT_LENGTH


def reduce_clip(samples, input_length: int) -> np.ndarray:
    """Decimate a full one-second clip down to the reduced input length."""
    stride = CLIP_SAMPLES // input_length
    return samples[::stride][:input_length]


@dataclass
class LoadedDataset:
    clips: np.ndarray   # [n, 1, input_length] float32, GCN applied
    labels: np.ndarray  # [n, n_classes] uint8
    ids: list           # "track:clip" strings, manifest order


def iter_raw_clips(rows):
    """Yield the raw one-second clips named by manifest rows, in row order.

    Tracks are decoded once and cached. A clip index past the end of its
    audio file aborts with the offending clip id (manifest/audio mismatch).
    """
    track_cache: dict[str, np.ndarray] = {}
    for row in rows:
        samples = track_cache.get(row.source_path)
        if samples is None:
            buf = decode_wav(Path(row.source_path).read_bytes())
            if buf.sample_rate != SAMPLE_RATE:
                raise ValueError(f"{row.source_path}: sample rate {buf.sample_rate}")
            samples = buf.samples
            track_cache[row.source_path] = samples
        start = row.clip_index * CLIP_SAMPLES
        end = start + CLIP_SAMPLES
        if end > len(samples):
            raise ValueError(
                f"clip {row.track_id}:{row.clip_index} extends past its audio "
                f"({end} > {len(samples)} samples)"
            )
        yield samples[start:end]


def load_dataset(rows, input_length: int) -> LoadedDataset:
    """Decode, decimate if reduced, and contrast-normalize manifest clips."""
    if not rows:
        raise ValueError("empty manifest row list")
    clips = np.empty((len(rows), 1, input_length), dtype=np.float32)
    labels = np.empty((len(rows), len(rows[0].labels)), dtype=np.uint8)
    ids = []
    for i, (row, clip) in enumerate(zip(rows, iter_raw_clips(rows))):
        if input_length != CLIP_SAMPLES:
            clip = reduce_clip(clip, input_length)
        clips[i, 0] = global_contrast_normalize(clip)
        labels[i] = row.labels
        ids.append(f"{row.track_id}:{row.clip_index}")
    return LoadedDataset(clips, labels, ids)


def check_params_match(params, specs, input_length: int) -> None:
    """Reject checkpoints whose tensors do not fit the configured architecture."""
    expected = param_shapes(specs, input_length, 1)
    got = [(w.shape, b.shape) for w, b in zip(params.weights, params.biases)]
    if got != expected:
        raise ValueError(
            f"checkpoint parameter shapes {got} do not match the configured "
            f"architecture {expected}; check the 'reduced' config flag"
        )


def predict_probs(params, specs, clips) -> np.ndarray:
    """Eval-mode network probabilities, batched to bound peak memory."""
    outs = []
    for start in range(0, len(clips), EVAL_BATCH):
        preds, _ = forward(params, specs, clips[start:start + EVAL_BATCH], mode="eval")
        outs.append(preds)
    return np.concatenate(outs)


def evaluate_model(params, specs, data: LoadedDataset, threshold: float) -> EvalReport:
    probs = predict_probs(params, specs, data.clips)
    return evaluate((probs >= threshold).astype(np.uint8), data.labels)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    report: EvalReport | None


def _epoch_rng(seed: int, epoch: int, stream: int):
    return np.random.default_rng(np.random.SeedSequence([seed, epoch, stream]))


def train_model(config: RunConfig, train_data: LoadedDataset,
                test_data: LoadedDataset | None = None,
                resume_from=None, log=print) -> list[EpochStats]:
    """Seeded SGD over shuffled clips; one checkpoint per epoch.

    The shuffle order and dropout stream are derived from (seed, epoch), so
    an interrupted run resumed from its last checkpoint reproduces exactly
    the losses of an uninterrupted one. The best checkpoint by test F-micro
    is tracked as a ``best.ckpt`` symlink; that tracking restarts on resume
    (pre-resume epochs are not reconsidered).
    """
    specs, input_length = architecture(config)
    sgd = config.sgd()
    if train_data.labels.shape[1] != NUM_CLASSES:
        raise ValueError(
            f"manifest has {train_data.labels.shape[1]} classes, network outputs {NUM_CLASSES}"
        )
    infer_shapes(specs, input_length, 1)

    ckpt_dir = config.checkpoint_dir()
    ckpt_dir.mkdir(parents=True, exist_ok=True)

    if resume_from is not None:
        params, saved_sgd, start_epoch = load_checkpoint(resume_from)
        if saved_sgd.seed != sgd.seed:
            log(f"warn resume-seed={saved_sgd.seed} config-seed={sgd.seed}")
        check_params_match(params, specs, input_length)
    else:
        params = init_params(specs, input_length, seed=sgd.seed)
        start_epoch = 0

    n = len(train_data.clips)
    history = []
    best_f_micro = -1.0
    for epoch in range(start_epoch, sgd.epochs):
        order = _epoch_rng(sgd.seed, epoch, 0).permutation(n)
        drop_rng = _epoch_rng(sgd.seed, epoch, 1)
        total_loss = 0.0
        for start in range(0, n, sgd.batch_size):
            idx = order[start:start + sgd.batch_size]
            batch = train_data.clips[idx]
            targets = train_data.labels[idx]
            preds, cache = forward(params, specs, batch, mode="train", rng=drop_rng)
            loss, grad_pred = bce_loss(preds, targets)
            grads = backward(cache, grad_pred)
            params = sgd_step(params, grads, sgd.learning_rate)
            total_loss += float(loss) * len(idx)
        train_loss = total_loss / n

        completed = epoch + 1
        ckpt_path = ckpt_dir / f"epoch_{completed:04d}.ckpt"
        save_checkpoint(ckpt_path, params, sgd, completed)

        report = None
        if test_data is not None and config.eval_each_epoch:
            report = evaluate_model(params, specs, test_data, config.eval_threshold)
            log(f"epoch={completed} train_loss={train_loss:.6f} "
                f"test_f_micro={report.f_micro:.6f} test_accuracy={report.hamming_accuracy:.6f}")
            if report.f_micro > best_f_micro:
                best_f_micro = report.f_micro
                _point_best(ckpt_dir, ckpt_path)
        else:
            log(f"epoch={completed} train_loss={train_loss:.6f}")
            _point_best(ckpt_dir, ckpt_path)
        history.append(EpochStats(completed, train_loss, report))
    return history


def _point_best(ckpt_dir: Path, target: Path) -> None:
    best = ckpt_dir / "best.ckpt"
    if best.is_symlink() or best.exists():
        best.unlink()
    os.symlink(target.name, best)
