"""Command-line entry points: extract-features, propagate, eval, jumpcut-eval, bench-kernel."""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

import click
import numpy as np

from . import io as mio
from .features import extract_handcrafted
from .matching import CSV_HEADER, benchmark
from .metrics import contour_f, jaccard, jumpcut_protocol
from .pipeline import propagate
from .types import Config, FormatError, LabelMask

FRAME_SUFFIXES = (".png", ".pgm", ".jpg", ".jpeg", ".bmp")


def _sorted_files(directory: Path, suffixes) -> list[Path]:
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in suffixes)
    if not files:
        raise click.ClickException(f"no usable files in {directory}")
    return files


def _load_config_file(path) -> dict:
    data = json.loads(Path(path).read_text())
    valid = {f.name for f in fields(Config)}
    unknown = set(data) - valid
    if unknown:
        raise click.ClickException(f"unknown config keys: {sorted(unknown)}")
    return data


def _build_config(config_path, **flag_values) -> Config:
    values = _load_config_file(config_path) if config_path else {}
    values.update({k: v for k, v in flag_values.items() if v is not None})
    return Config(**values)


# flags shared by propagate and jumpcut-eval; short names mirror Config fields
def _config_flags(fn):
    decorators = [
        click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                     help="JSON config file; CLI flags override it."),
        click.option("--k", "top_k", type=int, default=None, help="Top-K matches to average."),
        click.option("--dc", "extrusion_radius", type=float, default=None,
                     help="Outlier-removal extrusion radius, px."),
        click.option("--c1", "fg_update_confidence", type=float, default=None,
                     help="FG update confidence threshold."),
        click.option("--c2", "bg_cutoff", type=float, default=None,
                     help="Background cutoff for fusion."),
        click.option("--erosion", "erosion_radius", type=float, default=None,
                     help="FG-update erosion radius, px."),
        click.option("--softmax-temp", "softmax_temperature", type=float, default=None),
        click.option("--fg-weight", type=float, default=None),
        click.option("--bg-weight", type=float, default=None),
        click.option("--no-outlier-removal", "outlier_removal_enabled", flag_value=False,
                     default=None, help="Disable the temporal outlier filter."),
        click.option("--no-bg-update", "bg_update_enabled", flag_value=False, default=None,
                     help="Freeze the background bank."),
        click.option("--no-fg-update", "fg_update_enabled", flag_value=False, default=None,
                     help="Freeze the foreground bank."),
        click.option("--fg-only", "fg_only_matching", flag_value=True, default=None,
                     help="Match against the FG bank only (ablation)."),
        click.option("--componentwise-filter", "componentwise_outlier_removal", flag_value=True,
                     default=None, help="Remove whole connected components instead of pixels."),
        click.option("--bank-capacity", type=int, default=None,
                     help="Evict oldest online entries beyond this many."),
        click.option("--kernel", "kernel_strategy", type=click.Choice(["naive", "blocked"]),
                     default=None),
        click.option("--threads", type=int, default=None),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def _load_sequence_features(features_dir, frames_dir, cfg: Config):
    """Feature maps plus (when frames are given) the RGB frames for overlays."""
    if (features_dir is None) == (frames_dir is None):
        raise click.ClickException("give exactly one of --features or --frames")
    if features_dir:
        files = _sorted_files(Path(features_dir), (".vmf", ".bin", ".feat"))
        try:
            return [mio.read_feature_file(p) for p in files], None
        except FormatError as exc:
            raise click.ClickException(str(exc))
    files = _sorted_files(Path(frames_dir), FRAME_SUFFIXES)
    frames = [mio.load_frame(p) for p in files]
    maps = [
        extract_handcrafted(f, stride=cfg.stride, include_position=cfg.include_position_channels)
        for f in frames
    ]
    return maps, frames


@click.group()
def main():
    """Propagate a first-frame object mask through a video by feature matching."""


@main.command("extract-features")
@click.option("--frames", "frames_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--stride", type=int, default=8, show_default=True)
@click.option("--cell", type=int, default=8, show_default=True)
@click.option("--no-position", "position", flag_value=False, default=True,
              help="Drop the positional feature channels.")
def extract_features_cmd(frames_dir, out_dir, stride, cell, position):
    """Extract handcrafted features for every frame in a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for path in _sorted_files(Path(frames_dir), FRAME_SUFFIXES):
        fmap = extract_handcrafted(
            mio.load_frame(path), stride=stride, cell=cell, include_position=position
        )
        mio.write_feature_file(fmap, out / (path.stem + ".vmf"))
        click.echo(f"{path.name}: {fmap.height}x{fmap.width}x{fmap.channels}")


@main.command("propagate")
@click.option("--features", "features_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--frames", "frames_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--template", "template_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@_config_flags
def propagate_cmd(features_dir, frames_dir, template_path, out_dir, config_path, **flags):
    """Propagate the template mask through the sequence; write masks, overlays, run.json."""
    cfg = _build_config(config_path, **flags)
    maps, frames = _load_sequence_features(features_dir, frames_dir, cfg)
    template = mio.load_mask(template_path)
    result = propagate(maps, template, cfg)

    out = Path(out_dir)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    for t, mask in enumerate(result.masks, start=1):
        mio.save_mask(mask, out / "masks" / f"{t:05d}.png")
    if frames is not None:
        (out / "overlays").mkdir(exist_ok=True)
        for t, (frame, mask) in enumerate(zip(frames, result.masks), start=1):
            mio.save_overlay(frame, mask, out / "overlays" / f"{t:05d}.png")
    (out / "run.json").write_text(json.dumps(result.log, indent=2, sort_keys=True))
    click.echo(f"wrote {len(result.masks)} masks to {out / 'masks'}")


def _per_frame_scores(pred: LabelMask, gt: LabelMask, tolerance):
    objects = max(gt.object_count, 1)
    js, fs = [], []
    for k in range(1, objects + 1):
        p = LabelMask((pred.labels == k).astype(np.uint8), object_count=1)
        g = LabelMask((gt.labels == k).astype(np.uint8), object_count=1)
        js.append(jaccard(p, g))
        fs.append(contour_f(p, g, tolerance))
    return float(np.mean(js)), float(np.mean(fs))


@main.command("eval")
@click.option("--pred", "pred_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--gt", "gt_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--tolerance", type=float, default=None,
              help="Contour matching radius, px (default: 0.5% of the diagonal).")
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_cmd(pred_dir, gt_dir, tolerance, out_path):
    """Score predicted masks against ground truth (mean IoU and contour F)."""
    pred_files = _sorted_files(Path(pred_dir), (".png", ".pgm"))
    gt_files = _sorted_files(Path(gt_dir), (".png", ".pgm"))
    if len(pred_files) != len(gt_files):
        raise click.ClickException(
            f"{len(pred_files)} predictions vs {len(gt_files)} ground-truth masks"
        )
    per_frame = []
    for pf, gf in zip(pred_files, gt_files):
        j, f = _per_frame_scores(mio.load_mask(pf), mio.load_mask(gf), tolerance)
        per_frame.append({"pred": pf.name, "gt": gf.name, "jaccard": j, "contour_f": f})
    report = {
        "miou": float(np.mean([e["jaccard"] for e in per_frame])),
        "f": float(np.mean([e["contour_f"] for e in per_frame])),
        "per_frame": per_frame,
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(text)
    click.echo(text)


@main.command("jumpcut-eval")
@click.option("--features", "features_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--frames", "frames_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--gt", "gt_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--keyframes", default="0,16,32,48,64,80,96", show_default=True,
              help="Comma-separated 0-based keyframe indices.")
@click.option("--distance", type=int, default=16, show_default=True,
              help="Transfer distance d in frames.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@_config_flags
def jumpcut_cmd(features_dir, frames_dir, gt_dir, keyframes, distance, out_path,
                config_path, **flags):
    """Keyframe transfer-error protocol (ground truth indexed by frame position)."""
    cfg = _build_config(config_path, **flags)
    maps, _ = _load_sequence_features(features_dir, frames_dir, cfg)
    gt_files = _sorted_files(Path(gt_dir), (".png", ".pgm"))
    if len(gt_files) != len(maps):
        raise click.ClickException(f"{len(gt_files)} gt masks vs {len(maps)} frames")
    gt_masks = {i: mio.load_mask(p) for i, p in enumerate(gt_files)}
    frames_idx = [int(s) for s in keyframes.split(",") if s.strip()]
    report = jumpcut_protocol(maps, gt_masks, cfg, frames_idx, distance)
    text = json.dumps(report, indent=2, sort_keys=True)
    if out_path:
        Path(out_path).write_text(text)
    click.echo(text)


@main.command("bench-kernel")
@click.option("--h", "grid_h", type=int, default=60, show_default=True)
@click.option("--w", "grid_w", type=int, default=107, show_default=True)
@click.option("--c", "channels", type=int, default=256, show_default=True)
@click.option("--bank", "bank_size", type=int, default=6420, show_default=True)
@click.option("--k", "top_k", type=int, default=20, show_default=True)
@click.option("--strategy", type=click.Choice(["naive", "blocked"]), default="blocked",
              show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--repeats", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--header/--no-header", default=False, help="Print the CSV header first.")
def bench_cmd(grid_h, grid_w, channels, bank_size, top_k, strategy, threads, repeats, seed, header):
    """Time one soft-match configuration; emits one CSV row on stdout."""
    result = benchmark(grid_h, grid_w, channels, bank_size, top_k, strategy, threads,
                       repeats=repeats, seed=seed)
    if header:
        click.echo(CSV_HEADER)
    click.echo(result.csv_row())
    click.echo(f"# {result.gflops:.1f} GFLOP/s", err=True)


if __name__ == "__main__":
    main()
