"""Command-line entry point: replay, evaluation, synthesis, inspection."""
from __future__ import annotations

import json
import logging
import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import cluster as cl
from . import monitor as mon
from .cloud import export_depth_png, load_cloud, render_depth_image
from .detect import ClassLabel, evaluate_detections, load_detections
from .errors import LiftguardError
from .geometry import WorldPoint, load_calibration
from .sync import load_manifest, pair_streams
from .synth import generate_lift, generate_scene, load_scene_spec

log = logging.getLogger("liftguard")


def _setup_logging():
    level = os.environ.get("LIFTGUARD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@click.group()
def main():
    """Crane-lifting safety monitoring over replayed camera/LiDAR data."""
    _setup_logging()


def _fail(msg):
    click.echo(f"error: {msg}", err=True)
    sys.exit(1)


def _load_or_fail(loader, path, kind):
    try:
        return loader(path)
    except FileNotFoundError:
        _fail(f"{kind} file not found: {path}")
    except (LiftguardError, ValueError, KeyError) as e:
        _fail(f"cannot parse {kind} file {path}: {e}")


@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--calib", required=True, type=click.Path())
@click.option("--config", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default=None, help="Event log path (NDJSON).")
@click.option("--summary", "summary_path", type=click.Path(), default=None)
def replay(manifest, calib, config, out, summary_path):
    """Run the full pipeline over a replay manifest.

    Exits 0 on a clean run, 2 if any alarm was entered, 1 on input errors.
    """
    t0 = time.monotonic()
    calibration = _load_or_fail(load_calibration, calib, "calibration")
    cfg = mon.PipelineConfig.load(config) if config else mon.PipelineConfig()
    entries = _load_or_fail(load_manifest, manifest, "manifest")
    base = Path(manifest).parent

    images = [(e.timestamp, load_detections(base / e.detections_file)) for e in entries]
    clouds = [(e.cloud_timestamp, load_cloud(base / e.cloud_file, e.cloud_timestamp))
              for e in entries]
    pairing = pair_streams(images, clouds, cfg.sync_tolerance)

    state = mon.AlarmState()
    records = []
    verdicts = []
    track = []
    alarms_raised = 0
    intruder_frames = 0
    for pair in pairing.pairs:
        verdict = mon.process_frame(pair, calibration, cfg)
        state, commands = mon.alarm_update(state, verdict, pair.image_ts,
                                           n_on=cfg.n_on, n_off=cfg.n_off)
        if verdict.intruders:
            intruder_frames += 1
        if mon.AlarmCommand.AUDIBLE_ON in commands:
            alarms_raised += 1
        if verdict.mic is not None:
            track.append((verdict.timestamp, verdict.mic.position))
        verdicts.append(verdict)
        records.append(mon.verdict_record(verdict, state.mode))
        records.extend(mon.command_record(pair.image_ts, c) for c in commands)

    compliance = None
    if track:
        report = mon.check_333(mon.LiftTrack(tuple(track)), verdicts,
                               hold_tolerance=cfg.hold_tolerance)
        compliance = {
            "clearance": {"passed": report.clearance.passed, "detail": report.clearance.detail},
            "initial_lift": {"passed": report.initial_lift.passed, "detail": report.initial_lift.detail},
            "hold": {"passed": report.hold.passed, "detail": report.hold.detail},
        }

    if out:
        mon.write_event_log(records, out)
    summary = {
        "frames_processed": len(pairing.pairs),
        "pairs_dropped": pairing.dropped_images,
        "intruder_frames": intruder_frames,
        "alarms_raised": alarms_raised,
        "compliance": compliance,
        "wall_time_s": round(time.monotonic() - t0, 3),
    }
    text = json.dumps(summary, indent=1, sort_keys=True)
    if summary_path:
        Path(summary_path).write_text(text)
    click.echo(text)
    sys.exit(2 if alarms_raised else 0)


@main.command("eval-detect")
@click.option("--detections", "det_dir", required=True, type=click.Path())
@click.option("--ground-truth", "gt_dir", required=True, type=click.Path())
@click.option("--iou-thresh", multiple=True, type=float)
@click.option("--format", "fmt", type=click.Choice(["table", "records"]), default="records")
def eval_detect(det_dir, gt_dir, iou_thresh, fmt):
    """Score recorded detections against ground-truth files (same schema)."""
    det_dir, gt_dir = Path(det_dir), Path(gt_dir)
    gt_files = sorted(gt_dir.glob("*.json"))
    if not gt_files:
        _fail(f"no ground-truth files in {gt_dir}")
    frames = []
    for gt_file in gt_files:
        det_file = det_dir / gt_file.name
        if not det_file.exists():
            _fail(f"missing detections for frame {gt_file.name}")
        frames.append((load_detections(det_file), load_detections(gt_file)))
    thresholds = sorted(iou_thresh) if iou_thresh else None
    report = evaluate_detections(frames, thresholds)
    if fmt == "records":
        click.echo(json.dumps(report, indent=1, sort_keys=True))
    else:
        click.echo(f"{'class':<12}{'P':>8}{'R':>8}{'AP50':>8}{'AP50-95':>9}")
        for name, row in report["classes"].items():
            click.echo(f"{name:<12}{row['precision']:>8.3f}{row['recall']:>8.3f}"
                       f"{row['ap50']:>8.3f}{row['ap50_95']:>9.3f}")
        m = report["mean"]
        click.echo(f"{'all':<12}{m['precision']:>8.3f}{m['recall']:>8.3f}"
                   f"{m['ap50']:>8.3f}{m['ap50_95']:>9.3f}")


def _load_pairs_csv(path):
    """CSV rows: class,gx,gy,gz,dx,dy,dz (ground truth then detected)."""
    run = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        label = parts[0].strip()
        g = WorldPoint(*(float(x) for x in parts[1:4]))
        d = WorldPoint(*(float(x) for x in parts[4:7]))
        run.setdefault(label, []).append((d, g))
    return run


@main.command("eval-localize")
@click.option("--run", "run_path", required=True, type=click.Path(),
              help="Event log from replay, or a CSV of coordinate pairs.")
@click.option("--truth", type=click.Path(), default=None,
              help="Ground-truth track (truth.json); unused for CSV input.")
@click.option("--format", "fmt", type=click.Choice(["table", "records"]), default="records")
def eval_localize(run_path, truth, fmt):
    """Distance-error table between detected and true world positions."""
    run_path = Path(run_path)
    if run_path.suffix == ".csv":
        run = _load_pairs_csv(run_path)
    else:
        if truth is None:
            _fail("--truth is required when --run is an event log")
        run = _pairs_from_log(run_path, truth)
    if not run:
        _fail("no localization pairs found")
    report = mon.evaluate_localization(run)
    if fmt == "records":
        click.echo(json.dumps(report, indent=1, sort_keys=True))
    else:
        click.echo(f"{'class':<10}{'n':>5}{'mean (m)':>10}{'max (m)':>10}")
        for name, row in sorted(report.items()):
            click.echo(f"{name:<10}{len(row['errors']):>5}{row['mean']:>10.4f}{row['max']:>10.4f}")


def _pairs_from_log(log_path, truth_path):
    truth_doc = json.loads(Path(truth_path).read_text())
    truth_by_ts = {f["ts"]: f for f in truth_doc["frames"]}
    run = {"mic": [], "human": []}
    for line in Path(log_path).read_text().splitlines():
        rec = json.loads(line)
        if rec.get("type") != "verdict":
            continue
        frame = truth_by_ts.get(rec["ts"])
        if frame is None:
            _fail(f"no ground truth for frame t={rec['ts']}")
        if rec["mic"] is not None and frame["mic"] is not None:
            run["mic"].append((WorldPoint(*rec["mic"]), WorldPoint(*frame["mic"])))
        gt_humans = [WorldPoint(*p) for p in frame["humans"]]
        for h in rec["humans"]:
            det = WorldPoint(*h)
            if not gt_humans:
                continue
            nearest = min(gt_humans, key=lambda g: mon.distance_error(det, g))
            run["human"].append((det, nearest))
    return {k: v for k, v in run.items() if v}


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the spec's seed.")
def synth(spec_path, out, seed):
    """Generate a synthetic replay bundle from a scene/lift spec."""
    try:
        spec, script = load_scene_spec(spec_path)
        if seed is not None:
            from dataclasses import replace

            spec = replace(spec, seed=seed)
        if script is None:
            _fail("spec has no lift section; nothing to replay")
        generate_lift(spec, script, out)
    except FileNotFoundError:
        _fail(f"spec file not found: {spec_path}")
    except LiftguardError as e:
        _fail(str(e))
    click.echo(f"replay bundle written to {out}")


@main.command("depth-image")
@click.option("--cloud", "cloud_path", required=True, type=click.Path())
@click.option("--calib", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
def depth_image(cloud_path, calib, out):
    """Render a cloud to a 16-bit millimeter depth PNG."""
    calibration = _load_or_fail(load_calibration, calib, "calibration")
    cloud = _load_or_fail(load_cloud, cloud_path, "cloud")
    img = render_depth_image(cloud, calibration)
    export_depth_png(img, out)
    click.echo(json.dumps({"populated_pixels": img.populated_count(),
                           "width": img.width, "height": img.height}))


if __name__ == "__main__":
    main()
