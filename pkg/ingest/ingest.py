#!/usr/bin/env python3
"""Video ingestion for the rrpipe respiratory-rate pipeline.

Turns a face video into the pipeline's inputs: detects the initial ROI
(or accepts one explicitly), detects feature points with
goodFeaturesToTrack, tracks them frame to frame with pyramidal
Lucas-Kanade, delegates all transform/ROI geometry to the primary CLI
(`rrpipe track-roi`), and emits the per-frame ROI-mean RGB trace.

Outputs in --out: tracks.csv, roi0.csv, roi_per_frame.csv,
rgb_trace.csv, manifest.json (all in the primary's CSV formats).
"""

import argparse
import csv
import json
import os
import shlex
import shutil
import subprocess
import sys
from pathlib import Path

import cv2
import numpy as np

FLOAT_FMT = "%.9e"

# tracker parameters, recorded in the manifest
GFTT_PARAMS = dict(maxCorners=120, qualityLevel=0.01, minDistance=7, blockSize=7)
# tight termination: loose criteria leave a per-frame bias that
# accumulates through the frame-to-frame transform chain
LK_PARAMS = dict(
    winSize=(21, 21),
    maxLevel=2,
    criteria=(cv2.TERM_CRITERIA_EPS | cv2.TERM_CRITERIA_COUNT, 50, 1e-4),
)
MIN_TRACKED_POINTS = 10

# cheek / lower-face region as fractions of the detected face box
ROI_BOX_FRACTIONS = [
    (0.18, 0.45), (0.82, 0.45), (0.88, 0.62),
    (0.70, 0.88), (0.30, 0.88), (0.12, 0.62),
]


class IngestError(Exception):
    """Ingestion cannot proceed (no face, no frames, tracker loss)."""


def default_rrpipe() -> str:
    if shutil.which("rrpipe"):
        return "rrpipe"
    return f"{shlex.quote(sys.executable)} -m rrpipe"


def read_frames(video_path):
    cap = cv2.VideoCapture(str(video_path))
    if not cap.isOpened():
        raise IngestError(f"cannot open video {video_path}")
    fps = cap.get(cv2.CAP_PROP_FPS)
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(frame)
    cap.release()
    if not frames:
        raise IngestError(f"no decodable frames in {video_path}")
    if not fps or fps <= 0:
        raise IngestError(f"video {video_path} reports no frame rate")
    return frames, float(fps)


def detect_face_box(frame_bgr, model_path):
    """Detect the dominant face; returns (x, y, w, h) or None."""
    h, w = frame_bgr.shape[:2]
    detector = cv2.FaceDetectorYN.create(str(model_path), "", (w, h))
    _, faces = detector.detect(frame_bgr)
    if faces is None or len(faces) == 0:
        return None
    best = faces[np.argmax(faces[:, 2] * faces[:, 3])]
    return tuple(float(v) for v in best[:4])


def roi_from_face_box(box):
    x, y, w, h = box
    return np.array([[x + fx * w, y + fy * h] for fx, fy in ROI_BOX_FRACTIONS])


def initial_roi(frame_bgr, args):
    """Explicit --roi wins; otherwise face detection builds the polygon."""
    if args.roi:
        vertices = load_roi_vertices(args.roi)
        return vertices, {"source": "explicit", "file": str(args.roi)}
    model = args.face_model or os.environ.get("RRPIPE_FACE_MODEL")
    if not model:
        raise IngestError(
            "no face-detector model available; pass --face-model (YuNet ONNX) "
            "or an explicit --roi polygon"
        )
    box = detect_face_box(frame_bgr, model)
    if box is None:
        raise IngestError("no face found in the first frame")
    info = {
        "source": "face_box",
        "model": str(model),
        "face_box": list(box),
        "box_fractions": [list(f) for f in ROI_BOX_FRACTIONS],
    }
    return roi_from_face_box(box), info


def load_roi_vertices(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["frame", "vertex_id", "x", "y"]:
        raise IngestError(f"{path}: expected header frame,vertex_id,x,y")
    entries = sorted((int(r[1]), float(r[2]), float(r[3])) for r in rows[1:])
    if len(entries) < 3:
        raise IngestError(f"{path}: ROI needs at least 3 vertices")
    return np.array([[x, y] for _, x, y in entries])


def polygon_bbox_mask(shape, vertices, pad=5):
    mask = np.zeros(shape[:2], dtype=np.uint8)
    x0, y0 = np.floor(vertices.min(axis=0)).astype(int) - pad
    x1, y1 = np.ceil(vertices.max(axis=0)).astype(int) + pad
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, shape[1]), min(y1, shape[0])
    mask[y0:y1, x0:x1] = 255
    return mask


def track_points(frames_gray, roi_vertices):
    """goodFeaturesToTrack + pyramidal LK, with re-detection on loss.

    Returns a list of per-frame dicts {point_id: (x, y)}.
    """
    mask = polygon_bbox_mask(frames_gray[0].shape, roi_vertices)
    corners = cv2.goodFeaturesToTrack(frames_gray[0], mask=mask, **GFTT_PARAMS)
    if corners is None or len(corners) < 3:
        raise IngestError("too few trackable features inside the ROI region")
    next_id = 0
    points = {}
    for c in corners.reshape(-1, 2):
        points[next_id] = tuple(c)
        next_id += 1
    per_frame = [dict(points)]

    for f in range(1, len(frames_gray)):
        ids = sorted(points)
        prev = np.array([points[i] for i in ids], dtype=np.float32).reshape(-1, 1, 2)
        nxt, status, _ = cv2.calcOpticalFlowPyrLK(
            frames_gray[f - 1], frames_gray[f], prev, None, **LK_PARAMS
        )
        points = {
            i: tuple(p)
            for i, p, ok in zip(ids, nxt.reshape(-1, 2), status.reshape(-1))
            if ok
        }
        if len(points) < 3:
            raise IngestError(f"tracker lost all points at frame {f}")
        if len(points) < MIN_TRACKED_POINTS:
            # refresh inside the bounding box of the surviving points
            survivors = np.array(list(points.values()))
            mask = polygon_bbox_mask(frames_gray[f].shape, survivors, pad=15)
            fresh = cv2.goodFeaturesToTrack(frames_gray[f], mask=mask, **GFTT_PARAMS)
            if fresh is not None:
                for c in fresh.reshape(-1, 2):
                    points[next_id] = tuple(c)
                    next_id += 1
        per_frame.append(dict(points))
    return per_frame


def write_tracks_csv(path, per_frame):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "point_id", "x", "y"])
        for f, points in enumerate(per_frame):
            for pid in sorted(points):
                x, y = points[pid]
                w.writerow([f, pid, FLOAT_FMT % x, FLOAT_FMT % y])


def write_roi_csv(path, frame, vertices):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "vertex_id", "x", "y"])
        for vid, (x, y) in enumerate(vertices):
            w.writerow([frame, vid, FLOAT_FMT % x, FLOAT_FMT % y])


def run_track_roi(rrpipe_cmd, tracks_csv, roi_csv, out_csv):
    """All ROI/transform geometry happens in the primary CLI."""
    cmd = shlex.split(rrpipe_cmd) + [
        "track-roi", "--tracks", str(tracks_csv),
        "--roi", str(roi_csv), "--out", str(out_csv),
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise IngestError(
            f"primary CLI failed (exit {proc.returncode}): {proc.stderr.strip()}"
        )


def load_roi_per_frame(path):
    polygons = {}
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    for r in rows[1:]:
        polygons.setdefault(int(r[0]), []).append(
            (int(r[1]), float(r[2]), float(r[3]))
        )
    return {
        f: np.array([[x, y] for _, x, y in sorted(entries)])
        for f, entries in polygons.items()
    }


def mean_rgb_inside(frame_bgr, vertices):
    mask = np.zeros(frame_bgr.shape[:2], dtype=np.uint8)
    cv2.fillPoly(mask, [np.round(vertices).astype(np.int32)], 255)
    if not mask.any():
        raise IngestError("ROI polygon covers no pixels")
    means = cv2.mean(frame_bgr, mask=mask)[:3]  # BGR order
    return means[2], means[1], means[0]


def write_rgb_trace(path, rgb_rows, fps):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "t_s", "r", "g", "b"])
        for f, (r, g, b) in enumerate(rgb_rows):
            w.writerow([f, FLOAT_FMT % (f / fps), FLOAT_FMT % r,
                        FLOAT_FMT % g, FLOAT_FMT % b])


def ingest(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    frames, fps = read_frames(args.video)
    gray = [cv2.cvtColor(f, cv2.COLOR_BGR2GRAY) for f in frames]

    roi_vertices, roi_info = initial_roi(frames[0], args)
    per_frame_points = track_points(gray, roi_vertices)

    tracks_csv = out_dir / "tracks.csv"
    roi0_csv = out_dir / "roi0.csv"
    roi_frames_csv = out_dir / "roi_per_frame.csv"
    write_tracks_csv(tracks_csv, per_frame_points)
    write_roi_csv(roi0_csv, 0, roi_vertices)
    run_track_roi(args.rrpipe, tracks_csv, roi0_csv, roi_frames_csv)

    polygons = load_roi_per_frame(roi_frames_csv)
    if len(polygons) != len(frames):
        raise IngestError(
            f"primary returned {len(polygons)} polygons for {len(frames)} frames"
        )
    rgb_rows = [mean_rgb_inside(frames[f], polygons[f]) for f in range(len(frames))]
    write_rgb_trace(out_dir / "rgb_trace.csv", rgb_rows, fps)

    n_points = [len(p) for p in per_frame_points]
    manifest = {
        "video": str(args.video),
        "frame_count": len(frames),
        "frame_rate_hz": fps,
        "initial_roi": [[float(x), float(y)] for x, y in roi_vertices],
        "roi": roi_info,
        "tracker": {
            "feature_detector": {"name": "goodFeaturesToTrack", **GFTT_PARAMS},
            "optical_flow": {
                "name": "calcOpticalFlowPyrLK",
                "winSize": list(LK_PARAMS["winSize"]),
                "maxLevel": LK_PARAMS["maxLevel"],
            },
            "min_points_before_redetect": MIN_TRACKED_POINTS,
            "points_per_frame_min": min(n_points),
            "points_per_frame_max": max(n_points),
        },
        "rrpipe": args.rrpipe,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return 0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--video", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--rrpipe", default=default_rrpipe(),
                    help="primary CLI command (default: rrpipe on PATH)")
    ap.add_argument("--roi", default=None,
                    help="explicit initial ROI polygon CSV (skips face detection)")
    ap.add_argument("--face-model", default=None,
                    help="YuNet ONNX model path (or set RRPIPE_FACE_MODEL)")
    args = ap.parse_args(argv)
    try:
        return ingest(args)
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
