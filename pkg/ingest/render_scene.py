#!/usr/bin/env python3
"""Render the synthetic test scene: a textured rectangle translating at a
fixed per-frame velocity with a sinusoidal green-channel pulsation.

The scene is written losslessly (FFV1) so the ~1% pulsation survives
encoding, and the exact motion/pulse parameters are written next to the
video as ground truth for the ingest tests.
"""

import argparse
import json

import cv2
import numpy as np

FOURCC = "FFV1"


def render(
    out_video,
    out_truth=None,
    n_frames=148,
    size=(200, 200),
    rect=(12, 70, 40, 60),  # x0, y0, width, height
    motion=(1.0, 0.0),      # px per frame
    pulse_amp=0.01,
    pulse_hz=1.2,
    fps=30.0,
    background=30,
    seed=0,
):
    rng = np.random.default_rng(seed)
    w, h = size
    x0, y0, rw, rh = rect
    texture = rng.uniform(60, 200, (rh, rw, 3))

    writer = cv2.VideoWriter(
        str(out_video), cv2.VideoWriter_fourcc(*FOURCC), fps, (w, h)
    )
    if not writer.isOpened():
        raise RuntimeError(f"cannot open video writer for {out_video}")
    for f in range(n_frames):
        frame = np.full((h, w, 3), float(background))
        dx, dy = motion[0] * f, motion[1] * f
        ix, iy = int(round(x0 + dx)), int(round(y0 + dy))
        if ix < 0 or iy < 0 or ix + rw > w or iy + rh > h:
            raise ValueError(f"rectangle leaves the frame at frame {f}")
        block = texture.copy()
        gain = 1.0 + pulse_amp * np.sin(2 * np.pi * pulse_hz * f / fps)
        block[:, :, 1] *= gain
        frame[iy:iy + rh, ix:ix + rw] = block
        bgr = np.clip(np.rint(frame[:, :, ::-1]), 0, 255).astype(np.uint8)
        writer.write(bgr)
    writer.release()

    truth = {
        "fps": fps,
        "n_frames": n_frames,
        "size": list(size),
        "rect": list(rect),
        "motion_px_per_frame": list(motion),
        "pulse_amp": pulse_amp,
        "pulse_hz": pulse_hz,
        "background": background,
        "seed": seed,
    }
    if out_truth is not None:
        with open(out_truth, "w") as fh:
            json.dump(truth, fh, indent=2)
    return truth


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-video", required=True)
    ap.add_argument("--out-truth", default=None)
    ap.add_argument("--frames", type=int, default=148)
    ap.add_argument("--dx", type=float, default=1.0)
    ap.add_argument("--dy", type=float, default=0.0)
    ap.add_argument("--pulse-amp", type=float, default=0.01)
    ap.add_argument("--pulse-hz", type=float, default=1.2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    render(
        args.out_video,
        args.out_truth,
        n_frames=args.frames,
        motion=(args.dx, args.dy),
        pulse_amp=args.pulse_amp,
        pulse_hz=args.pulse_hz,
        seed=args.seed,
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
