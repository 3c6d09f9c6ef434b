"""Deterministic synthetic mini-corpus for demos and end-to-end tests.

Each utterance pair shares a latent per-segment articulation trajectory.
The target stream renders it as clean speech-like features; the source
stream gets the same content time-warped plus structured interference and
a spectral tilt (the kind of corruption an electrolarynx introduces),
while its lip tracks stay clean. Landmarks, lip crops, F0 tracks, and
syllable boundaries are all derived from the same latent timeline, so
every modality is mutually consistent.
"""

from __future__ import annotations

import os

import numpy as np

from . import seqio

FRAME_PERIOD_MS = 5.0
LATENT_DIM = 6
MCEP_DIM = 25
LIP_IMAGE_SIZE = 32
STACK = 4
SILENCE_MARGIN_FRAMES = 24
SILENCE_C0_DROP = 12.0  # natural-log units, ~52 dB below speech


def generate_mini_corpus(out_dir, n_utterances: int = 3, seed: int = 0,
                         n_segments=(6, 9), segment_ms=(150, 280)) -> str:
    """Write a manifest plus all per-utterance artifacts; returns manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(seed))
    mix_src = rng.normal(0.0, 0.8, size=(MCEP_DIM - 1, LATENT_DIM))
    mix_tgt = mix_src + rng.normal(0.0, 0.25, size=mix_src.shape)
    entries = []
    for u in range(n_utterances):
        utt_id = f"utt{u:03d}"
        entries.append(_generate_pair(out_dir, utt_id, rng, mix_src, mix_tgt,
                                      n_segments, segment_ms))
    manifest_path = os.path.join(out_dir, "manifest.tsv")
    seqio.write_manifest(manifest_path, seqio.PairManifest(entries=entries))
    return manifest_path


def _generate_pair(out_dir, utt_id, rng, mix_src, mix_tgt, n_segments, segment_ms):
    n_seg = int(rng.integers(n_segments[0], n_segments[1] + 1))
    embeddings = rng.normal(0.0, 1.0, size=(n_seg, LATENT_DIM))
    src_dur = rng.uniform(segment_ms[0], segment_ms[1], size=n_seg)
    tgt_dur = src_dur * rng.uniform(0.7, 1.4, size=n_seg)

    src = _render_stream(rng, embeddings, src_dur, mix_src, f0_base=110.0)
    tgt = _render_stream(rng, embeddings, tgt_dur, mix_tgt, f0_base=210.0)
    _corrupt_source(rng, src)

    paths = {}
    for side, stream in (("src", src), ("tgt", tgt)):
        prefix = f"{utt_id}.{side}"
        fn = {}
        fn["mcep"] = f"{prefix}.mcep.fseq"
        seqio.write_feature_sequence(
            os.path.join(out_dir, fn["mcep"]),
            seqio.FeatureSequence(stream["mcep"], FRAME_PERIOD_MS, "mcep"))
        fn["f0"] = f"{prefix}.f0.fseq"
        seqio.write_feature_sequence(
            os.path.join(out_dir, fn["f0"]),
            seqio.FeatureSequence(stream["f0"][:, None], FRAME_PERIOD_MS, "f0"))
        fn["lmk"] = f"{prefix}.lmk.csv"
        seqio.write_landmarks(os.path.join(out_dir, fn["lmk"]), stream["landmarks"])
        fn["limg"] = f"{prefix}.limg"
        seqio.write_lip_images(os.path.join(out_dir, fn["limg"]), stream["images"])
        fn["lab"] = f"{prefix}.lab"
        seqio.write_boundaries(os.path.join(out_dir, fn["lab"]), stream["bounds"])
        # relative paths keep the corpus relocatable; readers resolve them
        # against the manifest's own directory
        for role, name in fn.items():
            paths[f"{side}_{role}"] = name
    return seqio.ManifestEntry(utterance_id=utt_id, paths=paths)


def _render_stream(rng, embeddings, durations_ms, mix, f0_base):
    """Latent timeline -> mcep/F0/landmark/image tracks plus boundaries."""
    n_seg = embeddings.shape[0]
    seg_frames = np.maximum(2, np.round(durations_ms / FRAME_PERIOD_MS).astype(int))
    margin = SILENCE_MARGIN_FRAMES
    total = margin + int(seg_frames.sum()) + margin

    latent = np.zeros((total, LATENT_DIM))
    voiced = np.zeros(total, dtype=bool)
    bounds = []
    cursor = margin
    for s in range(n_seg):
        length = seg_frames[s]
        ramp = np.linspace(-0.5, 0.5, length)[:, None]
        drift = ramp * rng.normal(0.0, 0.15, size=(1, LATENT_DIM))
        latent[cursor : cursor + length] = embeddings[s] + drift
        voiced[cursor : cursor + length] = True
        bounds.append((cursor * FRAME_PERIOD_MS, (cursor + length) * FRAME_PERIOD_MS, f"s{s}"))
        cursor += length

    # leading/trailing silence decays toward zero latent
    mcep = np.zeros((total, MCEP_DIM))
    mcep[:, 0] = np.where(voiced, 2.0 + 0.2 * latent[:, 0], 2.0 - SILENCE_C0_DROP)
    mcep[:, 1:] = latent @ mix.T + rng.normal(0.0, 0.05, size=(total, MCEP_DIM - 1))

    f0 = np.where(voiced, f0_base + 12.0 * latent[:, 1], 0.0)
    f0 = np.maximum(f0, 0.0)

    n_lip = total // STACK
    lip_idx = np.arange(n_lip) * STACK
    opening = np.clip(6.0 + 3.0 * latent[lip_idx, 0], 1.5, 12.0)
    width = np.clip(14.0 + 2.0 * latent[lip_idx, 2], 8.0, 20.0)
    drift_x = 4.0 * np.sin(np.arange(n_lip) / 17.0) + rng.uniform(-15.0, 15.0)
    drift_y = 3.0 * np.cos(np.arange(n_lip) / 23.0) + rng.uniform(-10.0, 10.0)

    frames = []
    images = np.zeros((n_lip, LIP_IMAGE_SIZE, LIP_IMAGE_SIZE), dtype=np.uint8)
    for l in range(n_lip):
        pts = _lip_points(width[l], opening[l])
        center = np.array([160.0 + drift_x[l], 120.0 + drift_y[l]])
        frames.append(seqio.LandmarkFrame(
            t_ms=l * STACK * FRAME_PERIOD_MS, points=pts + center))
        images[l] = _lip_image(width[l], opening[l])
    landmarks = seqio.LipLandmarkSequence(
        frames=frames, video_fps=1000.0 / (STACK * FRAME_PERIOD_MS))
    image_seq = seqio.LipImageSequence(
        frames=images, video_fps=1000.0 / (STACK * FRAME_PERIOD_MS))

    return {
        "mcep": mcep,
        "f0": f0,
        "landmarks": landmarks,
        "images": image_seq,
        "bounds": seqio.BoundarySegmentation(segments=bounds),
    }


def _corrupt_source(rng, stream):
    """EL-style structured interference + spectral tilt on the source mceps."""
    mcep = stream["mcep"]
    total = mcep.shape[0]
    tilt = np.linspace(0.0, 1.0, MCEP_DIM - 1) * rng.uniform(0.6, 1.0)
    buzz_phase = rng.uniform(0.0, 2 * np.pi)
    buzz = 0.45 * np.sin(2 * np.pi * np.arange(total) / 16.0 + buzz_phase)
    pattern = rng.normal(0.0, 0.5, size=MCEP_DIM - 1)
    mcep[:, 1:] += tilt + buzz[:, None] * pattern
    mcep[:, 1:] += rng.normal(0.0, 0.12, size=(total, MCEP_DIM - 1))


def _lip_points(width, opening) -> np.ndarray:
    """Canonical 20-point lip layout: 12 outer + 8 inner ellipse points."""
    outer_angles = np.linspace(0.0, 2 * np.pi, 12, endpoint=False)
    inner_angles = np.linspace(0.0, 2 * np.pi, 8, endpoint=False)
    outer = np.stack([
        width * np.cos(outer_angles),
        opening * np.sin(outer_angles),
    ], axis=1)
    inner = np.stack([
        0.6 * width * np.cos(inner_angles),
        0.45 * opening * np.sin(inner_angles),
    ], axis=1)
    return np.vstack([outer, inner])


def _lip_image(width, opening) -> np.ndarray:
    size = LIP_IMAGE_SIZE
    yy, xx = np.mgrid[0:size, 0:size]
    cx = cy = size / 2.0
    face = ((xx - cx) / (size * 0.48)) ** 2 + ((yy - cy) / (size * 0.48)) ** 2 <= 1.0
    mouth = (((xx - cx) / (width * 0.9)) ** 2 + ((yy - cy) / (opening * 0.9)) ** 2) <= 1.0
    img = np.full((size, size), 60, dtype=np.uint8)
    img[face] = 190
    img[mouth & face] = 30
    return img


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        prog="python -m lipalign.synthcorpus",
        description="Generate the synthetic demo mini-corpus.")
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--utterances", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    manifest = generate_mini_corpus(args.out_dir, args.utterances, args.seed)
    print(manifest)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
