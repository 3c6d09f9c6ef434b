"""Batch command-line front end.

Subcommands: ``align`` (corpus alignment), ``train-gmm`` (joint-density
model training from stored paths), ``convert`` (frame-wise conversion),
``eval`` (alignment / conversion metrics as TSV on stdout), ``plot``
(alignment-matrix rendering to PPM).

Exit codes: 0 success, 1 data error (message names the offending file),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import alignpipe, evalkit, jointgmm, render, seqio
from .errors import LipalignError

_MODES = {"mcep": "mcep", "lip-raw": "lip_raw", "lip-landmark": "lip_landmark"}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (LipalignError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipalign",
        description="Multimodal time alignment for electrolaryngeal voice conversion corpora.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_align = sub.add_parser("align", help="align every manifest pair")
    p_align.add_argument("--mode", choices=sorted(_MODES), required=True)
    p_align.add_argument("--manifest", required=True)
    p_align.add_argument("--out-dir", required=True)
    p_align.add_argument("--iterations", type=int, default=3)
    p_align.add_argument("--stack", type=int, default=4)
    p_align.add_argument("--band", type=int, default=None,
                         help="Sakoe-Chiba half-width in frames")
    p_align.add_argument("--lip-size", default="64x64", help="pixel-MSE rescale size HxW")
    p_align.add_argument("--seed", type=int, default=0)
    p_align.add_argument("--include-c0", action="store_true")
    p_align.add_argument("--silence-db", type=float, default=40.0)
    p_align.add_argument("--mixtures", type=int, default=jointgmm.DEFAULT_MIXTURES)
    p_align.add_argument("--gmm-max-iters", type=int, default=jointgmm.DEFAULT_MAX_ITERS)
    p_align.add_argument("--gmm-tol", type=float, default=jointgmm.DEFAULT_TOL)
    p_align.add_argument("--force-iterations", action="store_true",
                         help="rerun lip-mode DTW once per iteration (parity runs)")
    p_align.add_argument("--dump-cost", action="store_true",
                         help="also write the cumulative cost matrix and modality path")
    p_align.add_argument("--jobs", type=int, default=1)
    p_align.set_defaults(handler=_cmd_align)

    p_train = sub.add_parser("train-gmm", help="fit a joint GMM from stored paths")
    p_train.add_argument("--manifest", required=True)
    p_train.add_argument("--paths", required=True, help="directory holding <id>.path.csv")
    p_train.add_argument("--mixtures", type=int, default=jointgmm.DEFAULT_MIXTURES)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--max-iters", type=int, default=jointgmm.DEFAULT_MAX_ITERS)
    p_train.add_argument("--tol", type=float, default=jointgmm.DEFAULT_TOL)
    p_train.add_argument("--out", required=True)
    p_train.set_defaults(handler=_cmd_train)

    p_conv = sub.add_parser("convert", help="frame-wise conversion of an FSEQ file")
    p_conv.add_argument("--model", required=True)
    p_conv.add_argument("--in", dest="infile", required=True)
    p_conv.add_argument("--out", required=True)
    p_conv.set_defaults(handler=_cmd_convert)

    p_eval = sub.add_parser("eval", help="alignment / conversion metrics as TSV")
    p_eval.add_argument("what", choices=["path", "convert"])
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--paths", help="directory holding <id>.path.csv (eval path)")
    p_eval.add_argument("--conv-dir", help="directory holding <id>.mcep.fseq (eval convert)")
    p_eval.add_argument("--include-c0", action="store_true")
    p_eval.add_argument("--silence-db", type=float, default=40.0)
    p_eval.add_argument("--jobs", type=int, default=1)
    p_eval.set_defaults(handler=_cmd_eval)

    p_plot = sub.add_parser("plot", help="render an alignment matrix as PPM")
    p_plot.add_argument("--path", required=True)
    p_plot.add_argument("--cost", required=True, help="cumulative cost matrix (FSEQ)")
    p_plot.add_argument("--src-lab")
    p_plot.add_argument("--tgt-lab")
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--scale", type=int, default=1)
    p_plot.set_defaults(handler=_cmd_plot)

    return parser


# ---------------------------------------------------------------------------
# align
# ---------------------------------------------------------------------------

def _cmd_align(args) -> int:
    manifest = seqio.read_manifest(args.manifest)
    os.makedirs(args.out_dir, exist_ok=True)
    config = alignpipe.AlignConfig(
        modality=_MODES[args.mode],
        iterations=args.iterations,
        stack_factor=args.stack,
        silence_threshold_db=args.silence_db,
        n_mix=args.mixtures,
        gmm_max_iters=args.gmm_max_iters,
        gmm_tol=args.gmm_tol,
        seed=args.seed,
        band_radius=args.band,
        include_c0=args.include_c0,
        lip_size=_parse_size(args.lip_size),
        force_iterations=args.force_iterations,
        retain_cost_matrix=args.dump_cost,
    )

    def run(entry):
        output, src_period = _align_entry(entry, config)
        base = os.path.join(args.out_dir, entry.utterance_id)
        seqio.write_path(f"{base}.path.csv", output.acoustic_path)
        sidecar = {
            "utterance_id": entry.utterance_id,
            "mode": args.mode,
            "per_iteration_costs": output.per_iteration_costs,
            "src_kept": output.silence_masks[0],
            "tgt_kept": output.silence_masks[1],
        }
        seqio._write_bytes(
            f"{base}.align.json",
            (json.dumps(sidecar, sort_keys=True, indent=2) + "\n").encode("utf-8"))
        if args.dump_cost and output.cost_matrix is not None:
            seqio.write_path(f"{base}.modality.path.csv", output.modality_path)
            cost = output.cost_matrix
            finite = cost[np.isfinite(cost)]
            ceiling = float(finite.max()) if finite.size else 0.0
            # rows of a lip-mode matrix are lip frames, stack_factor acoustic
            # frames apart; record that period so plot gridlines land right
            cost_period = src_period * (1 if args.mode == "mcep" else args.stack)
            seqio.write_feature_sequence(
                f"{base}.cost.fseq",
                seqio.FeatureSequence(np.where(np.isfinite(cost), cost, ceiling),
                                      cost_period, "other"))
        return f"{entry.utterance_id}\t{output.per_iteration_costs[-1]!r}"

    for line in _map_entries(run, manifest.entries, args.jobs):
        print(line)
    return 0


def _align_entry(entry, config):
    src_mcep = seqio.read_feature_sequence(_role(entry, "src_mcep"), kind="mcep")
    tgt_mcep = seqio.read_feature_sequence(_role(entry, "tgt_mcep"), kind="mcep")
    if config.modality == "mcep":
        output = alignpipe.iterative_align(src_mcep, tgt_mcep, config)
    elif config.modality == "lip_raw":
        src_lip = seqio.read_lip_images(_role(entry, "src_limg"))
        tgt_lip = seqio.read_lip_images(_role(entry, "tgt_limg"))
        output = alignpipe.lip_align(src_lip, tgt_lip, src_mcep, tgt_mcep, config)
    else:
        src_lip = seqio.read_landmarks(_role(entry, "src_lmk"))
        tgt_lip = seqio.read_landmarks(_role(entry, "tgt_lmk"))
        output = alignpipe.lip_align(src_lip, tgt_lip, src_mcep, tgt_mcep, config)
    return output, src_mcep.frame_period_ms


# ---------------------------------------------------------------------------
# train-gmm / convert
# ---------------------------------------------------------------------------

def _cmd_train(args) -> int:
    manifest = seqio.read_manifest(args.manifest)
    blocks = []
    dim = None
    for entry in manifest.entries:
        src = seqio.read_feature_sequence(_role(entry, "src_mcep"), kind="mcep")
        tgt = seqio.read_feature_sequence(_role(entry, "tgt_mcep"), kind="mcep")
        if dim is None:
            dim = src.dim
        path = seqio.read_path(os.path.join(args.paths, f"{entry.utterance_id}.path.csv"))
        src_ext = alignpipe.add_deltas(src)
        tgt_ext = alignpipe.add_deltas(tgt)
        blocks.append(np.hstack([
            src_ext.frames[path.src].astype(np.float64),
            tgt_ext.frames[path.tgt].astype(np.float64),
        ]))
    rows = np.vstack(blocks)
    model = jointgmm.fit_em(
        rows, n_mix=args.mixtures, seed=args.seed,
        max_iters=args.max_iters, tol=args.tol, dx=2 * dim)
    jointgmm.write_model(args.out, model)
    print(f"trained\t{model.n_mix} mixtures\t{rows.shape[0]} joint vectors\t{args.out}")
    return 0


def _cmd_convert(args) -> int:
    model = jointgmm.read_model(args.model)
    seq = seqio.read_feature_sequence(args.infile, kind="mcep")
    if model.dx == 2 * seq.dim:
        extended = alignpipe.add_deltas(seq)
        converted = jointgmm.convert_sequence(model, extended.frames.astype(np.float64))
        out_frames = converted[:, : model.dy // 2]
    elif model.dx == seq.dim:
        out_frames = jointgmm.convert_sequence(model, seq.frames.astype(np.float64))
    else:
        print(
            f"error: model expects {model.dx}-dim input, file has {seq.dim} "
            f"({2 * seq.dim} with deltas)", file=sys.stderr)
        return 1
    seqio.write_feature_sequence(
        args.out,
        seqio.FeatureSequence(out_frames, seq.frame_period_ms, "mcep"))
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _cmd_eval(args) -> int:
    manifest = seqio.read_manifest(args.manifest)
    report = evalkit.EvalReport()
    if args.what == "path":
        if not args.paths:
            print("error: eval path requires --paths", file=sys.stderr)
            return 2

        def run(entry):
            path = seqio.read_path(os.path.join(args.paths, f"{entry.utterance_id}.path.csv"))
            src_bounds = seqio.read_boundaries(_role(entry, "src_lab"))
            tgt_bounds = seqio.read_boundaries(_role(entry, "tgt_lab"))
            src_period = seqio.read_feature_sequence(_role(entry, "src_mcep"), kind="mcep").frame_period_ms
            tgt_period = seqio.read_feature_sequence(_role(entry, "tgt_mcep"), kind="mcep").frame_period_ms
            ratio = evalkit.correct_ratio(path, src_bounds, tgt_bounds, src_period, tgt_period)
            return [(entry.utterance_id, "correct_ratio", ratio)]
    else:
        if not args.conv_dir:
            print("error: eval convert requires --conv-dir", file=sys.stderr)
            return 2

        def run(entry):
            converted = seqio.read_feature_sequence(
                os.path.join(args.conv_dir, f"{entry.utterance_id}.mcep.fseq"), kind="mcep")
            target = seqio.read_feature_sequence(_role(entry, "tgt_mcep"), kind="mcep")
            mcd, original_path = evalkit.aligned_mcd(
                converted, target, args.include_c0, args.silence_db)
            rows = [(entry.utterance_id, "mcd_db", mcd)]
            conv_f0_path = os.path.join(args.conv_dir, f"{entry.utterance_id}.f0.fseq")
            if not os.path.exists(conv_f0_path):
                conv_f0_path = entry.paths.get("src_f0")
            tgt_f0_path = entry.paths.get("tgt_f0")
            if conv_f0_path and tgt_f0_path:
                f0rmse = evalkit.eval_f0rmse(
                    seqio.read_feature_sequence(conv_f0_path, kind="f0"),
                    seqio.read_feature_sequence(tgt_f0_path, kind="f0"),
                    original_path)
                rows.append((entry.utterance_id, "f0rmse_hz", f0rmse))
            return rows

    for rows in _map_entries(run, manifest.entries, args.jobs):
        for uid, metric, value in rows:
            report.add(uid, metric, value)
    sys.stdout.write(report.to_tsv())
    return 0


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

def _cmd_plot(args) -> int:
    path = seqio.read_path(args.path)
    cost_seq = seqio.read_feature_sequence(args.cost)
    src_bounds = seqio.read_boundaries(args.src_lab) if args.src_lab else None
    tgt_bounds = seqio.read_boundaries(args.tgt_lab) if args.tgt_lab else None
    period = cost_seq.frame_period_ms
    img = render.render_alignment_matrix(
        cost_seq.frames, path,
        src_bounds=src_bounds, tgt_bounds=tgt_bounds,
        src_period_ms=period, tgt_period_ms=period,
        scale=args.scale)
    render.write_ppm(args.out, img)
    return 0


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _role(entry, role: str) -> str:
    try:
        return entry.paths[role]
    except KeyError:
        raise LipalignError(
            f"manifest entry {entry.utterance_id!r} is missing role {role!r}") from None


def _parse_size(text: str):
    try:
        h, w = text.lower().split("x")
        return (int(h), int(w))
    except ValueError:
        raise LipalignError(f"--lip-size must look like 64x64, got {text!r}") from None


def _map_entries(fn, entries, jobs: int):
    if jobs <= 1 or len(entries) <= 1:
        return [fn(entry) for entry in entries]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, entries))


if __name__ == "__main__":
    sys.exit(main())
