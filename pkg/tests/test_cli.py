import json
import os

import numpy as np
import pytest

from lipalign import cli, seqio, synthcorpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    manifest = synthcorpus.generate_mini_corpus(root, n_utterances=3, seed=0)
    return str(root), manifest


def run_cli(*argv):
    return cli.main(list(argv))


class TestAlign:
    def test_mcep_mode_writes_three_paths(self, corpus, tmp_path):
        root, manifest = corpus
        out = tmp_path / "mcep"
        code = run_cli("align", "--mode", "mcep", "--manifest", manifest,
                       "--out-dir", str(out), "--iterations", "2",
                       "--mixtures", "4", "--seed", "0")
        assert code == 0
        written = sorted(os.listdir(out))
        assert [f for f in written if f.endswith(".path.csv")] == [
            "utt000.path.csv", "utt001.path.csv", "utt002.path.csv"]
        for utt in ("utt000", "utt001", "utt002"):
            path = seqio.read_path(out / f"{utt}.path.csv")
            sidecar = json.loads((out / f"{utt}.align.json").read_text())
            assert len(sidecar["per_iteration_costs"]) == 2
            src = seqio.read_feature_sequence(os.path.join(root, f"{utt}.src.mcep.fseq"))
            tgt = seqio.read_feature_sequence(os.path.join(root, f"{utt}.tgt.mcep.fseq"))
            assert path.ends_at(src.n_frames, tgt.n_frames)

    def test_lip_landmark_mode(self, corpus, tmp_path):
        _, manifest = corpus
        out = tmp_path / "lmk"
        code = run_cli("align", "--mode", "lip-landmark", "--manifest", manifest,
                       "--out-dir", str(out), "--dump-cost")
        assert code == 0
        assert (out / "utt000.cost.fseq").exists()
        assert (out / "utt000.modality.path.csv").exists()
        cost = seqio.read_feature_sequence(out / "utt000.cost.fseq")
        lip_path = seqio.read_path(out / "utt000.modality.path.csv")
        assert lip_path.ends_at(cost.n_frames, cost.dim)

    def test_lip_raw_mode(self, corpus, tmp_path):
        _, manifest = corpus
        out = tmp_path / "raw"
        code = run_cli("align", "--mode", "lip-raw", "--manifest", manifest,
                       "--out-dir", str(out), "--lip-size", "16x16")
        assert code == 0
        assert len([f for f in os.listdir(out) if f.endswith(".path.csv")]) == 3

    def test_reproducible_outputs(self, corpus, tmp_path):
        _, manifest = corpus
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert run_cli("align", "--mode", "mcep", "--manifest", manifest,
                           "--out-dir", str(out), "--iterations", "2",
                           "--mixtures", "4", "--seed", "7") == 0
            outs.append({
                f: (out / f).read_bytes() for f in sorted(os.listdir(out))
            })
        assert outs[0] == outs[1]

    def test_parallel_jobs_match_serial(self, corpus, tmp_path):
        _, manifest = corpus
        serial, parallel = tmp_path / "s", tmp_path / "p"
        for out, jobs in ((serial, "1"), (parallel, "3")):
            assert run_cli("align", "--mode", "lip-landmark", "--manifest", manifest,
                           "--out-dir", str(out), "--jobs", jobs) == 0
        for name in sorted(os.listdir(serial)):
            assert (serial / name).read_bytes() == (parallel / name).read_bytes()


@pytest.fixture(scope="module")
def aligned(corpus, tmp_path_factory):
    _, manifest = corpus
    out = tmp_path_factory.mktemp("paths")
    assert run_cli("align", "--mode", "lip-landmark", "--manifest", manifest,
                   "--out-dir", str(out)) == 0
    return str(out)


class TestTrainConvertEval:
    def test_full_chain(self, corpus, aligned, tmp_path, capsys):
        root, manifest = corpus
        model = tmp_path / "model.lgmm"
        assert run_cli("train-gmm", "--manifest", manifest, "--paths", aligned,
                       "--mixtures", "4", "--out", str(model)) == 0
        capsys.readouterr()
        conv_dir = tmp_path / "conv"
        conv_dir.mkdir()
        for utt in ("utt000", "utt001", "utt002"):
            assert run_cli("convert", "--model", str(model),
                           "--in", os.path.join(root, f"{utt}.src.mcep.fseq"),
                           "--out", str(conv_dir / f"{utt}.mcep.fseq")) == 0
        converted = seqio.read_feature_sequence(conv_dir / "utt000.mcep.fseq")
        original = seqio.read_feature_sequence(os.path.join(root, "utt000.src.mcep.fseq"))
        assert converted.frames.shape == original.frames.shape

        assert run_cli("eval", "convert", "--manifest", manifest,
                       "--conv-dir", str(conv_dir)) == 0
        text = capsys.readouterr().out
        lines = [l for l in text.strip().split("\n")]
        assert any(l.startswith("utt000\tmcd_db\t") for l in lines)
        assert any(l.startswith("AGGREGATE\tmcd_db\t") for l in lines)
        assert any(l.startswith("utt001\tf0rmse_hz\t") for l in lines)

    def test_eval_path(self, corpus, aligned, capsys):
        _, manifest = corpus
        assert run_cli("eval", "path", "--manifest", manifest, "--paths", aligned) == 0
        out = capsys.readouterr().out
        lines = out.strip().split("\n")
        assert len(lines) == 4  # 3 utterances + aggregate
        for line in lines[:3]:
            value = float(line.split("\t")[2])
            assert 0.0 <= value <= 1.0
        assert lines[3].startswith("AGGREGATE\tcorrect_ratio\t")


class TestPlot:
    def test_plot_renders_ppm(self, corpus, tmp_path):
        _, manifest = corpus
        out = tmp_path / "lmk"
        assert run_cli("align", "--mode", "lip-landmark", "--manifest", manifest,
                       "--out-dir", str(out), "--dump-cost") == 0
        root = os.path.dirname(manifest)
        fig = tmp_path / "fig.ppm"
        assert run_cli("plot",
                       "--path", str(out / "utt000.modality.path.csv"),
                       "--cost", str(out / "utt000.cost.fseq"),
                       "--src-lab", os.path.join(root, "utt000.src.lab"),
                       "--tgt-lab", os.path.join(root, "utt000.tgt.lab"),
                       "--out", str(fig), "--scale", "2") == 0
        data = fig.read_bytes()
        assert data.startswith(b"P6\n")
        cost = seqio.read_feature_sequence(out / "utt000.cost.fseq")
        header = data.split(b"\n", 3)
        width, height = int(header[1].split()[0]), int(header[1].split()[1])
        assert (height, width) == (2 * cost.n_frames, 2 * cost.dim)
        assert len(header[3]) == 3 * width * height


class TestErrors:
    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("align", "--bogus")
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("frobnicate")
        assert exc.value.code == 2

    def test_eval_segment_mismatch_exits_1(self, corpus, tmp_path, capsys):
        root, manifest = corpus
        out = tmp_path / "paths"
        assert run_cli("align", "--mode", "lip-landmark", "--manifest", manifest,
                       "--out-dir", str(out)) == 0
        # clone the corpus dir, truncating one target label file
        clone = tmp_path / "clone"
        clone.mkdir()
        for name in os.listdir(root):
            data = (clone / name, open(os.path.join(root, name), "rb").read())
            data[0].write_bytes(data[1])
        lab = clone / "utt000.tgt.lab"
        lines = lab.read_text(encoding="utf-8").strip().split("\n")
        lab.write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
        capsys.readouterr()
        code = run_cli("eval", "path", "--manifest", str(clone / "manifest.tsv"),
                       "--paths", str(out))
        err = capsys.readouterr().err
        assert code == 1
        assert "SegmentCountMismatch" in err

    def test_missing_input_file_exits_1(self, tmp_path, capsys):
        code = run_cli("convert", "--model", str(tmp_path / "no.lgmm"),
                       "--in", str(tmp_path / "no.fseq"), "--out", str(tmp_path / "o.fseq"))
        assert code == 1
        assert "no.lgmm" in capsys.readouterr().err

    def test_truncated_fseq_names_offset(self, corpus, tmp_path, capsys):
        root, _ = corpus
        bad = tmp_path / "bad.fseq"
        good = open(os.path.join(root, "utt000.src.mcep.fseq"), "rb").read()
        bad.write_bytes(good[:-7])
        (tmp_path / "m.tsv").write_text(
            f"utt000\tsrc_mcep:{bad}\ttgt_mcep:{os.path.join(root, 'utt000.tgt.mcep.fseq')}\n",
            encoding="utf-8")
        code = run_cli("align", "--mode", "mcep", "--manifest", str(tmp_path / "m.tsv"),
                       "--out-dir", str(tmp_path / "o"), "--iterations", "1")
        err = capsys.readouterr().err
        assert code == 1
        assert "TruncatedFile" in err and "byte" in err
