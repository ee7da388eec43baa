import csv

import numpy as np
import pytest

from batchlearn.cli import main
from batchlearn.files import (
    FormatError,
    read_batch_file,
    read_distribution,
    read_provenance,
    write_batch_file,
)


def test_batch_file_round_trip(tmp_path):
    b = np.array([[0, 1, 2], [2, 2, 0]])
    write_batch_file(tmp_path / "b.txt", b, 3, 3)
    got, n, k = read_batch_file(tmp_path / "b.txt")
    assert (n, k) == (3, 3)
    np.testing.assert_array_equal(got, b)
    assert (tmp_path / "b.txt").read_text().splitlines()[1] == "1 2 3"


@pytest.mark.parametrize("body,line", [("1 2\n", 2), ("1 2 3\n1 2 9\n", 3), ("1 x 3\n", 2)])
def test_batch_file_errors_name_line(tmp_path, body, line):
    f = tmp_path / "b.txt"
    f.write_text("# n=3 k=3\n" + body)
    with pytest.raises(FormatError, match=f":{line}:"):
        read_batch_file(f)


def test_simulate_then_estimate(tmp_path):
    b = tmp_path / "b.txt"
    assert main(["simulate", "--n", "3", "--k", "8", "--m", "3000", "--eps", "0.02", "--eta", "0.05",
                 "--adversary", "point_mass:2", "--seed", "4", "--out", str(b)]) == 0
    batches, n, k = read_batch_file(b)
    good = read_provenance(b)
    assert batches.shape == (3000, 8) and good.size == 3000
    assert (~good).sum() == 60
    assert np.all(batches[~good] == 1)
    for algo in ("empirical", "distset"):
        out = tmp_path / f"{algo}.txt"
        assert main(["estimate", "--algo", algo, "--batches", str(b), "--out", str(out)]) == 0
        q = read_distribution(out)
        assert q.size == 3 and q.sum() == pytest.approx(1.0)
        assert len(out.read_text().splitlines()[0].replace("0.", "")) >= 15
    dump = tmp_path / "subsets.csv"
    code = main(["estimate", "--algo", "subsetlp", "--batches", str(b), "--eps", "0.02", "--eta", "0.05",
                 "--out", str(tmp_path / "s.txt"), "--dump-subsets", str(dump)])
    assert code in (0, 3)
    rows = list(csv.DictReader(open(dump)))
    assert len(rows) == 8


def test_estimate_exit_codes(tmp_path):
    assert main(["estimate", "--algo", "empirical", "--batches", str(tmp_path / "none.txt"),
                 "--out", str(tmp_path / "o.txt")]) == 4
    b = tmp_path / "b.txt"
    write_batch_file(b, np.repeat([[0] * 10, [1] * 10], 50, axis=0), 2, 10)
    assert main(["estimate", "--algo", "subsetlp", "--batches", str(b), "--eps", "0.001", "--eta", "0.1",
                 "--out", str(tmp_path / "o.txt")]) == 3
    assert main(["estimate", "--algo", "subsetlp", "--batches", str(b), "--out", str(tmp_path / "o.txt")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "--algo", "nonsense", "--batches", str(b), "--out", "x"])
    assert exc.value.code == 2


def test_experiment_command(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n=2\nk=5\nm=1000\ntrials=2\neps=0.02\neta=0.05\ntruth=0.4,0.6\n"
                   "algorithms=empirical,subsetlp\n")
    out = tmp_path / "r.csv"
    assert main(["experiment", "--config", str(cfg), "--out", str(out), "--dump-distributions"]) == 0
    assert out.read_text().startswith("trial_index,algorithm,n,k,m,eps,eta,adversary,seed_used,"
                                      "tv_error,runtime_ms,degraded\n")
    assert (tmp_path / "r.csv.dists.csv").exists()
    cfg.write_text("n=2\nbogus=1\n")
    assert main(["experiment", "--config", str(cfg), "--out", str(out)]) == 2


def test_verify_lemmas_command(tmp_path):
    out = tmp_path / "v.csv"
    assert main(["verify-lemmas", "--lemma", "binomial-peak", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert rows[0]["lemma_id"] == "binomial-peak" and float(rows[0]["worst_margin"]) >= 0
    assert main(["verify-lemmas", "--lemma", "Q.1", "--out", str(out)]) == 2


def test_lowerbound_command(tmp_path):
    out = tmp_path / "lb.txt"
    assert main(["lowerbound", "--eps", "0.4", "--eta", "0", "--k", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    i = lines.index("# N_p shape=2x2")
    np.testing.assert_allclose([float(v) for v in lines[i + 1].split()], [0.21, 0.14, 0.14, 0.51], atol=1e-12)
    assert main(["lowerbound", "--eps", "0.6", "--k", "2", "--out", str(out)]) == 2


def test_candidate_dump(tmp_path):
    b = tmp_path / "b.txt"
    write_batch_file(b, np.array([[0, 0], [0, 1], [1, 1], [1, 1]]), 2, 2)
    truth = tmp_path / "p.txt"
    truth.write_text("0.5\n0.5\n")
    dump = tmp_path / "c.csv"
    assert main(["estimate", "--algo", "distset", "--batches", str(b), "--out", str(tmp_path / "q.txt"),
                 "--dump-candidates", str(dump), "--truth", str(truth)]) == 0
    rows = list(csv.DictReader(open(dump)))
    assert list(rows[0]) == ["candidate_index", "origin_path", "l1_objective", "tv_to_truth_if_known"]
    # The marginal (0.5, 0.5) duplicates slice 1 and is dropped.
    assert [r["origin_path"] for r in rows] == ["1", "2"]
    assert all(float(r["tv_to_truth_if_known"]) >= 0 for r in rows)
