import json
import subprocess
import sys

import pytest

from kipanon.cli import main

from conftest import DAY_START, DATA, day_log_lines, meeting_log_lines

DAY = ["--start", str(DAY_START), "--intervals", "24"]


@pytest.fixture
def day_log(tmp_path):
    p = tmp_path / "day.log"
    p.write_text("".join(day_log_lines()))
    return p


@pytest.fixture
def meeting_log(tmp_path):
    p = tmp_path / "meeting.log"
    p.write_text("".join(meeting_log_lines()))
    return p


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_classify(day_log, capsys):
    n = len(day_log_lines())
    code, out, err = run(["classify", day_log, *DAY], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 16
    assert lines[0] == "2001:db8::117a:e091:b2bd:ca65\trandomized\t67\t0"
    assert f"kipcli: lines={n} parsed={n} malformed=0 out_of_window=0" in err


def test_matrix_raw_and_inferred(day_log, capsys):
    _, raw, _ = run(["matrix", day_log, *DAY], capsys)
    want = (DATA / "slaac_day_matrix.txt").read_text().splitlines()
    assert raw.splitlines()[:4] == want[:4]
    assert [l[29:] for l in raw.splitlines()[4:20]] == [l[29:] for l in want[4:20]]
    _, inf, _ = run(["matrix", day_log, *DAY, "--view", "inferred"], capsys)
    tail = [l.strip() for l in inf.splitlines()[20:23]]
    assert tail == ["000100011112332321122100", "|-------+-------+-------", "--------!!!!!!!!-!!!!--?"]
    _, none, _ = run(["matrix", day_log, *DAY, "--prefix", "2001:db9::/32"], capsys)
    assert none == ""


def test_summarize(day_log, capsys):
    _, out, _ = run(["summarize", day_log, *DAY, "--format", "tsv"], capsys)
    fields = dict(line.split("\t") for line in out.splitlines())
    assert fields["active_48s"] == "1" and fields["active_64s"] == "1"
    assert fields["active_addresses"] == "16"
    assert fields["address_bound_max"] == "3" and fields["address_bound_median"] == "1"
    _, text, _ = run(["summarize", day_log, *DAY], capsys)
    assert "simultaneous addr bound  3 (1)" in text


def test_aggregate_anon_eval(meeting_log, tmp_path, capsys):
    agg = tmp_path / "agg.txt"
    code, _, _ = run(["aggregate", meeting_log, *DAY, "-o", agg], capsys)
    assert code == 0
    body = [l for l in agg.read_text().splitlines() if not l.startswith("#")]
    assert body == ["2001:db8:370::/55\t2\t2\t2"]

    out = tmp_path / "anon.log"
    run(["anon", meeting_log, "--aggregates", agg, "-o", out], capsys)
    anon = out.read_text().splitlines()
    assert len(anon) == 8
    assert sorted({l.split("\t")[1] for l in anon}) == ["2001:db8:370::", "suppressed"]
    assert [l.split("\t")[0] for l in anon] == [l.split("\t")[0] for l in meeting_log_lines()]

    _, ev, _ = run(["eval", "--aggregates", agg], capsys)
    assert ev.splitlines()[1:] == ["55\t1\t1.000000"]
    _, ev, _ = run(["eval", "--aggregates", agg, "--weighting", "covered64", "--log", meeting_log], capsys)
    assert ev.splitlines()[1:] == ["55\t2\t1.000000"]


def test_pipeline_meeting(meeting_log, tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run(["pipeline", meeting_log, *DAY, "--out-dir", out, "--classify"], capsys)
    assert code == 0
    body = [l for l in (out / "aggregates.txt").read_text().splitlines() if not l.startswith("#")]
    assert body == ["2001:db8:370::/55\t2\t2\t2"]
    for name in ("summary.tsv", "accounting.tsv", "lengths.tsv", "classify.tsv", "anonymized.log"):
        assert (out / name).exists(), name
    assert "lines\t8\nparsed\t8\n" in (out / "accounting.tsv").read_text()


def test_pipeline_k4_is_empty(meeting_log, tmp_path, capsys):
    out = tmp_path / "run"
    run(["pipeline", meeting_log, *DAY, "--out-dir", out, "--k", "4"], capsys)
    text = (out / "aggregates.txt").read_text()
    assert [l for l in text.splitlines() if not l.startswith("#")] == []
    assert "# k: 4" in text
    assert set(l.split("\t")[1] for l in (out / "anonymized.log").read_text().splitlines()) == {"suppressed"}


def test_k1_rejected(meeting_log, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["pipeline", str(meeting_log), *DAY, "--out-dir", str(tmp_path / "x"), "--k", "1"])
    assert exc.value.code == 2
    assert "k" in capsys.readouterr().err


def test_usage_errors(day_log, capsys):
    with pytest.raises(SystemExit):
        main(["classify", str(day_log)])  # no --start
    with pytest.raises(SystemExit):
        main(["matrix", str(day_log), "--start", str(DAY_START), "--intervals", "1", "--view", "inferred"])
    with pytest.raises(SystemExit):
        main(["aggregate", str(day_log), "--start", str(DAY_START), "--intervals", "1"])
    assert "intervals" in capsys.readouterr().err


def test_auto_grid(day_log, capsys):
    _, out, err = run(["summarize", day_log, "--auto-grid", "--format", "tsv"], capsys)
    assert "out_of_window=0" in err
    assert "address_bound_max\t3" in out


def test_synth(tmp_path, capsys):
    out = tmp_path / "syn"
    run(["synth", "--out-dir", out, "--hosts", "20", "--intervals", "12", "--seed", "3"], capsys)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["params"]["hosts"] == 20
    truth = (out / "truth.tsv").read_text()
    assert truth.count("# ") == 3
    first = (out / "log.tsv").read_text()
    run(["synth", "--out-dir", tmp_path / "again", "--hosts", "20", "--intervals", "12", "--seed", "3"], capsys)
    assert (tmp_path / "again" / "log.tsv").read_text() == first


def test_console_script(meeting_log):
    proc = subprocess.run(
        [sys.executable, "-m", "kipanon.cli", "aggregate", str(meeting_log), *DAY],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.rstrip().endswith("2001:db8:370::/55\t2\t2\t2")
