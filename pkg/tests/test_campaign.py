import json
import math
from dataclasses import replace

import pytest

from toric_memory import campaign
from toric_memory.campaign import (
    CSV_HEADER,
    CampaignConfig,
    ConfigError,
    ResultStore,
    derive_seed,
    parse_config,
    run_campaign,
)
from toric_memory.cli import main

SMALL = CampaignConfig(ks=(6, 8), ps=(0.03, 0.06), trials=120, chunk=50, seed=7)


def test_derive_seed():
    assert derive_seed(1, "2d", 12, 3, 5) == derive_seed(1, "2d", 12, 3, 5)
    seeds = {derive_seed(1, "2d", 12, 3, t) for t in range(10_000)}
    assert len(seeds) == 10_000
    assert derive_seed(1, "2d", 12, 3, 0) != derive_seed(1, "3d", 12, 3, 0)
    assert derive_seed(1, "2d", 12, 3, 0) != derive_seed(2, "2d", 12, 3, 0)
    assert 0 <= derive_seed(0, "2d", 4, 0, 0) < 2**128


def test_empty_campaign(tmp_path):
    store = run_campaign(replace(SMALL, ks=()), tmp_path)
    assert not store.cells
    assert (tmp_path / campaign.CSV_NAME).read_text() == CSV_HEADER + "\n"


def test_thread_count_does_not_change_output(tmp_path):
    cfg = CampaignConfig(ks=(8,), ps=(0.05,), trials=100, chunk=30)
    texts = []
    for threads in (1, 8):
        out = tmp_path / f"t{threads}"
        run_campaign(replace(cfg, threads=threads), out)
        texts.append((out / campaign.CSV_NAME).read_bytes())
    assert texts[0] == texts[1]


def test_csv_columns(tmp_path):
    run_campaign(SMALL, tmp_path)
    lines = (tmp_path / campaign.CSV_NAME).read_text().splitlines()
    assert lines[0] == CSV_HEADER and len(lines) == 5
    for line in lines[1:]:
        mode, k, p, q, trials, failures, rate, stderr, seed = line.split(",")
        assert mode == "2d" and int(trials) == 120
        r = int(failures) / int(trials)
        assert rate == f"{r:.8e}"
        assert stderr == f"{math.sqrt(r * (1 - r) / int(trials)):.8e}"
        assert "e" in p and p == p.lower()
    summary = json.loads((tmp_path / campaign.JSON_NAME).read_text())
    assert summary["config"]["seed"] == 7 and len(summary["cells"]) == 4
    assert (tmp_path / campaign.TSV_NAME).read_text().startswith("# k=6")


def test_rerun_is_noop_and_resume_matches(tmp_path):
    full = tmp_path / "full"
    run_campaign(SMALL, full)
    store_bytes = (full / campaign.STORE_NAME).read_bytes()
    run_campaign(SMALL, full)
    assert (full / campaign.STORE_NAME).read_bytes() == store_bytes

    # a killed run: some chunks on disk plus a torn final line
    part = tmp_path / "part"
    part.mkdir()
    (part / campaign.CONFIG_NAME).write_text(SMALL.to_ini())
    lines = store_bytes.decode().splitlines(keepends=True)
    (part / campaign.STORE_NAME).write_text("".join(lines[::2]) + lines[1][:20])
    campaign.resume_campaign(part)
    assert (part / campaign.CSV_NAME).read_bytes() == (full / campaign.CSV_NAME).read_bytes()
    assert (part / campaign.STORE_NAME).read_bytes() == store_bytes


def test_totals_never_decrease(tmp_path):
    run_campaign(replace(SMALL, trials=50), tmp_path / "a")
    small = {c.k: c.trials for c in ResultStore(tmp_path / "a" / campaign.STORE_NAME).cells.values()}
    with pytest.raises(ConfigError):
        run_campaign(replace(SMALL, trials=100), tmp_path / "a")
    assert small == {6: 50, 8: 50}


def test_three_d_cells(tmp_path):
    cfg = CampaignConfig(mode="3d", ks=(6,), ps=(0.004, 0.008), q_ratio=0.5, trials=600, chunk=300, warmup=5)
    store = run_campaign(cfg, tmp_path)
    cells = store.sorted_cells()
    assert [c.q for c in cells] == [0.002, 0.004]
    assert all(c.trials <= 600 and len(c.records) == 2 for c in cells)


def test_parse_config_and_overrides():
    text = "[campaign]\nmode = 3d\nk = 10, 14\np = 0.001 0.002\nq_ratio = 0.5\nrounds = 2000\nseed = 4\n"
    cfg = parse_config(text, {"seed": 9, "threads": 3})
    assert cfg.ks == (10, 14) and cfg.ps == (0.001, 0.002) and cfg.trials == 2000
    assert cfg.seed == 9 and cfg.threads == 3
    assert parse_config(cfg.to_ini()) == cfg
    assert [q for _, _, q in cfg.columns()] == [0.0005, 0.001]


@pytest.mark.parametrize(
    "text",
    [
        "mode = 2d\n",
        "[campaign]\nmode = 4d\n",
        "[campaign]\nk = 2\n",
        "[campaign]\np = 0.0\n",
        "[campaign]\nmode = 2d\nq_ratio = 0.5\n",
        "[campaign]\ntrials = 0\n",
        "[campaign]\ncolour = blue\n",
        "[campaign]\nk = twelve\n",
    ],
)
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_cli_run_resume_fit(tmp_path, capsys):
    cfg_file = tmp_path / "c.ini"
    cfg_file.write_text("[campaign]\nk = 6 8\np = 0.02 0.04\ntrials = 40\n")
    assert main(["run", "--config", str(cfg_file), "--out", str(tmp_path / "r"), "--threads", "2", "--quiet"]) == 0
    assert main(["resume", "--out", str(tmp_path / "r"), "--quiet"]) == 0
    assert len(campaign.read_csv(tmp_path / "r" / campaign.CSV_NAME)) == 4

    # fit a synthetic campaign with known exponents E_k = k^beta
    beta = math.log(2, 3)
    rows = [CSV_HEADER]
    for k in (12, 18, 27):
        for p in (0.002, 0.003, 0.004, 0.005):
            n = 10**9
            f = round(n * (p / 0.0133) ** (k**beta))
            rows.append(f"2d,{k},{p},0,{n},{f},0,0,0")
    src = tmp_path / "syn"
    src.mkdir()
    (src / campaign.CSV_NAME).write_text("\n".join(rows) + "\n")
    assert main(["fit", "--in", str(src), "--out", str(tmp_path / "f")]) == 0
    assert (tmp_path / "f" / "fit.csv").read_text().startswith("k,exponent")
    summary = json.loads((tmp_path / "f" / "fit.json").read_text())
    assert summary["beta"]["n_k"] == 3 and summary["beta"]["slope"] == pytest.approx(beta, abs=1e-4)
    assert len((tmp_path / "f" / "fit.tsv").read_text().splitlines()) == 4


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[campaign]\nmode = 5d\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert main(["resume", "--out", str(tmp_path / "missing")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("")
    good = tmp_path / "good.ini"
    good.write_text("[campaign]\nk = 6\np = 0.03\ntrials = 10\n")
    assert main(["run", "--config", str(good), "--out", str(blocker / "sub")]) == 3


def test_cli_analysis_and_surface(capsys):
    assert main(["analysis", "constants"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("name,value") and "h2_rate,7.5377" in out
    assert main(["analysis", "curves", "--m-max", "4", "--points", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n_hat,q,p_boundary" and any(l.startswith("envelope,") for l in lines)
    assert main(["surface", "--L", "16", "--N", "100", "--r-max", "4"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "r,c_recursion,c_closed" and out[1].startswith("0,")
    assert any(l.startswith("# threshold_multiplier,") for l in out)
