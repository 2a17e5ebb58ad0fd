"""Monte Carlo campaigns: config, seed derivation, parallel execution, resumable store, export."""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .decoder2d import run_trial
from .decoder3d import RADIUS_STEPS, WARMUP_ROUNDS, StarMetricParams, run_memory_simulation
from .fitting import FailureSample

SECTION = "campaign"
CONFIG_NAME = "config.ini"
STORE_NAME = "store.ndjson"
CSV_NAME = "results.csv"
JSON_NAME = "summary.json"
TSV_NAME = "plot.tsv"
CSV_HEADER = "mode,k,p,q,trials,failures,rate,stderr,seed"
DEFAULT_P_2D = (0.01, 0.0186, 0.0271, 0.0357, 0.0443, 0.0529, 0.0614, 0.07)
DEFAULT_CHUNK = {"2d": 500, "3d": 25_000}


class ConfigError(ValueError):
    """Invalid or inconsistent campaign configuration."""


def fmt(x: float) -> str:
    """Pinned float format: 9 significant digits, lowercase scientific."""
    return f"{x:.8e}"


def derive_seed(master_seed: int, mode: str, k: int, p_index: int, trial_index: int) -> int:
    """128-bit stream seed from blake2b over the packed tuple.

    Fields are packed big-endian at fixed width, so the mixing is identical on
    every platform and distinct tuples give distinct inputs.
    """
    payload = struct.pack(">Q2sIII", master_seed % 2**64, mode.encode("ascii"), k, p_index, trial_index)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=16).digest(), "big")


@dataclass(frozen=True)
class CampaignConfig:
    mode: str = "2d"
    ks: tuple = (12, 18, 27)
    ps: tuple = DEFAULT_P_2D
    qs: tuple | None = None  # absolute ghost rates, crossed with ps
    q_ratio: float | None = None  # q = q_ratio * p when qs is None
    trials: int = 10_000  # trials per cell in 2d, counted rounds per cell in 3d
    seed: int = 1
    threads: int = 1
    alpha: float = 2.4
    radius_steps: int = RADIUS_STEPS
    warmup: int = WARMUP_ROUNDS
    chunk: int | None = None

    def __post_init__(self):
        if self.mode not in ("2d", "3d"):
            raise ConfigError(f"mode must be 2d or 3d, got {self.mode!r}")
        if any(k < 4 for k in self.ks):
            raise ConfigError("every k must be at least 4")
        if any(not 0 < p < 1 for p in self.ps):
            raise ConfigError("every p must lie in (0, 1)")
        if self.qs is not None and any(not 0 < q < 1 for q in self.qs):
            raise ConfigError("every q must lie in (0, 1)")
        if self.qs is not None and self.q_ratio is not None:
            raise ConfigError("give either q or q_ratio, not both")
        if self.q_ratio is not None and not 0 < self.q_ratio * max(self.ps, default=0) < 1:
            raise ConfigError("q_ratio must give q in (0, 1)")
        if self.mode == "2d" and (self.qs or self.q_ratio):
            raise ConfigError("2d campaigns have no measurement errors")
        if self.trials < 1 or self.threads < 1 or (self.chunk is not None and self.chunk < 1):
            raise ConfigError("trials, threads and chunk must be positive")

    @property
    def chunk_size(self) -> int:
        return self.chunk or DEFAULT_CHUNK[self.mode]

    @property
    def star(self) -> StarMetricParams:
        return StarMetricParams(alpha=self.alpha, radius_steps=self.radius_steps)

    def columns(self) -> list:
        """(column index, p, q) for every probability column of the grid."""
        if self.mode == "2d":
            return [(i, p, 0.0) for i, p in enumerate(self.ps)]
        if self.qs is not None:
            pairs = [(p, q) for p in self.ps for q in self.qs]
        else:
            pairs = [(p, (self.q_ratio or 0.0) * p) for p in self.ps]
        return [(i, p, q) for i, (p, q) in enumerate(pairs)]

    def cells(self) -> list:
        return [(k, i, p, q) for k in self.ks for i, p, q in self.columns()]

    def to_ini(self) -> str:
        def join(xs):
            return ", ".join(repr(x) for x in xs)

        lines = [f"[{SECTION}]", f"mode = {self.mode}", f"k = {join(self.ks)}", f"p = {join(self.ps)}"]
        if self.qs is not None:
            lines.append(f"q = {join(self.qs)}")
        if self.q_ratio is not None:
            lines.append(f"q_ratio = {self.q_ratio!r}")
        for key in ("trials", "seed", "threads", "alpha", "radius_steps", "warmup"):
            lines.append(f"{key} = {getattr(self, key)}")
        if self.chunk is not None:
            lines.append(f"chunk = {self.chunk}")
        return "\n".join(lines) + "\n"

    def replay_key(self) -> dict:
        """Everything that determines the output bytes (thread count does not)."""
        d = asdict(self)
        d.pop("threads")
        return d


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(",", " ").split())


def parse_config(text: str, overrides: dict | None = None) -> CampaignConfig:
    """Read a ``[campaign]`` key = value section; ``overrides`` win over the file."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if not parser.has_section(SECTION):
        raise ConfigError(f"missing [{SECTION}] section")
    sec = dict(parser[SECTION])
    sec.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    known = {"mode", "k", "p", "q", "q_ratio", "trials", "rounds", "seed", "threads", "alpha", "radius_steps", "warmup", "chunk"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    kw: dict = {}
    try:
        if "mode" in sec:
            kw["mode"] = sec["mode"].strip()
        if "k" in sec:
            kw["ks"] = _ints(sec["k"])
        if "p" in sec:
            kw["ps"] = _floats(sec["p"])
        if "q" in sec:
            kw["qs"] = _floats(sec["q"])
        if "q_ratio" in sec:
            kw["q_ratio"] = float(sec["q_ratio"])
        if "trials" in sec or "rounds" in sec:
            kw["trials"] = int(sec.get("trials", sec.get("rounds")))
        for key in ("seed", "threads", "radius_steps", "warmup", "chunk"):
            if key in sec:
                kw[key] = int(sec[key])
        if "alpha" in sec:
            kw["alpha"] = float(sec["alpha"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return CampaignConfig(**kw)


def load_config(path, overrides: dict | None = None) -> CampaignConfig:
    return parse_config(Path(path).read_text(), overrides)


# --- store -------------------------------------------------------------------


@dataclass
class CellResult:
    mode: str
    k: int
    p: float
    q: float
    p_index: int
    records: dict = field(default_factory=dict)  # chunk index -> finished chunk record

    @property
    def trials(self) -> int:
        return sum(r["trials"] for r in self.records.values())

    @property
    def failures(self) -> int:
        return sum(r["failures"] for r in self.records.values())

    @property
    def seed(self) -> int:
        """Stream seed of chunk 0, which identifies the cell."""
        return self.records[min(self.records)]["seed"] if self.records else 0

    def sample(self) -> FailureSample:
        return FailureSample(self.k, self.p, self.q, self.trials, self.failures)


class ResultStore:
    """Append-only newline-delimited JSON of finished chunks, aggregated per cell."""

    def __init__(self, path):
        self.path = Path(path)
        self.cells: dict = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue  # torn trailing write from an interrupted run
                self._absorb(rec)

    def _absorb(self, rec: dict) -> None:
        key = (rec["mode"], rec["k"], rec["p_index"])
        cell = self.cells.get(key)
        if cell is None:
            cell = self.cells[key] = CellResult(rec["mode"], rec["k"], rec["p"], rec["q"], rec["p_index"])
        cell.records.setdefault(rec["chunk"], rec)

    def done(self, mode: str, k: int, p_index: int, chunk: int) -> bool:
        cell = self.cells.get((mode, k, p_index))
        return cell is not None and chunk in cell.records

    def append(self, rec: dict) -> None:
        with self.path.open("a") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._absorb(rec)

    def compact(self) -> None:
        """Rewrite the log sorted and without duplicates."""
        lines = [
            json.dumps(cell.records[c], sort_keys=True) + "\n"
            for cell in self.sorted_cells()
            for c in sorted(cell.records)
        ]
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text("".join(lines))
        tmp.replace(self.path)

    def sorted_cells(self) -> list:
        return sorted(self.cells.values(), key=lambda c: (c.mode, c.k, c.p_index))

    def samples(self) -> list:
        return [c.sample() for c in self.sorted_cells()]


# --- execution ---------------------------------------------------------------


def _tasks(cfg: CampaignConfig, store: ResultStore) -> list:
    tasks = []
    size = cfg.chunk_size
    n_chunks = math.ceil(cfg.trials / size)
    for k, i, p, q in cfg.cells():
        for c in range(n_chunks):
            if store.done(cfg.mode, k, i, c):
                continue
            n = min(size, cfg.trials - c * size)
            tasks.append((cfg, k, i, p, q, c, n))
    return tasks


def run_chunk(task) -> dict:
    """Run one chunk; 2d trials draw one seed each, a 3d chunk is one seeded run."""
    cfg, k, i, p, q, c, n = task
    if cfg.mode == "2d":
        first = c * cfg.chunk_size
        seeds = [derive_seed(cfg.seed, "2d", k, i, first + t) for t in range(n)]
        failures = sum(run_trial(k, p, s) for s in seeds)
        seed, trials = seeds[0], n
    else:
        seed = derive_seed(cfg.seed, "3d", k, i, c)
        sample = run_memory_simulation(k, p, q, n + cfg.warmup, seed, cfg.star, cfg.warmup)
        trials, failures = sample.trials, sample.failures
    return {"mode": cfg.mode, "k": k, "p": p, "q": q, "p_index": i, "chunk": c, "trials": trials, "failures": int(failures), "seed": seed}


def prepare_out_dir(cfg: CampaignConfig, out_dir) -> Path:
    """Create ``out_dir`` and pin its config; a different existing config is an error."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / CONFIG_NAME
    if cfg_path.exists():
        old = load_config(cfg_path)
        if old.replay_key() != cfg.replay_key():
            raise ConfigError(f"{out} holds a different campaign; use a fresh directory")
    cfg_path.write_text(cfg.to_ini())
    return out


def _drain(results, store: ResultStore, progress) -> None:
    # single writer: only this process touches the store
    for rec in results:
        store.append(rec)
        if progress:
            progress(rec)


def run_campaign(cfg: CampaignConfig, out_dir, progress=None) -> ResultStore:
    """Execute every unfinished chunk and export; safe to interrupt and resume."""
    out = prepare_out_dir(cfg, out_dir)
    store = ResultStore(out / STORE_NAME)
    tasks = _tasks(cfg, store)
    if cfg.threads == 1:
        _drain(map(run_chunk, tasks), store, progress)
    else:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            _drain(pool.map(run_chunk, tasks), store, progress)
    store.compact()
    emit(store, out, cfg)
    return store


def resume_campaign(out_dir, threads: int | None = None, progress=None) -> ResultStore:
    out = Path(out_dir)
    cfg = load_config(out / CONFIG_NAME, {"threads": threads})
    return run_campaign(cfg, out, progress)


# --- export ------------------------------------------------------------------


def csv_text(store: ResultStore) -> str:
    rows = [CSV_HEADER]
    for c in store.sorted_cells():
        s = c.sample()
        rows.append(",".join([c.mode, str(c.k), fmt(c.p), fmt(c.q), str(s.trials), str(s.failures), fmt(s.rate), fmt(s.stderr), str(c.seed)]))
    return "\n".join(rows) + "\n"


def read_csv(path) -> list:
    """FailureSamples from an exported results CSV."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path} is not a campaign CSV")
    out = []
    for line in lines[1:]:
        mode, k, p, q, trials, failures, *_ = line.split(",")
        out.append(FailureSample(int(k), float(p), float(q), int(trials), int(failures)))
    return out


def emit(store: ResultStore, out_dir, cfg: CampaignConfig | None = None) -> dict:
    """Write results.csv, summary.json and plot.tsv; returns their paths."""
    out = Path(out_dir)
    paths = {"csv": out / CSV_NAME, "json": out / JSON_NAME, "tsv": out / TSV_NAME}
    paths["csv"].write_text(csv_text(store))
    cells = [
        {"mode": c.mode, "k": c.k, "p": fmt(c.p), "q": fmt(c.q), "trials": c.trials, "failures": c.failures,
         "rate": fmt(c.sample().rate), "stderr": fmt(c.sample().stderr), "chunks": len(c.records)}
        for c in store.sorted_cells()
    ]
    summary = {"config": cfg.replay_key() if cfg else None, "cells": cells}
    paths["json"].write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    blocks = []
    for k in sorted({c.k for c in store.cells.values()}):
        rows = [f"# k={k}: p rate"]
        rows += [f"{fmt(c.p)}\t{fmt(c.sample().rate)}" for c in store.sorted_cells() if c.k == k]
        blocks.append("\n".join(rows))
    paths["tsv"].write_text("\n\n".join(blocks) + ("\n" if blocks else ""))
    return paths
