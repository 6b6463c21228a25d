"""Experiment runners; every data file is a pure function of (config, seed, version)."""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .. import __version__
from ..core import CyclicConfig, apply_power, cyclic_apply_power
from ..entropy import (
    conditional_block_rate,
    empirical_block_entropy,
    exact_conditional_entropy,
)
from ..errors import ConfigError, WindowTooShortError
from ..measures import (
    BernoulliMeasure,
    BlockCodeMeasure,
    HierarchicalMeasure,
    code_membership,
    code_sample,
)
from ..spectral import Character, exact_mu_char, genericity_pass_mask, mc_char, pullback
from .battery import run_battery
from .config import ExperimentConfig

log = logging.getLogger(__name__)

PBM_LINE = 70


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


# ---------------------------------------------------------------------------
# seeding and the work queue


def task_seed(master: int, index: int) -> np.random.SeedSequence:
    """Stream for task ``index``: a SeedSequence keyed by (master, index)."""
    return np.random.SeedSequence(master, spawn_key=(index,))


def task_rng(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(task_seed(master, index))


def seed_record(master: int, index: int) -> dict:
    return {"task": index, "state": task_seed(master, index).generate_state(2, np.uint64).tolist()}


def parallel_map(fn: Callable, tasks: Sequence, workers: int = 1) -> list:
    """``[fn(t) for t in tasks]`` on a process pool; results come back in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (64 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


@dataclass
class RunResult:
    kind: str
    out: Path
    summary: dict = field(default_factory=dict)
    exit_code: int = 0
    extra_files: list = field(default_factory=list)


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def csv_text(header: Sequence[str], rows: Sequence[Sequence], summary: Optional[dict] = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    for k, v in (summary or {}).items():
        buf.write(f"# {k}={v}\n")
    return buf.getvalue()


def read_data_csv(path) -> tuple[list[dict], dict]:
    """Rows and ``# key=value`` summary trailer of a harness CSV."""
    with open(path, newline="") as fh:
        lines = fh.read().split("\n")
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    summary = {}
    for ln in lines:
        if ln.startswith("# ") and "=" in ln:
            k, v = ln[2:].split("=", 1)
            summary[k] = v
    return list(csv.DictReader(body)), summary


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def write_manifest(cfg: ExperimentConfig, out: Path, tasks: Sequence[int], wall: float,
                   summary: dict, **extra) -> Path:
    doc = {
        "kind": cfg.kind,
        "config_digest": cfg.digest,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "master_seed": cfg.seed,
        "workers": cfg.workers,
        "wall_clock_s": round(wall, 3),
        "task_seeds": [seed_record(cfg.seed, i) for i in tasks],
        "summary": summary,
    }
    doc.update(extra)
    path = manifest_path(out)
    write_text(path, json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    return path


# ---------------------------------------------------------------------------
# spectrum


def _resolve_method(method: str, measure) -> str:
    if method != "auto":
        return method
    return "mc" if isinstance(measure, BernoulliMeasure) else "exact"


def _spectrum_task(args) -> tuple:
    n, support, poly, measure, method, samples, master = args
    chi = Character(support)
    pulled = pullback(chi, poly, n)
    if method == "exact":
        value, se = exact_mu_char(pulled, measure), None
    else:
        try:
            value, se = mc_char(measure, chi, poly, n, samples, task_rng(master, n))
        except WindowTooShortError as exc:
            raise WindowTooShortError(f"n={n}: {exc}") from None
    return n, value, se, pulled.rank, pulled.diam


def witness_candidates(Q: int, max_rank: int):
    for r in range(1, max_rank + 1):
        for combo in itertools.combinations(range(1, Q + 1), r):
            yield combo


def _witness_task(args) -> tuple:
    support, poly, measure, iterates = args
    chi = Character(support)
    vals = [exact_mu_char(pullback(chi, poly, n), measure) for n in iterates]
    return support, min(abs(v) for v in vals)


def find_witness(measure: BlockCodeMeasure, poly, iterates: Sequence[int], max_rank: int = 4,
                 workers: int = 1) -> dict:
    """Character inside one ``Q``-block whose least ``|expectation|`` over the
    iterates is largest; ties go to the lowest rank, then lexicographic order."""
    cands = list(witness_candidates(measure.code.Q, min(max_rank, measure.code.Q)))
    scored = parallel_map(_witness_task, [(c, poly, measure, list(iterates)) for c in cands], workers)
    best, score = max(scored, key=lambda t: t[1])  # max keeps the first of equal scores
    return {"support": list(best), "min_abs_expectation": score, "candidates": len(cands),
            "iterates": [iterates[0], iterates[-1], len(iterates)]}


def spectrum_density(values: np.ndarray, threshold: float) -> float:
    return float(np.mean(np.abs(values) > threshold))


def run_spectrum(cfg: ExperimentConfig, out: Path) -> RunResult:
    t0 = time.perf_counter()
    opts = cfg.options
    iterates = list(cfg.iterates)
    method = _resolve_method(opts["method"], cfg.measure)
    witness = None
    chi = cfg.character
    if opts["find_witness"]:
        witness = find_witness(cfg.measure, cfg.automaton, iterates, opts["witness_max_rank"], cfg.workers)
        log.info("witness character %s (min |E| = %.6g)", witness["support"], witness["min_abs_expectation"])
        if chi is None:
            chi = Character(tuple(witness["support"]))
    if chi.is_trivial:
        raise ConfigError("spectrum needs a non-trivial character")
    tasks = [(n, chi.support, cfg.automaton, cfg.measure, method, cfg.samples, cfg.seed) for n in iterates]
    rows = parallel_map(_spectrum_task, tasks, cfg.workers)
    values = np.array([r[1] for r in rows])
    summary = {"character": " ".join(map(str, chi.support)), "method": method,
               "measure": cfg.measure.name}
    contiguous = iterates == list(range(1, len(iterates) + 1))
    label = "cesaro_density" if contiguous else "fraction_above"
    for t in opts["thresholds"]:
        summary[f"{label}[{t:g}]"] = _fmt(spectrum_density(values, t))
    summary["max_abs"] = _fmt(np.abs(values).max())
    summary["min_abs"] = _fmt(np.abs(values).min())
    text = csv_text(["n", "value", "stderr", "rank", "diam"],
                    [(n, _fmt(v), _fmt(se), r, d) for n, v, se, r, d in rows], summary)
    write_text(out, text)
    seeded = iterates if method == "mc" else []
    write_manifest(cfg, out, seeded, time.perf_counter() - t0, summary, witness=witness)
    return RunResult(cfg.kind, out, summary)


# ---------------------------------------------------------------------------
# support check


def _support_task(args) -> tuple:
    n, poly, measure, samples, master = args
    rng = task_rng(master, n)
    Q = measure.code.Q
    nb = n + 6  # leaves 5Q - 1 cells after the control power
    rows, ctrl = [], []
    for s in range(samples):
        w = code_sample(measure, nb, rng)
        phase = code_membership(apply_power(poly, n * Q, w), measure.code)
        rows.append((n, s, "" if phase is None else phase, int(phase is not None)))
        cphase = code_membership(apply_power(poly, n * Q + 1, w), measure.code)
        ctrl.append((n, s, "" if cphase is None else cphase, int(cphase is not None)))
    return rows, ctrl


def run_support_check(cfg: ExperimentConfig, out: Path) -> RunResult:
    t0 = time.perf_counter()
    iterates = list(cfg.iterates)
    tasks = [(n, cfg.automaton, cfg.measure, cfg.samples, cfg.seed) for n in iterates]
    results = parallel_map(_support_task, tasks, cfg.workers)
    rows = [r for res in results for r in res[0]]
    ctrl = [r for res in results for r in res[1]]
    header = ["n", "sample", "phase", "member"]
    frac = sum(r[3] for r in rows) / len(rows)
    summary = {"member_fraction": _fmt(frac), "Q": cfg.measure.code.Q}
    extra = []
    if cfg.options["control"]:
        cfrac = sum(r[3] for r in ctrl) / len(ctrl)
        broken = sorted({r[0] for r in ctrl if not r[3]})
        summary["control_member_fraction"] = _fmt(cfrac)
        summary["control_broken_iterates"] = len(broken)
        cpath = out.with_name(out.name + ".control.csv")
        write_text(cpath, csv_text(header, ctrl, {"member_fraction": _fmt(cfrac), "power": "nQ+1"}))
        extra.append(cpath)
    write_text(out, csv_text(header, rows, summary))
    write_manifest(cfg, out, iterates, time.perf_counter() - t0, summary)
    return RunResult(cfg.kind, out, summary, extra_files=extra)


# ---------------------------------------------------------------------------
# entropy scan


def _level_task(args) -> tuple:
    n, offset = args
    return n, exact_conditional_entropy(n, n + offset)


def _block_task(args) -> tuple:
    L, measure, samples, master = args
    rng = task_rng(master, L)
    rep = empirical_block_entropy(measure, L, samples, rng)
    cond = conditional_block_rate(measure, L, samples, rng) if L >= 2 else rep.entropy_bits
    return L, rep.entropy_bits, cond


def run_entropy_scan(cfg: ExperimentConfig, out: Path) -> RunResult:
    t0 = time.perf_counter()
    o = cfg.options
    header = ["block_length", "entropy_bits", "method", "level", "rate", "conditional_rate"]
    rows = []
    summary: dict[str, Any] = {"measure": cfg.measure.name}
    if isinstance(cfg.measure, HierarchicalMeasure):
        lo, hi = o["levels"]
        levels = parallel_map(_level_task, [(n, o["depth_offset"]) for n in range(lo, hi + 1)], cfg.workers)
        rates = []
        for n, h in levels:
            rates.append(h / 2 ** n)
            rows.append((2 ** n, _fmt(h), "exact-conditional", n, _fmt(h / 2 ** n), ""))
        if len(rates) > 1:
            summary["rate_strictly_decreasing"] = all(b < a for a, b in zip(rates, rates[1:]))
            summary["max_consecutive_ratio"] = _fmt(max(b / a for a, b in zip(rates, rates[1:])))
    lengths = list(o["block_lengths"])
    blocks = parallel_map(_block_task, [(L, cfg.measure, cfg.samples, cfg.seed) for L in lengths], cfg.workers)
    for L, h, cond in blocks:
        rows.append((L, _fmt(h), "plug-in-empirical", "", _fmt(h / L), _fmt(cond)))
        summary[f"rate[L={L}]"] = _fmt(h / L)
    write_text(out, csv_text(header, rows, summary))
    write_manifest(cfg, out, lengths, time.perf_counter() - t0, summary)
    return RunResult(cfg.kind, out, summary)


# ---------------------------------------------------------------------------
# genericity scan


def _genericity_task(args) -> tuple:
    k, N, eps = args
    start = max(2, 1 << k)
    ns = np.arange(start, 1 << (k + 1), dtype=np.int64)
    return k, start, (1 << (k + 1)) - 1, int(ns.size), int(genericity_pass_mask(ns, N, eps).sum())


def run_genericity_scan(cfg: ExperimentConfig, out: Path) -> RunResult:
    t0 = time.perf_counter()
    o = cfg.options
    N, eps, kmin, kmax = o["N"], o["eps"], o["min_exponent"], o["max_exponent"]
    blocks = parallel_map(_genericity_task, [(k, N, eps) for k in range(kmin, kmax)], cfg.workers)
    rows = [(k, a, b, c, p, _fmt(p / c)) for k, a, b, c, p in blocks]
    top = 1 << kmax
    # every n in [2, 2^kmax]: the dyadic blocks below 2^kmin plus 2^kmax itself
    lowest = np.arange(2, max(2, 1 << kmin), dtype=np.int64)
    extra = np.append(lowest, top)
    passed = sum(r[4] for r in blocks) + int(genericity_pass_mask(extra, N, eps).sum())
    count = sum(r[3] for r in blocks) + int(extra.size)
    fracs = [p / c for *_, c, p in blocks]
    summary = {"N": N, "eps": eps, "range": f"2..{top}", "pass_fraction": _fmt(passed / count),
               "non_decreasing": all(b >= a for a, b in zip(fracs, fracs[1:]))}
    write_text(out, csv_text(["k", "start", "stop", "count", "passed", "fraction"], rows, summary))
    write_manifest(cfg, out, [], time.perf_counter() - t0, summary)
    return RunResult(cfg.kind, out, summary)


# ---------------------------------------------------------------------------
# core battery


def run_verify_core(cfg: ExperimentConfig, out: Path) -> RunResult:
    t0 = time.perf_counter()
    o = cfg.options
    checks = run_battery(task_rng(cfg.seed, 0), o["lucas_max"], o["binom_max"], o["random_trials"],
                         o["max_power"], o["mutate"])
    lines = [c.line() for c in checks]
    ok = all(c.ok for c in checks)
    lines.append(f"OVERALL {'PASS' if ok else 'FAIL'}")
    write_text(out, "\n".join(lines) + "\n")
    summary = {"passed": sum(c.ok for c in checks), "failed": sum(not c.ok for c in checks)}
    write_manifest(cfg, out, [0], time.perf_counter() - t0, summary)
    return RunResult(cfg.kind, out, summary, exit_code=0 if ok else 2)


# ---------------------------------------------------------------------------
# space-time diagrams


def initial_row(width: int, initial: str, position: Optional[int], rng: np.random.Generator) -> np.ndarray:
    row = np.zeros(width, dtype=np.uint8)
    if initial == "impulse":
        row[(width // 2 if position is None else position) % width] = 1
    elif initial == "random":
        row = rng.integers(0, 2, size=width, dtype=np.uint8)
    elif initial == "zeros":
        pass
    elif set(initial) <= {"0", "1"} and len(initial) == width:
        row = np.array([int(c) for c in initial], dtype=np.uint8)
    else:
        raise ConfigError("space_time.initial must be impulse, random, zeros or a 0/1 string of length width")
    return row


def space_time(poly, row: np.ndarray, steps: int) -> np.ndarray:
    """Rows ``0..steps`` of the orbit on the cycle of length ``len(row)``."""
    grid = np.zeros((steps + 1, row.size), dtype=np.uint8)
    c = CyclicConfig(row)
    grid[0] = c.cells
    for t in range(1, steps + 1):
        c = cyclic_apply_power(poly, 1, c)
        grid[t] = c.cells
    return grid


def pbm_text(grid: np.ndarray, comment: Optional[str] = None) -> str:
    h, w = grid.shape
    parts = ["P1\n"]
    if comment:
        parts.append(f"# {comment}\n")
    parts.append(f"{w} {h}\n")
    for row in grid:
        digits = "".join("1" if b else "0" for b in row.tolist())
        for i in range(0, len(digits), PBM_LINE):
            parts.append(digits[i:i + PBM_LINE] + "\n")
    return "".join(parts)


def read_pbm(path) -> np.ndarray:
    tokens = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0]
            tokens.extend(ln.split())
    if not tokens or tokens[0] != "P1":
        raise ValueError(f"{path}: not a P1 bitmap")
    w, h = int(tokens[1]), int(tokens[2])
    bits = "".join(tokens[3:])
    if len(bits) != w * h:
        raise ValueError(f"{path}: expected {w * h} pixels, found {len(bits)}")
    return np.frombuffer(bits.encode(), dtype=np.uint8).reshape(h, w) - ord("0")


def run_space_time(cfg: ExperimentConfig, out: Path) -> RunResult:
    t0 = time.perf_counter()
    o = cfg.options
    row = initial_row(o["width"], o["initial"], o["position"], task_rng(cfg.seed, 0))
    grid = space_time(cfg.automaton, row, o["steps"])
    write_text(out, pbm_text(grid, f"support {' '.join(map(str, cfg.automaton.support))}"))
    summary = {"width": o["width"], "rows": o["steps"] + 1, "black": int(grid.sum())}
    write_manifest(cfg, out, [0], time.perf_counter() - t0, summary)
    return RunResult(cfg.kind, out, summary)


RUNNERS = {
    "spectrum": run_spectrum,
    "support-check": run_support_check,
    "entropy-scan": run_entropy_scan,
    "genericity-scan": run_genericity_scan,
    "verify-core": run_verify_core,
    "space-time": run_space_time,
}

DEFAULT_SUFFIX = {"verify-core": ".txt", "space-time": ".pbm"}


def run(cfg: ExperimentConfig, out: Optional[Path] = None) -> RunResult:
    if out is None:
        out = Path(cfg.output or f"{cfg.kind}{DEFAULT_SUFFIX.get(cfg.kind, '.csv')}")
    return RUNNERS[cfg.kind](cfg, Path(out))
