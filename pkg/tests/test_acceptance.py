"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines are printed even
without ``-s``).
"""
import hashlib
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from pwtrans.cli import main
from pwtrans.exact import ItmSpec, attractor_exact, is_exchange, normalize
from pwtrans.experiments import (
    convergence_curve, disk3_spec, embed_itm, exact_vs_cells_hausdorff, random_exchange, random_itm2,
)
from pwtrans.grid import GridGeometry, GridSet, apply_grid, attractor_grid, iterate_grid
from pwtrans.metrics import directed_hausdorff, hausdorff
from pwtrans.render import read_ppm
from pwtrans.torus import check_projection_lemma

SQRT2 = math.sqrt(2)


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail
    return emit


def _disk_runs():
    runs = []
    for seed in range(20):
        spec = disk3_spec(np.random.default_rng(seed), 256)
        runs.append((seed, spec, attractor_grid(spec, 5000)))
    return runs


@pytest.fixture(scope="module")
def disk_runs():
    t0 = time.perf_counter()
    runs = _disk_runs()
    return runs, time.perf_counter() - t0


def test_c1_exact_derived_attractor(report, derived):
    # hand iteration: F[0,1] = [1/4,3/4] U [0,1/2] = [0,3/4]; F[0,3/4] = [1/4,3/4] U [0,1/4]
    expected = normalize([(0, Fraction(3, 4))])
    # pointwise check of the hand result on a fine dyadic lattice
    pts = [Fraction(k, 256) for k in range(257)]
    img = {x + b.vector for x in pts for b in derived.branches if x in b.region}
    assert img == {x for x in pts if x <= Fraction(3, 4)}
    attractor_exact(derived)
    t0 = time.perf_counter()
    res = attractor_exact(derived)
    ms = (time.perf_counter() - t0) * 1e3
    ok = res.is_finite and res.steps == 1 and res.attractor == expected and ms < 10
    report("C1 exact derived attractor", ok, f"{res.describe()} in {ms:.3f} ms")


def test_c2_exchange_invariance(report):
    specs = [random_exchange(np.random.default_rng(s)) for s in range(100)]
    t0 = time.perf_counter()
    results = [(attractor_exact(s), is_exchange(s)) for s in specs]
    dt = time.perf_counter() - t0
    bad = [i for i, (s, (r, ex)) in enumerate(zip(specs, results))
           if not (r.is_finite and r.steps == 0 and r.attractor == s.omega_set and ex)]
    report("C2 exchange invariance", not bad and dt < 1, f"{100 - len(bad)}/100 ok in {dt:.3f} s, failing seeds {bad}")


def test_c3_two_branch_finiteness(report):
    specs = [random_itm2(np.random.default_rng(s), max_den=64) for s in range(100)]
    t0 = time.perf_counter()
    results = [attractor_exact(s, cap=100_000) for s in specs]
    dt = time.perf_counter() - t0
    bad = [i for i, r in enumerate(results) if not r.is_finite]
    worst = max(r.steps for r in results)
    report("C3 two-branch finiteness", not bad and dt < 10,
           f"{100 - len(bad)}/100 stabilized (max N={worst}) in {dt:.3f} s")


def test_c4_grid_invariance_monotonicity(report, disk_runs):
    runs, build_s = disk_runs
    t0 = time.perf_counter()
    bad = []
    for seed, spec, res in runs:
        orbit = iterate_grid(spec, res.steps + 1)
        mono = all(b <= a for a, b in zip(orbit, orbit[1:]))
        if not (res.stabilized and mono and apply_grid(spec, res.attractor) == res.attractor):
            bad.append(seed)
    dt = build_s + time.perf_counter() - t0
    steps = [r.steps for _, _, r in runs]
    report("C4 grid invariance + monotonicity", not bad and dt < 60,
           f"{20 - len(bad)}/20 ok (N in {min(steps)}..{max(steps)}) in {dt:.2f} s")


def _brute_directed(A, B):
    a = np.argwhere(A.bits)
    b = np.argwhere(B.bits)
    sq = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1).min(axis=1).max()
    return float(np.sqrt(sq) * A.geometry.h)


def test_c5_hausdorff_oracle(report):
    g = GridGeometry(32, 32, 1 / 32)
    rng = np.random.default_rng(5)
    pairs = []
    for _ in range(50):
        p = rng.uniform(0.001, 0.5, size=2)
        A, B = (GridSet(g, rng.random(g.shape) < q) for q in p)
        A = A if A else GridSet(g, np.eye(32, dtype=bool))
        B = B if B else GridSet(g, np.eye(32, dtype=bool)[::-1])
        pairs.append((A, B))
    t0 = time.perf_counter()
    got = [(directed_hausdorff(A, B), directed_hausdorff(B, A), hausdorff(A, B)) for A, B in pairs]
    dt = time.perf_counter() - t0
    mismatches = 0
    for (A, B), (dab, dba, dh) in zip(pairs, got):
        oab, oba = _brute_directed(A, B), _brute_directed(B, A)
        mismatches += (dab != oab) + (dba != oba) + (dh != max(oab, oba))
    report("C5 Hausdorff oracle", mismatches == 0 and dt < 5,
           f"{mismatches} mismatches over 150 values in {dt:.3f} s")


def test_c6_projection_lemma(report):
    torus_h = 1 / 128
    bound = torus_h * SQRT2
    t0 = time.perf_counter()
    worst, bad = 0.0, []
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        spec = disk3_spec(rng, 256)
        K = GridSet(spec.geometry, (rng.random(spec.geometry.shape) < rng.uniform(0.05, 0.9)) & spec.omega_mask.bits)
        d = check_projection_lemma(spec, K)
        worst = max(worst, d)
        if d > bound:
            bad.append(seed)
    dt = time.perf_counter() - t0
    report("C6 projection identity", not bad and dt < 60,
           f"max gap {worst:.5f} <= h*sqrt2 = {bound:.5f} (torus h=1/128), {20 - len(bad)}/20 ok in {dt:.2f} s")


def test_c7_convergence_curves(report, disk_runs):
    runs, _ = disk_runs
    bad = []
    for seed, spec, res in runs:
        if not res.stabilized:
            continue
        pts = convergence_curve(spec).points
        d = [v for _, v in pts]
        if not (all(b <= a for a, b in zip(d, d[1:])) and pts[-1] == (res.steps, 0.0)):
            bad.append(seed)
    report("C7 convergence curves", not bad, f"{len(runs) - len(bad)}/{len(runs)} curves non-increasing, 0 at N")


def test_c8_torus_pipeline(report, specs_dir, tmp_path, capsys):
    spec = str(specs_dir / "torus_finite.json")
    args = ["torus", "run", "--spec", spec, "--snapshots", "0,1,2,8,64"]
    codes = [main(args + ["--out", str(tmp_path / d), "--require-finite"]) for d in "ab"]
    capsys.readouterr()
    digest = {d: {f: hashlib.sha256((tmp_path / d / f).read_bytes()).hexdigest()
                  for f in ("montage.ppm", "attractor.ppm", "trace.csv")} for d in "ab"}
    rows = [list(map(int, r.split(","))) for r in (tmp_path / "a" / "trace.csv").read_text().split()[1:]]
    lost = [r[2] for r in rows]
    red = (read_ppm((tmp_path / "a" / "montage.ppm").read_bytes()) == [220, 0, 0]).all(-1).sum()
    ok = (codes == [0, 0] and digest["a"] == digest["b"] and lost[1] > 0 and red > 0
          and lost[-1] == 0 and lost[-2] > 0 and rows[-1][1] == rows[-2][1])
    report("C8 torus pipeline", ok,
           f"identical outputs={digest['a'] == digest['b']}, lost at n=1: {lost[1]}, "
           f"last lost n={max(n for n, v in enumerate(lost) if v)}, stable at N={len(rows) - 2}, red px={red}")


def test_c9_cross_engine(report):
    h = 2.0 ** -10
    bad, worst = [], 0.0
    for seed in range(10):
        spec = random_itm2(np.random.default_rng(900 + seed), max_den=64, dyadic=True)
        ex = attractor_exact(spec)
        gr = attractor_grid(embed_itm(spec, h), 100_000)
        d = exact_vs_cells_hausdorff(ex.attractor, gr.attractor)
        worst = max(worst, d)
        if not (ex.is_finite and gr.stabilized and ex.steps == gr.steps and d <= h * SQRT2):
            bad.append((seed, ex.steps, gr.steps, d))
    report("C9 cross-engine agreement", not bad, f"{10 - len(bad)}/10 agree, max d_H={worst:.6f}, failures {bad}")
