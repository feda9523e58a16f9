"""Acceptance criteria 1-12, each at its stated tolerance and time limit.

Every test records one line in RESULTS; conftest prints them after the run.
Run this file directly (python tests/test_acceptance.py) for the lines alone.
"""
import itertools
import json
import logging
import os
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402
from tilefix import entropy, fixpoint, shifts1d, solver, tm  # noqa: E402
from tilefix.core import format_tileset  # noqa: E402

log = logging.getLogger("tilefix.acceptance")
RESULTS = {}


def record(n, ok, detail, seconds, limit=None):
    timed = limit is None or seconds < limit
    verdict = "PASS" if ok and timed else "FAIL"
    bound = f" (limit {limit} s)" if limit else ""
    RESULTS[n] = f"criterion {n:2d}: {verdict}  {detail}  [{seconds:.2f} s{bound}]"
    assert ok, detail
    assert timed, f"took {seconds:.1f} s, limit {limit} s"


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_criterion_01_counting():
    with Clock() as c:
        counts = [solver.count_patterns(solver.full_shift_tiles(2), k).count for k in (1, 2, 3, 4)]
    want = [2 ** (k * k) for k in (1, 2, 3, 4)]
    record(1, counts == want, f"full-shift counts {counts}", c.seconds, 1)


def test_criterion_02_entropy_bracket():
    oracle = oracles.hard_square_strip_rate(14)
    with Clock() as c:
        b = solver.transfer_entropy_bounds(solver.golden_mean_tiles(), 10)
    ok = b.lower <= oracle <= b.upper and b.upper - b.lower <= 0.02
    record(2, ok, f"[{b.lower:.10f}, {b.upper:.10f}] vs strip oracle {oracle:.10f}", c.seconds, 60)


def test_criterion_03_tm_frames():
    machines = list(tm.corpus().values())
    mismatches = checked = 0
    with Clock() as c:
        for m in machines:
            dt = tm.diagram_tiles(m)
            for n in range(5):
                for word in itertools.product(range(1, m.nsymbols), repeat=n):
                    for size in range(1, 9):
                        ok, _ = tm.frame_completable(dt, word, size)
                        run = tm.run_tm(m, word, max_steps=size, max_cells=size)
                        checked += 1
                        mismatches += ok != run.accepted
    small = all(m.nstates <= 4 for m in machines) and len(machines) >= 5
    record(3, small and mismatches == 0,
           f"{len(machines)} machines, {checked} frames, {mismatches} discrepancies", c.seconds, 300)


def test_criterion_04_determinacy():
    with Clock() as c:
        good = bad = 0
        for m in tm.corpus().values():
            dt = tm.diagram_tiles(m)
            good += tm.check_determinacy(dt).ok
            bad += not tm.check_determinacy(tm.inject_duplicate(dt.tileset)).ok
    n = len(tm.corpus())
    record(4, good == n and bad == n, f"{good}/{n} deterministic, {bad}/{n} mutants caught", c.seconds)


def test_criterion_05_fixpoint_structure():
    c_bound = 2.0
    with Clock() as c:
        ratios, gaps = [], []
        for N in (136, 160, 192):
            lay = fixpoint.layout(N, 1, 24)
            tau = fixpoint.compile(fixpoint.zero_program(), lay)
            ratios.append(len(tau) / N ** 2)
            gaps.append(fixpoint.audit(lay).min_gap)
        qp = fixpoint.quasiperiodic_upgrade(fixpoint.layout(140, 0, 6, free_rows=124))
        qp_audit = fixpoint.audit(qp)
        tpl = fixpoint.ProgramTemplate((("SELF", 0), ("SELF", 5), ("ZERO",)))
        lay = fixpoint.layout(160, 1, 32)
        pi = fixpoint.self_referential_program(tpl, len(lay.field_columns))
        decoded = fixpoint.decode_program_field(fixpoint.compile(pi, lay), lay)
    ok = (max(ratios) <= c_bound and min(gaps) > 2 and qp_audit.ok and decoded == pi.text
          and pi == fixpoint.self_referential_program(tpl, len(lay.field_columns)))
    record(5, ok, f"tiles/N^2 {[round(r, 3) for r in ratios]} <= {c_bound}, min wire gap {min(gaps)}, "
           f"{len(qp.slots)} slots disjoint: {qp_audit.ok}, pi round trip exact: {decoded == pi.text}",
           c.seconds)


def test_criterion_06_small_aperiodicity():
    periods = []
    with Clock() as c:
        for N in (10, 11, 12):
            tau = fixpoint.compile(fixpoint.zero_program(), fixpoint.layout(N, 0, 6, free_rows=1))
            for p in range(1, 5):
                for q in range(1, 5):
                    if p % N and solver.torus_tilings(tau, p, q, count=False).exists:
                        periods.append((N, p, q))
        sk = fixpoint.skeleton_tiles(3)
        sk_ok = solver.torus_tilings(sk, 3, 3).exists and not solver.torus_tilings(sk, 2, 2).exists
    record(6, not periods and sk_ok, f"periods found at N=10,11,12: {periods}; skeleton(3) 3x3 yes, "
           f"2x2 no: {sk_ok}", c.seconds)


def test_criterion_07_simulation():
    with Clock() as c:
        rep = fixpoint.verify_simulation(fixpoint.skeleton_tiles(3), solver.full_shift_tiles(1), 3)
    record(7, rep.ok, f"constructive {rep.constructive}, soundness {rep.soundness}, "
           f"faithfulness {rep.faithfulness}", c.seconds, 60)


def test_criterion_08_lemma2():
    src = shifts1d.thue_morse()
    window = 1 << 16
    word = src.prefix(window)
    failures = []
    found = 0
    with Clock() as c:
        for n in range(1, 7):
            first = {}
            for p in range(window - n + 1):
                first.setdefault(word[p:p + n], p)
            for q in range(1, 7):
                for f, p in first.items():
                    t = shifts1d.lemma2_find(src, (p, n), q, window)
                    if t is None or t % q or word[p + t:p + t + n] != f:
                        failures.append((f, q, t))
                    found += 1
                sat = shifts1d.lemma2_saturation(src, n, q, (1 << 14, 1 << 15, 1 << 16))
                if not sat.saturated:
                    failures.append((n, q, sat.bounds))
    record(8, not failures, f"{found} factor/q pairs, saturated bounds for n,q <= 6, "
           f"{len(failures)} failures", c.seconds, 120)


def test_criterion_09_delegation():
    dl = shifts1d.DelegationLayout(fixpoint.ZoomSchedule(2))
    with Clock() as c:
        gaps = {k: shifts1d.coverage_gaps(dl, k, 0, 4 * dl.L(k)) for k in (1, 2)}
        word = shifts1d.thue_morse().prefix(2 * dl.L(2))
        fs = shifts1d.fieldsets_from_word(dl, word, [1, 2])
        clean = shifts1d.check_fields(dl, fs, word).ok
        keys = [k for k in sorted(fs) if fs[k].own][::29]
        missed = []
        for key in keys:
            rep = shifts1d.check_fields(dl, shifts1d.flip_letter(fs, key), word)
            hit = rep.violations and all(key in ks for _, _, ks in rep.violations)
            if not hit:
                missed.append(key)
    ok = not any(gaps.values()) and clean and not missed
    record(9, ok, f"uncovered positions {sum(map(len, gaps.values()))}, generated fields clean: "
           f"{clean}, {len(keys) - len(missed)}/{len(keys)} flips localised", c.seconds)


def test_criterion_10_redblue():
    mismatches = []
    with Clock() as c:
        for n in (3, 5):
            p = entropy.RedBlueParams(entropy.ConstantSchedule(n), 1, 1)
            for k in (1, 2, 3):
                pair = entropy.density_recursion(p, k)
                red = entropy.expand_colors(p, k, entropy.RED)
                if Fraction(int(red.sum()), red.size) != pair.nu_R:
                    mismatches.append((n, k))
        p3 = entropy.RedBlueParams(entropy.ConstantSchedule(3), 1, 1)
        sample = entropy.density_recursion(p3, 2).nu_R
        both = np.hstack([entropy.expand_colors(p3, 2, entropy.RED),
                          entropy.expand_colors(p3, 2, entropy.BLUE)])
        density = Fraction(int(both.sum()), both.size)
        h = entropy.doubled_pattern_entropy(both)
    ok = not mismatches and sample == Fraction(65, 81) and abs(h - float(density)) < 0.05
    record(10, ok, f"recursion == expansion (mismatches {mismatches}), nu_R(2) at N=3 = {sample}, "
           f"doubled entropy {h:.4f} vs density {density}", c.seconds)


def test_criterion_11_beta_scheduler():
    half = Fraction(1, 2)
    sched = entropy.GeometricSchedule(10, 2)
    with Clock() as c:
        level = entropy.predicted_level(half, sched, Fraction(1, 100), 200)
        rows = entropy.beta_schedule(entropy.RERealEnumerator.constant(half), sched, level)
    for r in rows:
        log.info("k=%d beta=%d nu_R=%.6f nu_B=%.6f", r.k, r.beta, float(r.nu_R), float(r.nu_B))
    dist = [abs(r.nu_R - half) for r in rows]
    monotone = all(b <= a for a, b in zip(dist, dist[1:]))
    ok = level is not None and monotone and dist[-1] < Fraction(1, 100)
    record(11, ok, f"predicted level {level}, |nu_R - 1/2| there {float(dist[-1]):.4f}, "
           f"non-increasing: {monotone}", c.seconds)


def _cli(args, tmp, tag):
    man = tmp / f"{tag}.json"
    res = subprocess.run([sys.executable, "-m", "tilefix", *args, "--manifest", str(man)],
                         capture_output=True, env=dict(os.environ))
    manifest = json.loads(man.read_text())
    return res.returncode, res.stdout, manifest


def test_criterion_12_cli_determinism(tmp_path):
    full = tmp_path / "full2.ts"
    full.write_text(format_tileset(solver.full_shift_tiles(2)))
    sk = tmp_path / "skeleton3.ts"
    sk.write_text(format_tileset(fixpoint.skeleton_tiles(3)))
    one = tmp_path / "one.ts"
    one.write_text(format_tileset(solver.full_shift_tiles(1)))
    tiny = tmp_path / "tiny.ts"
    tiny.write_text(format_tileset(
        fixpoint.compile(fixpoint.zero_program(), fixpoint.layout(10, 0, 6, free_rows=1))))
    runs = {
        1: ["solve", "--tileset", str(full), "--width", "4", "--height", "4", "--mode", "count"],
        6: ["solve", "--tileset", str(tiny), "--width", "10", "--height", "10", "--wrap",
            "--mode", "count"],
        7: ["verify-sim", "--tau", str(sk), "--rho", str(one), "--zoom", "3"],
    }
    problems = []
    with Clock() as c:
        for crit, args in runs.items():
            a = _cli(args, tmp_path, f"c{crit}a")
            b = _cli(args, tmp_path, f"c{crit}b")
            par = _cli(args + ["--jobs", "4"], tmp_path, f"c{crit}p")
            if a[2] != b[2] or a[1] != b[1] or a[0] != b[0]:
                problems.append(f"criterion {crit}: jobs-1 runs differ")
            if par[1] != a[1] or par[0] != a[0]:
                problems.append(f"criterion {crit}: jobs 4 differs from jobs 1")
    detail = "; ".join(problems) or ("byte-identical jobs-1 reruns with equal manifests, "
                                      "jobs 4 output equals jobs 1 on criteria 1, 6, 7")
    record(12, not problems, detail, c.seconds)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
