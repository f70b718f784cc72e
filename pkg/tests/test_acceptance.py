"""
Acceptance gate: one test per primary criterion, each printing a single
``PASS``/``FAIL`` line with its measured figures and runtime.

Run ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import csv
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest
from mpmath import mp, mpf

from uncloneable_lab.bound import bound_report, reference_terms, theorem1_schedule
from uncloneable_lab.cli import main
from uncloneable_lab.clifford import enumerate_clifford, twirl_deviation
from uncloneable_lab.decoupling import (alice_pvms, decoupling_verify, helstrom_bob_pvms,
                                        lemma1_guess_bound, lemma1_overlap_check)
from uncloneable_lab.entropy import (CqState, ebit_fraction, max_concavity_gap, min_entropy,
                                     min_max_gap, recovery_channel, ssa_min_entropy_gap,
                                     ssa_uncertainty_gap)
from uncloneable_lab.linalg import (DensityOperator, basis_state, maximally_entangled, random_state,
                                    save_state)
from uncloneable_lab.moe import build_game, seesaw_optimize
from uncloneable_lab.qecm import build_scheme, decrypt, encrypt

SEED = 20240611
BB84_VALUE = 0.5 + 1 / (2 * np.sqrt(2))


def _rng(tag):
    return np.random.default_rng([SEED, tag])


def _report(name, ok, detail, elapsed, budget=None):
    timing = f"{elapsed:.1f}s" + (f" (budget {budget:.0f}s)" if budget else "")
    return f"{'PASS' if ok else 'FAIL'}  {name}: {detail}; {timing}"


# --------------------------------------------------------------------------
# criteria; each returns (ok, line)


def theorem1_chain():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "bound.csv"
        code = main(["bound-table", "--n-min", "20000", "--n-max", "100000000", "--points", "64",
                     "--out", str(out), "--quiet"])
        rows = list(csv.DictReader(out.open()))
    worst_agree = np.inf
    terms_ok = True
    with mp.workprec(256):
        for row in rows:
            n = int(row["n"])
            p1, p2, p3 = reference_terms(n, prec=256)
            # the table carries 30 significant digits
            terms_ok &= abs(mpf(row["log2_eps0"]) - p2.log2) <= abs(p2.log2) * mpf(10) ** -28
            r128 = bound_report(theorem1_schedule(n), prec=128)
            r256 = bound_report(theorem1_schedule(n), prec=256)
            terms_ok &= r128.eta <= p1 and r128.gamma_piece <= p3
            for a, b in [(r128.eps_bound.log2, r256.eps_bound.log2), (r128.gamma.log2, r256.gamma.log2),
                         (r128.eta.log2, r256.eta.log2), (r128.delta, r256.delta),
                         (r128.theorem1_rhs.log2, r256.theorem1_rhs.log2)]:
                diff = abs(a - b)
                bits = np.inf if diff == 0 else float(mp.log(abs(b) / diff, 2))
                worst_agree = min(worst_agree, bits)
            terms_ok &= (abs(mpf(row["log2_eps_bound"]) - r256.eps_bound.log2)
                         <= abs(r256.eps_bound.log2) * mpf(10) ** -28)
    elapsed = time.perf_counter() - t0
    passed = sum(row["pass"] == "true" for row in rows)
    ok = (code == 0 and len(rows) >= 64 and passed == len(rows) and terms_ok
          and worst_agree >= 30 and elapsed < 10)
    detail = (f"{passed}/{len(rows)} grid points close the chain, radicand terms dominated={terms_ok}, "
              f"128/256-bit agreement >= {min(worst_agree, 999):.0f} bits")
    return ok, _report("Bound chain reproduction", ok, detail, elapsed, 10)


def min_entropy_closed_forms():
    t0 = time.perf_counter()
    rng = _rng(2)
    cases = [(maximally_entangled(d), -np.log2(d)) for d in (2, 3, 4)]
    while len(cases) < 52:
        da, db = rng.integers(2, 4, size=2)
        a, b = random_state((int(da),), rng), random_state((int(db),), rng)
        rho = DensityOperator(np.kron(a.matrix, b.matrix), (int(da), int(db)))
        cases.append((rho, -np.log2(np.linalg.eigvalsh(a.matrix).max())))
    while len(cases) < 100:
        d = int(rng.integers(2, 5))
        p = rng.dirichlet(np.ones(d))
        m = sum(pi * np.kron(basis_state(i, d).matrix, basis_state(i, d).matrix) for i, pi in enumerate(p))
        cases.append((DensityOperator(m, (d, d)), 0.0))
    worst_err = worst_gap = 0.0
    for rho, expected in cases:
        h, sol = min_entropy(rho)
        worst_err = max(worst_err, abs(h - expected))
        worst_gap = max(worst_gap, sol.gap)
    elapsed = time.perf_counter() - t0
    ok = worst_err <= 1e-6 and worst_gap <= 1e-8 and elapsed < 60
    detail = f"{len(cases)} instances, max |error| {worst_err:.1e}, max gap {worst_gap:.1e}"
    return ok, _report("Min-entropy SDP against closed forms", ok, detail, elapsed, 60)


def recovery_loop_closure():
    t0 = time.perf_counter()
    rng = _rng(3)
    worst = 0.0
    for _ in range(100):
        rho = random_state((2, 2), rng, rank=int(rng.integers(1, 5)))
        h, sol = min_entropy(rho)
        worst = max(worst, abs(ebit_fraction(rho, recovery_channel(rho, sol)) - 2.0 ** -h))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5
    return ok, _report("Recovery-channel loop closure", ok,
                       f"100 two-qubit states, max | |A|F^2 - 2^-Hmin | = {worst:.1e}", elapsed)


def decoupling_corollary():
    t0 = time.perf_counter()
    rng = _rng(4)
    ens = enumerate_clifford(2)
    margins = []
    for _ in range(100):
        de = int(rng.integers(1, 5))
        rho = random_state((4, de), rng, rank=int(rng.integers(1, 4 * de + 1)))
        margins.append(decoupling_verify(rho, 1, ens).margin)
    elapsed = time.perf_counter() - t0
    ok = min(margins) >= -1e-8 and elapsed < 600
    detail = f"100 states over 11520 Cliffords, min margin {min(margins):.3e}"
    return ok, _report("Decoupling corollary (exact 2-design)", ok, detail, elapsed, 600)


def lemma_suites():
    t0 = time.perf_counter()
    rng = _rng(5)
    ssa = [ssa_uncertainty_gap(random_state(dims, rng, rank=int(rng.integers(1, np.prod(dims) + 1))))
           for dims in ((2, 2, 2), (2, 3, 4)) for _ in range(1000)]
    ssa_min = [ssa_min_entropy_gap(random_state((2, 2, 2), rng, rank=int(rng.integers(1, 9))))
               for _ in range(500)]
    minmax = [min_max_gap(random_state((2, 2), rng, rank=int(rng.integers(1, 5)))) for _ in range(500)]
    conc = []
    for _ in range(200):
        k = int(rng.integers(2, 4))
        p = rng.dirichlet(np.ones(k))
        conc.append(max_concavity_gap(CqState(tuple(
            (pi, random_state((2, 2), rng, rank=int(rng.integers(1, 5)))) for pi in p))))
    elapsed = time.perf_counter() - t0
    ok = min(ssa) >= -1e-9 and min(ssa_min) >= -1e-6 and min(minmax) >= -1e-6 and min(conc) >= -1e-6
    detail = (f"min gaps: ssa-uncertainty {min(ssa):.1e} (2000), ssa-min-entropy {min(ssa_min):.1e} (500), "
              f"min-max {min(minmax):.1e} (500), max-concavity {min(conc):.1e} (200)")
    return ok, _report("Entropy lemma suites", ok, detail, elapsed)


def two_design():
    t0 = time.perf_counter()
    rng = _rng(6)
    worst = {}
    orders = {}
    for n in (1, 2):
        ens = enumerate_clifford(n)
        orders[n] = len(ens)
        d = 2 ** n
        devs = []
        for _ in range(50):
            x = rng.standard_normal((d * d, d * d)) + 1j * rng.standard_normal((d * d, d * d))
            devs.append(twirl_deviation(ens, x, 2))
        worst[n] = max(devs)
    elapsed = time.perf_counter() - t0
    ok = orders == {1: 24, 2: 11520} and max(worst.values()) <= 1e-10
    detail = f"orders {orders[1]} and {orders[2]}, max deviation n=1 {worst[1]:.1e}, n=2 {worst[2]:.1e}"
    return ok, _report("Clifford 2-design certification", ok, detail, elapsed)


def scheme_correctness():
    t0 = time.perf_counter()
    dev = ov = 0.0
    keys = 0
    for n in (1, 2):
        sch = build_scheme(n)
        for k in range(sch.num_keys):
            c0, c1 = encrypt(sch, k, 0), encrypt(sch, k, 1)
            p0, p1 = decrypt(sch, k, c0), decrypt(sch, k, c1)
            dev = max(dev, np.abs(p0 - [1, 0]).max(), np.abs(p1 - [0, 1]).max())
            ov = max(ov, abs(np.trace(c0.matrix @ c1.matrix)))
            keys += 1
    elapsed = time.perf_counter() - t0
    ok = dev <= 1e-9 and ov <= 1e-12
    detail = f"{keys} keys, max decryption deviation {dev:.1e}, max Tr(s0 s1) {ov:.1e}"
    return ok, _report("Scheme correctness", ok, detail, elapsed)


def lemma1_chain():
    t0 = time.perf_counter()
    rng = _rng(8)
    ens = enumerate_clifford(1)
    a = alice_pvms(ens)
    bad_bound = bad_overlap = 0
    worst_bound = worst_overlap = np.inf
    for _ in range(200):
        db = int(rng.integers(2, 4))
        rho = random_state((2, db), rng, rank=int(rng.integers(1, 2 * db + 1)))
        guess, bound = lemma1_guess_bound(rho, helstrom_bob_pvms(rho, ens), ens)
        eps = max(0.0, guess - 0.5)
        score, passed = lemma1_overlap_check(rho, eps, a[int(rng.integers(len(ens)))])
        worst_bound = min(worst_bound, bound - guess)
        worst_overlap = min(worst_overlap, score - eps ** 2)
        bad_bound += guess > bound + 1e-8
        bad_overlap += not passed
    elapsed = time.perf_counter() - t0
    ok = bad_bound == 0 and bad_overlap == 0
    detail = (f"200 instances, min (bound - guess) {worst_bound:.2e}, "
              f"min (overlap - eps^2) {worst_overlap:.2e}")
    return ok, _report("Guess-to-overlap chain", ok, detail, elapsed)


def seesaw_regression():
    t0 = time.perf_counter()
    bb84 = seesaw_optimize(build_game("bb84"), 2, 2, restarts=32, seed=SEED).value
    game = build_game("clifford", 1)
    results = [seesaw_optimize(game, 2, 2, restarts=8, seed=s) for s in (0, 1, 2)]
    values = [r.value for r in results]
    monotone = all(np.all(np.diff(tr) >= -1e-12) for r in results for tr in r.traces)
    elapsed = time.perf_counter() - t0
    ok = (abs(bb84 - BB84_VALUE) <= 1e-3 and all(0.5 <= v <= 1 for v in values) and monotone
          and max(values) - min(values) <= 1e-3)
    detail = (f"BB84 {bb84:.6f} (target {BB84_VALUE:.6f}), Clifford n=1 measured "
              f"{np.mean(values):.6f}, seed spread {max(values) - min(values):.1e}, monotone={monotone}")
    return ok, _report("See-saw regression", ok, detail, elapsed)


def reproducibility():
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        state = tmp / "state.json"
        save_state(random_state((2, 2), _rng(10)), state)
        runs = {
            "clifford": ["clifford", "--n", "1", "--enumerate"],
            "entropy": ["entropy", "--in", str(state), "--task", "min"],
            "verify-lemmas": ["verify-lemmas", "--trials", "10"],
            "moe-seesaw": ["moe-seesaw", "--game", "bb84", "--restarts", "4"],
            "decoupling": ["decoupling", "--trials", "3"],
            "bound-table": ["bound-table", "--n-min", "20000", "--n-max", "10000000", "--points", "8"],
            "qecm-demo": ["qecm-demo", "--n", "2"],
        }
        same = {}
        for name, argv in runs.items():
            blobs = []
            for k in range(2):
                d = tmp / name / str(k)
                main(argv + ["--seed", "7", "--out", str(d / "out"), "--quiet"])
                blobs.append(sorted((p.name, p.read_bytes()) for p in d.iterdir()
                                    if not p.name.endswith(".run.json")))
            same[name] = blobs[0] == blobs[1] and len(blobs[0]) > 0
    elapsed = time.perf_counter() - t0
    ok = all(same.values())
    bad = [k for k, v in same.items() if not v]
    detail = f"{sum(same.values())}/{len(same)} subcommands byte-identical" + (f" (differ: {bad})" if bad else "")
    return ok, _report("CLI reproducibility", ok, detail, elapsed)


CRITERIA = [theorem1_chain, min_entropy_closed_forms, recovery_loop_closure, decoupling_corollary,
            lemma_suites, two_design, scheme_correctness, lemma1_chain, seesaw_regression,
            reproducibility]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[c.__name__ for c in CRITERIA])
def test_criterion(criterion, capsys):
    ok, line = criterion()
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    for _, line in results:
        print(line, flush=True)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
