"""
Command-line entry point and experiment harness.

Each subcommand turns its flags into an :class:`ExperimentConfig`, runs the
owning module, and writes one primary output (CSV for sweeps, JSON for
structured objects) atomically.  The primary output depends only on the
config, the seed and the tool version, so repeated runs are byte-identical;
wall-clock timestamps live in a ``<out>.run.json`` sidecar next to it.

The process exits with status 0 exactly when every row-level check passed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import mpmath
import numpy as np

from . import __version__

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
U64 = 2 ** 64

__all__ = [
    "ExperimentConfig",
    "RunReport",
    "parse_invocation",
    "run",
    "emit_summary",
    "task_rng",
    "atomic_write",
    "main",
]


# --------------------------------------------------------------------------
# config, report, rng


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    parameters: dict[str, Any]
    seed: int = 0
    output_path: str | None = None
    threads: int = 1
    quiet: bool = False

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class RunReport:
    config: ExperimentConfig
    started_at: str
    finished_at: str
    columns: list[str]
    rows: list[dict[str, Any]]
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION

    @property
    def total(self) -> int:
        return len(self.rows)

    @property
    def failures(self) -> list[int]:
        return [i for i, r in enumerate(self.rows) if not r.get("pass", False)]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"schema_version": self.schema_version, "tool_version": self.tool_version,
                "config": self.config.to_json(), "started_at": self.started_at,
                "finished_at": self.finished_at, "columns": list(self.columns),
                "rows": self.rows,
                "summary": {"total": self.total, "failed": len(self.failures)}}

    @classmethod
    def from_json(cls, obj: dict) -> "RunReport":
        return cls(ExperimentConfig(**obj["config"]), obj["started_at"], obj["finished_at"],
                   list(obj["columns"]), list(obj["rows"]), obj["tool_version"],
                   int(obj["schema_version"]))


def task_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for task ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def atomic_write(path: str | os.PathLike, data: str) -> None:
    """Write ``data`` to ``path`` through a temporary sibling and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _pool_map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _csv_text(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r[k]) for k in columns})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# argument parsing


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < U64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be comma-separated integers, got {text!r}")
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"dims must be positive, got {text!r}")
    return dims


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=0, help="unsigned 64-bit run seed")
    common.add_argument("--threads", type=_positive, default=1, help="worker pool size")
    common.add_argument("--quiet", action="store_true", help="suppress the summary line")

    def out_flag(p, required=True):
        p.add_argument("--out", required=required, help="primary output path")

    parser = argparse.ArgumentParser(prog="uncloneable-lab",
                                     description="Numerical checks for Clifford-keyed bit encryption.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("clifford", parents=[common], help="enumerate or sample Clifford tableaux")
    p.add_argument("--n", type=_positive, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--enumerate", action="store_true")
    g.add_argument("--sample", type=_positive)
    out_flag(p)

    p = sub.add_parser("entropy", parents=[common], help="entropies of a JSON state")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--task", choices=["vn", "cond-vn", "mutual", "min", "max"], required=True)
    p.add_argument("--split", type=_dims, default=None,
                   help="dims of A and B, e.g. 2,4 (default: first factor vs the rest)")
    p.add_argument("--tol", type=float, default=1e-8)
    out_flag(p, required=False)

    p = sub.add_parser("verify-lemmas", parents=[common], help="entropy inequalities on random states")
    p.add_argument("--trials", type=_nonneg, default=1000)
    p.add_argument("--dims", type=_dims, default=(2, 2, 2))
    p.add_argument("--tol", type=float, default=1e-8)
    out_flag(p)

    p = sub.add_parser("moe-seesaw", parents=[common], help="see-saw lower bound on a game value")
    p.add_argument("--game", choices=["bb84", "clifford"], required=True)
    p.add_argument("--n", type=_positive, default=1)
    p.add_argument("--dim-b", type=_positive, default=2)
    p.add_argument("--dim-c", type=_positive, default=2)
    p.add_argument("--restarts", type=_positive, default=32)
    p.add_argument("--iters", type=_positive, default=200)
    p.add_argument("--tol", type=float, default=1e-10)
    out_flag(p)

    p = sub.add_parser("decoupling", parents=[common], help="decoupling bound on random states")
    p.add_argument("--n", type=_positive, default=2)
    p.add_argument("--m", type=_positive, default=1)
    p.add_argument("--dim-e", type=_positive, default=2)
    p.add_argument("--mode", choices=["exact", "mc"], default="exact")
    p.add_argument("--samples", type=_positive, default=2000)
    p.add_argument("--trials", type=_nonneg, default=100)
    out_flag(p)

    p = sub.add_parser("bound-table", parents=[common], help="log-domain bound chain on a grid of n")
    p.add_argument("--n-min", type=_positive, default=20000)
    p.add_argument("--n-max", type=_positive, default=100000000)
    p.add_argument("--points", type=_positive, default=64)
    out_flag(p)

    p = sub.add_parser("qecm-demo", parents=[common], help="encryption round trip and baseline attacks")
    p.add_argument("--n", type=_positive, default=1)
    p.add_argument("--samples", type=_positive, default=512)
    out_flag(p)
    return parser


GLOBAL_KEYS = ("seed", "out", "threads", "quiet", "subcommand")


def parse_invocation(argv: Sequence[str]) -> ExperimentConfig:
    """Validated config for ``argv``; usage errors exit with status 2.

    A repeated ``--seed`` keeps the last value and emits a warning.
    """
    argv = list(argv)
    seeds = [a for a in argv if a == "--seed" or a.startswith("--seed=")]
    if len(seeds) > 1:
        warnings.warn(f"--seed given {len(seeds)} times; using the last value", UserWarning,
                      stacklevel=2)
    ns = _build_parser().parse_args(argv)
    params = {k: (list(v) if isinstance(v, tuple) else v)
              for k, v in vars(ns).items() if k not in GLOBAL_KEYS}
    return ExperimentConfig(ns.subcommand, params, ns.seed, ns.out, ns.threads, ns.quiet)


# --------------------------------------------------------------------------
# subcommands; each returns (columns, rows, primary_text)


def _run_clifford(cfg: ExperimentConfig):
    from .clifford import enumerate_clifford, group_order, is_symplectic, sample_clifford

    p = cfg.parameters
    n = p["n"]
    if p["enumerate"]:
        elements = list(enumerate_clifford(n).tableaux)
        mode = "enumerate"
    else:
        rng = task_rng(cfg.seed, 0)
        elements = [sample_clifford(n, rng) for _ in range(p["sample"])]
        mode = "sample"
    rows = [{"check": f"element {i} symplectic", "value": 1.0, "pass": bool(is_symplectic(c.symplectic))}
            for i, c in enumerate(elements)]
    if mode == "enumerate":
        distinct = len(set(elements))
        rows.append({"check": "distinct elements equal group order", "value": float(distinct),
                     "pass": distinct == group_order(n)})
    doc = {"schema_version": SCHEMA_VERSION, "n": n, "mode": mode, "count": len(elements),
           "elements": [c.to_record() for c in elements]}
    return ["check", "value", "pass"], rows, _json_text(doc)


def _run_entropy(cfg: ExperimentConfig):
    from .entropy import conditional_vn, max_entropy, min_entropy, mutual_information, von_neumann
    from .linalg import DensityOperator, load_state

    p = cfg.parameters
    rho = load_state(p["input"])
    if p["split"] is not None:
        dims = tuple(p["split"])
        if int(np.prod(dims)) != rho.dim:
            raise ValueError(f"--split {dims} does not match the state dimension {rho.dim}")
        rho = DensityOperator(rho.matrix, (dims[0], int(np.prod(dims[1:]))) if len(dims) > 1 else dims,
                              normalized=rho.normalized)
    elif len(rho.dims) > 2:
        rho = DensityOperator(rho.matrix, (rho.dims[0], int(np.prod(rho.dims[1:]))),
                              normalized=rho.normalized)
    task = p["task"]
    doc = {"schema_version": SCHEMA_VERSION, "task": task, "dims": list(rho.dims)}
    rows = []
    if task == "vn":
        v = von_neumann(rho)
        rows.append({"check": "0 <= H <= log d", "value": v,
                     "pass": -1e-9 <= v <= np.log2(rho.dim) + 1e-9})
    elif len(rho.dims) < 2:
        raise ValueError(f"task {task!r} needs a bipartite state; pass --split")
    elif task == "cond-vn":
        v = conditional_vn(rho)
        bound = np.log2(rho.dims[0]) + 1e-9
        rows.append({"check": "|H(A|B)| <= log dA", "value": v, "pass": abs(v) <= bound})
    elif task == "mutual":
        v = mutual_information(rho)
        rows.append({"check": "I(A;B) >= 0", "value": v, "pass": v >= -1e-9})
    elif task == "min":
        v, sol = min_entropy(rho, p["tol"])
        doc.update(primal_value=sol.primal_value, dual_value=sol.dual_value, gap=sol.gap,
                   iterations=sol.iterations)
        rows.append({"check": "duality gap <= tol", "value": sol.gap, "pass": sol.gap <= p["tol"]})
        rows.append({"check": "H_min <= H(A|B)", "value": v,
                     "pass": v <= conditional_vn(rho) + 1e-6})
    else:
        v = max_entropy(rho, p["tol"])
        rows.append({"check": "H_max >= H(A|B)", "value": v,
                     "pass": v >= conditional_vn(rho) - 1e-6})
    doc["value"] = v
    return ["check", "value", "pass"], rows, _json_text(doc)


LEMMA_TOL = {"ssa-uncertainty": 1e-9, "ssa-min-entropy": 1e-6, "min-max": 1e-6, "max-concavity": 1e-6}


def _lemma_trial(dims, tol, seed, trial):
    from .entropy import (CqState, max_concavity_gap, min_max_gap, ssa_min_entropy_gap,
                          ssa_uncertainty_gap)
    from .linalg import DensityOperator, partial_trace, random_state

    rng = task_rng(seed, trial)
    d = int(np.prod(dims))
    rho = random_state(dims, rng, rank=int(rng.integers(1, d + 1)))
    ab = partial_trace(rho, [0, 1])
    dab = dims[0] * dims[1]
    w = float(rng.uniform(0.05, 0.95))
    comps = ((w, random_state(dims[:2], rng, rank=int(rng.integers(1, dab + 1)))),
             (1.0 - w, random_state(dims[:2], rng, rank=int(rng.integers(1, dab + 1)))))
    gaps = {
        "ssa-uncertainty": ssa_uncertainty_gap(rho),
        "ssa-min-entropy": ssa_min_entropy_gap(rho, tol),
        "min-max": min_max_gap(DensityOperator(ab.matrix, ab.dims, check=False), tol),
        "max-concavity": max_concavity_gap(CqState(comps), tol),
    }
    return [{"lemma": k, "trial": trial, "gap": float(g), "pass": bool(g >= -LEMMA_TOL[k])}
            for k, g in gaps.items()]


def _run_verify_lemmas(cfg: ExperimentConfig):
    p = cfg.parameters
    dims = tuple(p["dims"])
    if len(dims) != 3:
        raise ValueError("--dims needs three subsystem dimensions A,B,C")
    per = _pool_map(lambda t: _lemma_trial(dims, p["tol"], cfg.seed, t), range(p["trials"]),
                    cfg.threads)
    rows = [r for trial in per for r in trial]
    cols = ["lemma", "trial", "gap", "pass"]
    return cols, rows, _csv_text(cols, rows)


def _run_moe(cfg: ExperimentConfig):
    from .linalg import state_to_json
    from .moe import build_game, seesaw_optimize

    p = cfg.parameters
    game = build_game(p["game"], p["n"])
    res = seesaw_optimize(game, p["dim_b"], p["dim_c"], restarts=p["restarts"], iters=p["iters"],
                          tol=p["tol"], seed=cfg.seed)
    rows = []
    for k, tr in enumerate(res.traces):
        drops = [b - a for a, b in zip(tr, tr[1:])]
        worst = min(drops) if drops else 0.0
        rows.append({"check": f"restart {k} monotone", "value": float(worst), "pass": worst >= -1e-12})
    rows.append({"check": "value in [1/2, 1]", "value": res.value,
                 "pass": 0.5 - 1e-9 <= res.value <= 1 + 1e-9})
    state_name = None
    if cfg.output_path:
        state_name = Path(cfg.output_path).name + ".state.json"
    doc = {"schema_version": SCHEMA_VERSION, "game": p["game"], "n": p["n"],
           "dim_b": p["dim_b"], "dim_c": p["dim_c"], "value": res.value,
           "converged": res.converged, "best_restart": res.best_restart,
           "restart_values": res.restart_values, "traces": res.traces, "state_file": state_name,
           "bob_povms": _complex_json(res.strategy.bob_povms),
           "charlie_povms": _complex_json(res.strategy.charlie_povms)}
    extra = {state_name: _json_text(state_to_json(res.strategy.state))} if state_name else {}
    return ["check", "value", "pass"], rows, _json_text(doc), extra


def _complex_json(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}


def _decoupling_trial(p, seed, trial):
    from .clifford import enumerate_clifford, sampled_ensemble
    from .decoupling import decoupling_verify
    from .linalg import DensityOperator, random_state

    rng = task_rng(seed, trial)
    n, m, de = p["n"], p["m"], p["dim_e"]
    da = 2 ** n
    r = random_state((da, de), rng, rank=int(rng.integers(1, da * de + 1)))
    rho = DensityOperator(r.matrix, (da, de))
    if p["mode"] == "exact":
        rep = decoupling_verify(rho, m, enumerate_clifford(n))
    elif n <= 2:
        rep = decoupling_verify(rho, m, enumerate_clifford(n), samples=p["samples"], rng=rng)
    else:
        rep = decoupling_verify(rho, m, sampled_ensemble(n, p["samples"], rng), mode="mc")
    return {"trial": trial, "lhs": rep.lhs, "stderr": rep.lhs_stderr, "rhs": rep.rhs,
            "margin": rep.margin, "pass": rep.passed}


def _run_decoupling(cfg: ExperimentConfig):
    p = cfg.parameters
    if p["m"] > p["n"]:
        raise ValueError("--m cannot exceed --n")
    if p["mode"] == "exact" and p["n"] > 2:
        raise ValueError("exact mode needs the enumerated group (n <= 2); use --mode mc")
    rows = _pool_map(lambda t: _decoupling_trial(p, cfg.seed, t), range(p["trials"]), cfg.threads)
    cols = ["trial", "lhs", "stderr", "rhs", "margin", "pass"]
    return cols, rows, _csv_text(cols, rows)


def _run_bound(cfg: ExperimentConfig):
    from .bound import verify_theorem1

    p = cfg.parameters
    reports, _ = verify_theorem1(p["n_min"], p["n_max"], p["points"])

    def s(x):
        return mpmath.nstr(x, 30)

    rows = []
    for r in reports:
        q = r.params
        rows.append({"n": q.n, "m": q.m, "r": q.r, "log2_eps0": s(q.eps0.log2),
                     "log2_eps1": s(q.eps1.log2), "delta": s(r.delta), "log2_gamma": s(r.gamma.log2),
                     "log2_eta": s(r.eta.log2), "log2_eps_bound": s(r.eps_bound.log2),
                     "log2_thm1_rhs": s(r.theorem1_rhs.log2), "log2_margin": s(r.log2_margin),
                     "pass": bool(r.chain_ok and all(r.terms_dominated))})
    cols = ["n", "m", "r", "log2_eps0", "log2_eps1", "delta", "log2_gamma", "log2_eta",
            "log2_eps_bound", "log2_thm1_rhs", "log2_margin", "pass"]
    return cols, rows, _csv_text(cols, rows)


def _run_qecm(cfg: ExperimentConfig):
    from .qecm import (build_scheme, cloning_success, decrypt, encrypt, random_guess_attack,
                       trivial_attack)

    p = cfg.parameters
    scheme = build_scheme(p["n"], samples=p["samples"], seed=cfg.seed)
    rows = []
    for k in range(scheme.num_keys):
        c0, c1 = encrypt(scheme, k, 0), encrypt(scheme, k, 1)
        dev = max(abs(decrypt(scheme, k, c0)[1]), abs(decrypt(scheme, k, c1)[0]))
        ov = abs(float(np.real(np.trace(c0.matrix @ c1.matrix))))
        rows.append({"check": f"key {k}", "value": max(dev, ov), "pass": dev <= 1e-9 and ov <= 1e-12})
    triv = cloning_success(scheme, trivial_attack(scheme), return_stderr=True)
    guess = cloning_success(scheme, random_guess_attack(scheme), return_stderr=True)
    rows.append({"check": "trivial attack = 1/2", "value": triv.value,
                 "pass": abs(triv.value - 0.5) <= 1e-9})
    rows.append({"check": "random guessing = 1/4", "value": guess.value,
                 "pass": abs(guess.value - 0.25) <= 1e-9})
    doc = {"schema_version": SCHEMA_VERSION, "n": p["n"], "keys": scheme.num_keys,
           "exact_key_average": scheme.exact,
           "max_roundtrip_error": max(r["value"] for r in rows[:-2]),
           "trivial_attack": {"value": triv.value, "stderr": triv.stderr},
           "random_guess_attack": {"value": guess.value, "stderr": guess.stderr}}
    return ["check", "value", "pass"], rows, _json_text(doc)


DISPATCH = {
    "clifford": _run_clifford,
    "entropy": _run_entropy,
    "verify-lemmas": _run_verify_lemmas,
    "moe-seesaw": _run_moe,
    "decoupling": _run_decoupling,
    "bound-table": _run_bound,
    "qecm-demo": _run_qecm,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def run(config: ExperimentConfig) -> RunReport:
    """Run a subcommand, write its outputs atomically and return the report."""
    if config.subcommand not in DISPATCH:
        raise ValueError(f"unknown subcommand {config.subcommand!r}")
    started = _now()
    out = DISPATCH[config.subcommand](config)
    columns, rows, text = out[:3]
    extra = out[3] if len(out) > 3 else {}
    report = RunReport(config, started, _now(), list(columns), rows)
    if config.output_path:
        target = Path(config.output_path)
        for name, body in extra.items():
            atomic_write(target.with_name(name), body)
        atomic_write(target, text)
        atomic_write(target.with_name(target.name + ".run.json"), _json_text(report.to_json()))
    elif config.subcommand == "entropy":
        sys.stdout.write(text)
    return report


def emit_summary(report: RunReport) -> str:
    """``PASS k/k``, ``FAIL p/k (see row i)`` or ``PASS 0/0 (no checks executed)``.

    Row numbers count data rows from 1.
    """
    total = report.total
    if total == 0:
        warnings.warn("run executed no checks", UserWarning, stacklevel=2)
        return "PASS 0/0 (no checks executed)"
    bad = report.failures
    if not bad:
        return f"PASS {total}/{total}"
    return f"FAIL {total - len(bad)}/{total} (see row {bad[0] + 1})"


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    cfg = parse_invocation(argv)
    try:
        report = run(cfg)
    except Exception as exc:  # noqa: BLE001 - surfaced as a machine-readable record
        record = {"error": type(exc).__name__, "message": str(exc), "subcommand": cfg.subcommand}
        sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
        return 1
    if not cfg.quiet:
        print(emit_summary(report), file=sys.stderr if cfg.subcommand == "entropy"
              and not cfg.output_path else sys.stdout)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
