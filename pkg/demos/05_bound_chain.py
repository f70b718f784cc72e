"""The security bound chain evaluated in the log domain at 128-bit precision."""

# %%
from mpmath import nstr

from uncloneable_lab.bound import bound_report, theorem1_schedule, verify_theorem1

# %% One point of the schedule, term by term (all values are log2).
rep = bound_report(theorem1_schedule(40000))
p = rep.params
print(f"n={p.n} m={p.m} r={p.r} log2 eps0={nstr(p.eps0.log2, 6)} log2 eps1={nstr(p.eps1.log2, 6)}")
print("delta        ", nstr(rep.delta, 12))
print("log2 gamma   ", nstr(rep.gamma.log2, 12))
print("log2 eta     ", nstr(rep.eta.log2, 12))
print("log2 eps     ", nstr(rep.eps_bound.log2, 12))
print("log2 target  ", nstr(rep.theorem1_rhs.log2, 12))

# %% Across the grid: the chain closes everywhere, but the bound is only meaningful for huge n.
rows, first = verify_theorem1(20000, 10 ** 8, 16)
print("first n where the chain closes:", first)
for r in rows:
    print(f"n={r.params.n:>10}  log2 eps={nstr(r.eps_bound.log2, 8):>12}  "
          f"margin={nstr(r.log2_margin, 6):>8}  ok={r.chain_ok}")
