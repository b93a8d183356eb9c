# Run the randomized online policy against the horizon-control baselines
# and the static offline optimum on one synthetic workload.
#
# Run:  python3 demos/02_policies_head_to_head.py

from edgecache import (CostModel, ReplacementParams, RoscConfig, chc_policy,
                       gen_replacement, path_length, rhc_policy, run_rosc,
                       sopt_policy)

params = ReplacementParams(N=100, T=1000, U=200)
trace = gen_replacement(params, seed=3)
cost = CostModel.uniform(alpha=0.05, beta_star=10.0, n_services=trace.N, M=10)

print(f"workload: N={trace.N}, T={trace.T}, per-slot requests={params.U}")
print(f"top-10 churn per slot: {path_length(trace, 10) / trace.T:.3f}\n")

rows = []
rec = run_rosc(trace, RoscConfig(cost=cost, W=10, K=100, seed=0))
rows.append(("rosc (W=10, K=100)", rec))
rows.append(("rhc  (W=10)", rhc_policy(trace, cost, W=10)))
rows.append(("chc  (W=10)", chc_policy(trace, cost, W=10)))
rows.append(("sopt (offline)", sopt_policy(trace, cost)))

print(f"{'policy':<22}{'cost/slot':>12}{'runtime ms':>12}")
for name, r in rows:
    print(f"{name:<22}{r.total_cost / trace.T:>12.3f}{r.runtime_ms:>12.1f}")

print("\nthe randomized policy's pre-rounding probabilities stay feasible:")
frac = rec.extras["fractional"]
print("  max entry:", frac.max(), " max slot mass:", frac.sum(axis=1).max())
print("  ensemble insertions per unit path mass:",
      round(rec.extras["ensemble_insertions_per_path"], 2))
