"""
Fitting the count model instead of plugging in
==============================================

At low sequencing depth the log-ratio transform of raw counts is a
noisy stand-in for the latent coordinates, and the plug-in estimator
inherits that noise. The latent-variable estimator maximizes the
penalized likelihood of the counts themselves, alternating Newton
updates of the latent coordinates with penalized covariance updates.
This script fits both on the same shallow dataset and compares edge
recovery; it also prints the objective trace to show the alternation
descending.

Run with: python3 demos/03_count_model_fit.py
"""

import numpy as np

from invglasso import (
    NetworkSpec,
    ScenarioSpec,
    adjacency_matrix,
    alr_estimate,
    edges_from_precision,
    empirical_cov,
    fit_path,
    inv_glasso_path,
    lambda_grid,
    simulate_dataset,
)

scenario = ScenarioSpec(
    network=NetworkSpec("chain", 10, seed=2),
    depth="low",
    variation="high",
    n=60,
    seed=14,
)
x, truth = simulate_dataset(scenario)
print(f"median depth: {int(np.median(x.counts.sum(axis=1)))} reads")

reference = x.n_taxa - 1
candidates = frozenset({x.n_taxa - 2, x.n_taxa - 1})
data = alr_estimate(x, reference, candidates)
block = data.penalized_block
lambdas = lambda_grid(empirical_cov(data.z), block, num=8, ratio=0.1)

plug_in = inv_glasso_path(data, lambdas)
latent, diagnostics = fit_path(x, reference, candidates, lambdas)

truth_edges = edges_from_precision(adjacency_matrix(truth.edges),
                                   block=block)


def recovery(path):
    rows = []
    for est in path.estimates:
        found = edges_from_precision(est.omega, block=block)
        tp = len(found.edges & truth_edges.edges)
        fp = len(found.edges - truth_edges.edges)
        rows.append((tp, fp))
    return rows


print(f"\n{'lambda':>8}  {'plug-in tp/fp':>13}  {'latent tp/fp':>12}")
for lam, (ptp, pfp), (ltp, lfp) in zip(
    lambdas, recovery(plug_in), recovery(latent)
):
    print(f"{lam:8.4f}  {f'{ptp}/{pfp}':>13}  {f'{ltp}/{lfp}':>12}")

# Each outer iteration alternates a Newton pass over the latent rows
# with one penalized covariance solve; the trace is the objective
# after each alternation and must not increase.
mid = len(lambdas) // 2
trace = np.asarray(diagnostics[mid].objective_trace)
print(f"\nobjective trace at lambda={lambdas[mid]:.4f} "
      f"({diagnostics[mid].outer_iterations} outer iterations):")
for step, val in enumerate(trace):
    print(f"  {step}: {val:.6f}")
print("nonincreasing:", bool(np.all(np.diff(trace) <= 1e-8)))
