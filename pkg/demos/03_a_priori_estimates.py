"""Run the raw flow from a perturbed cap and watch the a priori bounds.

u e^t stays between the initial min and max of u, |D phi| never grows, the
speed stays in its initial range and det(iota) stays in the window those
bounds imply.
"""

import logging

from igcf import FlowConfig, InitialData, build_cap, estimate_report, run_flow

cap = build_cap(2, 1.0, 32, 64)
phi0 = InitialData(c=1.0, eps_r=0.05, eps_theta=0.02, k=2).field(cap)

# %% T = 3 in raw mode (a few seconds)
res = run_flow(phi0, FlowConfig(T_final=3.0, mode="raw", monitor_stride=50))
s = res.series
delta = 10 * (cap.dr**2 + max(s.dt))
rep = estimate_report(s, delta=delta, nbc_tol=10 * cap.dr**2)
for line in rep.lines():
    print(line)

# %% the same over time
for i in range(0, len(s), max(1, len(s) // 8)):
    print(f"t={s.t[i]:5.2f}  u e^t in [{s.min_u_et[i]:.4f}, {s.max_u_et[i]:.4f}]  "
          f"sup|Dphi|={s.sup_grad[i]:.4f}  Q in [{s.min_q[i]:.3f}, {s.max_q[i]:.3f}]")

# %% a step size five times the stability limit breaks the speed bound first
logging.getLogger("igcf").setLevel(logging.ERROR)  # silence step retries
bad = run_flow(phi0, FlowConfig(T_final=0.2, dt_safety=5.0))
print("safety 5 ->", estimate_report(bad.series, delta=delta).first_failed)
