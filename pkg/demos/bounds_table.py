"""Evaluate the guarantee quantities for a model.

Prints K(zeta), xi_0, alpha_add, the zeta_k^+ envelope recursion and the
plug-in checks for the default bounds configuration::

    python3 demos/bounds_table.py
"""

from reprocs.bounds import BoundParams, bounds_report, ric_phi_bounds, zeta_plus_seq

rep = bounds_report(r0=12, J=2, c=2, n=200, zeta=5e-7, gamma_new=1.0, gamma_star=10.0,
                    lambda_minus=1.0, f=1.0, K_max=8)
print(f"K = {rep['K']}, xi0 = {rep['xi0']:.4f}, alpha_add = {rep['alpha_add']:.3e}")

# %% the envelope recursion against 0.6^k
seq = zeta_plus_seq(BoundParams(), 8)
for k, z in enumerate(seq.values):
    print(f"k = {k}  zeta_k^+ = {z:.5f}  0.6^k = {0.6 ** k:.5f}")

# %% RIC bounds that feed phi^+
r = ric_phi_bounds(BoundParams(), 1e-4, seq.values[1])
print(f"delta_2s(Phi_0) <= {r.delta2s_phi0_bound:.4f}, delta_2s(Phi_k) <= {r.delta2s_phik_bound:.4f}, "
      f"phi <= {r.phi_bound:.4f}")
