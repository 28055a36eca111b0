r"""
How alpha0 scales with h
------------------------
The energy-preserving parameter behaves like const * h^2, so halving h
divides it by about four.
"""
from equip import run_alpha_scaling

table = run_alpha_scaling("pendulum", 2, [0.2, 0.1, 0.05, 0.025], (0.0, 1.0))
print(table.to_text())
print("ratios:", [f"{r:.4f}" for r in table.ratios])

#%%
# The law is not specific to the pendulum.
table = run_alpha_scaling("henon_heiles", 3, [0.4, 0.2, 0.1, 0.05], (0.3, 0.2, 0.2, 0.1))
print(table.to_text())

#%%
# alpha0 is only as accurate as energy_tol / |g(0, h)|.  For small-energy
# Henon-Heiles data the Gauss energy residual itself sinks below roundoff, and
# the rows are flagged unresolved instead of reporting noise as a ratio.
table = run_alpha_scaling("henon_heiles", 3, [0.2, 0.1, 0.05, 0.025], (0.1, 0.1, 0.0, 0.0))
print(table.to_text())

#%%
# For a quadratic Hamiltonian every alpha conserves energy and no search is run
# (g(0, h) is zero up to roundoff, hence the unresolved marks).
print(run_alpha_scaling("harmonic_oscillator", 2, [0.2, 0.1, 0.05, 0.025]).to_text())
