r"""
Order of the three modes
------------------------
Global error at T = 2 on a halving grid.  Fixing alpha != 0 costs two orders;
letting alpha depend on h as in the energy-preserving mode restores order 2s.
"""
from equip import Mode, SolverConfig, run_convergence

# a pendulum orbit that never passes p = 0 or q = 0 on [0, 2]; at those points
# the energy residual loses its leading term and alpha0 / h^2 is ill-defined
y0 = (0.5, 1.9)
cfg = SolverConfig(energy_tol=1e-14)

for s, hs in ((2, [0.2, 0.1, 0.05, 0.025]), (3, [0.4, 0.2, 0.1, 0.05])):
    for mode in (Mode.gauss(), Mode.fixed_alpha(0.05), Mode.equip()):
        study = run_convergence("pendulum", mode, s, hs, 2.0, y0, cfg)
        print(study.to_text())

#%%
# The same study on the Kepler problem, with its exact solution as reference.
study = run_convergence("kepler", "equip", 2, [0.2, 0.1, 0.05, 0.025], 2.0)
print(study.reference, [f"{x:.3f}" for x in study.local_slopes])
