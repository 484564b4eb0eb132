"""
Where does a spike leave the bulk?
==================================

A single spike of strength d along e_1, square shape (phi = 1). Below d = 1
the top eigenvalue stays at the edge 4; above it, it detaches and follows
theta(d) = 2 + d + 1/d. Run: python demos/01_bbp_transition.py
"""
import numpy as np

from spikelab import laws
from spikelab.checks.common import SpectralTask, run_spectral
from spikelab.ensemble import Ensemble

M = N = 400
trials = 40
phi = M / N
edge = laws.edges(phi)[1]

print(f"M = N = {M}, edge gamma_+ = {edge:.3f}, K^(-1/3) = {M ** (-1 / 3):.3f}")
print(f"{'d':>5} {'median mu_1':>12} {'theta(d)':>9} {'u(d)':>6} {'median overlap':>15}")
for d in (0.5, 0.8, 1.0, 1.2, 1.5, 2.0, 3.0):
    ens = Ensemble.simple(M, N, [d])
    v1 = ens.spikes.directions[:, :1]
    # same seed at every d: the noise is shared, so the trend is not hidden by sampling error
    data = run_spectral(SpectralTask(ens, top=1, directions=v1), trials, seed=7)
    mu1 = np.median(data["mu"][:, 0])
    overlap = np.median(data["q_overlap"][:, 0, 0] ** 2)
    theta = laws.classical_location(d, phi) if d > 1 else edge
    u = laws.cone_mass(d, phi) if d > 1 else 0.0
    print(f"{d:5.1f} {mu1:12.4f} {theta:9.4f} {u:6.3f} {overlap:15.3f}")

# the transition is blurred over a window of width about K^(-1/3): near d = 1
# the finite-size eigenvalue sits slightly above the edge and the overlap is small but not zero
