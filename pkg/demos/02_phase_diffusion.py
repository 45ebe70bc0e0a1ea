"""Phase diffusion: a random Jz^2 phase on the split twin-Fock state.

The probe exp(-i chi Jz^2) exp(-i pi/2 Jy)|N/2, N/2> keeps super-linear QFI
for most chi but loses all Jy sensitivity at chi = pi/4, where it becomes a
Jy null vector.  The one-shot posterior built from the fidelity with the
undiffused probe shows the same thing.
"""

import numpy as np

from dicke_metrology.metrology import bayes_posterior, qfi_vs_chi

N = 40
chis = [0.0, 0.20, 0.39, 0.59, np.pi / 4]

for chi, q in zip(chis, qfi_vs_chi(N, chis)):
    print(f"chi={chi:.3f}  QFI={q:10.4f}  (SQL = {N})")

grid = np.linspace(-np.pi / 2, np.pi / 2, 181)
print("\nposterior after one shot, true phase 0")
for chi in chis:
    post = bayes_posterior(N, chi, 0.0, grid)
    print(f"chi={chi:.3f}  density at 0: {post[90]:7.4f}  peak/floor: {post.max() / post.min():10.3g}")

# a coarse scan of the QFI curve
fine = np.linspace(0, np.pi / 2, 13)
print("\n" + "  ".join(f"{c:.2f}:{q:.0f}" for c, q in zip(fine, qfi_vs_chi(N, fine))))
