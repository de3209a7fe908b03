"""
Backward and forward renewal times
==================================

Simulate a delayed renewal process started at age b, read B_t and D_t, and
compare the mean forward time with Lorden's bound Theta = E zeta^2 / E zeta.
"""
import numpy as np

from renewcouple import Gamma, Uniform, generate_path, lorden_theta, readout, simulate_recurrence

law = Gamma(2.0, 1.0)

# a single path, started from age 1.5
path = generate_path(1.5, law, horizon=10.0, stream=np.random.default_rng(3))
print("epochs:", np.round(path.epochs, 3))
for t in (0.5, 4.0, 9.0):
    r = readout(path, t)
    print(f"t={t}: B={r.backward:.3f} D={r.forward:.3f} R={r.count}")

# many paths at once; row i replays path i exactly
for law in (Gamma(2.0, 1.0), Uniform(0.0, 1.0)):
    t = 50 * law.mean
    s = simulate_recurrence(law, 0.0, [t], n_paths=100_000, seed=0)
    d = s.forward[:, 0]
    print(f"{law}: E D_t = {d.mean():.4f}, equilibrium {law.moment(2) / (2 * law.mean):.4f}, "
          f"Theta = {lorden_theta(law):.4f}")
