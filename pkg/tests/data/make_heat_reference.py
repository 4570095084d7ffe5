"""Regenerate heat_classical_reference.csv from the closed-form heat solution.

Scenario ``heat-classical``: z_t = z_xx on [0, 1] with Dirichlet conditions,
z(0) = sqrt(2) sin(pi x), control 2 on the zone [0, 1/2], 16 sine modes.
Mode i evolves as exp(-lam t) c_i(0) + 2 beta_i (1 - exp(-lam t)) / lam.
"""
import csv
from pathlib import Path

import numpy as np

N, b = 16, 0.5
i = np.arange(1, N + 1)
lam = (i * np.pi) ** 2
beta = np.sqrt(2.0) * (1.0 - np.cos(i * np.pi / 2)) / (i * np.pi)
c0 = (i == 1).astype(float)
x = np.linspace(0.0, 1.0, 21)
t = np.linspace(0.0, b, 6)
decay = np.exp(-np.outer(lam, t))
coef = decay * c0[:, None] + 2.0 * beta[:, None] * (1.0 - decay) / lam[:, None]
Z = (np.sqrt(2.0) * np.sin(np.pi * np.outer(x, i))) @ coef

with open(Path(__file__).with_name("heat_classical_reference.csv"), "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x"] + [f"t={v:.17g}" for v in t])
    for xi, row in zip(x, Z):
        w.writerow([f"{xi:.17g}"] + [f"{v:.17g}" for v in row])
