"""Functional bagdistance versus integrated depth on a spiked curve."""

import numpy as np

from distspace.functional import FunctionalSample, fbd, fit_pointwise, mfd

rng = np.random.default_rng(3)
t = np.linspace(0, 1, 41)
curves = np.sin(2 * np.pi * t) + rng.standard_normal((60, 1)) + 0.3 * rng.standard_normal((60, 41))
model = fit_pointwise(FunctionalSample.from_array(curves, t), seed=1)

base = curves[0]
for height in (0.0, 50.0, 500.0, 5000.0):
    x = base.copy()
    x[:2] += height  # spike on 2 of 41 grid points
    print(f"spike {height:7.0f}: fbd {fbd(x, model):10.3f}   MFD(hd) {mfd(x, model, 'hd'):.3f}")
