"""Truncated integrals of the inner quantity for the mollified-indicator witness.

With gamma = -ell q and n(1/p - 1/q) >= ell the integrand decays like
|x|^{-n}, so the truncated integral grows like log R. The control run with a
convergent exponent levels off.

Run: python demos/sharpness_growth.py   (about 1 minute)
"""
from bsvylab.bsvy import sharpness_experiment

R = [8, 16, 32, 64]
for label, k in (("failing, k = l = 1", 1), ("control, k = l = 2", 2)):
    tab = sharpness_experiment(1, 2, k, k, R, dim=2, lam=0.75)
    print(f"\n{label} ({tab.regime}): value(64)/value(8) = {tab.growth:.4f}")
    for row in tab.rows():
        print(f"  R = {row['R']:>4.0f}   value = {row['value']:.6f}")

tab = sharpness_experiment(1, 2, 1, 1, [6, 8, 16], dim=2, lam=1.2, directions=256)
print(f"\nlambda = 1.2 > sup|Delta f|: values {tab.values.tolist()}")
