"""Both sides of the equivalence across a family of functions and dilations.

sup_lambda Phi(lambda) is compared with || |grad^k f| ||_X. The ratio should
stay in a fixed window; a dilation moves the maximiser by a^{k + gamma/q}
and scales the value by a^{k - n/p}.

Run: python demos/equivalence_and_dilation.py   (about 15 s)
"""
import warnings

from bsvylab.bsvy import FunctionalConfig, LambdaGrid, bsvy_sup, bsvy_value
from bsvylab.field import dilate, make_catalog_function
from bsvylab.spaces import Lebesgue, Morrey

warnings.simplefilter("ignore", RuntimeWarning)

family = [
    ("gaussian", make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 1.0})),
    ("x gaussian", make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 0.6, "monomial": [1]})),
    ("windowed sine", make_catalog_function("windowed_sinusoid", {"dim": 1, "omega": 2.0, "window": 4.0})),
    ("mollified 1_B", make_catalog_function("mollified_indicator", {"dim": 1})),
]
for gamma in (1.0, -1.0):
    cfg = FunctionalConfig(k=1, q=2.0, gamma=gamma, space=Lebesgue(2.0), points_per_axis=1024,
                           lam=LambdaGrid(1e-3, 1e5, 8))
    print(f"\nX = L^2, k = 1, q = 2, gamma = {gamma:+g}")
    print(f"{'function':>14} {'a':>5} {'sup':>10} {'argmax':>11} {'rhs':>10} {'ratio':>8}")
    for name, f in family:
        for a in (0.25, 1.0, 4.0):
            r = bsvy_sup(dilate(f, a), cfg)
            print(f"{name:>14} {a:>5} {r.sup:>10.4f} {r.argmax:>11.4g} {r.rhs:>10.4f} {r.ratio:>8.4f}")

# the same functional with a Morrey outer norm
cfg = FunctionalConfig(k=1, q=2.0, gamma=1.0, space=Morrey(3.0, 2.0), p=2.0, points_per_axis=1024)
r = bsvy_sup(family[0][1], cfg)
print(f"\nMorrey(3, 2) outer norm, gaussian: ratio {r.ratio:.4f}")

# dilation covariance at one level, fixed outer box
cfg = FunctionalConfig(k=2, q=1.0, gamma=1.5, space=Lebesgue(1.0), box_half_width=8.0, points_per_axis=2048)
f, a, lam = family[0][1], 1.7, 0.8
lhs = bsvy_value(dilate(f, a), lam, cfg)
rhs = a ** (2 - 1) * bsvy_value(f, lam * a ** (-2 - 1.5), cfg)
print(f"\ncovariance at a={a}, lambda={lam}: {lhs:.6f} vs {rhs:.6f}")
