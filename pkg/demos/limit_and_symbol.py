"""The lambda-tail of the level-set functional and the symbol that predicts it.

In one dimension the tail value is (2/|gamma|)^{1/q} ||f^(k)||_X. In two
dimensions with k = 2 the prediction depends on how the k-th directional
symbol weights mixed partials; the measured tail decides between the two
candidate weightings.

Run: python demos/limit_and_symbol.py   (about 10 s)
"""
import warnings

import numpy as np

from bsvylab.bsvy import FunctionalConfig, HQuadrature, bsvy_limit, limit_prediction
from bsvylab.calculus import directional_symbol, limit_symbol_oracle
from bsvylab.field import make_catalog_function
from bsvylab.spaces import Lebesgue

warnings.simplefilter("ignore", RuntimeWarning)

# one dimension: gaussian bump, several (k, q, gamma)
f = make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 1.0})
print("n = 1, X = L^2")
print(f"{'k':>2} {'q':>4} {'gamma':>6} {'tail':>12} {'predicted':>12} {'rel. error':>11}")
for k, q, gamma in [(1, 2.0, 1.0), (1, 1.0, -2.0), (2, 2.0, 1.0), (2, 1.0, -2.0)]:
    res = bsvy_limit(f, FunctionalConfig(k=k, q=q, gamma=gamma, space=Lebesgue(2.0)))
    print(f"{k:>2} {q:>4} {gamma:>6} {res.limit:>12.6f} {res.predicted:>12.6f} {res.relative_error:>11.2e}")

# pointwise: the difference quotient Delta^2_{r xi} f(x) / r^2 against both symbols
g = make_catalog_function("polynomial", {"dim": 2, "coeffs": {"1,1": 1.0}})
xi = np.array([1.0, 1.0]) / np.sqrt(2.0)
res = limit_symbol_oracle(g, np.zeros(2), xi, 2)
print("\nf = x1 x2, xi = (1,1)/sqrt 2, k = 2")
print(f"  difference-quotient limit {res.limit:.6f}")
for w in ("plain", "multinomial"):
    print(f"  {w:>11} symbol {float(directional_symbol(g, np.zeros(2), xi, 2, w)):.6f}"
          f"   residual slope {res.residual_slopes[w]:.2f}")
print(f"  selected: {res.selected}")

# full pipeline in two dimensions, k = 2
h = make_catalog_function("gaussian_bump", {"dim": 2, "sigma": 1.0})
cfg = FunctionalConfig(k=2, q=2.0, gamma=1.0, space=Lebesgue(2.0), points_per_axis=64,
                       hquad=HQuadrature(directions=32))
lim = bsvy_limit(h, cfg)
print("\nn = 2, k = 2, gaussian bump")
print(f"  measured tail           {lim.limit:.6f}")
print(f"  multinomial prediction  {lim.predicted:.6f}")
print(f"  plain prediction        {limit_prediction(h, cfg, weighting='plain'):.6f}")
