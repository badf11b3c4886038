"""Muckenhoupt constants of power weights and the sparse weighted functional.

|x|^a is in A_p exactly when -n < a < n(p-1) (p > 1) or -n < a <= 0 (p = 1).
Inside that range the estimate settles as the cube family deepens; outside
it keeps growing.

Run: python demos/weights_and_sparse.py   (about 10 s)
"""
from bsvylab import dyadic
from bsvylab.field import GridSpec, dilate, make_catalog_function
from bsvylab.weights import WeightSpec, ap_constant, default_family

depths = (40, 80, 160)
fams = [default_family(1, depth=d) for d in depths]
print(f"{'a':>6} {'p':>4}  " + "  ".join(f"depth {d:>3}" for d in depths))
for p in (1.0, 2.0):
    for a in sorted({-0.5, p - 1.5, p - 0.5}):
        w = WeightSpec.power(a)
        ests = [ap_constant(w, p, fam) for fam in fams]
        print(f"{a:>6} {p:>4}  " + "  ".join(f"{e:>9.4g}" for e in ests))

f = make_catalog_function("gaussian_bump", {"dim": 1, "sigma": 1.0, "window": 6.0})
print("\nsparse functional, p = 1, beta = -1/2, k = l = 1")
for w in (WeightSpec.constant(), WeightSpec.power(-0.5)):
    for a in (0.25, 1.0, 4.0):
        fa = dilate(f, a)
        res = dyadic.sparse_sup(fa, 1.0, -0.5, 1, 1, 0.0, w, window=(-14, 6),
                                rhs_grid=GridSpec(1, 6.0 / a, 4096))
        print(f"  {w.kind:>8} a={a:<5} sup {res.sup:.5g}  rhs {res.rhs:.5g}  ratio {res.ratio:.5f}")
