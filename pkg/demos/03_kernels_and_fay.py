"""Prime form, Szego kernel and the Fay identities on a genus 2 curve.

The Szego kernel for a characteristic (p, q) is a ratio of a shifted
theta value to the prime form.  Its diagonal residue is 1, its product
over swapped arguments reproduces the Bergmann kernel, and the n-point
determinant identity closes the whole family; n = 2 is the trisecant
case.
"""

import numpy as np

from rhtheta.hyperelliptic import HyperellipticCurve, compute_periods
from rhtheta.kernels import KernelContext
from rhtheta.theta import ThetaChar

pd = compute_periods(HyperellipticCurve(
    [-2.1 - 0.3j, -1.2 + 0.8j, -0.2 - 0.9j, 0.9 + 0.7j, 1.8 - 0.5j,
     2.4 + 0.9j]))
kc = KernelContext(pd, ThetaChar((0.07, -0.19), (0.31, 0.12)))

P, Q = (0.4 + 1.3j, 1), (-1.0 - 1.1j, 2)
print(f"prime form E(P,Q)   = {kc.prime_form(P, Q):.10f}")
print(f"antisymmetry        {abs(kc.prime_form(P, Q) + kc.prime_form(Q, P)):.2e}")

# diagonal residue: (lam - mu) S((lam,j),(mu,j)) -> 1 as mu -> lam
lam = 0.4 + 1.3j
for eps in (1e-3, 1e-5):
    val = (eps * kc.szego((lam + eps, 1), (lam, 1)))
    print(f"diagonal residue at eps={eps:g}: {val:.8f}")

# swapped product against the Bergmann kernel
dd = kc.log_hess_char_at_zero()
vP = pd.differentials(P[0], 1.0)[:, 0]
vQ = pd.differentials(Q[0], -1.0)[:, 0]
lhs = kc.szego(P, Q) * kc.szego(Q, P)
rhs = -kc.bergmann(P, Q) - vP @ dd @ vQ
print(f"szego*szego vs bergmann    {abs(lhs - rhs):.2e}")

# Fay determinant identities for n = 2 (trisecant) and n = 3
rng = np.random.default_rng(9)


def sample():
    while True:
        z = complex(rng.uniform(-3, 3), rng.uniform(-2, 2))
        if min(abs(z - p) for p in pd.curve.points) > 0.3:
            return (z, int(rng.integers(1, 3)))


for n in (2, 3):
    xs = [sample() for _ in range(n)]
    ys = [sample() for _ in range(n)]
    print(f"fay identity n={n}:  residual {kc.fay_residual(xs, ys):.2e}")
