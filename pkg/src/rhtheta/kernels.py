"""Szego and Bergmann kernels, the prime form, subset characteristics, and
the projective connection of a hyperelliptic curve.

Everything is expressed through theta functions on the Jacobian.  The
scalar ingredients are

* an odd nonsingular half characteristic [p*, q*], whose gradient at the
  origin combines with the normalized differentials into the polynomial
  Q(lambda) = sum_beta (A^-1 grad)_beta lambda^(beta-1);
* the half differential h with h^2 = Q(lambda)/w, fixed per point by the
  principal square root and continued along paths by sign tracking;
* the Abel map kept on the universal cover, so theta quotients with
  different characteristics stay consistent between calls.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import (
    CharOnThetaDivisor,
    CoincidentPoints,
    LoopConstructionFailed,
    RelationViolated,
)
from .geometry import split_polyline
from .quadrature import _gl_nodes
from .theta import ThetaChar, find_odd_nonsingular_char, theta, theta_derivs


def _sheet_sign(sheet):
    return 1.0 if sheet == 1 else -1.0


def riemann_constant(periods, tol=1e-6):
    """Vector of Riemann constants for the Abel map based at the first
    branch point.

    For this basepoint the constant is a half period; the scan checks every
    candidate against the vanishing property theta(K + U(D)) = 0 over all
    (g-1)-element branch point divisors D and insists on a unique winner.
    """
    g = periods.curve.genus
    B = periods.B
    n_pts = len(periods.curve.points)
    U = [periods.abel(branch_index=m) for m in range(n_pts)]
    divisors = [sum((U[m] for m in D), np.zeros(g, dtype=complex))
                for D in itertools.combinations(range(n_pts), g - 1)]
    scale = abs(theta(np.zeros(g), B))
    winners = []
    halves = (0.0, 0.5)
    for bits in itertools.product(halves, repeat=2 * g):
        p = np.array(bits[:g])
        q = np.array(bits[g:])
        K = B @ p + q
        worst = max(abs(theta(K + d, B)) for d in divisors)
        if worst < tol * scale:
            winners.append((K, worst))
    if len(winners) != 1:
        raise RelationViolated(
            f"riemann constant scan found {len(winners)} candidates")
    return winners[0][0]


def even_subset_characteristics(periods, tol=1e-8):
    """Half characteristics of branch point subsets of size g+1 through the
    basepoint.

    Each subset T (taken with the Riemann constant) solves
    B p + q = sum_{m in T} U(m) - K for half-integer p, q; the resulting
    characteristics are even and their theta constants nonzero.  Returns
    [(T, char), ...] in lexicographic subset order.
    """
    g = periods.curve.genus
    B = periods.B
    K = riemann_constant(periods)
    n_pts = len(periods.curve.points)
    U = [periods.abel(branch_index=m) for m in range(n_pts)]
    out = []
    for T in itertools.combinations(range(n_pts), g + 1):
        if T[0] != 0:
            continue
        z = sum((U[m] for m in T), np.zeros(g, dtype=complex)) - K
        p = 0.5 * np.rint(2.0 * np.linalg.solve(B.imag, z.imag))
        q = 0.5 * np.rint(2.0 * (z - B @ p).real)
        res = z - (B @ p + q)
        if np.max(np.abs(res)) > tol:
            raise RelationViolated(
                f"subset {T} does not give a half characteristic "
                f"(residual {np.max(np.abs(res)):.2e})")
        ch = ThetaChar.from_arrays(np.mod(p, 1.0), np.mod(q, 1.0))
        if ch.parity() != 1:
            raise RelationViolated(f"subset {T} characteristic is odd")
        if abs(theta(np.zeros(g), B, ch)) < tol:
            raise RelationViolated(f"subset {T} theta constant vanishes")
        out.append((T, ch))
    return out


def sampled_path_integral(periods, vertices, f, closed=False, order=24):
    """Integral of f(z, U(z), sheet_sign) along a polyline on the surface.

    The Abel map is carried along the path: chunk endpoints get cumulative
    values, Gauss nodes inside a chunk get theirs by a short nested rule.
    Suited to kernel integrands, which need U at every node.
    """
    pd = periods
    pieces, _ = split_polyline(pd.curve.cuts, vertices, closed=closed)
    x, wts = _gl_nodes(order)
    xi, wi = _gl_nodes(12)
    U = pd.abel(vertices[0], sheet=1)
    step = 0.15 * pd.curve.min_separation
    total = 0.0 + 0.0j
    for z0, z1, sign in pieces:
        n_chunks = max(1, int(np.ceil(abs(z1 - z0) / step)))
        for c in range(n_chunks):
            a = z0 + (z1 - z0) * c / n_chunks
            b = z0 + (z1 - z0) * (c + 1) / n_chunks
            mid, h = 0.5 * (a + b), 0.5 * (b - a)
            nodes = mid + h * x
            # Abel values at the Gauss nodes, each from the chunk start
            Un = np.empty((len(nodes), pd.curve.genus), dtype=complex)
            for k, zn in enumerate(nodes):
                mm, hh = 0.5 * (a + zn), 0.5 * (zn - a)
                vv = pd.differentials(mm + hh * xi, sign)
                Un[k] = U + hh * (vv @ wi)
            total += h * np.sum([wts[k] * f(nodes[k], Un[k], sign)
                                 for k in range(len(nodes))])
            vv = pd.differentials(mid + h * x, sign)
            U = U + h * (vv @ wts)
    return total


class KernelContext:
    """Kernel machinery of one curve and one twist characteristic.

    The twist characteristic [p, q] is arbitrary real; its theta constant
    must not vanish.  The odd half characteristic and everything derived
    from it is fixed by the curve alone.
    """

    def __init__(self, periods, char=None):
        self.periods = periods
        g = periods.curve.genus
        self.char = char if char is not None else ThetaChar.zero(g)
        self.odd_char = find_odd_nonsingular_char(periods.B)
        ev = theta_derivs(np.zeros(g), periods.B, self.odd_char)
        self.gstar = ev.grad
        # Q(lambda) = sum_beta coeff_beta lambda^beta, coefficients in
        # ascending order; h^2 = Q/w
        self.q_coeffs = periods.C @ self.gstar
        self.theta0 = theta(np.zeros(g), periods.B, self.char)
        scale = abs(theta(np.zeros(g), periods.B))
        if abs(self.theta0) < 1e-8 * scale:
            raise CharOnThetaDivisor(
                "theta constant of the twist characteristic vanishes")
        self._U_cache = {}

    # -- scalar ingredients --------------------------------------------

    def q_poly(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = np.zeros_like(lam)
        for c in self.q_coeffs[::-1]:
            out = out * lam + c
        return out

    def q_poly_deriv(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = np.zeros_like(lam)
        n = len(self.q_coeffs)
        for k in range(n - 1, 0, -1):
            out = out * lam + k * self.q_coeffs[k]
        return out

    def h_squared(self, lam, sheet=1):
        return self.q_poly(lam) / self.periods.curve.w(lam, sheet)

    def h(self, lam, sheet=1):
        """Per point half differential; sign fixed by the principal root."""
        return np.sqrt(self.h_squared(lam, sheet))

    def abel(self, point):
        key = (complex(point[0]), int(point[1]))
        if key not in self._U_cache:
            self._U_cache[key] = self.periods.abel(key[0], sheet=key[1])
        return self._U_cache[key]

    # -- kernels ---------------------------------------------------------

    def prime_form(self, P, Q):
        """Scalar prime form (the half differentials at both points taken
        with their per point signs)."""
        if abs(P[0] - Q[0]) < 1e-12 * self.periods.curve.scale and P[1] == Q[1]:
            raise CoincidentPoints("prime form needs distinct points")
        zeta = self.abel(P) - self.abel(Q)
        return (theta(zeta, self.periods.B, self.odd_char)
                / (self.h(*P) * self.h(*Q)))

    def szego(self, P, Q):
        """Szego kernel with the twist characteristic, per point h signs."""
        zeta = self.abel(P) - self.abel(Q)
        num = theta(zeta, self.periods.B, self.char)
        den = theta(zeta, self.periods.B, self.odd_char)
        return num * self.h(*P) * self.h(*Q) / (self.theta0 * den)

    def log_hess_odd(self, zeta):
        ev = theta_derivs(zeta, self.periods.B, self.odd_char)
        return ev.hess / ev.value - np.outer(ev.grad, ev.grad) / ev.value ** 2

    def log_hess_char_at_zero(self):
        g = self.periods.curve.genus
        ev = theta_derivs(np.zeros(g), self.periods.B, self.char)
        return ev.hess / ev.value - np.outer(ev.grad, ev.grad) / ev.value ** 2

    def bergmann(self, P, Q):
        """Second kernel w(P,Q): symmetric, double pole on the diagonal,
        holomorphic elsewhere, vanishing a periods."""
        zeta = self.abel(P) - self.abel(Q)
        vP = self.periods.differentials(P[0], _sheet_sign(P[1]))[:, 0]
        vQ = self.periods.differentials(Q[0], _sheet_sign(Q[1]))[:, 0]
        return -vP @ self.log_hess_odd(zeta) @ vQ

    def integrate_bergmann_over_loop(self, P, vertices):
        """Integral of w(P, .) over a closed loop in the second argument."""
        UP = self.abel(P)
        vP = self.periods.differentials(P[0], _sheet_sign(P[1]))[:, 0]

        def f(z, Uz, sign):
            vQ = self.periods.differentials(z, sign)[:, 0]
            return -vP @ self.log_hess_odd(UP - Uz) @ vQ

        return sampled_path_integral(self.periods, vertices, f, closed=True)

    def fay_residual(self, xs, ys):
        """Relative defect of the determinant identity for the kernel.

        det S(x_i, y_j) equals the theta quotient at sum U(x)-U(y) times
        the prime form cross ratio.  Per point sign choices drop out.
        """
        n = len(xs)
        S = np.array([[self.szego(x, y) for y in ys] for x in xs])
        det = np.linalg.det(S)
        g = self.periods.curve.genus
        z = sum((self.abel(x) for x in xs), np.zeros(g, dtype=complex)) \
            - sum((self.abel(y) for y in ys), np.zeros(g, dtype=complex))
        rhs = theta(z, self.periods.B, self.char) / self.theta0
        for i in range(n):
            for j in range(i + 1, n):
                rhs *= self.prime_form(xs[i], xs[j])
                rhs *= self.prime_form(ys[j], ys[i])
        for i in range(n):
            for j in range(n):
                rhs /= self.prime_form(xs[i], ys[j])
        scale = max(abs(det), abs(rhs), 1e-30)
        return abs(det - rhs) / scale

    # -- h continuation --------------------------------------------------

    def continue_h_along(self, pieces):
        """Track the half differential along sheet tagged pieces.

        Starts from the principal value at the first point and follows the
        nearest root sample to sample, bisecting on large jumps.  Returns
        (start value, end value).
        """
        z0, _, s0 = pieces[0]
        start = np.sqrt(self.h_squared(z0, 1 if s0 > 0 else 2))
        cur = start
        for idx, (za, zb, s) in enumerate(pieces):
            sheet = 1 if s > 0 else 2
            n0 = max(4, int(np.ceil(abs(zb - za)
                                    / (0.15 * self.periods.curve.min_separation))))
            # midpoint nodes only: piece boundaries sit on cuts, where the
            # sheet-tagged square is on a knife edge and both roots are
            # equidistant from the tracked value
            ts = (np.arange(n0) + 0.5) / n0
            samples = [za + (zb - za) * t for t in ts]
            if idx == len(pieces) - 1:
                samples.append(zb)
            stack = list(reversed(samples))
            prev_z = za
            while stack:
                z = stack.pop()
                val = np.sqrt(self.h_squared(z, sheet))
                best = val if abs(val - cur) <= abs(val + cur) else -val
                if abs(best - cur) > 0.6 * max(abs(best), abs(cur)) \
                        and abs(z - prev_z) > 1e-12:
                    stack.append(z)
                    stack.append(0.5 * (z + prev_z))
                    continue
                cur = best
                prev_z = z
        return start, cur

    def continue_h_around(self, vertices):
        """Continue h once around a closed loop; returns (start, ratio)."""
        pieces, _ = split_polyline(self.periods.curve.cuts, vertices,
                                   closed=True)
        start, end = self.continue_h_along(pieces)
        ratio = end / start
        if abs(abs(ratio) - 1.0) > 1e-6:
            raise LoopConstructionFailed(
                f"h continuation lost track (|ratio| = {abs(ratio):.6f})")
        return start, ratio

    # -- projective connection --------------------------------------------

    def projective_connection_at_branch_point(self, m, subset=None):
        """Value at branch point m, in the local coordinate x^2 = lam - lam_m.

        The x^-2 divergences of the Schwarzian of lam(x) and of the squared
        logarithmic derivative of the subset cross ratio cancel exactly, and
        the square root in the differentials cancels against the quadratic
        pairing, so the limit is a rational expression in the branch points
        plus a theta Hessian term.  The result is independent of the subset
        choice.
        """
        pd = self.periods
        curve = pd.curve
        if subset is None:
            subset = even_subset_characteristics(pd)[0]
        T, ch = subset
        ev = theta_derivs(np.zeros(curve.genus), pd.B, ch)
        dd = ev.hess / ev.value
        lam_m = curve.points[m]
        side = 1.0 if m in T else -1.0
        cross = 0.0
        prodp = 1.0
        for n, pn in enumerate(curve.points):
            if n == m:
                continue
            eta = side * (1.0 if n in T else -1.0)
            cross += eta / (lam_m - pn)
            prodp *= lam_m - pn
        P = (lam_m ** np.arange(curve.genus)) @ pd.C
        return 3.0 * cross - 24.0 * (P @ dd @ P) / prodp

    def projective_connection_sampled(self, m, subset=None):
        """Same value, extrapolated from samples near the branch point.

        Both divergent terms are evaluated at three small radii of the
        local coordinate and combined by Richardson steps in x^2; kept as
        an independent crosscheck of the closed-form limit.
        """
        pd = self.periods
        curve = pd.curve
        if subset is None:
            subset = even_subset_characteristics(pd)[0]
        T, ch = subset
        ev = theta_derivs(np.zeros(curve.genus), pd.B, ch)
        dd = ev.hess / ev.value
        p = curve.points[m]
        # step direction: outward along the cut axis, where the paired
        # root is branch stable
        for i, j in curve.cut_index_pairs:
            if m in (i, j):
                other = curve.points[j if m == i else i]
                break
        direction = (p - other) / abs(p - other)
        xdir = np.sqrt(direction)
        scale = np.sqrt(curve.scale)

        def sample(absx):
            x = absx * scale * xdir
            lam = p + x * x
            dlog = 0.0
            for n, pn in enumerate(curve.points):
                term = 2.0 * x / (lam - pn)
                dlog += term if n in T else -term
            v = pd.differentials(lam)[:, 0] * (2.0 * x)
            return (-1.5 / x ** 2 + 0.375 * dlog ** 2
                    - 6.0 * (v @ dd @ v) / 1.0)

        r = [sample(a) for a in (1e-2, 5e-3, 2.5e-3)]
        r1a = (4 * r[1] - r[0]) / 3
        r1b = (4 * r[2] - r[1]) / 3
        return (16 * r1b - r1a) / 15
