"""Explicit 2x2 solution of Riemann-Hilbert problems with off-diagonal
quasi-permutation monodromies.

The solution matrix is built from the twisted kernel of a hyperelliptic
curve: entry (k, j) is the kernel between the moving point on sheet j+1
and the normalization point on sheet k+1, times the scalar prime factor
(lambda - lambda_0).  Every value is a germ continued from the
normalization point along a deterministic cut-avoiding route, so the
matrix is normalized to the identity at lambda_0, has determinant one
everywhere, and its logarithmic derivative is a single-valued rational
matrix function with simple poles at the branch points.

Monodromy matrices come from continuing both columns around explicit
basepointed loops; each continued column lands on the other sheet with a
period-lattice shift and a spinor sign, and those data give the nonzero
entries in closed form.  Residue matrices are contour integrals of the
logarithmic derivative around the branch points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covering import validate_quasi_perm
from .errors import (InconsistentLayout, LatticeExtractionFailed,
                     LoopConstructionFailed, QuadratureFailure, RoutingFailure,
                     SingularPoint)
from .geometry import split_polyline
from .kernels import KernelContext
from .quadrature import integrate_pieces
from .theta import theta, theta_derivs

# Radius of a monodromy loop as a fraction of the distance from its branch
# point to the nearest other marked point; the first entry also sets the
# exclusion radius spurs keep from foreign branch points, so the ladder
# only shrinks.
_LOOP_FACTORS = (0.3, 0.24, 0.18, 0.14)
# Multipliers on the exclusion radius, retried when a spur grazes a cut.
_SPUR_WIDENINGS = (1.0, 1.25, 0.8, 0.65)
# Offsets of the loop entry vertex from the basepoint direction, in radians.
# The chord aims straight at the branch point, which keeps it on the
# fan-correct side of every other point; nonzero fallbacks only move a
# chord that grazes a cut, and the splice side stays order-controlled.
_ENTRY_SKEWS = (0.0, 0.35, -0.35, 0.7)
# Phase offset of residue-circle nodes, so no node starts on a cut line.
_CIRCLE_PHASE = 0.37


@dataclass
class PsiEvaluation:
    """Solution matrix at one point together with its germ bookkeeping."""

    lam: complex
    matrix: np.ndarray
    route_vertices: list
    abel_value: np.ndarray
    spinor_values: tuple


@dataclass
class MonodromyColumn:
    """Continuation record of one column around one loop.

    The lattice integers decompose the continued Abel value against the
    germ on the arrival sheet; sigma is the spinor sign picked up along
    the way.  Under the fixed layout these are also the intersection
    indexes entering the closed-form monodromy entry.
    """

    start_sheet: int
    end_sheet: int
    a_index: np.ndarray      # integer coefficients of the plain lattice part
    b_index: np.ndarray      # integer coefficients of the period-matrix part
    sigma: int
    lattice_residual: float


@dataclass
class MonodromyResult:
    index: int
    vertices: list
    matrix: np.ndarray
    columns: list
    permutation: tuple = ()
    entries: np.ndarray = None


@dataclass
class ResidueSet:
    matrices: np.ndarray     # shape (M, 2, 2)
    exponents: np.ndarray    # eigenvalues per point, shape (M, 2)
    sum_norm: float


class RHSolution:
    """Riemann-Hilbert solution normalized at a regular basepoint.

    Rows are indexed by the germ sheet at the normalization point and
    columns by the sheet carrying the moving point.  The twist
    characteristic (p, q) parametrizes the nonzero monodromy entries; its
    theta constant must stay off the theta divisor.
    """

    def __init__(self, periods, char, lambda0, kernel=None):
        self.kc = kernel if kernel is not None else KernelContext(periods, char)
        self.periods = self.kc.periods
        self.curve = self.periods.curve
        z0 = complex(lambda0)
        guard = 1e-6 * self.curve.scale
        if min(abs(z0 - p) for p in self.curve.points) < guard:
            raise SingularPoint(
                "normalization point coincides with a branch point")
        for cut in self.curve.cuts:
            from .geometry import point_segment_distance
            if point_segment_distance(z0, *cut) < guard:
                raise SingularPoint("normalization point sits on a cut")
        self.lambda0 = z0
        self.U0 = self.periods.abel(z0, sheet=1)
        self.h0 = (self.kc.h(z0, 1), self.kc.h(z0, 2))
        self._germ_cache = {}
        self._residue_cache = {}

    # -- germs ----------------------------------------------------------

    def _germ(self, z):
        """Abel value and both spinor germs at z, continued from the
        normalization point along the deterministic cut-avoiding route."""
        key = complex(z)
        if key in self._germ_cache:
            return self._germ_cache[key]
        verts = self.periods.sheet1_route(self.lambda0, key)
        dU, end_sign = self.periods.continue_abel(verts, closed=False)
        if end_sign != 1.0:
            raise LoopConstructionFailed("germ route crossed a cut")
        U1 = self.U0 + dU
        pieces = [(a, b, 1.0) for a, b in zip(verts, verts[1:])]
        _, h1 = self.kc.continue_h_along(pieces)
        flipped = [(a, b, -1.0) for a, b in zip(verts, verts[1:])]
        _, h2 = self.kc.continue_h_along(flipped)
        out = (U1, h1, h2, verts)
        self._germ_cache[key] = out
        return out

    def _check_regular(self, z):
        if min(abs(z - p) for p in self.curve.points) < 1e-9 * self.curve.scale:
            raise SingularPoint(f"evaluation at a branch point ({z:.6g})")

    # -- evaluation -------------------------------------------------------

    def psi(self, lam):
        """Solution matrix at lam; identity at the normalization point."""
        z = complex(lam)
        if abs(z - self.lambda0) < 1e-12 * self.curve.scale:
            return np.eye(2, dtype=complex)
        self._check_regular(z)
        U1, h1, h2, _ = self._germ(z)
        return self._assemble(z, U1, (h1, h2))

    def psi_eval(self, lam):
        z = complex(lam)
        U1, h1, h2, verts = self._germ(z)
        return PsiEvaluation(z, self.psi(z), verts, U1, (h1, h2))

    def _assemble(self, z, U1, hs):
        B = self.periods.B
        U_col = (U1, -U1)
        U_row = (self.U0, -self.U0)
        out = np.empty((2, 2), dtype=complex)
        for k in range(2):
            for j in range(2):
                zeta = U_col[j] - U_row[k]
                num = theta(zeta, B, self.kc.char)
                den = theta(zeta, B, self.kc.odd_char)
                out[k, j] = ((z - self.lambda0) * num * hs[j] * self.h0[k]
                             / (self.kc.theta0 * den))
        return out

    def psi_pair(self, lam):
        """Matrix and its analytic lambda derivative in one pass.

        The derivative differentiates the theta arguments through the
        normalized differentials and the scalar factors through the
        logarithmic derivative of the spinor; no finite differences.
        """
        z = complex(lam)
        self._check_regular(z)
        if abs(z - self.lambda0) < 1e-9 * self.curve.scale:
            raise SingularPoint(
                "analytic derivative is assembled away from the basepoint")
        U1, h1, h2, _ = self._germ(z)
        B = self.periods.B
        v1 = self.periods.differentials(z)[:, 0]
        vs = (v1, -v1)
        hs = (h1, h2)
        q = self.kc.q_poly(z)
        hlog = 0.5 * self.kc.q_poly_deriv(z) / q \
            - 0.5 * self.curve.log_derivative_sum(z)
        U_col = (U1, -U1)
        U_row = (self.U0, -self.U0)
        psi = np.empty((2, 2), dtype=complex)
        dpsi = np.empty((2, 2), dtype=complex)
        dz = z - self.lambda0
        for k in range(2):
            for j in range(2):
                zeta = U_col[j] - U_row[k]
                ec = theta_derivs(zeta, B, self.kc.char)
                es = theta_derivs(zeta, B, self.kc.odd_char)
                c = hs[j] * self.h0[k] / (self.kc.theta0 * es.value)
                psi[k, j] = dz * ec.value * c
                dlog_rest = hlog - (es.grad @ vs[j]) / es.value
                dpsi[k, j] = c * (ec.value * (1.0 + dz * dlog_rest)
                                  + dz * (ec.grad @ vs[j]))
        return psi, dpsi

    def ode_matrix(self, lam):
        """Logarithmic derivative; a rational function with simple poles
        at the branch points, independent of germ conventions."""
        psi, dpsi = self.psi_pair(lam)
        return dpsi @ np.linalg.inv(psi)

    # -- monodromy loops --------------------------------------------------

    def _clear_radius(self, i):
        """Exclusion radius around branch point i for spur construction."""
        p = self.curve.points[i]
        dist = min(min(abs(p - q) for j, q in enumerate(self.curve.points)
                       if j != i), abs(p - self.lambda0))
        return _LOOP_FACTORS[0] * dist

    def _spur(self, n, entry, widen):
        """Straight chord from the basepoint to the loop entry, with an arc
        spliced around every other branch point whose exclusion disk the
        chord enters.  The arc passes a point on its counterclockwise side
        exactly when that point comes earlier in the basepoint order, which
        is the side a straight ray at the target's own angle takes; the
        spurs therefore stay homotopic to a non-crossing fan."""
        z0 = self.lambda0
        d = entry - z0
        length = abs(d)
        u = d / length
        order = self.basepoint_order()
        splices = []
        for i, pj in enumerate(self.curve.points):
            if i == n:
                continue
            rad = widen * self._clear_radius(i)
            w = (pj - z0) / u
            if not (0.0 < w.real < length):
                continue
            off = w.imag
            if abs(off) >= rad:
                continue
            half = np.sqrt(rad * rad - off * off)
            t_in, t_out = w.real - half, w.real + half
            side = 1.0 if order.index(i) < order.index(n) else -1.0
            a_in = np.angle(z0 + t_in * u - pj)
            a_out = np.angle(z0 + t_out * u - pj)
            pole = np.angle(side * 1j * u)
            d1 = (pole - a_in + np.pi) % (2.0 * np.pi) - np.pi
            d2 = (a_out - pole + np.pi) % (2.0 * np.pi) - np.pi
            phis = np.concatenate([a_in + d1 * np.linspace(0.0, 1.0, 6)[1:],
                                   pole + d2 * np.linspace(0.0, 1.0, 6)[1:-1]])
            splices.append((t_in, [pj + rad * np.exp(1j * f) for f in phis]))
        splices.sort(key=lambda s: s[0])
        spur = [z0]
        for _, arc in splices:
            spur.extend(arc)
        spur.append(entry)
        return spur

    def loop_vertices(self, n):
        """Basepointed polyline encircling branch point n once,
        counterclockwise: spur out, 16-gon, spur reversed."""
        p = self.curve.points[n]
        others = [q for i, q in enumerate(self.curve.points) if i != n]
        dist = min(min(abs(p - q) for q in others), abs(p - self.lambda0))
        last = None
        for rf in _LOOP_FACTORS:
            r = rf * dist
            for skew in _ENTRY_SKEWS:
                ang0 = np.angle(self.lambda0 - p) + skew
                th = ang0 + 2.0 * np.pi * np.arange(16) / 16
                circle = list(p + r * np.exp(1j * th))
                entry = circle[0]
                for widen in _SPUR_WIDENINGS:
                    try:
                        spur = self._spur(n, entry, widen)
                        verts = (spur + circle[1:] + [entry]
                                 + list(reversed(spur))[1:])
                        split_polyline(self.curve.cuts, verts, closed=False)
                        return verts
                    except (RoutingFailure, LoopConstructionFailed) as exc:
                        last = exc
        raise LoopConstructionFailed(
            f"no clear loop around branch point {n}: {last}")

    def _continue_columns(self, verts):
        """Continue both columns along a basepointed polyline.

        Returns one MonodromyColumn per starting sheet.  The Abel integral
        is evaluated once; the second column is its exact negative.
        """
        pieces, events = split_polyline(self.curve.cuts, verts, closed=False,
                                        start_sign=1.0)
        dU = integrate_pieces(
            lambda z, s: self.periods.differentials(z, s), pieces, tol=1e-12)
        flips = len(events) % 2
        out = []
        for j in range(2):
            sign = 1.0 if j == 0 else -1.0
            U_end = sign * (self.U0 + dU)
            end_sheet = (j + flips) % 2
            germ = self.U0 if end_sheet == 0 else -self.U0
            nvec, mvec, res = self.periods.lattice_decompose(U_end - germ)
            resid = float(np.max(np.abs(res)))
            if resid > 1e-7:
                raise LatticeExtractionFailed(
                    f"continued Abel value off the lattice by {resid:.2e}")
            col_pieces = pieces if j == 0 else [(a, b, -s) for a, b, s in pieces]
            _, h_end = self.kc.continue_h_along(col_pieces)
            ratio = h_end / self.h0[end_sheet]
            sigma = int(np.rint(ratio.real))
            if abs(ratio - sigma) > 1e-6 or sigma not in (-1, 1):
                raise LatticeExtractionFailed(
                    f"spinor continuation drifted ({ratio:.8f})")
            out.append(MonodromyColumn(
                start_sheet=j + 1, end_sheet=end_sheet + 1,
                a_index=nvec, b_index=mvec, sigma=sigma,
                lattice_residual=resid))
        return out

    def _entry(self, col):
        p, q = self.kc.char.arrays()
        ps, qs = self.kc.odd_char.arrays()
        phase = (p - ps) @ col.a_index - (q - qs) @ col.b_index
        return col.sigma * np.exp(2j * np.pi * phase)

    def continued_monodromy(self, verts):
        """Monodromy factor of an arbitrary basepointed loop."""
        cols = self._continue_columns(verts)
        M = np.zeros((2, 2), dtype=complex)
        for j, col in enumerate(cols):
            M[col.end_sheet - 1, j] = self._entry(col)
        validate_quasi_perm(M)
        return M, cols

    def monodromy(self, n):
        verts = self.loop_vertices(n)
        M, cols = self.continued_monodromy(verts)
        perm, entries = validate_quasi_perm(M)
        return MonodromyResult(index=n, vertices=verts, matrix=M,
                               columns=cols, permutation=perm, entries=entries)

    def monodromies(self):
        return [self.monodromy(n) for n in range(len(self.curve.points))]

    def basepoint_order(self):
        """Loop indices sorted by angle around the normalization point,
        starting after the widest angular gap; composing the loops in this
        order contracts to a loop around everything, which carries trivial
        monodromy."""
        ang = np.array([np.angle(p - self.lambda0)
                        for p in self.curve.points])
        order = list(np.argsort(ang, kind="stable"))
        gaps = [(ang[order[(k + 1) % len(order)]] - ang[order[k]])
                % (2.0 * np.pi) for k in range(len(order))]
        start = (int(np.argmax(gaps)) + 1) % len(order)
        return order[start:] + order[:start]

    def monodromy_product(self, results=None):
        """Ordered product of all monodromies and its defect from the
        identity; the first loop in basepoint order acts first."""
        if results is None:
            results = self.monodromies()
        order = self.basepoint_order()
        total = np.eye(2, dtype=complex)
        for n in order:
            total = results[n].matrix @ total
        defect = float(np.max(np.abs(total - np.eye(2))))
        return total, defect, order

    # -- closed-form monodromy --------------------------------------------

    def intersection_data(self, n):
        """Layout data of loop n: per starting sheet, the lattice indexes
        of the continued Abel value and the spinor parity."""
        return self.monodromy(n).columns

    def predict_monodromy(self, n, data=None):
        """Monodromy of loop n from its layout data alone.

        The entry of column j sits on the arrival sheet's row and equals
        the spinor parity times the exponential of the lattice indexes
        paired with the shifted characteristics.
        """
        if data is None:
            data = self.intersection_data(n)
        p, q = self.kc.char.arrays()
        ps, qs = self.kc.odd_char.arrays()
        M = np.zeros((2, 2), dtype=complex)
        for j, col in enumerate(data):
            phase = (p + ps) @ col.a_index - (q + qs) @ col.b_index
            parity = col.sigma
            M[col.end_sheet - 1, j] = parity * np.exp(2j * np.pi * phase)
        return M

    def check_layout(self, n, tol=1e-6, data=None):
        """Compare the closed-form and continued monodromies of loop n.

        Layout data measured on one solution can be injected to check a
        solution with a different twist characteristic on the same curve.
        """
        result = self.monodromy(n)
        predicted = self.predict_monodromy(n, data or result.columns)
        defect = float(np.max(np.abs(predicted - result.matrix)))
        if defect > tol:
            raise InconsistentLayout(
                f"loop {n}: closed form deviates by {defect:.2e}")
        return defect

    # -- residues ---------------------------------------------------------

    def residue(self, n, radius_factor=0.25, tol=1e-8):
        """Residue matrix of the logarithmic derivative at branch point n,
        by trapezoid sums on a circle, doubled until stable."""
        key = (n, float(radius_factor))
        if key in self._residue_cache:
            return self._residue_cache[key]
        p = self.curve.points[n]
        dist = min(abs(p - q) for i, q in enumerate(self.curve.points)
                   if i != n)
        rho = radius_factor * dist
        nodes = 64
        prev = None
        while nodes <= 4096:
            th = _CIRCLE_PHASE + 2.0 * np.pi * np.arange(nodes) / nodes
            zs = p + rho * np.exp(1j * th)
            dz = 1j * rho * np.exp(1j * th) * (2.0 * np.pi / nodes)
            total = np.zeros((2, 2), dtype=complex)
            for z, w in zip(zs, dz):
                total += self.ode_matrix(z) * w
            cur = total / (2j * np.pi)
            if prev is not None:
                err = np.max(np.abs(cur - prev))
                if err <= tol * max(1.0, np.max(np.abs(cur))):
                    self._residue_cache[key] = cur
                    return cur
            prev = cur
            nodes *= 2
        raise QuadratureFailure(
            f"residue circle at branch point {n} did not stabilize")

    def residues(self, radius_factor=0.25, tol=1e-8):
        mats = np.array([self.residue(n, radius_factor, tol)
                         for n in range(len(self.curve.points))])
        eig = np.array([np.sort_complex(np.linalg.eigvals(m)) for m in mats])
        return ResidueSet(matrices=mats, exponents=eig,
                          sum_norm=float(np.max(np.abs(mats.sum(axis=0)))))

    def ode_residual(self, lam, residue_set=None):
        """Defect of the rational form of the logarithmic derivative at a
        test point; small values certify the residues and the derivative
        at once."""
        if residue_set is None:
            residue_set = self.residues()
        z = complex(lam)
        rational = np.zeros((2, 2), dtype=complex)
        for n, p in enumerate(self.curve.points):
            rational += residue_set.matrices[n] / (z - p)
        return float(np.max(np.abs(self.ode_matrix(z) - rational)))
