"""Exact compactly supported piecewise polynomials over the rationals.

A function that vanishes to the left of its first breakpoint has the unique
expansion

    f(x) = sum_i sum_p alpha[i, p] * (x - a_i)_+^p

over its breakpoints a_i ("jumps": alpha[i, p] is the jump of f^(p)/p! at
a_i).  Convolution is then a double sum over pairs of knots,

    (x - a)_+^p * (x - b)_+^q = p! q! / (p + q + 1)! * (x - a - b)_+^(p+q+1),

and the integral of f^2 reduces to the same kind of pair sum because the
reflection f(-x) has jumps (-1)^(p+1) alpha[i, p] at -a_i.  The heavy loops
run on Python integers over one common denominator.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce

import numpy as np


def _lcm(values):
    return reduce(math.lcm, values, 1)


def _to_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError("breakpoints must be finite")
    return Fraction(x)


def _shift_int(coeffs, g):
    """Coefficients of P(z + g) from those of P(z); integers in, integers out."""
    d = len(coeffs) - 1
    if d <= 0:
        return coeffs.copy()
    a = coeffs.copy()
    if g != 1:
        gpow = np.array([g**k for k in range(d + 1)], dtype=object)
        a = a * gpow
    # Taylor shift by one: pass j replaces a[j:] with its suffix sums
    for j in range(d):
        a[j:] = np.cumsum(a[j:][::-1])[::-1]
    if g != 1:
        a = a // gpow
    return a


class _ScaledForm:
    """Integer image of a piecewise polynomial in the variable z = Q (x - a_i).

    Gaps between breakpoints are the integers ``gaps``; piece ``i`` is
    ``rows[i] / den`` in z, jump rows likewise.
    """

    __slots__ = ("knots", "Q", "gaps", "den", "pieces", "jumps")

    def __init__(self, knots, Q, gaps, den, pieces, jumps):
        self.knots = knots
        self.Q = Q
        self.gaps = gaps
        self.den = den
        self.pieces = pieces
        self.jumps = jumps


def _gap_scale(knots):
    gaps = [b - a for a, b in zip(knots, knots[1:])]
    Q = _lcm(g.denominator for g in gaps)
    return Q, [int(g * Q) for g in gaps]


def _scaled_from_jumps(knots, alpha_rows, den, degree):
    """``alpha_rows[i][p] / den`` multiplies ``(x - knots[i])_+^p``."""
    Q, gaps = _gap_scale(knots)
    qpow = np.array([Q ** (degree - p) for p in range(degree + 1)], dtype=object)
    zden = den * Q**degree
    jumps = [np.asarray(r, dtype=object) * qpow for r in alpha_rows]
    pieces = []
    P = np.zeros(degree + 1, dtype=object)
    for i in range(len(knots) - 1):
        if i:
            P = _shift_int(P, gaps[i - 1])
        P = P + jumps[i]
        pieces.append(P)
    residual = _shift_int(P, gaps[-1]) + jumps[-1] if gaps else jumps[-1]
    if any(v != 0 for v in residual):
        raise ValueError("jump data does not describe a compactly supported function")
    return _ScaledForm(knots, Q, gaps, zden, pieces, jumps)


def _scaled_from_pieces(knots, pieces, degree):
    Q, gaps = _gap_scale(knots)
    zfr = [[Fraction(c) / Q**k for k, c in enumerate(row)] for row in pieces]
    den = _lcm(c.denominator for row in zfr for c in row)
    rows = []
    for row in zfr:
        r = np.zeros(degree + 1, dtype=object)
        for k, c in enumerate(row):
            r[k] = c.numerator * (den // c.denominator)
        rows.append(r)
    jumps = [rows[0].copy()]
    for i in range(1, len(rows)):
        jumps.append(rows[i] - _shift_int(rows[i - 1], gaps[i - 1]))
    jumps.append(-_shift_int(rows[-1], gaps[-1]))
    return _ScaledForm(list(knots), Q, gaps, den, rows, jumps)


class PiecewisePolynomial:
    """Piecewise polynomial with rational breakpoints and coefficients.

    ``pieces[i]`` lists ascending coefficients of the polynomial in the local
    variable ``x - breakpoints[i]`` on ``[breakpoints[i], breakpoints[i+1]]``.
    The function is zero outside ``[breakpoints[0], breakpoints[-1]]``.
    """

    __slots__ = ("breakpoints", "pieces", "_scaled")

    def __init__(self, breakpoints, pieces, _scaled=None):
        bps = tuple(_to_fraction(b) for b in breakpoints)
        if len(bps) < 2:
            raise ValueError("need at least two breakpoints")
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(pieces) != len(bps) - 1:
            raise ValueError("need one coefficient list per interval")
        pcs = []
        for row in pieces:
            row = [Fraction(c) for c in row] or [Fraction(0)]
            while len(row) > 1 and row[-1] == 0:
                row.pop()
            pcs.append(tuple(row))
        self.breakpoints = bps
        self.pieces = tuple(pcs)
        self._scaled = _scaled

    # -- construction --------------------------------------------------------

    @classmethod
    def indicator(cls, lo, hi):
        return cls((lo, hi), ((1,),))

    @classmethod
    def from_jumps(cls, knots, alpha):
        """Build from ``alpha[i][p]``, the coefficient of ``(x - knots[i])_+^p``."""
        knots = [_to_fraction(k) for k in knots]
        degree = max(len(r) for r in alpha) - 1
        den = _lcm(Fraction(c).denominator for r in alpha for c in r)
        rows = []
        for r in alpha:
            row = [0] * (degree + 1)
            for p, c in enumerate(r):
                c = Fraction(c)
                row[p] = c.numerator * (den // c.denominator)
            rows.append(row)
        return cls._from_scaled(_scaled_from_jumps(knots, rows, den, degree))

    @classmethod
    def _from_scaled(cls, sf):
        pieces = []
        qk = [sf.Q**k for k in range(len(sf.pieces[0]))]
        for row in sf.pieces:
            pieces.append([Fraction(int(v) * qk[k], sf.den) for k, v in enumerate(row)])
        return cls(sf.knots, pieces, _scaled=sf)

    def _scaled_form(self):
        if self._scaled is None:
            padded = [list(r) + [Fraction(0)] * (self.degree + 1 - len(r)) for r in self.pieces]
            self._scaled = _scaled_from_pieces(self.breakpoints, padded, self.degree)
        return self._scaled

    # -- basic queries -------------------------------------------------------

    @property
    def degree(self) -> int:
        return max(len(r) for r in self.pieces) - 1

    def __len__(self):
        return len(self.pieces)

    def __eq__(self, other):
        if not isinstance(other, PiecewisePolynomial):
            return NotImplemented
        return self.breakpoints == other.breakpoints and self.pieces == other.pieces

    def __hash__(self):
        return hash((self.breakpoints, self.pieces))

    def __repr__(self):
        return (f"PiecewisePolynomial(pieces={len(self.pieces)}, degree={self.degree}, "
                f"support=[{self.breakpoints[0]}, {self.breakpoints[-1]}])")

    def support(self):
        """Closed hull of the set where the function is nonzero, or None."""
        nz = [i for i, r in enumerate(self.pieces) if any(c != 0 for c in r)]
        if not nz:
            return None
        return self.breakpoints[nz[0]], self.breakpoints[nz[-1] + 1]

    def evaluate(self, x) -> Fraction:
        """Exact value at a rational (or float, read exactly) point.

        At an interior breakpoint the right-hand piece is used.
        """
        x = _to_fraction(x)
        bps = self.breakpoints
        if x < bps[0] or x > bps[-1]:
            return Fraction(0)
        lo, hi = 0, len(self.pieces) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if bps[mid] <= x:
                lo = mid
            else:
                hi = mid - 1
        y = x - bps[lo]
        acc = Fraction(0)
        for c in reversed(self.pieces[lo]):
            acc = acc * y + c
        return acc

    def __call__(self, x):
        if isinstance(x, (int, Fraction)):
            return self.evaluate(x)
        arr = np.asarray(x, dtype=float)
        out = np.array([float(self.evaluate(float(v))) for v in arr.ravel()])
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def jumps(self):
        """Tuple of ``(knot, alpha)`` with ``alpha[p]`` the coefficient of ``(x - knot)_+^p``."""
        sf = self._scaled_form()
        out = []
        for a, row in zip(sf.knots, sf.jumps):
            out.append((a, tuple(Fraction(int(v) * sf.Q**p, sf.den) for p, v in enumerate(row))))
        return tuple(out)

    def continuity_defects(self):
        """Value jumps at every breakpoint (zero list for a continuous function)."""
        return [alpha[0] for _, alpha in self.jumps()]

    def is_continuous(self, interior_only=True) -> bool:
        d = self.continuity_defects()
        if interior_only:
            d = d[1:-1]
        return all(v == 0 for v in d)

    # -- integrals -----------------------------------------------------------

    def integral(self) -> Fraction:
        """Exact integral over the real line."""
        sf = self._scaled_form()
        D = len(sf.jumps[0]) - 1
        end = sum(sf.gaps)
        offsets = np.cumsum([0] + sf.gaps)
        L = _lcm(range(1, D + 2))
        total = 0
        for off, row in zip(offsets, sf.jumps):
            dist = end - int(off)
            if dist == 0:
                continue
            for p, v in enumerate(row):
                if v:
                    total += int(v) * dist ** (p + 1) * (L // (p + 1))
        return Fraction(total, sf.den * L * sf.Q)

    def integral_piecewise(self) -> Fraction:
        """Integral by summing piece antiderivatives (independent of the jump form)."""
        total = Fraction(0)
        for (a, b), row in zip(zip(self.breakpoints, self.breakpoints[1:]), self.pieces):
            h = b - a
            total += sum(c * h ** (k + 1) / (k + 1) for k, c in enumerate(row))
        return total

    def l2_sq(self) -> Fraction:
        """Exact integral of f^2, evaluated as (f conv f(-.))(0) over knot pairs."""
        sf = self._scaled_form()
        D = len(sf.jumps[0]) - 1
        R = 2 * D + 1
        offsets = [int(o) for o in np.cumsum([0] + sf.gaps)]
        nz = [(off, [(p, int(v)) for p, v in enumerate(row) if v]) for off, row in zip(offsets, sf.jumps)]
        nz = [t for t in nz if t[1]]
        fR = math.factorial(R)
        weight = {}
        powers = {}
        total = 0
        for i, (a, arow) in enumerate(nz):
            for b, brow in nz[i + 1:]:
                dist = b - a
                for p, x in arow:
                    for q, y in brow:
                        r = p + q + 1
                        w = weight.get((p, q))
                        if w is None:
                            w = weight[(p, q)] = (math.factorial(p) * math.factorial(q)
                                                  * (fR // math.factorial(r)))
                        pw = powers.get((dist, r))
                        if pw is None:
                            pw = powers[(dist, r)] = dist**r
                        term = x * y * w * pw
                        total += term if q % 2 else -term
        # alpha_p = x Q^p / den and the gap is dist / Q, leaving one Q overall
        return Fraction(total, sf.den**2 * fR * sf.Q)

    def l2_sq_piecewise(self) -> Fraction:
        """Integral of f^2 by expanding each piece (quadratic cost per piece)."""
        total = Fraction(0)
        for (a, b), row in zip(zip(self.breakpoints, self.breakpoints[1:]), self.pieces):
            h = b - a
            sq = [Fraction(0)] * (2 * len(row) - 1)
            for i, ci in enumerate(row):
                if ci:
                    for j, cj in enumerate(row):
                        sq[i + j] += ci * cj
            total += sum(c * h ** (k + 1) / (k + 1) for k, c in enumerate(sq))
        return total

    # -- convolution ---------------------------------------------------------

    def convolve(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        """Exact convolution; breakpoints are all pairwise sums of the inputs'."""
        A, B = self._scaled_form(), other._scaled_form()
        DA, DB = len(A.jumps[0]) - 1, len(B.jumps[0]) - 1
        R = DA + DB + 1
        fR = math.factorial(R)
        knots = sorted({a + b for a in self.breakpoints for b in other.breakpoints})
        index = {k: i for i, k in enumerate(knots)}
        # jump rows hold alpha_p * den / Q^p; the Q^p factors go into the weights
        a_rows = [(k, [(p, int(v)) for p, v in enumerate(row) if v]) for k, row in zip(A.knots, A.jumps)]
        b_rows = [(k, [(q, int(v)) for q, v in enumerate(row) if v]) for k, row in zip(B.knots, B.jumps)]
        a_rows = [t for t in a_rows if t[1]]
        b_rows = [t for t in b_rows if t[1]]
        QA, QB = A.Q, B.Q
        acc = [[0] * (R + 1) for _ in knots]
        weight = {}
        for ka, arow in a_rows:
            for kb, brow in b_rows:
                slot = acc[index[ka + kb]]
                for p, x in arow:
                    for q, y in brow:
                        w = weight.get((p, q))
                        if w is None:
                            w = weight[(p, q)] = (math.factorial(p) * math.factorial(q)
                                                  * (fR // math.factorial(p + q + 1))
                                                  * QA**p * QB**q)
                        slot[p + q + 1] += x * y * w
        den = A.den * B.den * fR
        return PiecewisePolynomial._from_scaled(_scaled_from_jumps(knots, acc, den, R))

    def self_convolve(self) -> "PiecewisePolynomial":
        return self.convolve(self)

    # -- sign certificate ----------------------------------------------------

    def bernstein_signs(self):
        """Per piece, the minimum sign (-1, 0, 1) of its Bernstein coefficients."""
        sf = self._scaled_form()
        D = len(sf.pieces[0]) - 1
        fact = [math.factorial(k) * math.factorial(D - k) for k in range(D + 1)]
        out = []
        for row, g in zip(sf.pieces, sf.gaps):
            e = np.array([int(v) * g**k * fact[k] for k, v in enumerate(row)], dtype=object)
            for i in range(1, D + 1):
                e[i:] = e[i:] + e[i - 1:-1]
            out.append(min((v > 0) - (v < 0) for v in e))
        return out

    def nonnegativity_certificate(self, max_depth: int = 8):
        """Return ``(ok, witness)``.

        ``ok`` is True when every piece has nonnegative Bernstein coefficients
        on its interval (possibly after exact midpoint subdivision), which
        bounds the piece below by zero everywhere, breakpoints and interior
        extrema included.  ``witness`` is a point with a negative value, or
        the first piece that could not be certified.
        """
        for i, sign in enumerate(self.bernstein_signs()):
            if sign >= 0:
                continue
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            ok, witness = _certify_piece(self.pieces[i], a, b, max_depth)
            if not ok:
                return False, witness
        return True, None

    # -- helpers for plotting ------------------------------------------------

    def sample(self, n_per_piece: int = 8):
        xs, ys = [], []
        for (a, b) in zip(self.breakpoints, self.breakpoints[1:]):
            for j in range(n_per_piece):
                x = a + (b - a) * Fraction(j, n_per_piece)
                xs.append(float(x))
                ys.append(float(self.evaluate(x)))
        xs.append(float(self.breakpoints[-1]))
        ys.append(float(self.evaluate(self.breakpoints[-1])))
        return np.array(xs), np.array(ys)


def _bernstein(row, h):
    D = len(row) - 1
    d = [c * h**k / math.comb(D, k) for k, c in enumerate(row)]
    for i in range(1, D + 1):
        for k in range(D, i - 1, -1):
            d[k] = d[k] + d[k - 1]
    return d


def _certify_piece(row, a, b, depth):
    """Exact de Casteljau subdivision of one piece on [a, b]."""
    bern = _bernstein(list(row), b - a)
    stack = [(bern, a, b, 0)]
    while stack:
        coef, lo, hi, lvl = stack.pop()
        if coef[0] < 0:
            return False, lo
        if coef[-1] < 0:
            return False, hi
        if min(coef) >= 0:
            continue
        if lvl >= depth:
            return False, (lo, hi)
        left, right = [], []
        work = list(coef)
        n = len(work)
        for r in range(n):
            left.append(work[0])
            right.append(work[-1])
            work = [(work[j] + work[j + 1]) / 2 for j in range(len(work) - 1)]
        mid = (lo + hi) / 2
        stack.append((left, lo, mid, lvl + 1))
        stack.append((right[::-1], mid, hi, lvl + 1))
    return True, None
