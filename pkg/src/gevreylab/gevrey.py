"""Gevrey-order prediction and measurement.

The theoretical side reads the order straight off the term structure of a
lifted equation: each right-hand term t^(j+b) d_t^b d_alpha carries the
weight max(0, (b + |alpha| - p) / j) and the equation's order is the
largest weight present.

The empirical side fits the growth model ||y_n|| ~ C A^n (n!)^s to exact
coefficient norms, and checks coefficient bounds of monomial-Gevrey type
on finite truncations.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .errors import EmptyTermSet, InsufficientData, NonPositiveNorm
from .series import Exponent, Series, exp_degree, format_rational
from .solver import LiftedEquation


class TermSignature:
    """A right-hand term t^(j+b) d_t^b d_alpha against a left side of
    (t d_t)-order p."""

    __slots__ = ("j", "b", "alpha", "p")

    def __init__(self, j: int, b: int, alpha: Exponent, p: int):
        if j < 1:
            raise ValueError("t-power j must be >= 1")
        if b < 0 or p < 0 or any(a < 0 for a in alpha):
            raise ValueError("negative derivative powers")
        self.j = j
        self.b = b
        self.alpha = tuple(alpha)
        self.p = p

    def __repr__(self):
        return f"TermSignature(j={self.j}, b={self.b}, alpha={self.alpha}, p={self.p})"


def term_order(sig: TermSignature) -> Fraction:
    """max(0, (b + |alpha| - p) / j)."""
    value = Fraction(sig.b + exp_degree(sig.alpha) - sig.p, sig.j)
    return max(Fraction(0), value)


def theoretical_order(eq: LiftedEquation) -> Fraction:
    """Largest term weight over the linear terms with a coefficient that is
    nonzero within its certified degree."""
    orders = [
        term_order(TermSignature(j, b, alpha, eq.p))
        for (j, b, alpha), g in eq.linear.items()
        if not g.is_zero
    ]
    if not orders:
        raise EmptyTermSet("lifted equation has no nonzero linear term")
    return max(orders)


class GevreyEstimate:
    """Fitted order together with the per-step slopes it was averaged from."""

    __slots__ = ("fitted_order", "window", "slopes", "rho", "ln_A", "ln_C")

    def __init__(self, fitted_order: float, window: tuple[int, int],
                 slopes: list[float], rho: Fraction, ln_A: float, ln_C: float):
        self.fitted_order = fitted_order
        self.window = window
        self.slopes = slopes
        self.rho = Fraction(rho)
        self.ln_A = ln_A
        self.ln_C = ln_C

    def to_json(self) -> dict:
        return {
            "fitted_order": self.fitted_order,
            "window": list(self.window),
            "slopes": self.slopes,
            "rho": format_rational(self.rho),
        }

    def __repr__(self):
        return (f"GevreyEstimate(fitted_order={self.fitted_order:.4f}, "
                f"window={self.window})")


def _ln(q: Fraction) -> float:
    return math.log(q.numerator) - math.log(q.denominator)


def _ln_factorial(n: int) -> float:
    return math.lgamma(n + 1)


def estimate_order(norms: Sequence[tuple[int, Fraction]],
                   window_fraction: float = 0.5,
                   rho: Fraction = Fraction(1, 2)) -> GevreyEstimate:
    """Fit ||y_n|| ~ C A^n (n!)^s on the top ``window_fraction`` of orders.

    The geometric factor is removed first by fitting ln C + n ln A + s ln n!
    jointly; the reported per-step slope at n is then
    (ln r_n - ln r_{n-1} - ln A) / ln n and the fitted order is the mean
    slope over the window.
    """
    data = sorted((int(n), Fraction(r)) for n, r in norms)
    pairs = [
        (n, r, rp)
        for (m, rp), (n, r) in zip(data, data[1:])
        if n == m + 1 and n >= 2
    ]
    if len(pairs) < 5:
        raise InsufficientData(
            f"{len(pairs)} usable consecutive orders; need at least 5")
    count = max(5, math.ceil(window_fraction * len(pairs)))
    window_pairs = pairs[-count:]
    for n, r, rp in window_pairs:
        if r <= 0 or rp <= 0:
            raise NonPositiveNorm(f"norm at order {n} is not positive")
    n_lo = window_pairs[0][0]
    n_hi = window_pairs[-1][0]
    lns = {n: _ln(r) for n, r, _ in window_pairs}
    lns[n_lo - 1] = _ln(window_pairs[0][2])
    # joint least squares ln r_n = ln C + n ln A + s ln n! over the window;
    # the factorial column's curvature separates it from the linear one.
    rows = [(1.0, float(n), _ln_factorial(n)) for n, _, _ in window_pairs]
    ys = [lns[n] for n, _, _ in window_pairs]
    normal = [[sum(r[i] * r[j] for r in rows) for j in range(3)]
              for i in range(3)]
    rhs = [sum(r[i] * y for r, y in zip(rows, ys)) for i in range(3)]
    ln_C, ln_A, _ = _solve3(normal, rhs)
    slopes = [
        (lns[n] - lns[n - 1] - ln_A) / math.log(n)
        for n, _, _ in window_pairs
    ]
    s = sum(slopes) / len(slopes)
    return GevreyEstimate(s, (n_lo, n_hi), slopes, rho, ln_A, ln_C)


def _solve3(m: list[list[float]], b: list[float]) -> list[float]:
    a = [row[:] + [v] for row, v in zip(m, b)]
    for col in range(3):
        piv = max(range(col, 3), key=lambda r: abs(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        inv = 1.0 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(3):
            if r != col:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [a[r][3] for r in range(3)]


class MonomialFitVerdict:
    """Outcome of testing |a_beta| <= C A^|beta| min_j beta_j!^(s/alpha_j).

    ``witness`` carries admissible constants; a refutation carries the
    exponent beta that exceeds the bound by the widest margin at the
    configured slope cap."""

    __slots__ = ("witness", "s", "alpha", "ln_A", "ln_C", "cap", "violating")

    def __init__(self, witness: bool, s: Fraction, alpha: Exponent, ln_A: float,
                 ln_C: float, cap: float, violating: Exponent | None):
        self.witness = witness
        self.s = s
        self.alpha = alpha
        self.ln_A = ln_A
        self.ln_C = ln_C
        self.cap = cap
        self.violating = violating

    def __bool__(self):
        return self.witness

    def __repr__(self):
        if self.witness:
            return (f"MonomialFitVerdict(witness, A<=e^{self.ln_A:.3f}, "
                    f"cap=e^{self.cap:.3f})")
        return f"MonomialFitVerdict(refuted at beta={self.violating})"


def monomial_gevrey_fit(f: Series, alpha: Sequence[int], s,
                        cap: float = math.log(10.0)) -> MonomialFitVerdict:
    """Log-linear feasibility of the monomial-Gevrey coefficient bound.

    For each stored nonzero coefficient the required excess
    v_beta = ln|a_beta| - min_j (s/alpha_j) ln(beta_j!) must stay below
    ln C + |beta| ln A.  A finite term set can always be covered by a big
    enough C, so the verdict hinges on the asymptotic slope: the least-
    squares slope of the per-degree maxima of v over the top half of the
    degrees must not exceed ``cap``."""
    alpha = tuple(alpha)
    s = Fraction(s)
    if exp_degree(alpha) < 1:
        raise ValueError("alpha must be a nonzero multi-index")
    per_degree: dict[int, tuple[float, Exponent]] = {}
    for beta, c in f.terms.items():
        if c == 0:
            continue
        bound = min(float(s) / a * _ln_factorial(b)
                    for a, b in zip(alpha, beta) if a)
        v = _ln(abs(c)) - bound
        n = exp_degree(beta)
        if n not in per_degree or v > per_degree[n][0]:
            per_degree[n] = (v, beta)
    if len(per_degree) < 2:
        return MonomialFitVerdict(True, s, alpha, 0.0,
                                  max((v for v, _ in per_degree.values()),
                                      default=0.0), cap, None)
    degrees = sorted(per_degree)
    top = degrees[len(degrees) // 2:]
    if len(top) < 2:
        top = degrees[-2:]
    xs = top
    ys = [per_degree[n][0] for n in top]
    mean_x = sum(xs) / len(xs)
    mean_y = sum(ys) / len(ys)
    den = sum((x - mean_x) ** 2 for x in xs)
    ln_A = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys)) / den
    if ln_A <= cap:
        ln_C = max(per_degree[n][0] - n * ln_A for n in degrees)
        return MonomialFitVerdict(True, s, alpha, ln_A, ln_C, cap, None)
    worst = max(degrees, key=lambda n: per_degree[n][0] - n * cap)
    return MonomialFitVerdict(False, s, alpha, ln_A, float("nan"), cap,
                              per_degree[worst][1])
