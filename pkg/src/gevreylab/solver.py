"""Series solvers for systems P^k L_k(y) + ... + P L_1(y) = F(x, y).

Two independent routes are provided:

* ``solve_p_expansion`` -- the constructive pipeline: peel off the first k
  coefficients by implicit solves, lift the remaining tail to an auxiliary
  time variable t (so the tail becomes sum u_n t^n), and run the resulting
  well-founded order-by-order recurrence.

* ``solve_direct`` -- a degree-graded oracle that plugs a generic truncated
  series into the equation and solves one exact linear system per total
  degree.  It shares no code path with the pipeline and is used to
  cross-check it.

``check_poincare`` covers the complementary regime where P is non-singular
at the origin and the solution is convergent.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Sequence

from .diffops import DiffOperator, check_divisibility, faadibruno, falling_factorial
from .errors import (
    DivisibilityViolation,
    InconclusiveBound,
    PoincareViolation,
    SingularLinearPart,
    SingularMatrix,
    TruncationTooSmall,
)
from .series import (
    Exponent,
    Series,
    SeriesMatrix,
    exp_binomial,
    exp_degree,
    exp_le,
    exp_sub,
    invert_rational_matrix,
    iter_exponents,
)

Vector = list[Series]
PolyMap = dict[tuple[int, ...], Vector]  # y-monomial gamma -> coefficient vector


# ---------------------------------------------------------------------------
# problem datum

class ProblemSpec:
    """The full datum (d, N, k, P, L_1..L_k, F) with F split as
    f(x) + A(x) y + H(x, y), H carrying only y-degree >= 2 terms."""

    __slots__ = ("dim", "unknowns", "order", "P", "operators", "f", "A", "H")

    def __init__(self, dim: int, unknowns: int, order: int, P: Series,
                 operators: Sequence[DiffOperator | None], f: Vector,
                 A: SeriesMatrix, H: PolyMap):
        if P.is_zero or P.constant_term() != 0:
            raise ValueError("P must be nonzero with P(0) = 0")
        if len(operators) != order:
            raise ValueError("need one operator slot per order 1..k")
        if any(fi.constant_term() != 0 for fi in f):
            raise ValueError("F(0, 0) must vanish")
        for gamma in H:
            if sum(gamma) < 2:
                raise ValueError("H may only contain y-degree >= 2 monomials")
        self.dim = dim
        self.unknowns = unknowns
        self.order = order
        self.P = P
        self.operators = list(operators)
        self.f = list(f)
        self.A = A
        self.H = {tuple(g): list(v) for g, v in H.items()}

    def with_trunc(self, trunc: int) -> "ProblemSpec":
        """Re-certify all (polynomial) data to the given working degree."""
        return ProblemSpec(
            self.dim, self.unknowns, self.order,
            self.P.with_trunc(trunc),
            [L if L is None else DiffOperator(
                self.dim, L.order,
                {a: s.with_trunc(trunc) for a, s in L.terms.items()})
             for L in self.operators],
            [s.with_trunc(trunc) for s in self.f],
            SeriesMatrix([[s.with_trunc(trunc) for s in row]
                          for row in self.A.entries]),
            {g: [s.with_trunc(trunc) for s in v] for g, v in self.H.items()},
        )

    def rhs(self, y: Vector) -> Vector:
        """F(x, y) = f + A y + H(x, y)."""
        out = [fi + ai for fi, ai in zip(self.f, self.A.apply(y))]
        hy = eval_poly_map(self.H, y, self.dim, self.unknowns)
        return [oi + hi for oi, hi in zip(out, hy)]

    def lhs(self, y: Vector) -> Vector:
        """sum_j P^j L_j(y), componentwise."""
        out = None
        for pos, L in enumerate(self.operators):
            if L is None or L.is_zero:
                continue
            Pj = self.P.pow(pos + 1)
            term = [Pj * L.apply(yi) for yi in y]
            out = term if out is None else [a + b for a, b in zip(out, term)]
        if out is None:
            trunc = min(yi.trunc for yi in y)
            return [Series.zero(self.dim, trunc) for _ in range(self.unknowns)]
        return out

    def residual(self, y: Vector) -> Vector:
        return [a - b for a, b in zip(self.lhs(y), self.rhs(y))]


def eval_poly_map(H: PolyMap, y: Vector, dim: int, unknowns: int) -> Vector:
    """sum_gamma A_gamma(x) y^gamma."""
    if not H:
        trunc = min(yi.trunc for yi in y) if y else 0
        return [Series.zero(dim, trunc) for _ in range(unknowns)]
    out = None
    for gamma, vec in H.items():
        mono = _y_power(y, gamma, dim)
        term = [c * mono for c in vec]
        out = term if out is None else [a + b for a, b in zip(out, term)]
    return out


def _y_power(y: Vector, gamma: Sequence[int], dim: int) -> Series:
    trunc = min(yi.trunc for yi in y)
    out = Series.constant(dim, trunc, 1)
    for yi, g in zip(y, gamma):
        for _ in range(g):
            out = out * yi
    return out


# ---------------------------------------------------------------------------
# exact inverses of series matrices

def invert_series_matrix(M: SeriesMatrix) -> SeriesMatrix:
    """Exact inverse of a matrix with invertible constant part: factor out
    the constant part and sum the finite Neumann tail of the remainder."""
    n = M.rows
    dim = M.dim
    trunc = min(s.trunc for row in M.entries for s in row)
    try:
        inv0 = invert_rational_matrix(M.constant_part())
    except SingularMatrix as exc:
        raise SingularLinearPart(str(exc)) from exc
    M0inv = SeriesMatrix.from_rational(inv0, dim, trunc)
    # M = M0 (I + M0^-1 M1)  =>  M^-1 = sum (-M0^-1 M1)^i  M0^-1
    M1 = M - SeriesMatrix.from_rational(
        [[Fraction(v) for v in row] for row in M.constant_part()], dim, trunc)
    R = _mat_neg(M0inv.matmul(M1))
    out = SeriesMatrix.identity(n, dim, trunc)
    power = R
    while not _mat_is_zero(power) and _mat_order(power) <= trunc:
        out = out + power
        power = _mat_truncate(power.matmul(R), trunc)
    return _mat_truncate(out.matmul(M0inv), trunc)


def _mat_neg(M: SeriesMatrix) -> SeriesMatrix:
    return SeriesMatrix([[-s for s in row] for row in M.entries])


def _mat_is_zero(M: SeriesMatrix) -> bool:
    return all(s.is_zero for row in M.entries for s in row)


def _mat_order(M: SeriesMatrix) -> int:
    orders = [s.order() for row in M.entries for s in row if not s.is_zero]
    return min(orders) if orders else 0


def _mat_truncate(M: SeriesMatrix, trunc: int) -> SeriesMatrix:
    return SeriesMatrix([[s.truncate(trunc) for s in row] for row in M.entries])


# ---------------------------------------------------------------------------
# implicit solves (Step 1 ingredients)

def solve_implicit(f: Vector, A: SeriesMatrix, H: PolyMap, degree: int) -> Vector:
    """Unique y with f + A y + H(x, y) = 0 and y(0) = 0, exact to ``degree``.

    Degree-graded fixed point y <- -A^-1 (f + H(x, y)); iteration m fixes
    all coefficients of total degree <= m.
    """
    dim = A.dim
    unknowns = A.rows
    Ainv = invert_series_matrix(A)
    y = [Series.zero(dim, degree) for _ in range(unknowns)]
    for _ in range(degree + 1):
        hy = eval_poly_map(H, y, dim, unknowns)
        rhs = [fi + hi for fi, hi in zip(f, hy)]
        new = [(-s).truncate(degree) for s in Ainv.apply(rhs)]
        if new == y:
            break
        y = new
    res = [fi + ai + hi for fi, ai, hi in zip(
        f, A.apply(y), eval_poly_map(H, y, dim, unknowns))]
    bad = min((s.trunc for s in res), default=degree)
    for s in res:
        if not s.equal_upto(Series.zero(dim, s.trunc), min(bad, degree)):
            raise ArithmeticError("implicit solve failed residual check")
    return y


def _shift_poly_map(H: PolyMap, y0: Vector, dim: int, unknowns: int,
                    trunc: int) -> tuple[Vector, SeriesMatrix, PolyMap]:
    """Re-expand H(x, y0 + w) in w: constant part, linear part, tail."""
    const = [Series.zero(dim, trunc) for _ in range(unknowns)]
    lin = [[Series.zero(dim, trunc) for _ in range(unknowns)]
           for _ in range(unknowns)]
    tail: PolyMap = {}
    for gamma, vec in H.items():
        deltas = _sub_multi_indices(gamma)
        for delta in deltas:
            factor = Series.constant(dim, trunc, exp_binomial(gamma, delta))
            for i, (g, d) in enumerate(zip(gamma, delta)):
                if g - d:
                    factor = factor * y0[i].pow(g - d)
            if factor.is_zero:
                continue
            wdeg = sum(delta)
            if wdeg == 0:
                for i in range(unknowns):
                    const[i] = const[i] + vec[i] * factor
            elif wdeg == 1:
                col = delta.index(1)
                for i in range(unknowns):
                    lin[i][col] = lin[i][col] + vec[i] * factor
            else:
                cur = tail.setdefault(
                    delta, [Series.zero(dim, trunc) for _ in range(unknowns)])
                for i in range(unknowns):
                    cur[i] = cur[i] + vec[i] * factor
                tail[delta] = cur
    tail = {g: v for g, v in tail.items()
            if any(not s.is_zero for s in v)}
    return const, SeriesMatrix(lin), tail


def _sub_multi_indices(gamma: tuple[int, ...]):
    """All delta with 0 <= delta <= gamma componentwise."""
    if len(gamma) == 1:
        return [(i,) for i in range(gamma[0] + 1)]
    rest = _sub_multi_indices(gamma[1:])
    return [(i,) + r for i in range(gamma[0] + 1) for r in rest]


# ---------------------------------------------------------------------------
# Step 1: reduction

class ReducedProblem:
    """Outcome of peeling off y_0 .. y_{k-1}: the tail w = y - sum y_m P^m
    satisfies  sum_j P^j L_j(w) = h P^k + B w + H(x, w)."""

    __slots__ = ("problem", "head", "B", "H", "h", "phis")

    def __init__(self, problem: ProblemSpec, head: list[Vector], B: SeriesMatrix,
                 H: PolyMap, h: Vector, phis: dict[int, Series]):
        self.problem = problem
        self.head = head
        self.B = B
        self.H = H
        self.h = h
        self.phis = phis


def reduce_problem(problem: ProblemSpec, degree: int) -> ReducedProblem:
    """Peel off the first k expansion coefficients by implicit solves."""
    P = problem.P
    dim, unknowns, k = problem.dim, problem.unknowns, problem.order
    verdict = check_divisibility(P, problem.operators)
    if not verdict.ok:
        j, monomial = sorted(verdict.witnesses.items())[0]
        raise DivisibilityViolation(
            monomial, f"P does not divide L_{j}*(P); witness {monomial}")
    y0 = solve_implicit(problem.f, problem.A, problem.H, degree)
    g = _neg_weighted_lhs(problem, y0)
    const, A0, H_cur = _shift_poly_map(problem.H, y0, dim, unknowns, degree)
    # H(x, y0 + w) - H(x, y0) = A0 w + H_cur(x, w); the constant part re-sums
    # to H(x, y0) and cancels against the implicit equation.
    B_cur = problem.A + A0
    head = [y0]
    for m in range(1, k):
        Pm = P.pow(m)
        f_m = [gi.divide_exact(Pm) for gi in g]
        H_m = {gamma: [c * Pm.pow(sum(gamma) - 1) for c in vec]
               for gamma, vec in H_cur.items()}
        ym = solve_implicit(f_m, B_cur, H_m, degree)
        head.append(ym)
        ymPm = [yi * Pm for yi in ym]
        g = _neg_weighted_lhs(problem, ymPm)
        _, A_m, H_cur = _shift_poly_map(H_cur, ymPm, dim, unknowns, degree)
        B_cur = B_cur + A_m
    h = [gi.divide_exact(P.pow(k)) for gi in g]
    return ReducedProblem(problem, head, B_cur, H_cur, h, verdict.quotients)


def _neg_weighted_lhs(problem: ProblemSpec, y: Vector) -> Vector:
    """-sum_j P^j L_j(y)."""
    return [-s for s in problem.lhs(y)]


# ---------------------------------------------------------------------------
# the lifted equation

class LiftedEquation:
    """[c_p (t d_t)^p + ... + c_0] u = forcing * t^k + G(x)(t, D^m u).

    ``linear`` maps (j, b, alpha) -> scalar series coefficient of the right
    side term  g * t^(j+b) d_t^b d_alpha;  j >= 1 always, so the order-n
    recurrence only consults strictly lower orders.  ``nonlinear`` maps
    (j, gamma) -> vector coefficient of t^j u^gamma, |gamma| >= 2.
    """

    __slots__ = ("dim", "unknowns", "k", "cs", "forcing", "linear", "nonlinear",
                 "m", "truncated_terms")

    def __init__(self, dim: int, unknowns: int, k: int, cs: list[SeriesMatrix],
                 forcing: Vector, linear: dict[tuple[int, int, Exponent], Series],
                 nonlinear: dict[tuple[int, tuple[int, ...]], Vector],
                 truncated_terms: int = 0):
        for (j, b, alpha) in linear:
            if j < 1:
                raise ValueError("linear terms need a strictly positive t-power")
        self.dim = dim
        self.unknowns = unknowns
        self.k = k
        self.cs = cs
        self.forcing = forcing
        self.linear = dict(linear)
        self.nonlinear = dict(nonlinear)
        self.m = max((b + exp_degree(a) for (_, b, a) in linear), default=0)
        self.truncated_terms = truncated_terms

    @property
    def p(self) -> int:
        return len(self.cs) - 1

    def char_matrix(self, n: int) -> SeriesMatrix:
        """sum_p c_p(x) n^p."""
        out = self.cs[0]
        for p, c in enumerate(self.cs[1:], start=1):
            out = out + SeriesMatrix(
                [[s.scale(n ** p) for s in row] for row in c.entries])
        return out


def build_lifted(reduced: ReducedProblem) -> LiftedEquation:
    """Assemble the time-lifted equation whose order-n coefficients are the
    P-expansion tail of the reduced problem."""
    problem = reduced.problem
    P = problem.P
    dim, unknowns, k = problem.dim, problem.unknowns, problem.order
    zero_alpha = (0,) * dim
    linear: dict[tuple[int, int, Exponent], Series] = {}
    dropped = 0

    def put(key, series):
        nonlocal dropped
        if series.is_zero:
            dropped += 1
            return
        if key in linear:
            linear[key] = linear[key] + series
        else:
            linear[key] = series

    tables: dict[Exponent, object] = {}

    def A_coeff(beta: Exponent, l: int) -> Series:
        if beta not in tables:
            tables[beta] = faadibruno(P, beta)
        return tables[beta].coefficient(l)

    for pos, L in enumerate(problem.operators):
        j = pos + 1
        if L is not None and not L.is_zero:
            for alpha, coef in L.terms.items():
                put((j, 0, alpha), coef)
            phi = reduced.phis.get(j)
            if phi is not None and not phi.is_zero:
                put((1, j, zero_alpha), phi)
            for l in range(1, j):
                acc = None
                for alpha, coef in L.terms.items():
                    term = coef * A_coeff(alpha, l)
                    acc = term if acc is None else acc + term
                if acc is not None:
                    put((j - l, l, zero_alpha), acc)
                for alpha, coef in L.terms.items():
                    for mm in range(l, j):
                        for beta in iter_exponents(dim, mm):
                            if not exp_le(beta, alpha) or beta == alpha:
                                continue
                            c = (coef * A_coeff(beta, l)).scale(
                                exp_binomial(alpha, beta))
                            put((j - l, l, exp_sub(alpha, beta)), c)
    nonlinear = {(0, gamma): [-s for s in vec]
                 for gamma, vec in reduced.H.items()}
    forcing = [-s for s in reduced.h]
    return LiftedEquation(dim, unknowns, k, [reduced.B], forcing, linear,
                          nonlinear, truncated_terms=dropped)


def solve_lifted(eq: LiftedEquation, order: int, degree: int) -> list[Vector]:
    """Coefficients u_0..u_order of the unique solution sum u_n t^n with
    u_0 = ... = u_{k-1} = 0.  Certified degrees are carried on each series."""
    dim, unknowns, k = eq.dim, eq.unknowns, eq.k
    us: list[Vector] = [
        [Series.zero(dim, degree) for _ in range(unknowns)] for _ in range(k)
    ]
    inv_cache: dict[int, SeriesMatrix] = {}

    def inverse_at(n: int) -> SeriesMatrix:
        key = 0 if eq.p == 0 else n
        if key not in inv_cache:
            C = eq.char_matrix(n)
            try:
                inv_cache[key] = invert_series_matrix(C)
            except SingularLinearPart as exc:
                raise PoincareViolation(n) from exc
        return inv_cache[key]

    for n in range(k, order + 1):
        rhs = [Series.zero(dim, degree) for _ in range(unknowns)]
        if n == k:
            rhs = [r + f for r, f in zip(rhs, eq.forcing)]
        for (j, b, alpha), g in eq.linear.items():
            l = n - j
            if l < k or l > n - 1 or comb(l, b) == 0:
                continue
            w = exp_degree(alpha)
            scale = comb(l, b) * falling_factorial(b, b)
            for i in range(unknowns):
                ul = us[l][i]
                if w and ul.trunc - w < 0 and not ul.is_zero:
                    raise TruncationTooSmall(
                        f"order {n}: needs degree {w} derivative of a series "
                        f"certified only to {ul.trunc}")
                term = (g * ul.diff(alpha)).scale(scale)
                rhs[i] = rhs[i] + term
        for (j, gamma), vec in eq.nonlinear.items():
            target = n - j
            conv = _tail_monomial_coeff(us, gamma, target, k, dim, degree)
            if conv is None or conv.is_zero:
                continue
            for i in range(unknowns):
                rhs[i] = rhs[i] + vec[i] * conv
        un = inverse_at(n).apply(rhs)
        us.append([s for s in un])
    return us


def _tail_monomial_coeff(us: list[Vector], gamma: Sequence[int], target: int,
                         k: int, dim: int, degree: int) -> Series | None:
    """Coefficient of t^target in prod_i (sum_{l>=k} u_{l,i} t^l)^gamma_i."""
    factors = [i for i, g in enumerate(gamma) for _ in range(g)]
    if target < k * len(factors):
        return None
    states: dict[int, Series] = {0: Series.constant(dim, degree, 1)}
    for pos, i in enumerate(factors):
        remaining = len(factors) - pos - 1
        new: dict[int, Series] = {}
        for deg, val in states.items():
            for l in range(k, target - deg - k * remaining + 1):
                if l >= len(us):
                    break
                u = us[l][i]
                if u.is_zero:
                    continue
                nd = deg + l
                term = val * u
                new[nd] = new[nd] + term if nd in new else term
        states = new
    return states.get(target)


# ---------------------------------------------------------------------------
# the P-expansion and the full pipeline

class PExpansion:
    """Coefficients y_0..y_N of a series sum y_n P^n, with the degree and
    order bounds up to which they are certified exact."""

    __slots__ = ("P", "coeffs", "degree", "order")

    def __init__(self, P: Series, coeffs: list[Vector], degree: int, order: int):
        self.P = P
        self.coeffs = coeffs
        self.degree = degree
        self.order = order

    @property
    def unknowns(self) -> int:
        return len(self.coeffs[0]) if self.coeffs else 0

    def evaluate(self, degree: int | None = None) -> Vector:
        """sum_n y_n P^n; certified to min over terms and the tail bound
        (order+1) * o(P) - 1."""
        degree = self.degree if degree is None else degree
        omega = self.P.order()
        out = None
        for n, yn in enumerate(self.coeffs):
            Pn = self.P.pow(n)
            term = [yi * Pn for yi in yn]
            out = term if out is None else [a + b for a, b in zip(out, term)]
        cert = min(degree, (len(self.coeffs)) * omega - 1,
                   *(s.trunc for s in out))
        return [s.truncate(cert) for s in out]

    def norms(self, rho) -> list[tuple[int, Fraction, int]]:
        """Rows (n, majorant norm of y_n at radius rho, certified degree)."""
        out = []
        for n, yn in enumerate(self.coeffs):
            norm = sum((s.majorant_norm(rho) for s in yn), Fraction(0))
            out.append((n, norm, min(s.trunc for s in yn)))
        return out

    def to_json(self) -> dict:
        return {
            "P": self.P.to_json(),
            "degree": self.degree,
            "order": self.order,
            "coeffs": [[s.to_json() for s in yn] for yn in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PExpansion":
        return cls(
            Series.from_json(data["P"]),
            [[Series.from_json(s) for s in yn] for yn in data["coeffs"]],
            data["degree"], data["order"],
        )


def solve_p_expansion(problem: ProblemSpec, order: int, degree: int) -> PExpansion:
    """Full pipeline: reduction, lift, order recurrence, reassembly."""
    k = problem.order
    Lk = problem.operators[-1]
    if Lk is None or Lk.is_zero:
        raise ValueError("the top operator L_k must not vanish identically")
    working = degree + 2 * k + 2
    prob = problem.with_trunc(working)
    reduced = reduce_problem(prob, working)
    eq = build_lifted(reduced)
    tail = solve_lifted(eq, order, working)
    coeffs = [
        [s.truncate(min(s.trunc, working)) for s in vec]
        for vec in reduced.head
    ] + tail[k:order + 1]
    return PExpansion(prob.P, coeffs, degree, order)


def evaluate(pexp: PExpansion, degree: int | None = None) -> Vector:
    return pexp.evaluate(degree)


# ---------------------------------------------------------------------------
# the direct degree-graded oracle

def solve_direct(problem: ProblemSpec, degree: int) -> Vector:
    """Unique truncated solution with y(0) = 0, found degree by degree.

    At total degree n the unknown homogeneous component enters linearly;
    the corresponding exact rational system is built column by column and
    solved by Gaussian elimination.
    """
    working = degree + problem.order
    prob = problem.with_trunc(working)
    dim, unknowns = prob.dim, prob.unknowns
    try:
        A0inv = invert_rational_matrix(prob.A.constant_part())
    except SingularMatrix as exc:
        raise SingularLinearPart("D_yF(0,0) is singular") from exc
    omega = prob.P.order()
    # when every left-side term strictly raises total degree, the degree-n
    # system is just -A(0) acting monomial by monomial
    raises_degree = all(
        (pos + 1) * (omega - 1) + c.order() > 0
        for pos, L in enumerate(prob.operators) if L is not None
        for c in L.terms.values()
    )
    y = [Series.zero(dim, working) for _ in range(unknowns)]
    # residual R(y) = lhs(y) - f - A y - H(y), maintained incrementally in
    # its linear pieces; H is re-evaluated only when present.
    lin_acc = [Series.zero(dim, working) for _ in range(unknowns)]  # lhs(y)-A y
    for n in range(1, degree + 1):
        hy = eval_poly_map(prob.H, y, dim, unknowns)
        resid = [la - fi - hi for la, fi, hi in zip(lin_acc, prob.f, hy)]
        rhs_vec = []
        for s in resid:
            comp = s.homogeneous(n)
            rhs_vec.append(comp)
        if raises_degree:
            monos = {m for s in rhs_vec for m in s.terms}
            delta = [dict() for _ in range(unknowns)]
            for m in monos:
                r = [rhs_vec[i].coeff(m) for i in range(unknowns)]
                for i in range(unknowns):
                    c = sum((A0inv[i][j] * r[j] for j in range(unknowns)),
                            Fraction(0))
                    if c:
                        delta[i][m] = c
            delta = [Series(dim, working, t) for t in delta]
            y = [a + b for a, b in zip(y, delta)]
            upd = [a - b for a, b in
                   zip(prob.lhs(delta), prob.A.apply(delta))]
            lin_acc = [a + b for a, b in zip(lin_acc, upd)]
            continue
        monos = list(iter_exponents(dim, n))
        size = unknowns * len(monos)
        index = {(i, m): i * len(monos) + c
                 for i in range(unknowns) for c, m in enumerate(monos)}
        matrix = [[Fraction(0)] * size for _ in range(size)]
        for i in range(unknowns):
            for c, m in enumerate(monos):
                basis = [Series.zero(dim, working)] * unknowns
                basis[i] = Series.monomial(dim, working, m)
                col_vec = [a - b for a, b in
                           zip(prob.lhs(basis), prob.A.apply(basis))]
                col = index[(i, m)]
                for i2 in range(unknowns):
                    for e, cval in col_vec[i2].homogeneous(n).terms.items():
                        matrix[index[(i2, e)]][col] += cval
        rhs_flat = [Fraction(0)] * size
        for i in range(unknowns):
            for e, cval in rhs_vec[i].terms.items():
                rhs_flat[index[(i, e)]] = -cval
        try:
            sol = _solve_linear(matrix, rhs_flat)
        except SingularMatrix as exc:
            raise SingularLinearPart(
                f"degree-{n} linear system is singular") from exc
        delta = []
        for i in range(unknowns):
            terms = {m: sol[index[(i, m)]] for m in monos}
            delta.append(Series(dim, working, terms))
        y = [a + b for a, b in zip(y, delta)]
        upd = [a - b for a, b in
               zip(prob.lhs(delta), prob.A.apply(delta))]
        lin_acc = [a + b for a, b in zip(lin_acc, upd)]
    return [s.truncate(degree) for s in y]


def _solve_linear(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(matrix)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrix(f"singular at column {col}")
        a[col], a[pivot] = a[pivot], a[col]
        inv = Fraction(1) / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


# ---------------------------------------------------------------------------
# Poincare checker (convergent regime)

class PoincareVerdict:
    """Result of checking the non-resonance condition at every order."""

    __slots__ = ("ok", "n_star", "failing", "partial", "lambdas", "A0")

    def __init__(self, ok: bool, n_star: int, failing: list[int], partial: bool,
                 lambdas: dict[int, Fraction], A0: list[list[Fraction]]):
        self.ok = ok
        self.n_star = n_star
        self.failing = failing
        self.partial = partial
        self.lambdas = lambdas
        self.A0 = A0

    def __bool__(self):
        return self.ok

    def char_value(self, n: int) -> Fraction:
        return sum((falling_factorial(n, j) * lam
                    for j, lam in self.lambdas.items()), Fraction(0))

    def determinant(self, n: int) -> Fraction:
        from .series import _det
        s = self.char_value(n)
        N = len(self.A0)
        m = [[(s if i == j else Fraction(0)) - self.A0[i][j]
              for j in range(N)] for i in range(N)]
        return _det(m)

    def __repr__(self):
        tag = "pass" if self.ok else f"fail at n={self.failing}"
        extra = ", partial" if self.partial else ""
        return f"PoincareVerdict({tag}, n_star={self.n_star}{extra})"


def check_poincare(problem: ProblemSpec, user_bound: int | None = None) -> PoincareVerdict:
    """Check that [sum_j n!/(n-j)! L_j*(P)(0)] I - D_yF(0,0) is invertible
    for every n >= 0.  When the top symbol value is nonzero, a finite bound
    n* is derived beyond which diagonal dominance makes failure impossible;
    otherwise only a partial check up to ``user_bound`` is possible."""
    k = problem.order
    lambdas: dict[int, Fraction] = {}
    for pos, L in enumerate(problem.operators):
        j = pos + 1
        if L is None or L.is_zero:
            lambdas[j] = Fraction(0)
        else:
            lambdas[j] = L.star(problem.P).constant_term()
    A0 = [[Fraction(v) for v in row] for row in problem.A.constant_part()]
    N = len(A0)
    row_norm = max(sum(abs(v) for v in row) for row in A0) if N else Fraction(0)
    partial = False
    if lambdas[k] == 0:
        if user_bound is None:
            raise InconclusiveBound(
                "L_k*(P)(0) = 0: no finite bound n* exists; "
                "pass a user bound for a partial check")
        n_star = user_bound
        partial = True
    else:
        # q(n) = |lam_k| ff(n,k) - sum_{j<k} |lam_j| ff(n,j) - ||A0||
        # is eventually positive; beyond the Cauchy root bound of q the
        # matrix is strictly diagonally dominant.
        coeffs = [Fraction(0)] * (k + 1)
        for j, lam in lambdas.items():
            sign = 1 if j == k else -1
            poly = _falling_factorial_poly(j)
            for l, c in enumerate(poly):
                coeffs[l] += sign * abs(lam) * c
        coeffs[0] -= row_norm
        top = coeffs[k]
        bound = 1 + max((abs(c / top) for c in coeffs[:k]), default=Fraction(0))
        n_star = max(k, int(bound) + 1)
    failing = [n for n in range(n_star + 1)
               if _char_det(lambdas, A0, n) == 0]
    return PoincareVerdict(not failing, n_star, failing, partial, lambdas, A0)


def _char_det(lambdas: dict[int, Fraction], A0: list[list[Fraction]], n: int) -> Fraction:
    from .series import _det
    s = sum((falling_factorial(n, j) * lam for j, lam in lambdas.items()),
            Fraction(0))
    N = len(A0)
    m = [[(s if i == j else Fraction(0)) - A0[i][j] for j in range(N)]
         for i in range(N)]
    return _det(m)


def _falling_factorial_poly(j: int) -> list[Fraction]:
    """Coefficients of n(n-1)...(n-j+1) as a polynomial in n."""
    coeffs = [Fraction(0), Fraction(1)]
    for i in range(1, j):
        nxt = [Fraction(0)] * (len(coeffs) + 1)
        for p, c in enumerate(coeffs):
            nxt[p + 1] += c
            nxt[p] -= i * c
        coeffs = nxt
    return coeffs
