"""Built-in example problems with stored expected results.

Each entry generates a problem document from its parameters, and its
``verify`` hook compares a finished run against stored closed forms or
coefficient tables, raising RegressionMismatch on the first difference.

Notes on the stored values:

* ``eje1`` is kept in the shifted unknown y - 1, so that the solution
  vanishes at the origin; the leading stored coefficient is then forced
  by the recurrence to be 1/k! (the product formula for the remaining
  ones is unchanged).
* ``eje3`` stores the diagonal coefficients -a_n with a_0 = 0,
  a_1 = a_2 = 1 and a_n = (n-1)^2 a_{n-1} + (n-2)(n-3) a_{n-2}; the sign
  is fixed by writing the equation with the forcing on the right side.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import RegressionMismatch
from .gevrey import estimate_order, monomial_gevrey_fit, theoretical_order
from .series import Series


def eje3_table(upto: int) -> list[Fraction]:
    a = [Fraction(0), Fraction(1), Fraction(1)]
    for n in range(3, upto + 1):
        a.append((n - 1) ** 2 * a[n - 1] + (n - 2) * (n - 3) * a[n - 2])
    return a[:upto + 1]


def eje1_table(m: int, k: int, upto_j: int) -> list[Fraction]:
    """Coefficient of x^(j*m*k + k) in the shifted eje1 solution."""
    a = [Fraction(1, math.factorial(k))]
    for j in range(1, upto_j + 1):
        step = Fraction(math.factorial((j - 1) * m * k + k),
                        math.factorial((j - 1) * m * k))
        a.append(a[-1] * step)
    return a


class ExampleEntry:
    __slots__ = ("name", "summary", "defaults", "document", "verify")

    def __init__(self, name, summary, defaults, document, verify):
        self.name = name
        self.summary = summary
        self.defaults = defaults
        self.document = document
        self.verify = verify


def _doc_eje1(params) -> str:
    m, k = params["m"], params["k"]
    if m * k < m + 1:
        raise ValueError("need m*k >= m+1 for the divisibility hypothesis")
    alpha = "(" + ",".join(["%d" % k] * 1) + ")"
    return (
        f"dim 1; unknowns 1; order {k}\n"
        f"P = x1^{m + 1}\n"
        f"L {k} : ({k}) -> 1\n"
        f"F 1 = y1 + -1/{math.factorial(k)}*x1^{k}\n"
        f"option degree = {params['degree']}\n"
        f"option order = {params['order']}\n"
    )


def _verify_eje1(params, report):
    m, k = params["m"], params["k"]
    y = report["direct"][0]
    table = eje1_table(m, k, (y.trunc - k) // (m * k))
    expected = {}
    for j, c in enumerate(table):
        e = j * m * k + k
        if e <= y.trunc:
            expected[(e,)] = c
    for e in sorted(set(y.terms) | set(expected)):
        got = y.coeff(e)
        want = expected.get(e, Fraction(0))
        if got != want:
            raise RegressionMismatch(
                "eje1", f"coefficient of x1^{e[0]}: got {got}, expected {want}")
    if report["theoretical"] != k:
        raise RegressionMismatch(
            "eje1", f"theoretical order {report['theoretical']} != {k}")


def _doc_eje3(params) -> str:
    return (
        "dim 2; unknowns 1; order 2\n"
        "P = x1*x2\n"
        "L 2 : (2,0) -> x1^2; (0,2) -> x2^2; (1,1) -> 2\n"
        "F 1 = 2*y1 + 2*x1*x2\n"
        f"option degree = {params['degree']}\n"
        f"option order = {params['order']}\n"
    )


def _verify_eje3(params, report):
    y = report["direct"][0]
    upto = y.trunc // 2
    table = eje3_table(upto)
    for e in y.terms:
        if e[0] != e[1]:
            raise RegressionMismatch(
                "eje3", f"unexpected off-diagonal coefficient at {e}")
    for n in range(upto + 1):
        got = y.coeff((n, n))
        want = -table[n]
        if got != want:
            raise RegressionMismatch(
                "eje3",
                f"coefficient of (x1 x2)^{n}: got {got}, expected {want}")
    if report["theoretical"] != 2:
        raise RegressionMismatch(
            "eje3", f"theoretical order {report['theoretical']} != 2")
    est = report["estimate"]
    if est is not None and abs(est.fitted_order - 2) > 0.35:
        raise RegressionMismatch(
            "eje3", f"fitted order {est.fitted_order:.3f} not near 2")


def _doc_ejeLast(params) -> str:
    k = params["k"]
    lines = [
        "dim 2; unknowns 1; order %d" % k,
        "P = x1*x2",
    ]
    for j in range(1, k + 1):
        lines.append(f"L {j} : ({j},0) -> x1")
    lines.append("F 1 = y1 + -1*x1 + -1*x2")
    lines.append(f"option degree = {params['degree']}")
    lines.append(f"option order = {params['order']}")
    return "\n".join(lines) + "\n"


def _verify_ejeLast(params, report):
    k = params["k"]
    if report["theoretical"] != k:
        raise RegressionMismatch(
            "ejeLast", f"theoretical order {report['theoretical']} != {k}")
    if k == 1:
        # solution x + eps + sum_{n>=1} n! x^(n+1) eps^n
        y = report["direct"][0]
        expected = {(1, 0): Fraction(1), (0, 1): Fraction(1)}
        n = 1
        while n + 1 + n <= y.trunc:
            expected[(n + 1, n)] = Fraction(math.factorial(n))
            n += 1
        for e in sorted(set(y.terms) | set(expected)):
            got = y.coeff(e)
            want = expected.get(e, Fraction(0))
            if got != want:
                raise RegressionMismatch(
                    "ejeLast", f"coefficient at {e}: got {got}, expected {want}")
        est = report["estimate"]
        if est is not None and abs(est.fitted_order - 1) > 0.15:
            raise RegressionMismatch(
                "ejeLast", f"fitted order {est.fitted_order:.3f} not near 1")


def _doc_eje4(params) -> str:
    alpha = params["alpha"]
    k = params["k"]
    d = len(alpha)
    mono = "*".join(
        f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(alpha) if a)
    lines = [f"dim {d}; unknowns 1; order {k}", f"P = {mono}"]
    for j in range(1, k + 1):
        terms = []
        for beta in _exponents(d, j):
            bm = "*".join(f"x{i + 1}" + (f"^{b}" if b > 1 else "")
                          for i, b in enumerate(beta) if b)
            terms.append(f"({','.join(map(str, beta))}) -> {bm}")
        lines.append(f"L {j} : " + "; ".join(terms))
    xsum = " + ".join(f"x{i + 1}" for i in range(d))
    lines.append(f"F 1 = -1*y1 + {xsum}")
    lines.append(f"option degree = {params['degree']}")
    lines.append(f"option order = {params['order']}")
    return "\n".join(lines) + "\n"


def _exponents(dim, total):
    if dim == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _exponents(dim - 1, total - head):
            yield (head,) + rest


def _verify_eje4(params, report):
    alpha, k = params["alpha"], params["k"]
    if report["theoretical"] != k:
        raise RegressionMismatch(
            "eje4", f"theoretical order {report['theoretical']} != {k}")
    fit = monomial_gevrey_fit(report["direct"][0], alpha, k)
    if not fit.witness:
        raise RegressionMismatch(
            "eje4", f"no Gevrey witness at s={k}; violating {fit.violating}")
    if params["alpha"] == (1, 1) and params["k"] == 1:
        y = report["direct"][0]
        # leading diagonal band: x1 + x2, then (-1)^n (2n-3)!! x^(n+1,n)+(n,n+1)
        expected = {(1, 0): Fraction(1), (0, 1): Fraction(1)}
        val = Fraction(-1)
        n = 1
        while 2 * n + 1 <= y.trunc:
            expected[(n + 1, n)] = val
            expected[(n, n + 1)] = val
            val = val * (-(2 * n + 1))
            n += 1
        for e in sorted(set(y.terms) | set(expected)):
            got = y.coeff(e)
            want = expected.get(e, Fraction(0))
            if got != want:
                raise RegressionMismatch(
                    "eje4", f"coefficient at {e}: got {got}, expected {want}")


ENTRIES = {
    "eje1": ExampleEntry(
        "eje1",
        "scalar x^((m+1)k) d^k y = y - x^k/k! (shifted); closed-form table",
        {"m": 1, "k": 2, "degree": 30, "order": 14},
        _doc_eje1, _verify_eje1),
    "eje3": ExampleEntry(
        "eje3",
        "x1^2 x2^2 (x1^2 d1^2 + x2^2 d2^2 + 2 d1 d2) y = 2y + 2 x1 x2",
        {"degree": 40, "order": 20},
        _doc_eje3, _verify_eje3),
    "ejeLast": ExampleEntry(
        "ejeLast",
        "singular perturbation x2 * x1^2 d1 y (and higher) = y - x1 - x2",
        {"k": 1, "degree": 40, "order": 18},
        _doc_ejeLast, _verify_ejeLast),
    "eje4": ExampleEntry(
        "eje4",
        "P = x^alpha with Euler-type operators sum x^beta d_beta",
        {"alpha": (1, 1), "k": 1, "degree": 24, "order": 10},
        _doc_eje4, _verify_eje4),
}


def list_examples() -> list[tuple[str, str]]:
    return [(e.name, e.summary) for e in ENTRIES.values()]


def build_document(name: str, overrides: dict | None = None) -> tuple[str, dict]:
    entry = ENTRIES[name]
    params = dict(entry.defaults)
    if overrides:
        unknown = set(overrides) - set(params)
        if unknown:
            raise KeyError(f"unknown parameters for {name}: {sorted(unknown)}")
        params.update(overrides)
    if "alpha" in params:
        params["alpha"] = tuple(params["alpha"])
    return entry.document(params), params


def run_example(name: str, overrides: dict | None = None) -> dict:
    """Parse, check, solve (both routes), estimate, and verify one entry.

    Returns the report dict; raises RegressionMismatch on any difference
    from the stored expected values."""
    from .dsl import parse_problem
    from .solver import (build_lifted, evaluate, reduce_problem, solve_direct,
                         solve_p_expansion)

    if name not in ENTRIES:
        raise KeyError(f"no example named {name!r}")
    text, params = build_document(name, overrides)
    doc = parse_problem(text)
    spec = doc.spec
    degree = doc.options["degree"]
    order = doc.options["order"]
    direct = solve_direct(spec, degree)
    pexp = solve_p_expansion(spec, order, degree)
    summed = evaluate(pexp)
    cert = min(min(s.trunc for s in summed), degree)
    for a, b in zip(summed, direct):
        if not a.equal_upto(b, cert):
            raise RegressionMismatch(
                name, "pipeline and direct solutions disagree within "
                      f"certified degree {cert}")
    eq = build_lifted(reduce_problem(
        spec.with_trunc(degree + 2 * spec.order + 2),
        degree + 2 * spec.order + 2))
    theo = theoretical_order(eq)
    norms = [(n, r) for n, r, _ in pexp.norms(doc.options["rho"])]
    try:
        est = estimate_order(norms, float(doc.options["window"]),
                             doc.options["rho"])
    except Exception:
        est = None
    report = {
        "name": name,
        "params": params,
        "document": text,
        "spec": spec,
        "direct": direct,
        "pexpansion": pexp,
        "theoretical": theo,
        "estimate": est,
        "certified_degree": cert,
    }
    ENTRIES[name].verify(params, report)
    return report
