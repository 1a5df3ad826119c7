"""Exact rational evaluation of the determinant-difference moments F2(n, k).

``F2(n, k) = <|rho|^k (|rho^PT| - |rho|)^n> / <|rho|^k>`` is produced as
``g(k, n) * F2'(n, k)``, with ``F2'`` available both as a prefactor times a
finite sum and as a prefactor times a terminating 4F3 at unit argument.
Nothing here touches floating point; :func:`render_decimal` is the only
place a decimal string is produced.

Parameter convention: Monte Carlo against Hilbert-Schmidt samples shows the
formula's ``alpha`` is half the Dyson index (``alpha = 1/2`` for real, ``1``
for complex, ``2`` for quaternionic density matrices).  Use
:func:`alpha_for_dyson` to translate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction

from .errors import DomainError, ZeroDenominatorPochhammer

Rational = Fraction


def as_rational(x) -> Fraction:
    if isinstance(x, float):
        raise DomainError("pass alpha as an int, Fraction or 'p/q' string, not a float")
    return Fraction(x)


@dataclass(frozen=True)
class MomentParams:
    n: int
    k: int
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_rational(self.alpha))
        if int(self.n) != self.n or self.n < 0 or int(self.k) != self.k or self.k < 0:
            raise DomainError(f"n and k must be nonnegative integers, got n={self.n}, k={self.k}")
        if self.alpha <= 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")


def alpha_for_dyson(beta) -> Fraction:
    """Formula parameter for Dyson index ``beta`` (1 real, 2 complex, 4 quaternionic)."""
    return as_rational(beta) / 2


def pochhammer(x, m: int) -> Fraction:
    """Rising factorial ``x (x+1) ... (x+m-1)``; ``(x)_0 = 1``."""
    if m < 0:
        raise DomainError("Pochhammer length must be nonnegative")
    x = Fraction(x)
    out = Fraction(1)
    for i in range(m):
        out *= x + i
    return out


def _nonzero(name, x, m):
    val = pochhammer(x, m)
    if val == 0:
        raise ZeroDenominatorPochhammer(f"({x})_{m} [{name}]", val)
    return val


def g_factor(p: MomentParams) -> Fraction:
    n, k, a = p.n, p.k, p.alpha
    num = pochhammer(k + 1, n) * pochhammer(k + 1 + a, n) * pochhammer(k + 1 + 2 * a, n)
    den = (
        Fraction(2) ** (6 * n)
        * _nonzero("k+3a+3/2", k + 3 * a + Fraction(3, 2), n)
        * _nonzero("2k+6a+5/2", 2 * k + 6 * a + Fraction(5, 2), 2 * n)
    )
    return num / den


def _series_term(n, k, a, j):
    num = (
        pochhammer(Fraction(-n, 2), j)
        * pochhammer(Fraction(1 - n, 2), j)
        * pochhammer(k + 1 + a, j)
        * pochhammer(k + 1 + 2 * a, j)
    )
    den = (
        math.factorial(j)
        * _nonzero("1-n-a", 1 - n - a, j)
        * _nonzero("1/2-n-a", Fraction(1, 2) - n - a, j)
        * _nonzero("n+2k+2+5a", n + 2 * k + 2 + 5 * a, j)
    )
    return num / den


def f2_prime_sum(p: MomentParams) -> Fraction:
    """Prefactor built from negative-argument Pochhammers times the finite j-sum.

    The summand's power of two, written ``2^(2j + 2n - 2j)``, is ``4^n``.
    """
    n, k, a = p.n, p.k, p.alpha
    pre = (
        (-1) ** n
        * pochhammer(a, n)
        * pochhammer(a + Fraction(1, 2), n)
        * pochhammer(-2 * k - 2 * n - 1 - 5 * a, n)
        / (
            _nonzero("-n-k", -n - k, n)
            * _nonzero("-k-n-a", -k - n - a, n)
            * _nonzero("-k-n-2a", -k - n - 2 * a, n)
        )
    )
    total = sum((_series_term(n, k, a, j) * Fraction(2) ** (2 * n) for j in range(n // 2 + 1)), Fraction(0))
    return pre * total


def hyp4f3_terminating(upper, lower, max_terms=None) -> Fraction:
    """Terminating generalized hypergeometric series at argument 1.

    Stops after the first vanishing term produced by a nonpositive-integer
    upper parameter, or after ``max_terms`` terms.
    """
    upper = [Fraction(u) for u in upper]
    lower = [Fraction(b) for b in lower]
    if max_terms is None:
        stops = [-u for u in upper if u <= 0 and u.denominator == 1]
        if not stops:
            raise DomainError("series does not terminate")
        max_terms = int(min(stops)) + 1
    total = Fraction(0)
    term = Fraction(1)
    for j in range(max_terms):
        total += term
        num = math.prod((u + j for u in upper), start=Fraction(1))
        den = math.prod((b + j for b in lower), start=Fraction(1)) * (j + 1)
        if num == 0:
            break
        if den == 0:
            raise ZeroDenominatorPochhammer(f"lower parameter at j={j}", den)
        term *= num / den
    return total


def f2_prime_hyp(p: MomentParams) -> Fraction:
    """Prefactor built from positive Pochhammers times a terminating 4F3(1)."""
    n, k, a = p.n, p.k, p.alpha
    pre = (
        (-1) ** n
        * Fraction(2) ** (2 * n)
        * pochhammer(a, n)
        * pochhammer(a + Fraction(1, 2), n)
        * pochhammer(n + 2 * k + 2 + 5 * a, n)
        / (
            _nonzero("k+1", k + 1, n)
            * _nonzero("k+1+a", k + 1 + a, n)
            * _nonzero("k+1+2a", k + 1 + 2 * a, n)
        )
    )
    lower = (1 - n - a, Fraction(1, 2) - n - a, n + 2 * k + 2 + 5 * a)
    for name, b in zip(("1-n-a", "1/2-n-a", "n+2k+2+5a"), lower):
        _nonzero(name, b, n // 2)
    upper = (Fraction(-n, 2), Fraction(1 - n, 2), k + 1 + a, k + 1 + 2 * a)
    return pre * hyp4f3_terminating(upper, lower, max_terms=n // 2 + 1)


def f2_moment(p: MomentParams) -> Fraction:
    """``g(k, n) * F2'(n, k)``; raises if the two ``F2'`` forms disagree."""
    s = f2_prime_sum(p)
    h = f2_prime_hyp(p)
    if s != h:
        raise ArithmeticError(f"F2' forms disagree at {p}: {s} != {h}")
    return g_factor(p) * s


def render_decimal(x: Fraction, digits: int = 17) -> str:
    """Round-half-even decimal with ``digits`` significant digits."""
    x = Fraction(x)
    if x == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = digits
        ctx.rounding = ROUND_HALF_EVEN
        return str(Decimal(x.numerator) / Decimal(x.denominator))
