"""Closed-form bound evaluators and binomial tail probabilities.

"log 2" in every normalisation is the natural logarithm. Probability bounds
that can underflow are evaluated as base-2 logarithms first; the plain value
is ``2 ** log2_value`` and may be 0.0 when not representable.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import betaln

from .core import scalar_product_signs
from .errors import DimensionMismatch, DomainError

LN2 = math.log(2)
MGF_MAX_LOG2_N = 24
MGF_MAX_T = 10.0
BINOMIAL_MAX_N = 1 << 24
EXACT_TAIL_MAX_N = 1 << 16


@dataclass
class BoundReport:
    name: str
    inputs: dict
    bound_value: float
    comparison: Optional[float] = None
    satisfied: Optional[bool] = None
    log2_value: Optional[float] = field(default=None, repr=False)

    def csv_row(self):
        params = ";".join(f"{k}={v}" for k, v in self.inputs.items() if k not in ("n", "r"))
        return [
            self.name,
            self.inputs.get("n", ""),
            self.inputs.get("r", ""),
            params,
            f"{self.bound_value:.9g}",
            "" if self.comparison is None else f"{self.comparison:.9g}",
            "" if self.satisfied is None else str(self.satisfied).lower(),
        ]


CSV_HEADER = ["name", "n", "r", "params", "bound", "comparison", "satisfied"]


def _check_order(n, r, lo=1):
    if n < 1 or not lo <= r <= n:
        raise DomainError(f"need {lo} <= r <= n, got r={r}, n={n}")


def _exp2(log2_value):
    return 2.0 ** log2_value if log2_value > -1074 else 0.0


def lambda_n(n, r):
    """sqrt(2^(n+1) C(n, r) ln 2)."""
    _check_order(n, r)
    return math.sqrt(2.0 ** (n + 1) * math.comb(n, r) * LN2)


def expectation_upper_bound(n, r):
    """sqrt(2^(n+1) k ln 2), k = 1 + C(n,1) + ... + C(n,r)."""
    _check_order(n, r, lo=0)
    k = sum(math.comb(n, i) for i in range(r + 1))
    return math.sqrt(2.0 ** (n + 1) * k * LN2)


def concentration_bound(n, theta):
    """min(1, 2 exp(-theta^2 / 2^(n+1)))."""
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    return min(1.0, 2.0 * math.exp(-theta * theta / 2.0 ** (n + 1)))


class MgfPair(NamedTuple):
    exact: float
    bound: float
    log_exact: float
    log_bound: float

    def holds(self, rel_slack=1e-9):
        return self.log_exact <= self.log_bound + math.log1p(rel_slack)


def _log_cosh(x):
    a = np.abs(x)
    return a + np.log1p(np.exp(-2.0 * a)) - LN2


def mgf_pair(g, h, t1, t2):
    """Exact E[exp(t1 Y_g + t2 Y_h)] = prod_j cosh(t1 g_j + t2 h_j) and its
    sub-Gaussian bound exp(N (t1^2 + t2^2) / 2 + t1 t2 <g, h>).

    Both are accumulated as natural logs; ``exact``/``bound`` overflow to inf
    where the logs exceed the float range.
    """
    if g.n != h.n:
        raise DimensionMismatch(f"tables have different variable counts: {g.n} != {h.n}")
    if g.n > MGF_MAX_LOG2_N:
        raise DomainError(f"N = 2^{g.n} exceeds 2^{MGF_MAX_LOG2_N}")
    if abs(t1) > MGF_MAX_T or abs(t2) > MGF_MAX_T:
        raise DomainError(f"|t1|, |t2| must be <= {MGF_MAX_T}")
    x = t1 * g.signs().astype(np.float64) + t2 * h.signs().astype(np.float64)
    log_exact = float(np.sum(_log_cosh(x)))
    big_n = g.size
    log_bound = 0.5 * big_n * (t1 * t1 + t2 * t2) + t1 * t2 * scalar_product_signs(g, h)
    return MgfPair(_safe_exp(log_exact), _safe_exp(log_bound), log_exact, log_bound)


def _safe_exp(v):
    return math.exp(v) if v < 709.0 else math.inf


def log2_joint_tail_bound(n, r):
    _check_order(n, r)
    return 2.0 - 2.0 * math.comb(n, r)


def joint_tail_bound(n, r):
    """4 / 4^C(n, r)."""
    return _exp2(log2_joint_tail_bound(n, r))


def _tail_threshold(big_n, t):
    # S_N = 2K - N >= t  <=>  K >= (N + t) / 2
    return math.ceil((Fraction(big_n) + Fraction(t)) / 2)


def binomial_tail_exact(big_n, t):
    """P[X_1 + ... + X_N >= t] for fair signs, as an exact Fraction."""
    if not 1 <= big_n <= EXACT_TAIL_MAX_N:
        raise DomainError(f"exact mode needs 1 <= N <= {EXACT_TAIL_MAX_N}, got {big_n}")
    kmin = max(0, _tail_threshold(big_n, t))
    if kmin > big_n:
        return Fraction(0)
    if 2 * kmin >= big_n:
        return Fraction(_upper_count(big_n, kmin), 1 << big_n)
    # sum the shorter side: P[K >= kmin] = 1 - P[K >= N - kmin + 1]
    return 1 - Fraction(_upper_count(big_n, big_n - kmin + 1), 1 << big_n)


def _upper_count(big_n, k0):
    total = 0
    c = math.comb(big_n, k0)
    for k in range(k0, big_n + 1):
        total += c
        c = c * (big_n - k) // (k + 1)
    return total


def _log_upper(big_n, k0):
    """Natural log of P[K >= k0] for K ~ Bin(N, 1/2), assuming k0 >= N/2."""
    chunk = 1 << 15
    head = None
    parts = []
    k = k0
    while k <= big_n:
        ks = np.arange(k, min(big_n, k + chunk - 1) + 1, dtype=np.float64)
        lt = -np.log(big_n + 1.0) - betaln(big_n - ks + 1.0, ks + 1.0) - big_n * LN2
        if head is None:
            head = lt[0]
        parts.append(np.exp(lt - head))
        if lt[-1] < head - 80.0:
            break
        k += chunk
    return head + math.log(math.fsum(np.concatenate(parts)))


def binomial_tail(big_n, t, exact=False):
    """P[S_N >= t] for S_N a sum of N independent fair +/-1 signs.

    A non-integer t is rounded up to the next attainable value (S_N has the
    parity of N). ``exact=True`` returns a Fraction computed with big
    integers (N <= 2^16); otherwise a float from a log-domain sum.
    """
    if exact:
        return binomial_tail_exact(big_n, t)
    if not 1 <= big_n <= BINOMIAL_MAX_N:
        raise DomainError(f"N must satisfy 1 <= N <= {BINOMIAL_MAX_N}, got {big_n}")
    kmin = _tail_threshold(big_n, t)
    if kmin <= 0:
        return 1.0
    if kmin > big_n:
        return 0.0
    if 2 * kmin >= big_n:
        return math.exp(_log_upper(big_n, kmin))
    # P[K >= kmin] = 1 - P[K <= kmin - 1] = 1 - P[K >= N - kmin + 1]
    return -math.expm1(_log_upper(big_n, big_n - kmin + 1))


def log2_pr_lb_bound(n, r):
    _check_order(n, r)
    c = math.comb(n, r)
    return -math.log2(3.0) - c - 0.5 * math.log2(c)


def pr_lb_bound(n, r):
    """1 / (3 * 2^C(n,r) * sqrt(C(n,r)))."""
    return _exp2(log2_pr_lb_bound(n, r))


FELLER_CONSTANT = math.sqrt(4.0 * math.pi * LN2)


def feller_constant_below_three():
    return FELLER_CONSTANT < 3.0


def log2_feller_tail_approx(n, r):
    _check_order(n, r)
    c = math.comb(n, r)
    return -c - 0.5 * math.log2(4.0 * math.pi * c * LN2)


def feller_tail_approx(n, r):
    """2^(-C(n,r)) / sqrt(4 pi C(n,r) ln 2), the normal approximation to the
    tail P[S_{2^n} >= lambda_n]."""
    return _exp2(log2_feller_tail_approx(n, r))


@dataclass(frozen=True)
class LbEvent:
    value: float
    log2_value: float
    set_size: float
    first_term: float
    second_term: float

    @property
    def first_dominates(self):
        return self.first_term > self.second_term


def lb_event_bound(n, r, alpha, set_size=None):
    """4^(-alpha C(n,r)) plus the two Bonferroni terms for a set of ``set_size``
    codewords (default 2^((1 - alpha) C(n,r))):
    |S| * pr_lb_bound(n, r) and |S|^2 / 2 * joint_tail_bound(n, r)."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must satisfy 0 < alpha < 1, got {alpha}")
    _check_order(n, r)
    c = math.comb(n, r)
    log2_value = -2.0 * alpha * c
    log2_s = (1.0 - alpha) * c if set_size is None else math.log2(set_size)
    first = _exp2(log2_s + log2_pr_lb_bound(n, r))
    second = _exp2(2.0 * log2_s - 1.0 + log2_joint_tail_bound(n, r))
    return LbEvent(_exp2(log2_value), log2_value, 2.0 ** log2_s, first, second)


def report_all(n, r, alpha=0.5, theta=None):
    """BoundReport rows for every evaluator at (n, r)."""
    _check_order(n, r)
    lam = lambda_n(n, r)
    theta = lam if theta is None else theta
    big_n = 1 << n
    rows = [
        BoundReport("lambda_n", {"n": n, "r": r}, lam, log2_value=math.log2(lam)),
    ]
    e_ub = expectation_upper_bound(n, r)
    rows.append(BoundReport("expectation_upper_bound", {"n": n, "r": r}, e_ub, comparison=e_ub / lam))
    rows.append(
        BoundReport(
            "concentration_bound",
            {"n": n, "r": r, "theta": f"{theta:.9g}"},
            concentration_bound(n, theta),
        )
    )
    tail = binomial_tail(big_n, lam) if big_n <= BINOMIAL_MAX_N else None
    rows.append(
        BoundReport("joint_tail_bound", {"n": n, "r": r}, joint_tail_bound(n, r), log2_value=log2_joint_tail_bound(n, r))
    )
    rows.append(
        BoundReport(
            "pr_lb_bound",
            {"n": n, "r": r},
            pr_lb_bound(n, r),
            comparison=tail,
            satisfied=None if tail is None else tail >= pr_lb_bound(n, r),
            log2_value=log2_pr_lb_bound(n, r),
        )
    )
    rows.append(
        BoundReport(
            "feller_tail_approx",
            {"n": n, "r": r},
            feller_tail_approx(n, r),
            comparison=tail,
            satisfied=feller_constant_below_three(),
            log2_value=log2_feller_tail_approx(n, r),
        )
    )
    lb = lb_event_bound(n, r, alpha)
    rows.append(
        BoundReport(
            "lb_event_bound",
            {"n": n, "r": r, "alpha": alpha, "first": f"{lb.first_term:.9g}", "second": f"{lb.second_term:.9g}"},
            lb.value,
            comparison=lb.first_term - lb.second_term,
            satisfied=lb.first_dominates,
            log2_value=lb.log2_value,
        )
    )
    return rows
