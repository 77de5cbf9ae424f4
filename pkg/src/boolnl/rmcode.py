"""Reed-Muller codes RM(r, n) as spans of monomial truth tables.

Messages are k-bit integers; bit j selects basis element j. The basis is
ordered by (degree, mask), so bit 0 is always the constant monomial.
Exhaustive passes walk the code in binary-reflected Gray order: rank i visits
message ``i ^ (i >> 1)`` and differs from rank i - 1 in basis element
``ctz(i)``.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations

import numpy as np

from . import _kernels
from .core import MAX_TABLE_N, TruthTable, degree, n_words
from .errors import CapExceeded, DimensionMismatch, DomainError

MAX_ENUM_K = 30


def message_length(n, r):
    return sum(math.comb(n, i) for i in range(r + 1))


def gray(i):
    return i ^ (i >> 1)


def gray_rank(message):
    """Inverse of :func:`gray`."""
    rank = message
    shift = message >> 1
    while shift:
        rank ^= shift
        shift >>= 1
    return rank


@dataclass(frozen=True)
class RMCodeSpec:
    r: int
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_TABLE_N:
            raise DomainError(f"n must satisfy 1 <= n <= {MAX_TABLE_N}, got {self.n}")
        if self.r < 0:
            raise DomainError(f"order r must be >= 0, got {self.r}")
        if self.r > self.n:
            raise DomainError(f"order r must satisfy r <= n, got r={self.r}, n={self.n}")

    @property
    def k(self):
        return message_length(self.n, self.r)

    @property
    def size(self):
        return 1 << self.k

    @property
    def length(self):
        return 1 << self.n

    def check_enum(self, cap=MAX_ENUM_K):
        if self.k > cap:
            raise CapExceeded(
                f"RM({self.r},{self.n}) has k={self.k} > enumeration cap {cap}"
            )


@dataclass(frozen=True, eq=False)
class MonomialBasis:
    spec: RMCodeSpec
    masks: tuple
    tables: tuple

    @property
    def k(self):
        return len(self.masks)

    @cached_property
    def matrix(self):
        """k x words array of basis tables."""
        return np.ascontiguousarray(np.stack([t.words for t in self.tables]))

    @cached_property
    def support(self):
        """CSR (ptr, idx) listing the nonzero words of each basis table."""
        m = self.matrix
        ptr = np.zeros(self.k + 1, dtype=np.int64)
        idx = []
        for j in range(self.k):
            nz = np.flatnonzero(m[j])
            idx.append(nz)
            ptr[j + 1] = ptr[j] + nz.size
        return ptr, np.concatenate(idx).astype(np.int64)


def build_basis(spec):
    masks = []
    for d in range(spec.r + 1):
        group = [sum(1 << j for j in c) for c in combinations(range(spec.n), d)]
        masks.extend(sorted(group))
    tables = tuple(TruthTable.monomial(spec.n, m) for m in masks)
    return MonomialBasis(spec, tuple(masks), tables)


_BASIS_CACHE = {}


def basis_for(spec):
    b = _BASIS_CACHE.get(spec)
    if b is None:
        b = _BASIS_CACHE[spec] = build_basis(spec)
    return b


def encode(spec, message, basis=None):
    """XOR of the basis tables selected by the bits of ``message``."""
    if not 0 <= message < (1 << spec.k):
        raise DomainError(f"message must be in [0, 2^{spec.k}), got {message}")
    basis = basis or basis_for(spec)
    words = np.zeros(n_words(spec.n), dtype=np.uint64)
    j = 0
    m = message
    while m:
        if m & 1:
            words ^= basis.matrix[j]
        m >>= 1
        j += 1
    return TruthTable(spec.n, words)


def contains(spec, f):
    if f.n != spec.n:
        raise DimensionMismatch(f"table has n={f.n}, code has n={spec.n}")
    return degree(f) <= spec.r


def enumerate_gray(spec, visitor, cap=MAX_ENUM_K):
    """Call ``visitor(message, toggled)`` for all 2^k messages in Gray order.

    ``toggled`` is the basis index flipped since the previous visit, or None
    on the first visit (message 0, the zero codeword).
    """
    spec.check_enum(cap)
    visitor(0, None)
    for i in range(1, 1 << spec.k):
        t = (i & -i).bit_length() - 1
        visitor(gray(i), t)


def message_hex(spec, message):
    return format(message, f"0{max(1, -(-spec.k // 4))}x")


def _blocks(k, jobs):
    """Split Gray ranks [0, 2^k) into contiguous blocks for ``jobs`` workers."""
    if jobs <= 1 or k < 12:
        return [(0, 1 << k)]
    p = min(k - 8, max(1, (4 * jobs - 1).bit_length()))
    step = 1 << (k - p)
    return [(b * step, (b + 1) * step) for b in range(1 << p)]


def run_blocks(fn, blocks, jobs):
    if len(blocks) == 1 or jobs <= 1:
        return [fn(lo, hi) for lo, hi in blocks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda b: fn(*b), blocks))


# weight census -----------------------------------------------------------


@dataclass(frozen=True)
class WeightCensus:
    r: int
    n: int
    counts: dict = field(repr=False)

    @property
    def k(self):
        return message_length(self.n, self.r)

    @property
    def total(self):
        return sum(self.counts.values())

    def items(self):
        return sorted(self.counts.items())

    def is_symmetric(self):
        full = 1 << self.n
        return all(self.counts.get(full - w, 0) == c for w, c in self.counts.items())


def weight_census(spec, jobs=1, cap=MAX_ENUM_K):
    spec.check_enum(cap)
    basis = basis_for(spec)
    ptr, idx = basis.support
    mat = basis.matrix

    def work(lo, hi):
        hist = np.zeros(spec.length + 1, dtype=np.int64)
        _kernels.gray_weight_histogram(mat, ptr, idx, lo, hi, hist)
        return hist

    hist = sum(run_blocks(work, _blocks(spec.k, jobs), jobs))
    counts = {int(w): int(c) for w, c in enumerate(hist) if c}
    return WeightCensus(spec.r, spec.n, counts)


def census_query_A(census, x):
    """Number of codewords of weight <= 2^n * x."""
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    limit = math.floor(x * (1 << census.n))
    return sum(c for w, c in census.counts.items() if w <= limit)


def census_B(census, r=None):
    """Number of codewords with |wt - 2^(n-1)| >= 2^(n-1) / C(n, r), compared exactly."""
    r = census.r if r is None else r
    if r != census.r:
        raise DomainError(f"census was built for r={census.r}, not r={r}")
    half = 1 << (census.n - 1)
    binom = math.comb(census.n, r)
    return sum(c for w, c in census.counts.items() if abs(w - half) * binom >= half)


def census_exponent(census, delta=None):
    """Empirical log2 A(x) / (n^(r-1) log2(1/delta)) at x = (1 - delta)/2.

    With no delta given, uses delta = 1/C(n, r). Only reported, never asserted.
    """
    n, r = census.n, census.r
    if delta is None:
        delta = Fraction(1, math.comb(n, r))
    delta = Fraction(delta)
    if not 0 < delta <= Fraction(1, 2):
        raise DomainError("delta must satisfy 0 < delta <= 1/2")
    a = census_query_A(census, (1 - delta) / 2)
    return math.log2(a) / (n ** (r - 1) * math.log2(1 / delta))


# greedy separated set ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class SeparatedSet:
    spec: RMCodeSpec
    tolerance: Fraction
    members: tuple
    alpha: float

    @property
    def size(self):
        return len(self.members)

    @property
    def target_size(self):
        return 2 ** ((1 - self.alpha) * math.comb(self.spec.n, self.spec.r))

    def audit(self):
        """Exhaustive pairwise check of |d(g, h) - 2^(n-1)| <= tolerance."""
        half = 1 << (self.spec.n - 1)
        basis = basis_for(self.spec)
        words = np.stack([encode(self.spec, m, basis).words for m in self.members]) if self.members else None
        for i in range(self.size):
            for j in range(i + 1, self.size):
                d = int(_kernels.distance_words(words[i], words[j]))
                if abs(d - half) > self.tolerance:
                    return False
        return True

    def summary(self):
        return {
            "r": self.spec.r,
            "n": self.spec.n,
            "alpha": self.alpha,
            "tau_num": self.tolerance.numerator,
            "tau_den": self.tolerance.denominator,
            "size": self.size,
            "target_size": self.target_size,
        }


def greedy_separated_set(spec, alpha, cap=MAX_ENUM_K):
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must satisfy 0 < alpha < 1, got {alpha}")
    spec.check_enum(cap)
    binom = math.comb(spec.n, spec.r)
    half = 1 << (spec.n - 1)
    basis = basis_for(spec)
    ptr, idx = basis.support
    ranks = _kernels.greedy_separated(basis.matrix, ptr, idx, spec.size, half, binom)
    members = tuple(gray(int(i)) for i in ranks)
    return SeparatedSet(spec, Fraction(half, binom), members, float(alpha))
