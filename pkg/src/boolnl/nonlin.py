"""Exact r-th order nonlinearity N_r(f) = min over RM(r, n) of d(f, g)."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bounds import lambda_n
from .core import MAX_SPECTRUM_N, walsh_hadamard
from .errors import CapExceeded, DomainError
from .rmcode import (
    MAX_ENUM_K,
    RMCodeSpec,
    _blocks,
    basis_for,
    gray,
    message_hex,
    run_blocks,
)


@dataclass(frozen=True)
class NonlinearityResult:
    n: int
    r: int
    value: int
    best_message: int

    @property
    def y(self):
        """Maximal correlation Y_n = 2^n - 2 N_r."""
        return (1 << self.n) - 2 * self.value

    @property
    def lam(self):
        return lambda_n(self.n, self.r) if self.r >= 1 else math.nan

    @property
    def ratio(self):
        return self.y / self.lam if self.r >= 1 else math.nan

    def as_dict(self):
        spec = RMCodeSpec(self.r, self.n)
        return {
            "n": self.n,
            "r": self.r,
            "nonlinearity": self.value,
            "y": self.y,
            "lambda": self.lam,
            "ratio": self.ratio,
            "best_message_hex": message_hex(spec, self.best_message),
        }


def nonlinearity_order1(f, cap=MAX_SPECTRUM_N):
    """N_1 from the Walsh spectrum: 2^(n-1) - max_a |W_f(a)| / 2.

    The witness is the first mask with maximal |W_f(a)|, complemented when
    W_f(a) < 0. Message bit 0 is the constant, bit j is x_j.
    """
    if f.n > cap:
        raise CapExceeded(f"spectrum needs n <= {cap}, got {f.n}")
    spec = np.asarray(walsh_hadamard(f, cap).values)
    a = int(np.argmax(np.abs(spec)))
    w = int(spec[a])
    value = (1 << (f.n - 1)) - abs(w) // 2
    message = (a << 1) | (1 if w < 0 else 0)
    return NonlinearityResult(f.n, 1, value, message)


def nonlinearity_exhaustive(f, r, jobs=1, cap=MAX_ENUM_K):
    """Exact N_r by walking all of RM(r, n) in Gray order.

    Ties go to the smallest Gray rank, so the witness does not depend on
    ``jobs``.
    """
    if r > f.n:
        raise DomainError(f"order r must satisfy r <= n, got r={r}, n={f.n}")
    spec = RMCodeSpec(r, f.n)
    spec.check_enum(cap)
    basis = basis_for(spec)
    ptr, idx = basis.support
    mat = basis.matrix
    target = f.words

    def work(lo, hi):
        if target.size <= 2:
            return _kernels.gray_min_distance_2w(target, mat, lo, hi)
        return _kernels.gray_min_distance(target, mat, ptr, idx, lo, hi)

    parts = run_blocks(work, _blocks(spec.k, jobs), jobs)
    value, rank = min((int(d), int(i)) for d, i in parts)
    return NonlinearityResult(f.n, r, value, gray(rank))


def nonlinearity(f, r, jobs=1):
    """Dispatch to the spectral path for r = 1, exhaustive search otherwise."""
    if r == 1 and f.n <= MAX_SPECTRUM_N:
        return nonlinearity_order1(f)
    return nonlinearity_exhaustive(f, r, jobs=jobs)


def normalized_statistic(res):
    """(2^(n-1) - N_r) / sqrt(2^(n-1) C(n, r) ln 2)."""
    if not 1 <= res.r <= res.n:
        raise DomainError(f"need 1 <= r <= n, got r={res.r}, n={res.n}")
    half = 1 << (res.n - 1)
    return (half - res.value) / math.sqrt(half * math.comb(res.n, res.r) * math.log(2))


def batch_nonlinearity(tables, r, n):
    """N_r for a 2-D array of packed tables (one row each), via Gray search."""
    spec = RMCodeSpec(r, n)
    spec.check_enum()
    basis = basis_for(spec)
    ptr, idx = basis.support
    return _kernels.gray_min_distance_batch(
        np.ascontiguousarray(tables, dtype=np.uint64), basis.matrix, ptr, idx, spec.size
    )


def batch_nonlinearity_order1(tables, n):
    """N_1 for rows of single-word tables (n <= 6) via per-row spectra."""
    if n > 6:
        raise DomainError("batched spectra are limited to single-word tables (n <= 6)")
    best = _kernels.batch_max_abs_walsh(np.ascontiguousarray(tables, dtype=np.uint64), 1 << n)
    return (1 << (n - 1)) - best // 2

