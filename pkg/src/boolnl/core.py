"""Bit-packed truth tables, transforms, distances and uniform sampling.

Index convention: bit ``i`` of a table is ``f(x)`` with ``x_j`` equal to bit
``j - 1`` of ``i``, so ``x1`` is the least significant index bit. Tables are
stored as little-endian uint64 words; storage bits past ``2**n - 1`` are zero.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, DimensionMismatch
from .rng import SeedSpec

MAX_TABLE_N = 31
MAX_SPECTRUM_N = 27

BINARY_MAGIC = b"BFTT0001"

# within-word Moebius masks: positions whose index has bit j set, j < 6
_MOBIUS_MASKS = (
    0xAAAAAAAAAAAAAAAA,
    0xCCCCCCCCCCCCCCCC,
    0xF0F0F0F0F0F0F0F0,
    0xFF00FF00FF00FF00,
    0xFFFF0000FFFF0000,
    0xFFFFFFFF00000000,
)


def _check_n(n, cap=MAX_TABLE_N):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= cap:
        raise DomainError(f"n must satisfy 1 <= n <= {cap}, got {n!r}")
    return int(n)


def n_words(n):
    return max(1, (1 << n) >> 6)


def tail_mask(n):
    """Mask of valid bits in the (single) word of a table with n < 6."""
    return (1 << (1 << n)) - 1 if n < 6 else (1 << 64) - 1


def _frozen(words):
    words = np.ascontiguousarray(words, dtype=np.uint64)
    words.setflags(write=False)
    return words


class TruthTable:
    """Immutable Boolean function of ``n`` variables."""

    __slots__ = ("n", "words")

    def __init__(self, n, words):
        n = _check_n(n)
        words = np.asarray(words, dtype=np.uint64)
        if words.shape != (n_words(n),):
            raise DomainError(f"expected {n_words(n)} words for n={n}, got shape {words.shape}")
        if n < 6 and int(words[0]) & ~tail_mask(n):
            raise DomainError(f"set bits beyond index 2^{n} - 1")
        self.n = n
        self.words = _frozen(words.copy())

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, n):
        return cls(n, np.zeros(n_words(n), dtype=np.uint64))

    @classmethod
    def ones(cls, n):
        w = np.full(n_words(_check_n(n)), (1 << 64) - 1, dtype=np.uint64)
        if n < 6:
            w[0] = tail_mask(n)
        return cls(n, w)

    @classmethod
    def from_int(cls, n, value):
        n = _check_n(n)
        if value < 0 or value >> (1 << n):
            raise DomainError(f"set bits beyond index 2^{n} - 1")
        raw = value.to_bytes(n_words(n) * 8, "little")
        return cls(n, np.frombuffer(raw, dtype="<u8"))

    @classmethod
    def from_bits(cls, bits):
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        size = bits.size
        n = size.bit_length() - 1
        if size < 2 or (1 << n) != size:
            raise DomainError(f"table length must be a power of two >= 2, got {size}")
        _check_n(n)
        if np.any(bits > 1):
            raise DomainError("table entries must be 0 or 1")
        padded = np.zeros(n_words(n) * 64, dtype=np.uint8)
        padded[:size] = bits
        packed = np.packbits(padded, bitorder="little")
        return cls(n, packed.view("<u8"))

    @classmethod
    def from_function(cls, n, func):
        """Tabulate ``func(x)`` where ``x`` is the tuple (x1, ..., xn)."""
        n = _check_n(n)
        bits = [func(tuple((i >> j) & 1 for j in range(n))) & 1 for i in range(1 << n)]
        return cls.from_bits(bits)

    @classmethod
    def monomial(cls, n, mask):
        """Table of the product of x_j over the set bits of ``mask``."""
        n = _check_n(n)
        if mask < 0 or mask >> n:
            raise DomainError(f"monomial mask {mask} has variables beyond x{n}")
        lo = mask & 63
        word = (1 << 64) - 1
        for j in range(min(n, 6)):
            if lo >> j & 1:
                word &= _MOBIUS_MASKS[j]
        word &= tail_mask(n)
        if n <= 6:
            return cls(n, np.array([word], dtype=np.uint64))
        idx = np.arange(n_words(n), dtype=np.int64)
        hi = mask >> 6
        words = np.where((idx & hi) == hi, np.uint64(word), np.uint64(0))
        return cls(n, words)

    @classmethod
    def coordinate(cls, n, j):
        """The coordinate function x_j, 1 <= j <= n."""
        if not 1 <= j <= n:
            raise DomainError(f"coordinate index must be in 1..{n}, got {j}")
        return cls.monomial(n, 1 << (j - 1))

    @classmethod
    def linear(cls, n, a):
        """The linear function x -> <a, x> for mask ``a``."""
        n = _check_n(n)
        words = np.zeros(n_words(n), dtype=np.uint64)
        for j in range(n):
            if a >> j & 1:
                words ^= cls.monomial(n, 1 << j).words
        return cls(n, words)

    # views --------------------------------------------------------------

    @property
    def size(self):
        return 1 << self.n

    def bits(self):
        raw = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return raw[: self.size]

    def signs(self):
        """(-1)^f as an int32 vector of length 2^n."""
        out = np.empty(self.size, dtype=np.int32)
        _kernels.signs_from_words(self.words, self.size, out)
        return out

    def to_int(self):
        return int.from_bytes(self.words.astype("<u8").tobytes(), "little")

    def hex(self):
        digits = max(1, self.size // 4)
        return format(self.to_int(), f"0{digits}x")

    def __getitem__(self, i):
        if not 0 <= i < self.size:
            raise IndexError(i)
        return int(self.words[i >> 6]) >> (i & 63) & 1

    def __xor__(self, other):
        _same_n(self, other)
        return TruthTable(self.n, self.words ^ other.words)

    def __invert__(self):
        return self ^ TruthTable.ones(self.n)

    def __eq__(self, other):
        if not isinstance(other, TruthTable):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.n, self.words.tobytes()))

    def __repr__(self):
        text = self.hex()
        if len(text) > 32:
            text = text[:29] + "..."
        return f"TruthTable(n={self.n}, hex={text})"


def _same_n(f, g):
    if f.n != g.n:
        raise DimensionMismatch(f"tables have different variable counts: {f.n} != {g.n}")


@dataclass(frozen=True, eq=False)
class AnfCoefficients:
    """ANF coefficients: bit at mask m is the coefficient of prod_{j in m} x_j."""

    n: int
    words: np.ndarray

    @property
    def degree(self):
        return int(_kernels.max_index_popcount(self.words, 1 << self.n))

    def monomials(self):
        return [int(m) for m in np.flatnonzero(TruthTable(self.n, self.words).bits())]

    def as_table(self):
        """Reinterpret the coefficient bits as a table (for hex output)."""
        return TruthTable(self.n, self.words)

    def to_truth_table(self):
        return TruthTable(self.n, _mobius_words(self.n, self.words))

    def __eq__(self, other):
        if not isinstance(other, AnfCoefficients):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.n, self.words.tobytes()))


@dataclass(frozen=True, eq=False)
class WalshSpectrum:
    n: int
    values: np.ndarray

    def __getitem__(self, a):
        return int(self.values[a])

    def __len__(self):
        return self.values.size


# parsing and I/O ---------------------------------------------------------


def parse_hex(text, n):
    """Parse a most-significant-digit-first hex string into a table on n variables."""
    n = _check_n(n)
    text = text.strip()
    if text.lower().startswith("0x"):
        text = text[2:]
    want = max(1, (1 << n) // 4)
    if len(text) != want:
        raise DomainError(f"expected {want} hex digits for n={n}, got {len(text)}")
    try:
        value = int(text, 16)
    except ValueError:
        raise DomainError(f"malformed hex digit in {text!r}") from None
    if not all(c in "0123456789abcdefABCDEF" for c in text):
        raise DomainError(f"malformed hex digit in {text!r}")
    return TruthTable.from_int(n, value)


def to_binary(f):
    payload = f.words.astype("<u8").tobytes()[: max(1, f.size // 8)]
    return BINARY_MAGIC + bytes([f.n]) + payload


def from_binary(data):
    if data[:8] != BINARY_MAGIC:
        raise DomainError("not a binary truth-table file (bad magic)")
    if len(data) < 9:
        raise DomainError("truncated binary truth-table header")
    n = _check_n(data[8])
    nbytes = max(1, (1 << n) // 8)
    payload = data[9:]
    if len(payload) != nbytes:
        raise DomainError(f"expected {nbytes} payload bytes for n={n}, got {len(payload)}")
    return TruthTable.from_int(n, int.from_bytes(payload, "little"))


def write_binary(path, f):
    with open(path, "wb") as fh:
        fh.write(to_binary(f))


def read_binary(path):
    with open(path, "rb") as fh:
        return from_binary(fh.read())


# measurements ------------------------------------------------------------


def weight(f):
    return int(_kernels.weight_words(f.words))


def distance(f, g):
    _same_n(f, g)
    return int(_kernels.distance_words(f.words, g.words))


def scalar_product_signs(g, h):
    """<(-1)^g, (-1)^h> = 2^n - 2 d(g, h)."""
    return g.size - 2 * distance(g, h)


def correlation_y(f, g):
    """Y = sum_x (-1)^(f(x) + g(x)) = 2^n - 2 d(f, g)."""
    return scalar_product_signs(f, g)


# transforms --------------------------------------------------------------


def _mobius_words(n, words):
    a = np.array(words, dtype=np.uint64)
    for j in range(min(n, 6)):
        s = np.uint64(1 << j)
        a ^= (a << s) & np.uint64(_MOBIUS_MASKS[j])
    if n < 6:
        a &= np.uint64(tail_mask(n))
    view = a
    for j in range(6, n):
        # word-level stage: word w with bit (j-6) set absorbs its partner
        step = 1 << (j - 6)
        view = a.reshape(-1, 2, step)
        view[:, 1, :] ^= view[:, 0, :]
    return a


def mobius_transform(f):
    """Binary Moebius transform: truth table -> ANF coefficients (an involution)."""
    return AnfCoefficients(f.n, _frozen(_mobius_words(f.n, f.words)))


def degree(f):
    """Algebraic degree; -1 for the zero function."""
    return mobius_transform(f).degree


def walsh_hadamard(f, cap=MAX_SPECTRUM_N):
    """W_f(a) = sum_x (-1)^(f(x) + <a, x>) for every mask a, by the O(n 2^n) butterfly."""
    if f.n > cap:
        raise DomainError(f"spectrum needs n <= {cap}, got {f.n}")
    values = f.signs()
    _kernels.fwht_inplace(values)
    values.setflags(write=False)
    return WalshSpectrum(f.n, values)


# sampling ----------------------------------------------------------------


def sample_uniform(seed, n):
    """Uniform random table on n variables from the stream addressed by ``seed``.

    Word ``j`` of the table is the ``j``-th generator output, so the table at
    n is a prefix of the table at n + 1 for the same seed.
    """
    n = _check_n(n)
    if not isinstance(seed, SeedSpec):
        raise TypeError("seed must be a SeedSpec")
    gen = seed.generator()
    words = np.array(gen.words(n_words(n)), dtype=np.uint64)
    if n < 6:
        words[0] &= np.uint64(tail_mask(n))
    return TruthTable(n, words)
