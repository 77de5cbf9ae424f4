"""Compiled inner loops.

Everything here works on bit-packed uint64 word arrays. Bit ``i`` of a table
lives in word ``i >> 6`` at bit position ``i & 63``. The kernels release the
GIL so callers can fan them out over a thread pool.
"""

import numpy as np
import numba
from numba.core import types
from numba.extending import intrinsic

_JIT = dict(nogil=True, cache=True)


@intrinsic
def popcount64(typingctx, x):
    sig = types.int64(types.uint64)

    def codegen(context, builder, signature, args):
        fn = builder.module.declare_intrinsic("llvm.ctpop", [args[0].type])
        return builder.call(fn, args)

    return sig, codegen


@intrinsic
def ctz64(typingctx, x):
    sig = types.int64(types.uint64)

    def codegen(context, builder, signature, args):
        fn = builder.module.declare_intrinsic("llvm.cttz", [args[0].type, numba.core.cgutils.bool_t])
        return builder.call(fn, [args[0], numba.core.cgutils.false_bit])

    return sig, codegen


@numba.njit(**_JIT)
def weight_words(words):
    total = 0
    for w in range(words.shape[0]):
        total += popcount64(words[w])
    return total


@numba.njit(**_JIT)
def distance_words(a, b):
    total = 0
    for w in range(a.shape[0]):
        total += popcount64(a[w] ^ b[w])
    return total


@numba.njit(**_JIT)
def max_index_popcount(words, nbits):
    """Largest popcount of an index whose bit is set; -1 if no bit is set."""
    best = -1
    for w in range(words.shape[0]):
        x = words[w]
        while x != 0:
            b = ctz64(x)
            idx = (w << 6) + b
            if idx < nbits:
                p = popcount64(np.uint64(idx))
                if p > best:
                    best = p
            x &= x - np.uint64(1)
    return best


@numba.njit(**_JIT)
def fwht_inplace(a):
    """Unnormalised Walsh-Hadamard butterfly on an int32/int64 array of length 2^n."""
    size = a.shape[0]
    h = 1
    while h < size:
        for i in range(0, size, h << 1):
            for j in range(i, i + h):
                x = a[j]
                y = a[j + h]
                a[j] = x + y
                a[j + h] = x - y
        h <<= 1


@numba.njit(**_JIT)
def signs_from_words(words, size, out):
    for i in range(size):
        bit = (words[i >> 6] >> np.uint64(i & 63)) & np.uint64(1)
        out[i] = 1 - 2 * np.int32(bit)


@numba.njit(**_JIT)
def _load_codeword(basis, message, out):
    for w in range(out.shape[0]):
        out[w] = 0
    j = 0
    m = message
    while m != 0:
        if m & 1:
            for w in range(out.shape[0]):
                out[w] ^= basis[j, w]
        m >>= 1
        j += 1


@numba.njit(**_JIT)
def gray_min_distance(target, basis, supp_ptr, supp_idx, start, stop):
    """Minimum distance from ``target`` to codewords at Gray ranks [start, stop).

    Returns (distance, rank) with the smallest rank among ties. The running
    difference word array is updated only on the support words of the toggled
    basis element.
    """
    nw = target.shape[0]
    cur = np.empty(nw, dtype=np.uint64)
    _load_codeword(basis, start ^ (start >> 1), cur)
    d = 0
    for w in range(nw):
        cur[w] ^= target[w]
        d += popcount64(cur[w])
    best = d
    best_rank = start
    for i in range(start + 1, stop):
        t = ctz64(np.uint64(i))
        for p in range(supp_ptr[t], supp_ptr[t + 1]):
            w = supp_idx[p]
            old = cur[w]
            new = old ^ basis[t, w]
            d += popcount64(new)
            d -= popcount64(old)
            cur[w] = new
        if d < best:
            best = d
            best_rank = i
    return best, best_rank


@numba.njit(**_JIT)
def gray_min_distance_2w(target, basis, start, stop):
    """Same contract as :func:`gray_min_distance` for tables of at most two
    words (n <= 7), holding the running difference in registers."""
    nw = target.shape[0]
    k = basis.shape[0]
    b0 = np.empty(k, dtype=np.uint64)
    b1 = np.zeros(k, dtype=np.uint64)
    for j in range(k):
        b0[j] = basis[j, 0]
        if nw > 1:
            b1[j] = basis[j, 1]
    cur = np.zeros(nw, dtype=np.uint64)
    _load_codeword(basis, start ^ (start >> 1), cur)
    c0 = cur[0] ^ target[0]
    c1 = np.uint64(0)
    if nw > 1:
        c1 = cur[1] ^ target[1]
    best = popcount64(c0) + popcount64(c1)
    best_rank = start
    for i in range(start + 1, stop):
        t = ctz64(np.uint64(i))
        c0 ^= b0[t]
        c1 ^= b1[t]
        d = popcount64(c0) + popcount64(c1)
        if d < best:
            best = d
            best_rank = i
    return best, best_rank


@numba.njit(**_JIT)
def gray_min_distance_batch(targets, basis, supp_ptr, supp_idx, stop):
    """Per-row minimum distance to the first ``stop`` Gray-ordered codewords."""
    out = np.empty(targets.shape[0], dtype=np.int64)
    small = targets.shape[1] <= 2
    for row in range(targets.shape[0]):
        if small:
            d, _ = gray_min_distance_2w(targets[row], basis, 0, stop)
        else:
            d, _ = gray_min_distance(targets[row], basis, supp_ptr, supp_idx, 0, stop)
        out[row] = d
    return out


@numba.njit(**_JIT)
def gray_weight_histogram(basis, supp_ptr, supp_idx, start, stop, hist):
    """Accumulate codeword weights at Gray ranks [start, stop) into ``hist``."""
    nw = basis.shape[1]
    cur = np.empty(nw, dtype=np.uint64)
    _load_codeword(basis, start ^ (start >> 1), cur)
    d = 0
    for w in range(nw):
        d += popcount64(cur[w])
    hist[d] += 1
    for i in range(start + 1, stop):
        t = ctz64(np.uint64(i))
        for p in range(supp_ptr[t], supp_ptr[t + 1]):
            w = supp_idx[p]
            old = cur[w]
            new = old ^ basis[t, w]
            d += popcount64(new)
            d -= popcount64(old)
            cur[w] = new
        hist[d] += 1


@numba.njit(**_JIT)
def greedy_separated(basis, supp_ptr, supp_idx, stop, half, binom):
    """Greedy scan in Gray order keeping codewords whose distance d to every
    kept codeword satisfies |d - half| * binom <= half. Returns kept ranks."""
    nw = basis.shape[1]
    cap = 64
    members = np.empty((cap, nw), dtype=np.uint64)
    ranks = np.empty(cap, dtype=np.int64)
    count = 0
    cur = np.zeros(nw, dtype=np.uint64)
    for i in range(stop):
        if i > 0:
            t = ctz64(np.uint64(i))
            for p in range(supp_ptr[t], supp_ptr[t + 1]):
                w = supp_idx[p]
                cur[w] ^= basis[t, w]
        ok = True
        for j in range(count):
            d = 0
            for w in range(nw):
                d += popcount64(cur[w] ^ members[j, w])
            dev = d - half
            if dev < 0:
                dev = -dev
            if dev * binom > half:
                ok = False
                break
        if ok:
            if count == cap:
                cap *= 2
                grown = np.empty((cap, nw), dtype=np.uint64)
                grown[:count] = members[:count]
                members = grown
                grown_r = np.empty(cap, dtype=np.int64)
                grown_r[:count] = ranks[:count]
                ranks = grown_r
            members[count] = cur
            ranks[count] = i
            count += 1
    return ranks[:count].copy()


@numba.njit(**_JIT)
def batch_max_abs_walsh(tables, size):
    """max_a |W_f(a)| for each row of single-word tables (size <= 64)."""
    out = np.empty(tables.shape[0], dtype=np.int64)
    buf = np.empty(size, dtype=np.int64)
    for row in range(tables.shape[0]):
        x = tables[row, 0]
        for i in range(size):
            buf[i] = 1 - 2 * np.int64((x >> np.uint64(i)) & np.uint64(1))
        fwht_inplace(buf)
        best = 0
        for i in range(size):
            v = buf[i] if buf[i] >= 0 else -buf[i]
            if v > best:
                best = v
        out[row] = best
    return out
