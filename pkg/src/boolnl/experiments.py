"""Seeded Monte Carlo runs and exact small-n oracles for the nonlinearity statistic.

Sample ``i`` of every run is the table drawn from stream ``i`` of the master
seed, so outputs depend only on the manifest, never on worker count.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import rng
from .bounds import (
    BoundReport,
    binomial_tail,
    concentration_bound,
    expectation_upper_bound,
    joint_tail_bound,
    lambda_n,
)
from .core import MAX_SPECTRUM_N, MAX_TABLE_N, degree, sample_uniform, scalar_product_signs
from .errors import CapExceeded, DomainError
from .nonlin import batch_nonlinearity, batch_nonlinearity_order1, nonlinearity
from .rmcode import MAX_ENUM_K, message_length

DEFAULT_SEED = 0xB0A11F0042D5EC7A
KINDS = ("converge", "joint", "concentration", "exact-oracle")
ORACLE_MAX_N = 4
RECORD_HEADER = ["n", "r", "sample_index", "nonlinearity", "y", "lambda", "ratio"]
CHUNK = 64


@dataclass
class ExperimentManifest:
    kind: str
    n_values: list
    r: int = 1
    samples: int = 200
    master_seed: int = DEFAULT_SEED
    output_path: str = None
    caps: dict = field(default_factory=lambda: {
        "spectrum_n": MAX_SPECTRUM_N,
        "enum_k": MAX_ENUM_K,
        "table_n": MAX_TABLE_N,
    })

    def validate(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown experiment kind {self.kind!r}")
        if not self.n_values:
            raise DomainError("manifest needs at least one n")
        if self.samples < 1:
            raise DomainError("samples must be >= 1")
        rng.SeedSpec(self.master_seed)
        for n in self.n_values:
            if not 1 <= n <= self.caps["table_n"]:
                raise CapExceeded(f"n={n} outside 1..{self.caps['table_n']}")
            if not 1 <= self.r <= n:
                raise DomainError(f"need 1 <= r <= n, got r={self.r}, n={n}")
            if self.kind == "joint":
                continue
            if self.kind == "exact-oracle" and n > ORACLE_MAX_N:
                raise CapExceeded(f"exact oracle enumerates 2^(2^n) tables; n={n} > {ORACLE_MAX_N}")
            if self.r == 1:
                if n > self.caps["spectrum_n"]:
                    raise CapExceeded(f"spectrum path needs n <= {self.caps['spectrum_n']}, got {n}")
            elif message_length(n, self.r) > self.caps["enum_k"]:
                raise CapExceeded(
                    f"RM({self.r},{n}) has k={message_length(n, self.r)} > cap {self.caps['enum_k']}"
                )
        return self

    def metadata(self):
        """Echo of the effective configuration (worker count deliberately excluded)."""
        d = asdict(self)
        d.pop("output_path")
        d["format_version"] = rng.FORMAT_VERSION
        return d


@dataclass(frozen=True)
class SampleRecord:
    n: int
    r: int
    sample_index: int
    nonlinearity: int
    y: int
    lam: float
    ratio: float

    def row(self):
        return [
            self.n,
            self.r,
            self.sample_index,
            self.nonlinearity,
            self.y,
            f"{self.lam:.9g}",
            f"{self.ratio:.9g}",
        ]


def _sample(seed, n, i):
    return sample_uniform(rng.derive_stream(rng.SeedSpec(seed), i), n)


def _ordered_map(fn, items, jobs):
    """Map in order; chunks of work go to a thread pool when jobs > 1."""
    items = list(items)
    if jobs <= 1 or len(items) <= CHUNK:
        return [fn(x) for x in items]
    chunks = [items[i:i + CHUNK] for i in range(0, len(items), CHUNK)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        out = []
        for part in pool.map(lambda c: [fn(x) for x in c], chunks):
            out.extend(part)
        return out


def _y_values(manifest, n, jobs):
    r = manifest.r
    lam = lambda_n(n, r)

    def one(i):
        res = nonlinearity(_sample(manifest.master_seed, n, i), r)
        return SampleRecord(n, r, i, res.value, res.y, lam, res.y / lam)

    return _ordered_map(one, range(manifest.samples), jobs)


def _std(values):
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def summarize(manifest, n, records):
    lam = lambda_n(n, manifest.r)
    ratios = np.array([rec.ratio for rec in records])
    ys = np.array([rec.y for rec in records], dtype=np.float64)
    e_ub = expectation_upper_bound(n, manifest.r)
    return {
        "n": n,
        "r": manifest.r,
        "m": len(records),
        "master_seed": manifest.master_seed,
        "mean_ratio": float(ratios.mean()),
        "std_ratio": _std(ratios),
        "min_ratio": float(ratios.min()),
        "max_ratio": float(ratios.max()),
        "mean_y": float(ys.mean()),
        "std_y": _std(ys),
        "lambda": lam,
        "e_ub": e_ub,
        "e_ub_ratio": e_ub / lam,
        "frac_y_ge_lambda": float(np.mean(ys >= lam)),
        "format_version": rng.FORMAT_VERSION,
    }


def run_convergence(manifest, jobs=1):
    """Per-n samples of the normalised nonlinearity.

    Rows stream to ``manifest.output_path`` (CSV) one n at a time; returns
    ``(summaries, records)``.
    """
    if manifest.kind != "converge":
        raise DomainError(f"manifest kind must be 'converge', got {manifest.kind!r}")
    manifest.validate()
    out = None
    if manifest.output_path:
        out = open(manifest.output_path, "w", newline="")
    try:
        writer = csv.writer(out, lineterminator="\n") if out else None
        if writer:
            writer.writerow(RECORD_HEADER)
        summaries, records = [], []
        for n in manifest.n_values:
            recs = _y_values(manifest, n, jobs)
            if writer:
                writer.writerows(rec.row() for rec in recs)
                out.flush()
            records.extend(recs)
            summaries.append(summarize(manifest, n, recs))
    finally:
        if out:
            out.close()
    return summaries, records


def records_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_HEADER)
    writer.writerows(rec.row() for rec in records)
    return buf.getvalue()


# exact oracle ------------------------------------------------------------


@dataclass(frozen=True)
class ExactDistribution:
    n: int
    r: int
    counts: dict

    @property
    def denominator(self):
        return 1 << (1 << self.n)

    @property
    def mean_nr(self):
        return Fraction(sum(v * c for v, c in self.counts.items()), self.denominator)

    @property
    def mean_y(self):
        return (1 << self.n) - 2 * self.mean_nr

    def as_dict(self):
        mean = self.mean_nr
        return {
            "n": self.n,
            "r": self.r,
            "denominator_log2": 1 << self.n,
            "counts": [[v, c] for v, c in sorted(self.counts.items())],
            "mean_Nr_num": mean.numerator,
            "mean_Nr_den": mean.denominator,
        }

    def upper_tail(self, eps):
        """Exact P[Y_n >= lambda_n (1 + eps)]."""
        lam = lambda_n(self.n, self.r)
        full = 1 << self.n
        hits = sum(c for v, c in self.counts.items() if full - 2 * v >= lam * (1 + eps))
        return Fraction(hits, self.denominator)


def all_tables(n):
    if n > ORACLE_MAX_N:
        raise CapExceeded(f"full enumeration needs n <= {ORACLE_MAX_N}, got {n}")
    return np.arange(1 << (1 << n), dtype=np.uint64).reshape(-1, 1)


def exact_values(n, r):
    """N_r of every table on n variables, indexed by the table's integer value."""
    return batch_nonlinearity(all_tables(n), r, n)


def exact_oracle(n, r):
    if not 1 <= n <= ORACLE_MAX_N:
        raise CapExceeded(f"exact oracle needs 1 <= n <= {ORACLE_MAX_N}, got {n}")
    if not 0 <= r <= n:
        raise DomainError(f"need 0 <= r <= n, got r={r}, n={n}")
    values = exact_values(n, r)
    if r == 1:
        spectral = batch_nonlinearity_order1(all_tables(n), n)
        if not np.array_equal(spectral, values):
            raise RuntimeError("spectral and exhaustive N_1 disagree")
    uniq, cnt = np.unique(values, return_counts=True)
    return ExactDistribution(n, r, {int(v): int(c) for v, c in zip(uniq, cnt)})


# joint tail --------------------------------------------------------------


def _mc_error(p, m):
    return 3.0 * math.sqrt(p * (1.0 - p) / m)


def check_joint_hypothesis(g, h, r):
    n = g.n
    if h.n != n:
        raise DomainError("g and h must have the same n")
    c = math.comb(n, r)
    ip = scalar_product_signs(g, h)
    if abs(ip) * c > (1 << n):
        raise DomainError(
            f"|<g,h>| = {abs(ip)} exceeds 2^n / C(n,r) = {Fraction(1 << n, c)}; the joint tail bound does not apply"
        )
    for name, t in (("g", g), ("h", h)):
        if degree(t) > r:
            raise DomainError(f"{name} has degree {degree(t)} > r = {r}")
    return ip


def exact_joint(g, h, lam):
    """Exact (P[Y_g >= lam and Y_h >= lam], P[Y_g >= lam], P[Y_h >= lam]) by enumeration."""
    n = g.n
    tables = all_tables(n).ravel()
    full = 1 << n
    yg = full - 2 * np.bitwise_count(tables ^ np.uint64(g.to_int())).astype(np.int64)
    yh = full - 2 * np.bitwise_count(tables ^ np.uint64(h.to_int())).astype(np.int64)
    den = tables.size
    a, b = yg >= lam, yh >= lam
    return (
        Fraction(int(np.sum(a & b)), den),
        Fraction(int(np.sum(a)), den),
        Fraction(int(np.sum(b)), den),
    )


def run_joint(manifest, g, h, jobs=1):
    if manifest.kind != "joint":
        raise DomainError(f"manifest kind must be 'joint', got {manifest.kind!r}")
    manifest.validate()
    n, r, m = g.n, manifest.r, manifest.samples
    if manifest.n_values != [n]:
        raise DomainError(f"manifest n_values {manifest.n_values} do not match table n={n}")
    ip = check_joint_hypothesis(g, h, r)
    lam = lambda_n(n, r)
    full = 1 << n

    def one(i):
        f = _sample(manifest.master_seed, n, i)
        return full - 2 * int(np.bitwise_count(f.words ^ g.words).sum()), full - 2 * int(
            np.bitwise_count(f.words ^ h.words).sum()
        )

    ys = np.array(_ordered_map(one, range(m), jobs), dtype=np.int64).reshape(-1, 2)
    hit_g, hit_h = ys[:, 0] >= lam, ys[:, 1] >= lam
    p_joint = float(np.mean(hit_g & hit_h))
    p_g, p_h = float(np.mean(hit_g)), float(np.mean(hit_h))
    bound = joint_tail_bound(n, r)
    base = {"n": n, "r": r, "m": m, "seed": manifest.master_seed, "g": g.hex(), "h": h.hex(), "inner": ip}
    reports = [
        BoundReport("joint_tail_mc", dict(base), bound, p_joint, p_joint <= bound + _mc_error(p_joint, m)),
        BoundReport("marginal_product_mc", dict(base), bound, p_g * p_h, None),
    ]
    tail = binomial_tail(full, lam)
    for name, p in (("marginal_g_mc", p_g), ("marginal_h_mc", p_h)):
        # the marginal is known exactly, so its own variance sets the window
        reports.append(BoundReport(name, dict(base), tail, p, abs(p - tail) <= _mc_error(tail, m)))
    if n <= ORACLE_MAX_N:
        joint, mg, mh = exact_joint(g, h, lam)
        ex = {k: v for k, v in base.items() if k not in ("m", "seed")}
        reports.append(BoundReport("joint_tail_exact", dict(ex), bound, float(joint), joint <= Fraction(bound)))
        exact_tail = binomial_tail(full, lam, exact=True)
        reports.append(BoundReport("marginal_g_exact", dict(ex), tail, float(mg), mg == exact_tail))
        reports.append(BoundReport("marginal_h_exact", dict(ex), tail, float(mh), mh == exact_tail))
    return reports


# concentration -----------------------------------------------------------


def theta_grid(n):
    step = 2.0 ** ((n + 1) / 2) / 4
    return [j * step for j in range(13)]


def run_concentration(manifest, jobs=1):
    if manifest.kind != "concentration":
        raise DomainError(f"manifest kind must be 'concentration', got {manifest.kind!r}")
    manifest.validate()
    reports = []
    m = manifest.samples
    for n in manifest.n_values:
        ys = np.array([rec.y for rec in _y_values(manifest, n, jobs)], dtype=np.float64)
        mean = float(ys.mean())
        dev = np.abs(ys - mean)
        for theta in theta_grid(n):
            p = float(np.mean(dev >= theta))
            bound = concentration_bound(n, theta)
            reports.append(
                BoundReport(
                    "concentration",
                    {"n": n, "r": manifest.r, "m": m, "theta": f"{theta:.9g}", "mean_y": f"{mean:.9g}"},
                    bound,
                    p,
                    p <= bound + _mc_error(p, m),
                )
            )
    return reports


def reports_csv(reports):
    from .bounds import CSV_HEADER

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rep.csv_row() for rep in reports)
    return buf.getvalue()


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"
