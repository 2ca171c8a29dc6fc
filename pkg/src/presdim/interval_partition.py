"""Countable interval partitions of (0, 1] and expanding branch maps over them.

A partition is a finite materialized prefix (intervals ordered by decreasing
right endpoint) plus, for the built-in generators, a closed-form length model
that describes every interval beyond the truncation.  The length models carry
certified tail rules for power sums, which is what makes pressure values and
critical exponents bracketable instead of merely estimated.

Built-in generators tile (0, 1] via a decreasing endpoint sequence h(n) with
h(1) = 1: interval n is [h(n+1), h(n)], so truncation tails telescope exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import zeta as _hurwitz

from .numerics import compensated_sum

__all__ = [
    "PartitionError",
    "IntervalPartition",
    "SeriesVerdict",
    "build_partition",
    "BranchMap",
    "make_branch_map",
    "CylinderWord",
    "cylinder_words",
    "cylinder_derivative_sums",
    "refine_partition",
    "perturb_compactly",
    "write_intervals_csv",
]

_ENDPOINT_DEDUP_TOL = 1e-15
_TILING_TOL = 1e-12


class PartitionError(ValueError):
    """Invalid partition data or an operation outside a generator's domain."""


@dataclass(frozen=True)
class SeriesVerdict:
    """Outcome of testing sum_n length_n^t for convergence past index M.

    status is one of "converges", "diverges", "undetermined".  When the
    series converges with a certified tail, tail_low <= true tail <= tail_high.
    tail_high may be None for convergence established only by a ratio window
    (no certified bound).
    """

    status: str
    evidence: str
    tail_low: float = 0.0
    tail_high: float | None = None


# ---------------------------------------------------------------------------
# length models (closed forms for the built-in generators)


class _LengthModel:
    """Closed-form endpoint/length data for indices beyond the truncation."""

    tag = "abstract"
    unbounded = True
    # exact exponent separating convergence from divergence, if known
    critical_t: float | None = None
    boundary_status: str | None = None
    boundary_evidence: str | None = None

    def right_endpoint(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_length(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def length_tail_exact(self, m: int) -> float:
        """Exact value of sum_{n > m} length_n (telescoping)."""
        return float(self.right_endpoint(np.array([m + 1.0]))[0])

    def series_verdict(self, t: float, m: int) -> SeriesVerdict:
        raise NotImplementedError


class _GaussLengths(_LengthModel):
    """h(n) = 1/n, lengths 1/(n(n+1))."""

    tag = "gauss"
    critical_t = 0.5
    boundary_status = "diverges"
    boundary_evidence = "harmonic minorant: terms >= (n+1)^(-1) at t = 1/2"

    def right_endpoint(self, n):
        return 1.0 / np.asarray(n, dtype=float)

    def log_length(self, n):
        n = np.asarray(n, dtype=float)
        return -np.log(n) - np.log(n + 1.0)

    def series_verdict(self, t, m):
        if t <= 0.5:
            return SeriesVerdict("diverges", "harmonic minorant: terms >= (n+1)^(-2t) with 2t <= 1")
        z = float(_hurwitz(2.0 * t, m + 1))
        # (n(n+1))^-t = n^-2t (1+1/n)^-t with the second factor in
        # [(1+1/(m+1))^-t, 1] for n > m
        lo = z * (1.0 + 1.0 / (m + 1)) ** (-t)
        return SeriesVerdict("converges", "Hurwitz zeta sandwich", lo, z)


class _DyadicLengths(_LengthModel):
    """h(n) = 2^(1-n), lengths 2^(-n); geometric tails are exact."""

    tag = "dyadic"
    critical_t = 0.0
    boundary_status = "converges"
    boundary_evidence = "geometric series converges for every t > 0 (boundary convention at 0)"

    def right_endpoint(self, n):
        return np.exp2(1.0 - np.asarray(n, dtype=float))

    def log_length(self, n):
        return -np.asarray(n, dtype=float) * math.log(2.0)

    def series_verdict(self, t, m):
        if t <= 0.0:
            return SeriesVerdict("diverges", "infinitely many terms with length^t >= 1")
        r = 2.0 ** (-t)
        tail = r ** (m + 1) / (1.0 - r)
        return SeriesVerdict("converges", "geometric closed form", tail, tail)


class _PowerLawLengths(_LengthModel):
    """h(n) = n^(1-p), lengths asymptotically (p-1) n^(-p), p > 1."""

    tag = "power-law"

    def __init__(self, exponent: float):
        if not exponent > 1.0:
            raise PartitionError(f"power-law exponent must exceed 1, got {exponent}")
        self.exponent = float(exponent)
        self.critical_t = 1.0 / self.exponent
        self.boundary_status = "diverges"
        self.boundary_evidence = "integral-test minorant sum (n+1)^(-1) at t = 1/p"

    def right_endpoint(self, n):
        return np.asarray(n, dtype=float) ** (1.0 - self.exponent)

    def log_length(self, n):
        n = np.asarray(n, dtype=float)
        q = self.exponent - 1.0
        # length = n^-q (1 - (1+1/n)^-q), stable for large n
        return -q * np.log(n) + np.log(-np.expm1(-q * np.log1p(1.0 / n)))

    def series_verdict(self, t, m):
        p, q = self.exponent, self.exponent - 1.0
        if p * t <= 1.0:
            return SeriesVerdict("diverges", "integral-test minorant q^t sum (n+1)^(-pt), pt <= 1")
        # mean value theorem: q (n+1)^-p <= length_n <= q n^-p
        scale = q ** t
        lo = scale * float(_hurwitz(p * t, m + 2))
        hi = scale * float(_hurwitz(p * t, m + 1))
        return SeriesVerdict("converges", "mean-value sandwich with Hurwitz zeta", lo, hi)


class _LogSquaredLengths(_LengthModel):
    """h(n) = log(2)/log(n+1), lengths asymptotically log(2)/(n log^2 n)."""

    tag = "log-squared"
    critical_t = 1.0
    boundary_status = "converges"
    boundary_evidence = "telescoping: exact tail h(m+1) at t = 1"

    def right_endpoint(self, n):
        return math.log(2.0) / np.log(np.asarray(n, dtype=float) + 1.0)

    def log_length(self, n):
        n = np.asarray(n, dtype=float)
        return (
            math.log(math.log(2.0))
            + np.log(np.log1p(1.0 / (n + 1.0)))
            - np.log(np.log(n + 1.0))
            - np.log(np.log(n + 2.0))
        )

    def series_verdict(self, t, m):
        if t < 1.0:
            return SeriesVerdict(
                "diverges",
                "integral-test minorant: terms >= (log2/((n+2) log^2(n+2)))^t, "
                "sum x^(-t) log^(-2t) x = infinity for t < 1",
            )
        if t == 1.0:
            tail = self.length_tail_exact(m)
            return SeriesVerdict("converges", "telescoping exact tail", tail, tail)
        # length_n <= log2 / ((n+1) log^2(n+1)); pull the slowly varying log
        # factor out at the truncation boundary
        hi = (math.log(2.0) ** t) * math.log(m + 2.0) ** (-2.0 * t) * float(_hurwitz(t, m + 2))
        return SeriesVerdict("converges", "majorant with boundary log factor (lower bound 0)", 0.0, hi)


class _OscillatingLengths(_LengthModel):
    """Alternating local decay exponents so the gap ratios have no limit.

    h(n) = exp(-phi(log n)) with phi piecewise linear: slope 1 on [0, x0],
    then slopes alternating 2, 1, 2, ... on consecutive blocks
    [x0 r^j, x0 r^(j+1)].  Lengths behave like n^(-2) at the end of slope-1
    blocks and n^(-3) at the end of slope-2 blocks, so the running ratios
    log n / (-log length) oscillate between roughly 1/3 and 1/2 forever.
    """

    tag = "oscillating"
    critical_t = None

    def __init__(self, first_boundary: float = 3.0, block_ratio: float = 3.0):
        if first_boundary <= 0 or block_ratio <= 1:
            raise PartitionError("oscillating blocks need first_boundary > 0, block_ratio > 1")
        self.first_boundary = float(first_boundary)
        self.block_ratio = float(block_ratio)

    def _phi_and_slope(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        out = np.minimum(x, self.first_boundary)
        slope_at = np.where(x <= self.first_boundary, 1.0, 0.0)
        lo = self.first_boundary
        slope = 2.0
        # 64 blocks cover x up to first_boundary * ratio^64, far past float range
        for _ in range(64):
            hi = lo * self.block_ratio
            out = out + slope * (np.clip(x, lo, hi) - lo)
            inside = (x > lo) & (x <= hi)
            slope_at = np.where(inside, slope, slope_at)
            lo = hi
            slope = 3.0 - slope
            if lo > 1e12:
                break
        slope_at = np.where(slope_at == 0.0, slope, slope_at)
        return out, slope_at

    def right_endpoint(self, n):
        x = np.log(np.asarray(n, dtype=float))
        return np.exp(-self._phi_and_slope(x)[0])

    def log_length(self, n):
        n = np.asarray(n, dtype=float)
        phi_n, _ = self._phi_and_slope(np.log(n))
        phi_n1, _ = self._phi_and_slope(np.log(n + 1.0))
        dphi = phi_n1 - phi_n
        # length = h(n)(1 - exp(-dphi)); dphi ~ slope/n so keep it in log form
        return -phi_n + np.log(-np.expm1(-dphi))

    # geometric sampling cannot miss a window extremum of the slowly varying
    # ratio sequence by more than this
    _RATIO_PAD = 0.005

    def ratio_window(self, n_lo: int = 16, n_hi: int = 10**12, samples: int = 800) -> tuple[float, float]:
        grid = np.unique(np.geomspace(max(n_lo, 2), n_hi, samples).astype(np.int64))
        r = np.log(grid.astype(float)) / (-self.log_length(grid))
        return float(r.min()), float(r.max())

    def series_verdict(self, t, m):
        if t <= 0.0:
            return SeriesVerdict("diverges", "infinitely many terms with length^t >= 1")
        r_min, r_max = self.ratio_window(max(m // 2, 16) if m > 32 else 16)
        if t > 0.5:
            # certified: length_n <= h(n) * dphi <= (1/n) * 2 log(1+1/n) <= 2/n^2
            hi = (2.0 ** t) * float(_hurwitz(2.0 * t, m + 1))
            return SeriesVerdict("converges", "majorant 2 n^(-2) with Hurwitz tail", 0.0, hi)
        if t > r_max + self._RATIO_PAD:
            return SeriesVerdict(
                "converges", f"ratio window: sup log n / (-t log length) = {r_max / t:.4f} < 1", 0.0, None
            )
        if t < r_min - self._RATIO_PAD:
            return SeriesVerdict(
                "diverges", f"ratio window: inf log n / (-t log length) = {r_min / t:.4f} > 1"
            )
        return SeriesVerdict("undetermined", "exponent inside the oscillation band of the ratio window")


# ---------------------------------------------------------------------------
# the partition type


@dataclass(frozen=True, eq=False)
class IntervalPartition:
    """Finitely many materialized intervals, ordered by decreasing right endpoint.

    Instances are immutable; the arrays are read-only views.  `model` is the
    closed-form length model when the generator is one of the built-ins (None
    for explicit lists and refined/capped systems).
    """

    left: np.ndarray
    right: np.ndarray
    generator: str
    params: dict = field(default_factory=dict)
    model: _LengthModel | None = None

    def __post_init__(self):
        left = np.ascontiguousarray(np.asarray(self.left, dtype=float))
        right = np.ascontiguousarray(np.asarray(self.right, dtype=float))
        if left.shape != right.shape or left.ndim != 1 or left.size == 0:
            raise PartitionError("partition needs matching 1-d, non-empty endpoint arrays")
        if not (np.all(left >= -1e-15) and np.all(right <= 1.0 + 1e-15)):
            raise PartitionError("intervals must lie inside [0, 1]")
        if not np.all(right - left > 0.0):
            raise PartitionError("every interval needs positive length")
        if not np.all(np.diff(right) < 0.0):
            raise PartitionError("intervals must be ordered by strictly decreasing right endpoint")
        # disjoint interiors: next right endpoint must not pass the current left
        if left.size > 1 and np.any(right[1:] - left[:-1] > _TILING_TOL):
            raise PartitionError("interval interiors overlap")
        left.setflags(write=False)
        right.setflags(write=False)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        lengths = right - left
        order = np.argsort(-lengths, kind="stable")
        sorted_lengths = lengths[order]
        for arr in (lengths, order, sorted_lengths):
            arr.setflags(write=False)
        object.__setattr__(self, "_lengths", lengths)
        object.__setattr__(self, "_sorted_lengths", sorted_lengths)
        object.__setattr__(self, "_length_order", order)

    @property
    def count(self) -> int:
        return int(self.left.size)

    @property
    def lengths(self) -> np.ndarray:
        return self._lengths

    @property
    def sorted_lengths(self) -> np.ndarray:
        """Lengths in decreasing order (the view used by gap exponents)."""
        return self._sorted_lengths

    @property
    def length_order(self) -> np.ndarray:
        """Permutation mapping sorted positions to original indices."""
        return self._length_order

    @property
    def unbounded(self) -> bool:
        return self.model is not None and self.model.unbounded

    def endpoints(self) -> np.ndarray:
        """Deduplicated, ascending endpoint set of the materialized intervals."""
        pts = np.sort(np.concatenate([self.left, self.right]))
        keep = np.empty(pts.size, dtype=bool)
        keep[0] = True
        np.greater(np.diff(pts), _ENDPOINT_DEDUP_TOL, out=keep[1:])
        return pts[keep]

    def total_length(self) -> float:
        return compensated_sum(self.lengths)

    def tiling_defect(self) -> float | None:
        """materialized mass + exact tail - 1, for generators that tile (0, 1]."""
        if self.model is None:
            return None
        return self.total_length() + self.model.length_tail_exact(self.count) - 1.0

    def series_verdict(self, t: float) -> SeriesVerdict:
        """Convergence test for sum length_n^t over the full (untruncated) system."""
        if self.model is None:
            return SeriesVerdict("converges", "finite interval list", 0.0, 0.0)
        if t <= 0.0:
            return SeriesVerdict("diverges", "unbounded alphabet with nonpositive exponent")
        return self.model.series_verdict(float(t), self.count)


# ---------------------------------------------------------------------------
# construction


_MODEL_BUILDERS: dict[str, Callable[..., _LengthModel]] = {
    "gauss": lambda **kw: _GaussLengths(),
    "dyadic": lambda **kw: _DyadicLengths(),
    "power-law": lambda exponent=2.0, **kw: _PowerLawLengths(exponent),
    "log-squared": lambda **kw: _LogSquaredLengths(),
    "oscillating": lambda first_boundary=3.0, block_ratio=3.0, **kw: _OscillatingLengths(
        first_boundary, block_ratio
    ),
}


def build_partition(
    generator: str,
    truncation: int | None = None,
    *,
    exponent: float | None = None,
    digits: Sequence[int] | None = None,
    intervals: Iterable[tuple[float, float]] | None = None,
    enforce_accumulation: bool = True,
    **model_params,
) -> IntervalPartition:
    """Materialize a partition from a named generator.

    generator: one of "gauss", "dyadic", "power-law", "log-squared",
    "oscillating", "gauss-restricted", "explicit".  `truncation` is the number
    of materialized intervals for the unbounded generators.  power-law takes
    `exponent` (> 1, the length decay rate); gauss-restricted takes `digits`
    (a finite set of branch digits); explicit takes `intervals`.

    Unbounded generators are checked to accumulate endpoints only at 0
    (automatic for the built-ins; the check can be disabled with
    enforce_accumulation=False).
    """
    params: dict = {}
    if digits is not None and generator != "gauss-restricted":
        raise PartitionError("digits only apply to the gauss-restricted generator")
    if exponent is not None and generator != "power-law":
        raise PartitionError("exponent only applies to the power-law generator")
    if generator in _MODEL_BUILDERS:
        if truncation is None or truncation < 1:
            raise PartitionError("unbounded generators need truncation >= 1")
        if generator == "dyadic" and truncation > 1000:
            raise PartitionError("dyadic lengths underflow float64 past n = 1074; use truncation <= 1000")
        if generator == "power-law":
            if exponent is None:
                raise PartitionError("power-law needs exponent")
            model_params["exponent"] = exponent
            params["exponent"] = exponent
        model = _MODEL_BUILDERS[generator](**model_params)
        params.update(model_params)
        n = np.arange(1, truncation + 2, dtype=float)
        h = model.right_endpoint(n)
        left, right = h[1:], h[:-1]
        if enforce_accumulation and not (np.all(np.diff(h) < 0) and h[-1] < h[0]):
            raise PartitionError("generator endpoints fail to decrease toward 0")
        return IntervalPartition(left, right, generator, params, model)

    if generator == "gauss-restricted":
        if not digits:
            raise PartitionError("gauss-restricted needs a non-empty digit set")
        ds = sorted(set(int(d) for d in digits))
        if ds[0] < 1:
            raise PartitionError("digits must be positive integers")
        right = 1.0 / np.array(ds, dtype=float)
        left = 1.0 / (np.array(ds, dtype=float) + 1.0)
        return IntervalPartition(left, right, generator, {"digits": tuple(ds)}, None)

    if generator == "explicit":
        if intervals is None:
            raise PartitionError("explicit generator needs intervals")
        pairs = sorted(((float(a), float(b)) for a, b in intervals), key=lambda ab: -ab[1])
        if not pairs:
            raise PartitionError("explicit generator needs at least one interval")
        left = np.array([a for a, _ in pairs])
        right = np.array([b for _, b in pairs])
        return IntervalPartition(left, right, "explicit", {}, None)

    raise PartitionError(f"unknown generator {generator!r}")


def perturb_compactly(
    partition: IntervalPartition,
    region: tuple[float, float],
    replacements: Iterable[tuple[float, float]],
) -> IntervalPartition:
    """Replace the intervals living in region = [c, 1] by a new finite tiling.

    The replacement intervals must tile exactly (to 1e-12) the union of the
    original intervals contained in the region.  Intervals straddling the
    region boundary are rejected.  The closed-form tail model is untouched, so
    critical exponents and divergence classifications are preserved by
    construction.
    """
    c, top = float(region[0]), float(region[1])
    if abs(top - 1.0) > 1e-15:
        raise PartitionError("perturbation region must reach 1 (modifications stay away from 0)")
    if not 0.0 < c < 1.0:
        raise PartitionError("perturbation region must be [c, 1] with 0 < c < 1")
    inside = partition.left >= c - _TILING_TOL
    straddle = (~inside) & (partition.right > c + _TILING_TOL)
    if np.any(straddle):
        raise PartitionError("an original interval straddles the region boundary")
    if not np.any(inside):
        raise PartitionError("no original interval lies in the region")

    old = sorted(zip(partition.left[inside], partition.right[inside]))
    new = sorted((float(a), float(b)) for a, b in replacements)
    if not new:
        raise PartitionError("replacement list is empty")
    for a, b in new:
        if not (c - _TILING_TOL <= a < b <= 1.0 + 1e-15):
            raise PartitionError("replacement interval outside the region")

    def merged(ivs):
        out = [list(ivs[0])]
        for a, b in ivs[1:]:
            if a <= out[-1][1] + _TILING_TOL:
                out[-1][1] = max(out[-1][1], b)
            else:
                out.append([a, b])
        return out

    mo, mn = merged(old), merged(new)
    if len(mo) != len(mn) or any(
        abs(x[0] - y[0]) > _TILING_TOL or abs(x[1] - y[1]) > _TILING_TOL for x, y in zip(mo, mn)
    ):
        raise PartitionError("replacements do not tile the union of originals in the region")

    keep_left = partition.left[~inside]
    keep_right = partition.right[~inside]
    new_left = np.concatenate([[a for a, _ in new], keep_left])
    new_right = np.concatenate([[b for _, b in new], keep_right])
    order = np.argsort(-new_right, kind="stable")
    return IntervalPartition(
        new_left[order],
        new_right[order],
        f"perturbed({partition.generator})",
        dict(partition.params, region_start=c),
        partition.model,
    )


def write_intervals_csv(partition: IntervalPartition, path) -> None:
    """Write n,a_n,b_n,length rows with deterministic shortest round-trip floats."""
    with open(path, "w", newline="\n") as fh:
        fh.write("n,a_n,b_n,length\n")
        lengths = partition.lengths
        for i in range(partition.count):
            fh.write(
                f"{i + 1},{float(partition.left[i])!r},{float(partition.right[i])!r},{float(lengths[i])!r}\n"
            )


# ---------------------------------------------------------------------------
# branch maps and cylinders


@dataclass(frozen=True)
class BranchMap:
    """A full-branch expanding map: each interval maps onto (0, 1).

    kind "linear-full": the affine increasing bijection per interval.
    kind "gauss-analytic": x -> 1/x - d on the branch with digit d; only
    available over gauss or gauss-restricted partitions.
    """

    kind: str
    partition: IntervalPartition
    digits: tuple[int, ...] | None = None

    @property
    def branch_count(self) -> int:
        return self.partition.count

    @property
    def alphabet_unbounded(self) -> bool:
        return self.kind == "gauss-analytic" and self.partition.generator == "gauss"

    def derivative_range(self) -> tuple[np.ndarray, np.ndarray]:
        """(inf, sup) of |T'| per materialized branch."""
        if self.kind == "linear-full":
            d = 1.0 / self.partition.lengths
            return d, d
        ds = np.asarray(self.digits, dtype=float)
        return ds**2, (ds + 1.0) ** 2

    def second_derivative_bound(self) -> float:
        """sup |T''(x)| / (|T'(y)| |T'(z)|) over branches (0 for affine maps).

        For the reciprocal branches the ratio is 2 x^(-3) y^2 z^2 with
        x, y, z in [1/(d+1), 1/d]; it is maximized at d = 1 where it equals
        2 (d+1)^3 / d^4 = 16.
        """
        if self.kind == "linear-full":
            return 0.0
        return 16.0

    def expansion_margin(self, samples_per_branch: int = 5) -> float:
        """min |T'| - 1 over interior sample points (positive = expanding).

        Sampling stays strictly inside each branch: the first reciprocal
        branch has |T'| = 1 exactly at its right endpoint.
        """
        u = (np.arange(1, samples_per_branch + 1)) / (samples_per_branch + 1.0)
        a = self.partition.left[:, None]
        b = self.partition.right[:, None]
        x = a + (b - a) * u[None, :]
        if self.kind == "linear-full":
            deriv = 1.0 / self.partition.lengths[:, None]
            deriv = np.broadcast_to(deriv, x.shape)
        else:
            deriv = 1.0 / (x * x)
        return float(deriv.min() - 1.0)

    def invariant_hull(self) -> tuple[float, float]:
        """Smallest interval containing every forward-invariant point.

        Periodic points of every iterate live here, so per-cylinder derivative
        ranges may be taken over cylinder ∩ hull without losing any of them.
        For the full reciprocal family the hull is all of [0, 1]; for a finite
        digit set it is the fixed interval of (m, M) -> (f_max(M), f_min(m)).
        """
        if self.kind == "linear-full" or self.alphabet_unbounded:
            return 0.0, 1.0
        dmin, dmax = min(self.digits), max(self.digits)
        m, big = 0.0, 1.0
        for _ in range(200):
            big = 1.0 / (dmin + m)
            m = 1.0 / (dmax + big)
        return m, big


def make_branch_map(partition: IntervalPartition, kind: str = "auto") -> BranchMap:
    if kind == "auto":
        kind = "gauss-analytic" if partition.generator in ("gauss", "gauss-restricted") else "linear-full"
    if kind == "linear-full":
        return BranchMap("linear-full", partition, None)
    if kind == "gauss-analytic":
        if partition.generator == "gauss":
            digits = tuple(range(1, partition.count + 1))
        elif partition.generator == "gauss-restricted":
            digits = tuple(partition.params["digits"])
        else:
            raise PartitionError("gauss-analytic branches need a gauss-type partition")
        return BranchMap("gauss-analytic", partition, digits)
    raise PartitionError(f"unknown branch map kind {kind!r}")


@dataclass(frozen=True)
class CylinderWord:
    """A depth-n cylinder: its symbol word, interval, and derivative range."""

    symbols: tuple[int, ...]
    left: float
    right: float
    deriv_inf: float
    deriv_sup: float


def _check_enumeration_cap(branches: int, order: int, word_cap: int) -> int:
    count = branches**order
    if count > word_cap:
        raise PartitionError(
            f"{branches}^{order} = {count} cylinder words exceed the enumeration cap "
            f"{word_cap}; lower the order or alphabet, or raise word_cap"
        )
    return count


def _effective_alphabet(bmap: BranchMap, alphabet_cap: int | None) -> int:
    m = bmap.branch_count
    if alphabet_cap is not None:
        m = min(m, int(alphabet_cap))
    if m < 1:
        raise PartitionError("alphabet cap leaves no branches")
    if bmap.alphabet_unbounded and alphabet_cap is None:
        raise PartitionError("unbounded alphabet: cylinder enumeration needs alphabet_cap")
    return m


def _gauss_tables(digits: Sequence[int], order: int):
    """Continuant coefficient arrays (p', p, q', q) for all words, lex order.

    Inverse branches are Moebius maps y -> 1/(d + y); a composed word w gives
    F_w(y) = (p' y + p)/(q' y + q) with |det| = 1, so
    |F_w'(y)| = (q' y + q)^(-2) and the cylinder is [F_w(0), F_w(1)] sorted.
    """
    pp = np.array([1.0])
    p = np.array([0.0])
    qp = np.array([0.0])
    q = np.array([1.0])
    ds = np.asarray(digits, dtype=float)
    for _ in range(order):
        # prepend digit d: (p', p, q', q) <- (q', q, p' + d q', p + d q)
        pp, p, qp, q = (
            np.repeat(qp[None, :], len(ds), axis=0).ravel(),
            np.repeat(q[None, :], len(ds), axis=0).ravel(),
            (pp[None, :] + ds[:, None] * qp[None, :]).ravel(),
            (p[None, :] + ds[:, None] * q[None, :]).ravel(),
        )
    return pp, p, qp, q


def _linear_tables(partition: IntervalPartition, branches: int, order: int):
    """Affine composition tables (offset, scale) for all words, lex order."""
    a = partition.left[:branches]
    ln = partition.lengths[:branches]
    off = np.array([0.0])
    sc = np.array([1.0])
    for _ in range(order):
        off, sc = (
            (a[:, None] + ln[:, None] * off[None, :]).ravel(),
            (ln[:, None] * sc[None, :]).ravel(),
        )
    return off, sc


def cylinder_words(
    bmap: BranchMap,
    order: int,
    alphabet_cap: int | None = None,
    word_cap: int = 1 << 21,
) -> list[CylinderWord]:
    """Enumerate all depth-`order` cylinders (lexicographic symbol order)."""
    if order < 1:
        raise PartitionError("cylinder order must be >= 1")
    m = _effective_alphabet(bmap, alphabet_cap)
    count = _check_enumeration_cap(m, order, word_cap)
    hull_lo, hull_hi = bmap.invariant_hull()

    symbols = np.indices((m,) * order).reshape(order, count).T + 1
    if bmap.kind == "gauss-analytic":
        digs = bmap.digits[:m]
        pp, p, qp, q = _gauss_tables(digs, order)
        f0 = p / q
        f1 = (pp + p) / (qp + q)
        left, right = np.minimum(f0, f1), np.maximum(f0, f1)
        deriv_inf = (qp * hull_lo + q) ** 2
        deriv_sup = (qp * hull_hi + q) ** 2
        sym_lookup = np.asarray(digs, dtype=int)
        symbols = sym_lookup[symbols - 1]
    else:
        off, sc = _linear_tables(bmap.partition, m, order)
        left, right = off, off + sc
        deriv_inf = deriv_sup = 1.0 / sc
    return [
        CylinderWord(tuple(int(s) for s in symbols[i]), float(left[i]), float(right[i]),
                     float(deriv_inf[i]), float(deriv_sup[i]))
        for i in range(count)
    ]


def cylinder_derivative_sums(
    bmap: BranchMap,
    order: int,
    exponents: Sequence[float],
    alphabet_cap: int | None = None,
    word_cap: int = 1 << 21,
    threads: int = 1,
) -> list[tuple[float, float]]:
    """For each t, return (sum_w sup_w^-t, sum_w inf_w^-t) over depth-n cylinders.

    sup/inf are the derivative range of the n-th iterate over cylinder ∩
    invariant hull.  Work is chunked by leading symbol; chunk partial sums are
    combined in fixed symbol order, so results do not depend on `threads`.
    """
    if order < 1:
        raise PartitionError("cylinder order must be >= 1")
    m = _effective_alphabet(bmap, alphabet_cap)
    _check_enumeration_cap(m, order, word_cap)
    hull_lo, hull_hi = bmap.invariant_hull()
    ts = [float(t) for t in exponents]

    def chunk_sums(lead: int) -> list[tuple[float, float]]:
        # words with fixed leading symbol index `lead`: build depth order-1
        # tables, then prepend the lead symbol
        if bmap.kind == "gauss-analytic":
            digs = bmap.digits[:m]
            pp, p, qp, q = _gauss_tables(digs, order - 1) if order > 1 else (
                np.array([1.0]), np.array([0.0]), np.array([0.0]), np.array([1.0]))
            d = float(digs[lead])
            qp_full = pp + d * qp
            q_full = p + d * q
            inf_d = (qp_full * hull_lo + q_full) ** 2
            sup_d = (qp_full * hull_hi + q_full) ** 2
        else:
            part = bmap.partition
            off, sc = _linear_tables(part, m, order - 1) if order > 1 else (
                np.array([0.0]), np.array([1.0]))
            sc_full = part.lengths[lead] * sc
            inf_d = sup_d = 1.0 / sc_full
        out = []
        for t in ts:
            out.append((compensated_sum(sup_d ** (-t)), compensated_sum(inf_d ** (-t))))
        return out

    if threads > 1 and m > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_lead = list(pool.map(chunk_sums, range(m)))
    else:
        per_lead = [chunk_sums(lead) for lead in range(m)]

    results = []
    for j in range(len(ts)):
        sup_parts = np.array([per_lead[lead][j][0] for lead in range(m)])
        inf_parts = np.array([per_lead[lead][j][1] for lead in range(m)])
        results.append((compensated_sum(sup_parts), compensated_sum(inf_parts)))
    return results


def refine_partition(
    bmap: BranchMap,
    order: int,
    alphabet_cap: int | None = None,
    word_cap: int = 1 << 21,
) -> IntervalPartition:
    """The partition into depth-`order` cylinders of the (possibly capped) map.

    The result is an explicit finite partition (no tail model): with an
    alphabet cap it describes the capped subsystem, not the full map.
    """
    words = cylinder_words(bmap, order, alphabet_cap, word_cap)
    left = np.array([w.left for w in words])
    right = np.array([w.right for w in words])
    order_ix = np.argsort(-right, kind="stable")
    return IntervalPartition(
        left[order_ix],
        right[order_ix],
        f"refined({bmap.partition.generator},order={order})",
        dict(bmap.partition.params),
        None,
    )
