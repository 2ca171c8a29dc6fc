"""Construction, certified series verdicts, and cylinder machinery."""

import csv
import math
from fractions import Fraction

import numpy as np
import pytest

from presdim.interval_partition import (
    PartitionError,
    build_partition,
    cylinder_derivative_sums,
    cylinder_words,
    make_branch_map,
    perturb_compactly,
    refine_partition,
    write_intervals_csv,
)


# ---------------------------------------------------------------------------
# construction


def test_gauss_lengths_and_tiling():
    part = build_partition("gauss", 500)
    n = np.arange(1, 501, dtype=float)
    assert part.count == 500
    np.testing.assert_allclose(part.lengths, 1.0 / (n * (n + 1.0)), rtol=1e-12)
    assert part.right[0] == 1.0
    # truncated intervals plus the exact tail length tile [0, 1]
    assert abs(part.tiling_defect()) < 1e-15
    assert part.unbounded


def test_dyadic_lengths():
    part = build_partition("dyadic", 40)
    np.testing.assert_allclose(part.lengths, 2.0 ** -np.arange(1, 41, dtype=float))
    assert part.right[0] == 1.0


def test_dyadic_truncation_cap():
    with pytest.raises(PartitionError, match="underflow"):
        build_partition("dyadic", 1001)


def test_power_law_needs_exponent():
    with pytest.raises(PartitionError, match="exponent"):
        build_partition("power-law", 100)
    part = build_partition("power-law", 100, exponent=1.5)
    h = np.arange(1, 102, dtype=float) ** (1.0 - 1.5)
    np.testing.assert_allclose(part.lengths, h[:-1] - h[1:], rtol=1e-14)


def test_keyword_generator_mismatch_rejected():
    with pytest.raises(PartitionError, match="digits only apply"):
        build_partition("gauss", 100, digits=(1, 2))
    with pytest.raises(PartitionError, match="exponent only applies"):
        build_partition("dyadic", 100, exponent=1.5)


def test_unknown_generator():
    with pytest.raises(PartitionError, match="unknown generator"):
        build_partition("fibonacci", 10)


def test_gauss_restricted_digits():
    part = build_partition("gauss-restricted", digits=(1, 2))
    # branch intervals [1/(d+1), 1/d] for d = 1, 2, sorted by right endpoint
    np.testing.assert_allclose(part.right, [1.0, 0.5])
    np.testing.assert_allclose(part.left, [0.5, 1.0 / 3.0])
    with pytest.raises(PartitionError, match="positive integers"):
        build_partition("gauss-restricted", digits=(0, 2))


def test_explicit_intervals_validation():
    part = build_partition("explicit", intervals=[(0.5, 1.0), (0.1, 0.3)])
    assert part.count == 2
    assert part.model is None
    with pytest.raises(PartitionError, match="overlap"):
        build_partition("explicit", intervals=[(0.4, 1.0), (0.1, 0.5)])
    with pytest.raises(PartitionError, match="inside"):
        build_partition("explicit", intervals=[(0.5, 1.2)])
    with pytest.raises(PartitionError, match="positive length"):
        build_partition("explicit", intervals=[(0.5, 0.5)])


def test_sorted_lengths_decreasing():
    part = build_partition("oscillating", 3000)
    s = part.sorted_lengths
    assert np.all(np.diff(s) <= 0)
    # length_order pairs each sorted slot with its interval index
    np.testing.assert_allclose(part.lengths[part.length_order], s)


# ---------------------------------------------------------------------------
# certified series verdicts (tails checked against brute-force partial sums)


def _brute_tail(generator: str, t: float, m: int, n_big: int = 4_000_000, **kw):
    """Partial tail past m, plus the certified remainder past n_big."""
    big = build_partition(generator, n_big, **kw)
    partial = float(np.sum(big.lengths[m:] ** t))
    rem = big.series_verdict(t)
    assert rem.status == "converges"
    return partial + rem.tail_low, partial + rem.tail_high


def test_gauss_verdict_converges_with_sandwich():
    part = build_partition("gauss", 2000)
    v = part.series_verdict(0.75)
    assert v.status == "converges"
    lo, hi = _brute_tail("gauss", 0.75, 2000)
    assert v.tail_low <= hi and lo <= v.tail_high
    assert v.tail_high - v.tail_low < 1e-4


def test_gauss_verdict_diverges_at_half():
    part = build_partition("gauss", 2000)
    assert part.series_verdict(0.5).status == "diverges"
    assert part.series_verdict(0.499).status == "diverges"


def test_dyadic_verdict_exact_geometric():
    part = build_partition("dyadic", 50)
    v = part.series_verdict(0.8)
    r = 2.0 ** -0.8
    exact = r ** 51 / (1.0 - r)
    assert v.status == "converges"
    assert v.tail_low == v.tail_high == pytest.approx(exact, rel=1e-14)


def test_power_law_verdict_threshold():
    part = build_partition("power-law", 2000, exponent=1.5)
    assert part.series_verdict(2.0 / 3.0).status == "diverges"
    v = part.series_verdict(0.8)
    assert v.status == "converges"
    lo, hi = _brute_tail("power-law", 0.8, 2000, exponent=1.5)
    assert v.tail_low <= hi and lo <= v.tail_high


def test_log_squared_verdict_exact_at_one():
    part = build_partition("log-squared", 1000)
    v = part.series_verdict(1.0)
    assert v.status == "converges"
    # telescoping tail is exact: the partial sums are h(m+1) - h(n+1)
    assert v.tail_low == v.tail_high
    assert v.tail_high == pytest.approx(math.log(2.0) / math.log(1002.0), rel=1e-14)
    assert part.series_verdict(0.999).status == "diverges"


def test_oscillating_verdict_three_regimes():
    part = build_partition("oscillating", 3000)
    assert part.series_verdict(0.6).status == "converges"
    assert part.series_verdict(0.2).status == "diverges"
    # inside the asymptotic ratio window nothing is certified
    assert part.series_verdict(0.40).status == "undetermined"


# ---------------------------------------------------------------------------
# compact perturbation


def test_perturb_compactly_swap_two_largest():
    part = build_partition("gauss", 400)
    # region [1/3, 1] holds exactly the first two branch intervals
    c = 1.0 / 3.0
    repl = [(2.0 / 3.0, 1.0), (c, 2.0 / 3.0)]
    out = perturb_compactly(part, (c, 1.0), repl)
    assert out.count == part.count
    assert out.model is part.model
    assert abs(out.tiling_defect()) < 1e-12
    np.testing.assert_allclose(out.right[0], 1.0)


def test_perturb_compactly_rejects_straddle_and_gaps():
    part = build_partition("gauss", 400)
    with pytest.raises(PartitionError, match="straddles"):
        perturb_compactly(part, (0.4, 1.0), [(0.4, 1.0)])
    with pytest.raises(PartitionError, match="reach 1"):
        perturb_compactly(part, (0.25, 0.75), [(0.25, 0.75)])
    with pytest.raises(PartitionError, match="tile"):
        perturb_compactly(part, (1.0 / 3.0, 1.0), [(0.5, 1.0)])


def test_write_intervals_csv(tmp_path):
    part = build_partition("dyadic", 4)
    path = tmp_path / "intervals.csv"
    write_intervals_csv(part, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["n", "a_n", "b_n", "length"]
    assert len(rows) == 5
    assert float(rows[1][2]) == 1.0
    assert float(rows[1][3]) == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# branch maps


def test_gauss_branch_derivative_ranges():
    part = build_partition("gauss", 50)
    bmap = make_branch_map(part)
    assert bmap.kind == "gauss-analytic"
    assert bmap.alphabet_unbounded
    # |T'(x)| = x^-2 on [1/(d+1), 1/d]
    lo, hi = bmap.derivative_range()
    assert lo[2] == pytest.approx(9.0)
    assert hi[2] == pytest.approx(16.0)
    assert bmap.expansion_margin() > 0.0


def test_invariant_hull_bounded_digits():
    part = build_partition("gauss-restricted", digits=(1, 2))
    bmap = make_branch_map(part)
    lo, hi = bmap.invariant_hull()
    # fixed points of m -> 1/(2 + 1/(1 + m)): hull [sqrt(3)-1 .. ] around
    # the attractor of the alternating continued fraction
    assert lo == pytest.approx(0.36602540378443865, abs=1e-12)
    assert hi == pytest.approx(0.7320508075688773, abs=1e-12)
    full = make_branch_map(build_partition("gauss", 50))
    assert full.invariant_hull() == (0.0, 1.0)


def test_linear_branch_map_for_dyadic():
    part = build_partition("dyadic", 30)
    bmap = make_branch_map(part)
    assert bmap.kind == "linear-full"
    lo, hi = bmap.derivative_range()
    assert lo[0] == hi[0] == pytest.approx(1.0 / part.lengths[0])
    assert bmap.second_derivative_bound() == 0.0


# ---------------------------------------------------------------------------
# cylinders: the dynamic programming is checked against direct composition


def _compose_gauss(symbols):
    """Endpoints of the cylinder C(d1..dk) by exact continued fractions."""
    lo, hi = Fraction(0), Fraction(1)
    for d in reversed(symbols):
        lo, hi = 1 / (d + hi), 1 / (d + lo)
    return lo, hi


def test_cylinder_words_match_exact_composition():
    part = build_partition("gauss-restricted", digits=(1, 2))
    bmap = make_branch_map(part)
    for order in (1, 2, 3, 4):
        words = cylinder_words(bmap, order)
        assert len(words) == 2 ** order
        by_sym = {w.symbols: w for w in words}
        for sym in by_sym:
            lo, hi = _compose_gauss(sym)
            w = by_sym[sym]
            assert w.left == pytest.approx(float(lo), abs=1e-15)
            assert w.right == pytest.approx(float(hi), abs=1e-15)
            # |(T^k)'| at the endpoints must lie inside the certified range
            deriv = 1.0 / (hi - lo)  # mean value: some point attains this
            assert w.deriv_inf <= float(deriv) <= w.deriv_sup


def test_cylinder_distortion_bound():
    part = build_partition("gauss-restricted", digits=(1, 2))
    bmap = make_branch_map(part)
    for w in cylinder_words(bmap, 6):
        assert w.deriv_sup / w.deriv_inf <= 4.0 + 1e-12


def test_cylinder_words_need_cap_for_unbounded_alphabet():
    bmap = make_branch_map(build_partition("gauss", 100))
    with pytest.raises(PartitionError, match="alphabet_cap"):
        cylinder_words(bmap, 2)
    words = cylinder_words(bmap, 2, alphabet_cap=10)
    assert len(words) == 100


def test_cylinder_derivative_sums_threads_identical():
    bmap = make_branch_map(build_partition("gauss-restricted", digits=(1, 2)))
    exps = [0.5, 0.53, 1.0]
    one = cylinder_derivative_sums(bmap, 9, exps, threads=1)
    four = cylinder_derivative_sums(bmap, 9, exps, threads=4)
    assert one == four  # compensated sums are order independent
    words = cylinder_words(bmap, 9)
    lo = math.fsum(w.deriv_sup ** -0.5 for w in words)
    hi = math.fsum(w.deriv_inf ** -0.5 for w in words)
    assert one[0][0] == pytest.approx(lo, rel=1e-15)
    assert one[0][1] == pytest.approx(hi, rel=1e-15)


def test_refine_partition_products():
    part = build_partition("dyadic", 5)
    bmap = make_branch_map(part)
    ref = refine_partition(bmap, 2)
    assert ref.count == 25
    assert ref.model is None
    # depth-2 lengths of a linear full shift are products of branch lengths
    base = np.sort(part.lengths)
    expect = np.sort(np.multiply.outer(base, base).ravel())
    np.testing.assert_allclose(np.sort(ref.lengths), expect, rtol=1e-14)
    assert abs(ref.total_length() - part.total_length() ** 2) < 1e-14
