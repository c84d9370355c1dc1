import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfcc import tables
from tfcc.fuzzy import (FuzzyError, MembershipVector, RuleTable, Trapezoid, build_partition,
                        defuzzify_centroid, fuzzify, infer)

ALPHA_RANGES = [("VL", 0, 0.45), ("L", 0.4, 0.6), ("M", 0.55, 0.75), ("H", 0.7, 1)]


def riemann_centroid(partition, degrees, n=100_000):
    """Midpoint-rule centroid of the clipped, max-aggregated output set."""
    lo, hi = partition.domain_min, partition.integration_upper()
    dx = (hi - lo) / n
    xs = lo + (np.arange(n) + 0.5) * dx
    agg = np.zeros(n)
    for t, w in zip(partition.breakpoints, degrees):
        knots = np.minimum([t.a, t.b, t.c, t.d], hi + 1.0)  # unbounded plateau runs past the grid
        mu = np.interp(xs, knots, [0.0, 1.0, 1.0, 0.0])
        if t.a == t.b:
            mu[xs <= t.b] = 1.0
        agg = np.maximum(agg, np.minimum(mu, w))
    return float((xs * agg).sum() / agg.sum())


def trapezoid_centroid(a, b, c, d):
    # closed form: rising triangle + rectangle + falling triangle
    parts = []
    if b > a:
        parts.append(((b - a) / 2, a + 2 * (b - a) / 3))
    if c > b:
        parts.append((c - b, (b + c) / 2))
    if d > c:
        parts.append(((d - c) / 2, c + (d - c) / 3))
    area = sum(p[0] for p in parts)
    return sum(p[0] * p[1] for p in parts) / area


class TestPartition:
    def test_table_ranges_to_trapezoids(self):
        p = build_partition("alpha", ALPHA_RANGES)
        assert p.breakpoints == (Trapezoid(0, 0, 0.4, 0.45), Trapezoid(0.4, 0.45, 0.55, 0.6),
                                 Trapezoid(0.55, 0.6, 0.7, 0.75), Trapezoid(0.7, 0.75, 1, 1))

    def test_single_label_is_rectangle(self):
        p = build_partition("all", [("ALL", 0, 1)])
        assert p.breakpoints == (Trapezoid(0, 0, 1, 1),)
        for x in np.linspace(0, 1, 11):
            assert fuzzify(p, x)["ALL"] == 1.0

    def test_abutting_latency_ranges(self):
        p = tables.LATENCY
        ad, hd = p.trapezoid("AD"), p.trapezoid("HD")
        assert (ad.c, ad.d) == pytest.approx((0.95, 1.05))
        assert (hd.a, hd.b) == pytest.approx((0.95, 1.05))
        assert math.isinf(hd.c) and not p.bounded
        for x in np.linspace(0, 3, 1000):
            assert sum(fuzzify(p, x).degrees) == pytest.approx(1.0, abs=1e-9)

    def test_huge_latency_is_fully_hd(self):
        assert fuzzify(tables.LATENCY, 1e9)["HD"] == 1.0
        assert fuzzify(tables.LATENCY, math.inf)["HD"] == 1.0

    @pytest.mark.parametrize("ranges", [
        [("A", 0, 0.4), ("B", 0.5, 1)],  # gap
        [("A", 0, 0.6), ("B", 0.5, 1), ("C", 0.55, 1.2)],  # triple overlap
        [("A", 0.5, 1), ("B", 0, 0.6)],  # not monotone
        [("A", 0, 0.5), ("A", 0.4, 1)],  # duplicate label
    ])
    def test_malformed_partitions(self, ranges):
        with pytest.raises(FuzzyError):
            build_partition("bad", ranges)

    @pytest.mark.parametrize("partition", tables.ALL_PARTITIONS, ids=lambda p: p.axis_name)
    def test_partition_of_unity(self, partition):
        rng = np.random.default_rng(7)
        xs = rng.uniform(partition.domain_min, partition.integration_upper(), 10_000)
        mu = np.vstack([t.evaluate(xs) for t in partition.breakpoints])
        assert np.max(np.abs(mu.sum(axis=0) - 1.0)) <= 1e-9
        # only neighbouring labels are ever active together
        active = mu > 0
        for i, j in itertools.combinations(range(len(partition.labels)), 2):
            if j - i > 1:
                assert not np.any(active[i] & active[j])

    @given(st.floats(0, 1))
    def test_fuzzify_matches_trapezoids(self, x):
        mv = fuzzify(tables.TRUST, x)
        assert sum(mv.degrees) == pytest.approx(1.0, abs=1e-9)
        for lab in tables.TRUST.labels:
            assert mv[lab] == tables.TRUST.trapezoid(lab)(x)


class TestFuzzify:
    def test_plateau(self):
        assert fuzzify(tables.TRUST, 0.5).as_dict() == {"VLT": 0, "LT": 1, "MT": 0, "HT": 0}

    def test_crossover_midpoint(self):
        mv = fuzzify(tables.TRUST, 0.425)
        assert mv["VLT"] == pytest.approx(0.5) and mv["LT"] == pytest.approx(0.5)

    def test_left_shoulder(self):
        assert fuzzify(tables.TRUST, 0.0)["VLT"] == 1.0

    def test_out_of_domain_clamps(self):
        assert fuzzify(tables.TRUST, -3)["VLT"] == 1.0
        assert fuzzify(tables.TRUST, 7)["HT"] == 1.0

    def test_nan_rejected(self):
        with pytest.raises(FuzzyError):
            fuzzify(tables.TRUST, float("nan"))


def crisp(partition, label):
    return MembershipVector.from_mapping(partition, {label: 1.0})


class TestRuleBase:
    def test_trust_rule_count(self):
        assert len(tables.TRUST_RULES) == 64
        assert set(tables.TRUST_RULES.rules) == set(itertools.product(
            tables.TRANSMISSION.labels, tables.LATENCY.labels, tables.ENERGY.labels))

    def test_sigma_rule_count(self):
        assert len(tables.SIGMA_RULES) == 8

    def test_trust_rule_semantics(self):
        for (a, t, e), out in tables.TRUST_RULES.rules.items():
            if e in ("VLE", "LE"):
                want = "VLT"
            elif a in ("VL", "L"):
                want = "MT" if t in ("AD", "LD") else "VLT"
            else:
                want = "HT" if t in ("AD", "LD") else "LT"
            assert out == want, (a, t, e)

    def test_duplicate_rows_rejected(self):
        p = build_partition("x", [("A", 0, 0.6), ("B", 0.5, 1)])
        with pytest.raises(FuzzyError, match="more than one row"):
            RuleTable.from_rows([p], p, [((("A",),), "A"), ((("A", "B"),), "B")])

    def test_incomplete_table_rejected(self):
        p = build_partition("x", [("A", 0, 0.6), ("B", 0.5, 1)])
        with pytest.raises(FuzzyError, match="coverage"):
            RuleTable.from_rows([p], p, [((("A",),), "A")])

    def test_h_ad_he_fires_ht(self):
        inputs = [crisp(tables.TRANSMISSION, "H"), crisp(tables.LATENCY, "AD"), crisp(tables.ENERGY, "HE")]
        assert infer(tables.TRUST_RULES, inputs).as_dict() == {"VLT": 0, "LT": 0, "MT": 0, "HT": 1}

    def test_vle_always_vlt(self):
        for a, t in itertools.product(tables.TRANSMISSION.labels, tables.LATENCY.labels):
            out = infer(tables.TRUST_RULES, [crisp(tables.TRANSMISSION, a), crisp(tables.LATENCY, t),
                                             crisp(tables.ENERGY, "VLE")])
            assert out["VLT"] == 1.0 and sum(out.degrees) == 1.0

    def test_split_input_splits_output(self):
        # alpha half L / half M, latency AD, energy HE: L -> MT, M -> HT
        alpha = MembershipVector.from_mapping(tables.TRANSMISSION, {"L": 0.5, "M": 0.5})
        out = infer(tables.TRUST_RULES, [alpha, crisp(tables.LATENCY, "AD"), crisp(tables.ENERGY, "HE")])
        assert out.as_dict() == {"VLT": 0, "LT": 0, "MT": 0.5, "HT": 0.5}

    def test_wrong_axis_rejected(self):
        with pytest.raises(FuzzyError):
            infer(tables.TRUST_RULES, [crisp(tables.TRUST, "HT"), crisp(tables.LATENCY, "AD"),
                                       crisp(tables.ENERGY, "HE")])


class TestCentroid:
    def test_ht_closed_form(self):
        expected = trapezoid_centroid(0.7, 0.75, 1.0, 1.0)
        assert expected == pytest.approx(0.862121, abs=1e-6)
        assert defuzzify_centroid(tables.TRUST, crisp(tables.TRUST, "HT")) == pytest.approx(expected, abs=1e-4)

    def test_symmetric_label(self):
        assert defuzzify_centroid(tables.SIGMA_CT, crisp(tables.SIGMA_CT, "M")) == pytest.approx(0.625, abs=1e-9)

    def test_half_vlt_half_lt(self):
        deg = MembershipVector.from_mapping(tables.TRUST, {"VLT": 0.5, "LT": 0.5})
        got = defuzzify_centroid(tables.TRUST, deg)
        assert 0 < got < 0.6
        assert got == pytest.approx(riemann_centroid(tables.TRUST, deg.degrees), abs=1e-3)

    @pytest.mark.parametrize("partition", [tables.TRUST, tables.SIGMA_CT, tables.LATENCY],
                             ids=lambda p: p.axis_name)
    def test_random_degrees_match_fine_grid(self, partition):
        rng = np.random.default_rng(11)
        for _ in range(100):
            w = rng.uniform(0, 1, len(partition.labels))
            w[rng.integers(len(w))] = max(w.max(), 0.05)
            got = defuzzify_centroid(partition, MembershipVector(partition, tuple(w)))
            assert got == pytest.approx(riemann_centroid(partition, w), abs=1e-3)

    @pytest.mark.parametrize("partition", tables.ALL_PARTITIONS, ids=lambda p: p.axis_name)
    def test_single_label_centroid_in_support(self, partition):
        for lab in partition.labels:
            lo, hi = partition.support(lab)
            got = defuzzify_centroid(partition, crisp(partition, lab))
            assert lo <= got <= min(hi, partition.integration_upper())

    def test_zero_degrees_rejected(self):
        with pytest.raises(FuzzyError):
            defuzzify_centroid(tables.TRUST, MembershipVector(tables.TRUST, (0, 0, 0, 0)))

    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 2), st.floats(0, 1), st.integers(0, 3), st.integers(0, 3), st.floats(0, 1))
    def test_label_shift_monotone_adjacent_pair(self, k, x, lo, hi, frac):
        # the shape produced by one crisp value on a Ruspini output axis
        w = [0.0] * 4
        w[k], w[k + 1] = x, 1.0 - x
        lo, hi = min(lo, hi), max(lo, hi)
        if lo == hi:
            return
        moved = min(w[lo] * frac, 1.0 - w[hi])
        shifted = list(w)
        shifted[lo] -= moved
        shifted[hi] += moved
        before = defuzzify_centroid(tables.TRUST, MembershipVector(tables.TRUST, tuple(w)))
        after = defuzzify_centroid(tables.TRUST, MembershipVector(tables.TRUST, tuple(shifted)))
        assert after >= before - 1e-12

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.integers(0, 2), st.integers(1, 3),
           st.floats(0, 1))
    def test_label_shift_monotone_up_to_masking(self, w, lo, step, frac):
        hi = min(lo + step, 3)
        if w[lo] == 0:
            return
        # mass is moved, never destroyed: the receiving label must have room
        moved = min(w[lo] * frac, 1.0 - w[hi])
        shifted = list(w)
        shifted[lo] -= moved
        shifted[hi] += moved
        before = defuzzify_centroid(tables.TRUST, MembershipVector(tables.TRUST, tuple(w)))
        after = defuzzify_centroid(tables.TRUST, MembershipVector(tables.TRUST, tuple(shifted)))
        assert after >= before - 1e-4

    def test_masking_counterexample(self):
        # mass moved LT -> MT partly vanishes under the taller VLT and HT sets
        w = [1.0, 0.0625, 0.0, 0.0625]
        v = [1.0, 0.03125, 0.03125, 0.0625]
        drop = riemann_centroid(tables.TRUST, v) - riemann_centroid(tables.TRUST, w)
        assert -1e-4 < drop < 0
        got = (defuzzify_centroid(tables.TRUST, MembershipVector(tables.TRUST, tuple(v)))
               - defuzzify_centroid(tables.TRUST, MembershipVector(tables.TRUST, tuple(w))))
        assert got == pytest.approx(drop, abs=2e-6)


class TestAccumulation:
    def test_max_is_default(self):
        alpha = MembershipVector.from_mapping(tables.TRANSMISSION, {"M": 0.5, "H": 0.5})
        inputs = [alpha, crisp(tables.LATENCY, "AD"), crisp(tables.ENERGY, "HE")]
        assert infer(tables.TRUST_RULES, inputs)["HT"] == 0.5
        assert infer(tables.TRUST_RULES, inputs, "bsum")["HT"] == 1.0

    def test_bsum_caps_at_one(self):
        alpha = MembershipVector.from_mapping(tables.TRANSMISSION, {"M": 0.5, "H": 0.5})
        latency = MembershipVector.from_mapping(tables.LATENCY, {"LD": 0.5, "AD": 0.5})
        out = infer(tables.TRUST_RULES, [alpha, latency, crisp(tables.ENERGY, "HE")], "bsum")
        assert out.as_dict() == {"VLT": 0, "LT": 0, "MT": 0, "HT": 1.0}

    def test_unknown_accumulation(self):
        with pytest.raises(FuzzyError):
            infer(tables.SIGMA_RULES, [crisp(tables.CONGESTION, "LC"), crisp(tables.BENEVOLENT_TRUST, "MT")],
                  "prod")

    def test_max_loses_mass_between_same_conclusion_labels(self):
        # both M and H conclude HT; under max the clipped HT set sits lower than a full one
        def crisp_trust(alpha, accumulation):
            vecs = [fuzzify(tables.TRANSMISSION, alpha), fuzzify(tables.LATENCY, 0.8),
                    fuzzify(tables.ENERGY, 0.9)]
            return defuzzify_centroid(tables.TRUST, infer(tables.TRUST_RULES, vecs, accumulation))

        full = crisp_trust(0.9, "max")
        assert crisp_trust(0.725, "max") < full - 1e-3
        assert crisp_trust(0.725, "bsum") == pytest.approx(full, abs=1e-12)
