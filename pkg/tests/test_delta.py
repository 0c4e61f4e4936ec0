import math
from fractions import Fraction

import pytest

import kurihara.delta as delta_module
from kurihara.curve import curve_context
from kurihara.delta import (
    KuriharaNumber,
    NORM_PINNED,
    NORM_UNIT,
    collection_json,
    delta,
    delta_1,
    functional_sign_check,
    mazur_tate_truncation,
    scan,
    unit_invariance_audit,
)
from kurihara.kolyvagin import Modulus, modulus_from_int, sieve
from kurihara.modsym import eigensymbol_for

E389 = [0, 1, 1, -2, 0]
E1058 = [1, -1, 0, -332311, -73733731]


@pytest.fixture(scope="module")
def ctx389():
    return curve_context(E389, 5, 2, label="389.a1")


@pytest.fixture(scope="module")
def sym389(ctx389):
    return eigensymbol_for(ctx389)


@pytest.fixture(scope="module")
def ctx1058():
    return curve_context(E1058, 5, 3, label="1058.e1")


@pytest.fixture(scope="module")
def sym1058(ctx1058):
    return eigensymbol_for(ctx1058)


def modulus(ctx, n):
    return modulus_from_int(ctx, 5, n)


class TestDeltaOne:
    def test_vanishes_for_rank_two_curve(self, sym389):
        val, v, tag = delta_1(sym389)
        assert val == 0
        assert v == math.inf
        assert tag == NORM_PINNED

    def test_pinned_value_at_1058(self, sym1058):
        val, v, tag = delta_1(sym1058)
        assert val == Fraction(25)
        assert v == 2
        assert tag == NORM_PINNED

    def test_trivial_modulus_records_residue(self, sym1058):
        # unit scale, not the pinned one: the raw symbol value is 50 and
        # the first-stage scale is already integral, so the residue keeps
        # the unit factor 2 while the valuation matches the pinned value
        kn = delta(sym1058, Modulus(), 3)
        assert kn.value == 50
        assert kn.valuation == 2
        assert not kn.is_zero
        assert kn.norm_tag == NORM_UNIT

    def test_zero_residue_caps_valuation(self, sym1058):
        # 25 is a unit times 5^2, so mod 25 it reads as zero at full depth
        kn = delta(sym1058, Modulus(), 2)
        assert kn.value == 0
        assert kn.valuation == 2
        assert kn.is_zero


class TestDeltaErrors:
    def test_depth_beyond_modulus_rejected(self, ctx389, sym389):
        with pytest.raises(ValueError, match="exceeds"):
            delta(sym389, modulus(ctx389, 41), 2)

    def test_nonpositive_depth_rejected(self, sym389):
        with pytest.raises(ValueError, match="positive"):
            delta(sym389, Modulus(), 0)


class TestResidues389:
    # residues under the unit scale with the least primitive roots; any
    # drift in normalization, log tables or summation order lands here
    @pytest.mark.parametrize("n,expected", [(2501, 1), (5371, 4), (7991, 3)])
    def test_frozen_pair_residues(self, ctx389, sym389, n, expected):
        kn = delta(sym389, modulus(ctx389, n), 1)
        assert kn.value == expected
        assert kn.valuation == 0
        assert not kn.is_zero

    def test_single_prime_values_vanish(self, ctx389, sym389):
        # even vanishing order forces every nu = 1 value to zero
        for q in sieve(ctx389, 5, 1, 200):
            kn = delta(sym389, modulus(ctx389, q.ell), 1)
            assert kn.is_zero, q.ell


class TestResidues1058:
    @pytest.mark.parametrize("n", [19781, 25021])
    def test_pair_witnesses_are_units(self, ctx1058, sym1058, n):
        kn = delta(sym1058, modulus(ctx1058, n), 1)
        assert kn.valuation == 0

    def test_reduction_tower_consistent(self, sym1058):
        # one value, three depths: each must be the reduction of the next
        k3 = delta(sym1058, Modulus(), 3)
        k2 = delta(sym1058, Modulus(), 2)
        k1 = delta(sym1058, Modulus(), 1)
        assert k3.value % 25 == k2.value
        assert k3.value % 5 == k1.value


class TestMazurTateCrossPath:
    def test_top_coefficient_equals_delta_389(self, ctx389, sym389):
        coll = scan(sym389, ctx389, 5, 2, 200, 2, {0: 1, 1: 3, 2: 3})
        assert coll.entries
        for kn in coll.entries:
            coeffs = mazur_tate_truncation(sym389, kn.modulus, kn.k_used)
            assert coeffs[-1] == kn.value, kn.modulus.n

    def test_top_coefficient_equals_delta_1058(self, ctx1058, sym1058):
        coll = scan(sym1058, ctx1058, 5, 3, 200, 2, {0: 1, 1: 2, 2: 2})
        for kn in coll.entries:
            coeffs = mazur_tate_truncation(sym1058, kn.modulus, kn.k_used)
            assert coeffs[-1] == kn.value, kn.modulus.n

    def test_augmentation_coefficient_vanishes(self, ctx1058, sym1058):
        # the log-free coefficient is (a_ell - 2) * delta_1 by the Hecke
        # recurrence at m = 1, and a_ell = ell + 1 = 2 to the sieve depth
        for q in sieve(ctx1058, 5, 1, 200):
            coeffs = mazur_tate_truncation(sym1058, modulus(ctx1058, q.ell), 1)
            assert len(coeffs) == 2
            assert coeffs[0] == 0

    def test_subset_count_is_two_to_nu(self, ctx389, sym389):
        coeffs = mazur_tate_truncation(sym389, modulus(ctx389, 2501), 1)
        assert len(coeffs) == 4


class TestInvariances:
    def test_primitive_root_change_preserves_valuation(self, ctx389, sym389):
        for n in (2501, 5371):
            assert unit_invariance_audit(sym389, modulus(ctx389, n), 1, None)

    def test_explicit_alternate_roots(self, ctx389, sym389):
        # 7 generates (Z/41)* and 10 generates (Z/61)*
        m = modulus(ctx389, 2501)
        assert unit_invariance_audit(sym389, m, 1, {41: 7, 61: 10})

    def test_chunk_size_does_not_change_values(self, ctx389, sym389, monkeypatch):
        m = modulus(ctx389, 5371)
        before = delta(sym389, m, 1).value
        monkeypatch.setattr(delta_module, "_CHUNK", 64)
        assert delta(sym389, m, 1).value == before


class TestFunctionalSignCheck:
    def test_matching_parity_passes(self, ctx389, sym389):
        kn = delta(sym389, modulus(ctx389, 2501), 1)
        assert functional_sign_check(1, kn.modulus, kn) == "consistent"

    def test_forced_zero_passes(self, ctx389, sym389):
        kn = delta(sym389, modulus(ctx389, 41), 1)
        assert functional_sign_check(1, kn.modulus, kn) == "consistent"

    def test_forced_nonzero_flags(self, ctx389):
        m = modulus(ctx389, 41)
        fake = KuriharaNumber(m, 1, 2, 0, NORM_UNIT)
        assert functional_sign_check(1, m, fake) == "violation"


class TestScan:
    def test_small_scan_shape_389(self, ctx389, sym389):
        coll = scan(sym389, ctx389, 5, 1, 200, 2, {0: 1, 1: 5, 2: 3})
        assert coll.ord_estimate == 2
        assert coll.min_valuation_overall == 0
        assert coll.parity_audit == "pass"
        assert coll.partials[0].min_valuation is None
        assert coll.partials[1].audited_only
        assert coll.partials[1].min_valuation is None
        assert coll.partials[2].min_valuation == 0
        assert coll.partials[2].witnesses == 3

    def test_deeper_sieve_clears_precision_flag(self, ctx389, sym389):
        # at k = 1 the vanishing delta_1 could be hiding a unit times 5;
        # at k = 2 it is a genuine zero two digits deep
        shallow = scan(sym389, ctx389, 5, 1, 200, 2, {0: 1, 2: 3})
        deep = scan(sym389, ctx389, 5, 2, 200, 2, {0: 1, 2: 3})
        assert shallow.precision_limited
        assert not deep.precision_limited

    def test_saturation_needs_margin_and_witnesses(self, ctx389, sym389):
        shallow = scan(sym389, ctx389, 5, 1, 200, 2, {0: 1, 2: 3})
        deep = scan(sym389, ctx389, 5, 2, 200, 2, {0: 1, 2: 3})
        assert not shallow.partials[2].saturated  # no digit of margin at k=1
        assert deep.partials[2].saturated
        one = scan(sym389, ctx389, 5, 2, 200, 2, {0: 1, 2: 1})
        assert one.partials[2].witnesses == 1
        assert not one.partials[2].saturated

    def test_zero_budget_yields_no_estimate(self, ctx389, sym389):
        coll = scan(sym389, ctx389, 5, 1, 200, 2, 0, audit_sample=0)
        assert coll.entries == []
        assert coll.ord_estimate is None
        assert coll.min_valuation_overall is None

    def test_budget_dict_gaps_default_to_zero(self, ctx389, sym389):
        coll = scan(sym389, ctx389, 5, 1, 200, 2, {2: 1}, audit_sample=0)
        assert [kn.modulus.n for kn in coll.entries] == [2501]
        assert coll.ord_estimate == 2

    def test_budget_growth_refines_minima_monotonically(self, ctx389, sym389):
        small = scan(sym389, ctx389, 5, 1, 200, 2, {0: 1, 1: 2, 2: 1})
        large = scan(sym389, ctx389, 5, 1, 200, 2, {0: 1, 1: 5, 2: 3})
        # stable enumeration: the smaller run is a prefix of the larger
        small_ns = [kn.modulus.n for kn in small.entries]
        large_ns = [kn.modulus.n for kn in large.entries]
        assert set(small_ns) <= set(large_ns)
        for nu in (0, 1, 2):
            lo = small.partials[nu].min_valuation
            hi = large.partials[nu].min_valuation
            if lo is not None:
                assert hi is not None and hi <= lo

    def test_unsettled_root_number_rejected(self, ctx389, sym389):
        bare = curve_context(E389, 5, 2)
        assert bare.root_number == 0
        with pytest.raises(ValueError, match="root number"):
            scan(sym389, bare, 5, 1, 200, 2, 1)

    def test_parity_violation_raises(self, ctx389, sym389, monkeypatch):
        def broken(sym, m, k_used):
            return KuriharaNumber(m, k_used, 1, 0, NORM_UNIT)

        monkeypatch.setattr(delta_module, "delta", broken)
        with pytest.raises(ArithmeticError, match="parity violation"):
            scan(sym389, ctx389, 5, 1, 200, 1, {0: 0, 1: 0}, audit_sample=2)

    def test_wrong_parity_rows_never_set_minima(self, ctx1058, sym1058):
        coll = scan(sym1058, ctx1058, 5, 3, 200, 2, {0: 1, 1: 4, 2: 2})
        assert coll.ord_estimate == 0
        assert coll.partials[0].min_valuation == 2
        assert coll.partials[1].audited_only
        assert coll.partials[1].computed > 0
        assert coll.partials[1].min_valuation is None
        assert coll.partials[2].min_valuation == 0


class TestCollectionJson:
    def test_schema_and_determinism(self, ctx389, sym389):
        coll = scan(sym389, ctx389, 5, 2, 200, 2, {0: 1, 1: 2, 2: 2})
        doc = collection_json(coll, curve_label="389.a1")
        assert doc["curve"] == "389.a1"
        assert doc["p"] == 5 and doc["k"] == 2 and doc["bound"] == 200
        assert doc["budgets"] == {"0": 1, "1": 2, "2": 2}
        assert doc["ord_estimate"] == 2
        assert doc["parity_audit"] == "pass"
        assert doc["precision_limited"] is False
        entry = doc["entries"][0]
        assert set(entry) == {"n", "factors", "k_used", "value", "valuation"}
        assert [rec["nu"] for rec in doc["partials"]] == [0, 1, 2]
        again = collection_json(
            scan(sym389, ctx389, 5, 2, 200, 2, {0: 1, 1: 2, 2: 2}),
            curve_label="389.a1",
        )
        assert doc == again
