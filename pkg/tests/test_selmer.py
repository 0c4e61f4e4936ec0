import pytest

from kurihara.curve import curve_context
from kurihara.delta import DeltaCollection, KuriharaNumber, NORM_UNIT, NuRecord, scan
from kurihara.kolyvagin import KolyvaginPrime, Modulus
from kurihara.modsym import eigensymbol_for
from kurihara.selmer import (
    hypothesis_ledger,
    parity_check,
    predict_structure,
    prediction_json,
    rank_upper_bound,
    semilocal_report,
    tamagawa_conjecture_check,
)

E389 = [0, 1, 1, -2, 0]
E11 = [0, -1, 1, -10, -20]
E5077 = [0, 0, 1, -7, 6]


def collection(p, k, rows, entries=()):
    """Assemble a scan result by hand; rows are (nu, min, witnesses,
    audited_only) with the same aggregation the scanner applies."""
    coll = DeltaCollection(p=p, k=k, sieve_bound=0, budgets={})
    for nu, mv, wit, audited in rows:
        rec = NuRecord(nu=nu, computed=max(wit, 1), min_valuation=mv,
                       witnesses=wit, audited_only=audited)
        if mv is not None:
            rec.saturated = wit >= 3 and mv < k - 1
        coll.partials[nu] = rec
    found = [(nu, rec.min_valuation) for nu, rec in coll.partials.items()
             if rec.min_valuation is not None]
    if found:
        coll.min_valuation_overall = min(v for _, v in found)
        coll.ord_estimate = min(nu for nu, _ in found)
    coll.entries = list(entries)
    return coll


def unit_witness(ells):
    qs = tuple(KolyvaginPrime(ell, ell + 1, 1, 2) for ell in ells)
    return KuriharaNumber(Modulus(qs), 1, 3, 0, NORM_UNIT)


@pytest.fixture(scope="module")
def ctx389():
    return curve_context(E389, 5, 2, label="389.a1")


@pytest.fixture(scope="module")
def ctx11():
    return curve_context(E11, 5, 1, label="11.a1")


class TestPredictStructure:
    def test_corank_two_trivial_torsion(self):
        coll = collection(5, 2, [(0, None, 0, False), (1, None, 0, True),
                                 (2, 0, 3, False)])
        pred = predict_structure(coll)
        assert pred.corank == 2
        assert pred.exponents == ()
        assert pred.torsion_group() == "trivial"
        assert pred.group() == "(Q_5/Z_5)^2"
        assert pred.fitting == ((0, None), (1, None), (2, 0))
        assert pred.length == 0
        assert pred.status == "ok"
        assert pred.saturated and pred.stabilized

    def test_corank_zero_single_block(self):
        coll = collection(5, 3, [(0, 2, 1, False), (1, None, 0, True),
                                 (2, 0, 3, False)])
        pred = predict_structure(coll)
        assert pred.corank == 0
        assert pred.exponents == (1,)
        assert pred.torsion_group() == "(Z/5)^2"
        assert pred.group() == "(Z/5)^2"
        assert pred.fitting == ((0, 2), (2, 0))
        assert pred.length == 2

    def test_corank_zero_deeper_block(self):
        coll = collection(5, 4, [(0, 4, 1, False), (2, 0, 3, False)])
        pred = predict_structure(coll)
        assert pred.exponents == (2,)
        assert pred.torsion_group() == "(Z/25)^2"

    def test_two_blocks_sorted_exponents(self):
        coll = collection(5, 7, [(0, 6, 1, False), (2, 2, 2, False),
                                 (4, 0, 3, False)])
        pred = predict_structure(coll)
        assert pred.exponents == (2, 1)
        assert pred.torsion_group() == "(Z/25)^2 x (Z/5)^2"
        assert pred.length == 6

    def test_trailing_zero_exponents_dropped(self):
        coll = collection(5, 5, [(1, 4, 1, False), (3, 0, 3, False),
                                 (5, 0, 3, False)])
        pred = predict_structure(coll)
        assert pred.corank == 1
        assert pred.exponents == (2,)
        assert pred.group() == "(Q_5/Z_5)^1 x (Z/25)^2"
        assert pred.fitting == ((0, None), (1, 4), (3, 0), (5, 0))

    def test_odd_difference_claims_no_group(self):
        coll = collection(5, 4, [(0, 3, 1, False), (2, 0, 3, False)])
        pred = predict_structure(coll)
        assert pred.status == "unsaturated"
        assert pred.corank == 0
        assert pred.exponents is None
        assert pred.torsion_group() is None
        assert pred.group() is None
        assert "square" in pred.note

    def test_floor_gap_claims_no_group(self):
        # the nu = 2 depth recorded nothing, so the walk to the overall
        # minimum is interrupted and the exponents cannot be read off
        coll = collection(5, 3, [(0, 2, 1, False), (2, None, 0, False),
                                 (4, 0, 3, False)])
        pred = predict_structure(coll)
        assert pred.status == "unsaturated"
        assert pred.exponents is None
        assert pred.fitting == ((0, 2),)

    def test_single_positive_floor_claims_no_group(self):
        coll = collection(5, 3, [(0, 2, 1, False)])
        pred = predict_structure(coll)
        assert pred.status == "unsaturated"
        assert pred.corank == 0
        assert pred.exponents is None
        assert "single usable index" in pred.note
        assert pred.length == 0

    def test_no_witness_no_corank(self):
        coll = collection(5, 2, [(0, None, 0, False), (1, None, 0, True),
                                 (2, None, 0, False)])
        pred = predict_structure(coll)
        assert pred.status == "no-witness"
        assert pred.corank is None
        assert pred.exponents is None
        assert pred.fitting == ()
        assert "nu <= 2" in pred.note

    def test_refinement_under_budget_growth(self):
        # a deeper search can only lower floors; predictions move from
        # unsaturated toward a definite group, never away from it
        first = predict_structure(
            collection(5, 3, [(0, 2, 1, False)]))
        second = predict_structure(
            collection(5, 3, [(0, 2, 1, False), (2, 0, 3, False)]))
        assert first.status == "unsaturated"
        assert second.status == "ok"
        assert first.corank == second.corank == 0
        assert second.exponents == (1,)


class TestRankBound:
    def test_nonzero_witness_bounds_rank(self):
        kn = unit_witness([41, 61])
        assert rank_upper_bound(kn) == 2

    def test_zero_witness_rejected(self):
        qs = (KolyvaginPrime(41, 42, 1, 6),)
        kn = KuriharaNumber(Modulus(qs), 1, 0, 1, NORM_UNIT)
        with pytest.raises(ValueError, match="nonzero"):
            rank_upper_bound(kn)


class TestParityCheck:
    def test_even_order_even_sign(self):
        coll = collection(5, 1, [(2, 0, 3, False)])
        assert parity_check(coll, 1) == "Consistent"
        assert parity_check(coll, -1) == "Inconsistent"

    def test_odd_order_odd_sign(self):
        coll = collection(5, 1, [(3, 0, 3, False)])
        assert parity_check(coll, -1) == "Consistent"
        assert parity_check(coll, 1) == "Inconsistent"

    def test_no_estimate_rejected(self):
        coll = collection(5, 1, [(0, None, 0, False)])
        with pytest.raises(ValueError):
            parity_check(coll, 1)


class TestTamagawaCheck:
    def test_match_at_zero_target(self, ctx389):
        coll = collection(5, 2, [(2, 0, 3, False)])
        out = tamagawa_conjecture_check(coll, ctx389)
        assert out == {"sum_tamagawa_valuations": 0, "observed_floor": 0,
                       "status": "Match"}

    def test_floor_above_target_is_upper_bound_only(self, ctx389):
        coll = collection(5, 2, [(2, 1, 1, False)])
        assert tamagawa_conjecture_check(coll, ctx389)["status"] == "UpperBoundOnly"

    def test_no_floor_is_upper_bound_only(self, ctx389):
        coll = collection(5, 2, [(0, None, 0, False)])
        assert tamagawa_conjecture_check(coll, ctx389)["status"] == "UpperBoundOnly"

    def test_positive_target_match_and_mismatch(self, ctx11):
        # c = 5 at the split multiplicative place 11, so the conjectured
        # floor is one digit
        hit = collection(5, 2, [(0, 1, 1, False)])
        out = tamagawa_conjecture_check(hit, ctx11)
        assert out["sum_tamagawa_valuations"] == 1
        assert out["status"] == "Match"
        low = collection(5, 2, [(0, 0, 1, False)])
        assert tamagawa_conjecture_check(low, ctx11)["status"] == "Mismatch"


class TestHypothesisLedger:
    def test_all_verified_for_389(self, ctx389):
        ledger = hypothesis_ledger(ctx389, 5)
        assert {name: status for name, (status, _) in ledger.items()} == {
            "rho_surjective": "Verified",
            "manin_ok": "Verified",
            "local_torsion_trivial": "Verified",
            "tamagawa_prime_to_p": "Verified",
        }

    def test_assertions_short_circuit(self, ctx389):
        ledger = hypothesis_ledger(ctx389, 5, assert_manin=True,
                                   assert_surjective=True)
        assert ledger["rho_surjective"] == ("Asserted", "user assertion")
        assert ledger["manin_ok"] == ("Asserted", "user assertion")

    def test_divisible_tamagawa_fails(self, ctx11):
        status, reason = hypothesis_ledger(ctx11, 5)["tamagawa_prime_to_p"]
        assert status == "Failed"
        assert "11" in reason

    def test_anomalous_prime_left_open(self, ctx11):
        status, reason = hypothesis_ledger(ctx11, 5)["local_torsion_trivial"]
        assert status == "Indeterminate"
        assert reason == "good-anomalous"


class TestSemilocalReport:
    def test_isomorphism_from_real_scan(self, ctx389):
        sym = eigensymbol_for(ctx389)
        coll = scan(sym, ctx389, 5, 2, 200, 2, {0: 1, 1: 0, 2: 3})
        report = semilocal_report(coll, ctx389)
        assert report["status"] == "Isomorphism"
        assert report["conditional_on"] == []
        assert report["witness_n"] == 2501
        assert report["witness_factors"] == [41, 61]
        assert report["mod_p_ord"] == 2
        assert report["selmer_dimension"] == 2
        assert report["rank_if_sha_trivial"] == 2
        for factor in report["factors"]:
            assert factor["dimension"] == 1
            assert factor["sylow"] == [1, 0]

    def test_failed_hypothesis_blocks_report(self, ctx11):
        coll = collection(5, 1, [(0, 0, 1, False)],
                          entries=[unit_witness([41])])
        report = semilocal_report(coll, ctx11)
        assert report["status"] == "NotApplicable"
        assert report["reasons"] == ["tamagawa_prime_to_p"]
        assert "witness_n" not in report

    def test_open_hypotheses_leave_conditional_report(self):
        # a = 1 at the good prime 5, so triviality of the local torsion
        # stays open; the description survives with the condition listed
        ctx = curve_context(E5077, 5, 1, label="5077.a1")
        coll = collection(5, 1, [(3, 0, 1, False)],
                          entries=[unit_witness([71, 401, 631])])
        report = semilocal_report(coll, ctx)
        assert report["status"] == "Isomorphism"
        assert report["conditional_on"] == ["local_torsion_trivial"]
        assert report["witness_factors"] == [71, 401, 631]
        assert report["selmer_dimension"] == 3

    def test_no_unit_entry_no_witness(self, ctx389):
        coll = collection(5, 2, [(0, 1, 1, False)])
        report = semilocal_report(coll, ctx389)
        assert report["status"] == "NoWitness"

    def test_minimal_order_witness_preferred(self, ctx389):
        # unit entries at nu = 2 and nu = 3: the description must use the
        # shallower one
        coll = collection(5, 2, [(2, 0, 1, False)],
                          entries=[unit_witness([41, 61, 131]),
                                   unit_witness([41, 61])])
        report = semilocal_report(coll, ctx389)
        assert report["witness_factors"] == [41, 61]
        assert report["mod_p_ord"] == 2

    def test_p_mismatch_rejected(self, ctx389):
        coll = collection(7, 1, [(0, 0, 1, False)])
        with pytest.raises(ValueError, match="disagree"):
            semilocal_report(coll, ctx389)


class TestPredictionJson:
    def test_schema(self):
        coll = collection(5, 3, [(0, 2, 1, False), (2, 0, 3, False)])
        pred = predict_structure(coll)
        doc = prediction_json(pred)
        assert set(doc) == {"corank", "torsion", "sha", "group", "fitting",
                            "length", "flags", "note"}
        assert doc["corank"] == 0
        assert doc["torsion"] == [[5, 1, 2]]
        assert doc["sha"] == "(Z/5)^2"
        assert doc["fitting"] == [[0, 2], [2, 0]]
        assert doc["flags"]["status"] == "ok"

    def test_hypotheses_attached_on_request(self, ctx389):
        coll = collection(5, 2, [(2, 0, 3, False)])
        pred = predict_structure(coll)
        ledger = hypothesis_ledger(ctx389, 5)
        doc = prediction_json(pred, hypotheses=ledger)
        assert doc["hypotheses"]["manin_ok"]["status"] == "Verified"
        assert prediction_json(pred).get("hypotheses") is None
