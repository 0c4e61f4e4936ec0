import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from kurihara import arith


def trial_division_is_prime(n):
    # independent oracle: unconditional trial division
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def trial_division_factorize(n):
    out = []
    d = 2
    while d * d <= n:
        e = 0
        while n % d == 0:
            n //= d
            e += 1
        if e:
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


class TestPrimality:
    def test_small_edge_cases(self):
        assert arith.is_prime(2)
        assert not arith.is_prime(1)
        assert not arith.is_prime(0)
        assert not arith.is_prime(-7)

    def test_against_trial_division_oracle(self):
        for n in range(2, 2000):
            assert arith.is_prime(n) == trial_division_is_prime(n), n

    def test_large_witness_prime(self):
        # the layer-93251 modulus used in the rank-one worked example
        assert trial_division_is_prime(93251)
        assert arith.is_prime(93251)

    def test_carmichael_numbers_rejected(self):
        for n in (561, 1105, 1729, 41041, 825265):
            assert not arith.is_prime(n)


class TestFactorize:
    def test_unit(self):
        assert arith.factorize(1) == []

    def test_known_levels(self):
        assert arith.factorize(1058) == [(2, 1), (23, 2)]
        assert arith.factorize(423801) == [(3, 2), (7, 2), (31, 2)]
        assert arith.factorize(196794) == [(2, 1), (3, 2), (13, 1), (29, 2)]

    def test_against_trial_division_oracle(self):
        for n in range(1, 500):
            assert arith.factorize(n) == trial_division_factorize(n)

    @given(st.integers(min_value=1, max_value=10**12))
    def test_roundtrip(self, n):
        fac = arith.factorize(n)
        prod = 1
        for p, e in fac:
            assert arith.is_prime(p)
            prod *= p**e
        assert prod == n

    def test_divisors(self):
        assert arith.divisors(12) == [1, 2, 3, 4, 6, 12]
        assert arith.divisors(1) == [1]


class TestPrimitiveRootAndLogs:
    def brute_force_order(self, g, ell):
        x, k = g % ell, 1
        while x != 1:
            x = x * g % ell
            k += 1
        return k

    def test_smallest_generator(self):
        assert arith.primitive_root(41) == 6
        assert arith.primitive_root(61) == 2
        # smallest means no smaller candidate has full order
        for ell in (11, 41, 61, 131, 151):
            g = arith.primitive_root(ell)
            assert self.brute_force_order(g, ell) == ell - 1
            for h in range(2, g):
                assert self.brute_force_order(h, ell) < ell - 1

    def test_log_table_values(self):
        t = arith.build_log_table(41, 6)
        assert t.log(1) == 0
        assert t.log(6) == 1
        assert t.log(36) == 2
        with pytest.raises(ValueError):
            t.log(0)

    def test_log_table_rejects_non_generator(self):
        # 10 has order 5 mod 41
        with pytest.raises(ValueError):
            arith.build_log_table(41, 10)

    @given(st.integers(min_value=1, max_value=150), st.integers(min_value=1, max_value=150))
    def test_log_is_homomorphism_mod_151(self, a, b):
        t = arith.build_log_table(151, arith.primitive_root(151))
        assert t.log(a * b) % 150 == (t.log(a) + t.log(b)) % 150

    def test_log_against_powering_oracle(self):
        ell, g = 61, 2
        t = arith.build_log_table(ell, g)
        for a in range(1, ell):
            assert pow(g, t.log(a), ell) == a


class TestValuation:
    def test_integers(self):
        assert arith.v_p(25, 5) == 2
        assert arith.v_p(10000, 5) == 4
        assert arith.v_p(7, 5) == 0
        assert arith.v_p(0, 5) == math.inf

    def test_fractions(self):
        assert arith.v_p(Fraction(1, 5), 5) == -1
        assert arith.v_p(Fraction(50, 3), 5) == 2

    @given(
        st.integers(min_value=-(10**9), max_value=10**9).filter(lambda n: n != 0),
        st.integers(min_value=-(10**9), max_value=10**9).filter(lambda n: n != 0),
    )
    def test_additive_on_products(self, a, b):
        assert arith.v_p(a * b, 5) == arith.v_p(a, 5) + arith.v_p(b, 5)


class TestRationalReconstruct:
    def test_known_fraction(self):
        m = 10**9 + 7
        val = Fraction(2, 5)
        image = val.numerator * pow(val.denominator, -1, m) % m
        assert arith.rational_reconstruct(image, m, 10**3, 10**3) == val

    def test_failure_returns_none(self):
        # exhaustive check that 37 mod 101 has no representation within bounds
        assert all(
            (n - 37 * d) % 101 != 0
            for d in range(1, 4)
            for n in range(-3, 4)
        )
        assert arith.rational_reconstruct(37, 101, 3, 3) is None

    def test_zero_and_negative(self):
        assert arith.rational_reconstruct(0, 101, 3, 3) == 0
        assert arith.rational_reconstruct(50, 101, 3, 3) == Fraction(-1, 2)

    @given(
        st.integers(min_value=-999, max_value=999),
        st.integers(min_value=1, max_value=999),
    )
    def test_roundtrip(self, n, d):
        g = math.gcd(abs(n), d)
        if g:
            n, d = n // g, d // g
        if d == 0:
            return
        m = 2 * 10**6 + 3  # prime > 2 * 999 * 999
        image = n * pow(d, -1, m) % m
        assert arith.rational_reconstruct(image, m, 999, 999) == Fraction(n, d)


class TestModularHelpers:
    def test_sqrt_mod_all_residues(self):
        for p in (3, 5, 13, 17, 41, 101):
            for a in range(p):
                r = arith.sqrt_mod(a, p)
                if r is None:
                    assert all(x * x % p != a for x in range(p))
                else:
                    assert r * r % p == a % p

    def test_is_square_matches_enumeration(self):
        for q in (3, 7, 11, 23):
            squares = {x * x % q for x in range(q)}
            for a in range(q):
                assert arith.is_square_mod(a, q) == (a in squares)

    def test_crt_pair(self):
        x = arith.crt_pair(2, 5, 3, 7)
        assert x % 5 == 2 and x % 7 == 3

    def test_kronecker_matches_legendre_at_odd_primes(self):
        for p in (3, 5, 7, 11, 13, 101):
            for a in range(-20, 21):
                legendre = pow(a, (p - 1) // 2, p)
                expect = 0 if a % p == 0 else (1 if legendre == 1 else -1)
                assert arith.kronecker_symbol(a, p) == expect, (a, p)

    def test_kronecker_at_two(self):
        # (a|2) follows the a mod 8 rule
        for a, want in ((1, 1), (3, -1), (5, -1), (7, 1), (2, 0), (9, 1), (-1, 1)):
            assert arith.kronecker_symbol(a, 2) == want, a

    @given(st.integers(-300, 300), st.integers(-50, 50), st.integers(-50, 50))
    def test_kronecker_multiplicative_in_bottom(self, a, m, n):
        lhs = arith.kronecker_symbol(a, m * n)
        rhs = arith.kronecker_symbol(a, m) * arith.kronecker_symbol(a, n)
        assert lhs == rhs

    def test_fundamental_discriminants(self):
        fundamentals = [d for d in range(-30, 31) if arith.is_fundamental_discriminant(d)]
        assert fundamentals == [
            -24, -23, -20, -19, -15, -11, -8, -7, -4, -3,
            5, 8, 12, 13, 17, 21, 24, 28, 29,
        ]

    def test_fnv1a64_stable(self):
        assert arith.fnv1a64("") == 0xCBF29CE484222325
        assert arith.fnv1a64("a") == arith.fnv1a64(b"a")
        assert arith.fnv1a64("abc") != arith.fnv1a64("acb")
