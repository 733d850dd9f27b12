import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geomphase.errors import IndexOutOfRange, SingularNonlinearity
from geomphase.laguerre import (
    LogProduct,
    NonlinearModel,
    eval_f,
    eval_laguerre,
    f_table,
    laguerre_sequence,
    log_f_factorial,
    log_f_factorial_table,
)


def laguerre_exact(n, k, x):
    """Explicit sum in exact rationals: sum_i (-1)^i C(n+k, n-i) x^i / i!."""
    x = Fraction(x)
    return sum(
        Fraction((-1) ** i * math.comb(n + k, n - i), math.factorial(i)) * x**i for i in range(n + 1)
    )


@pytest.mark.parametrize(
    "n, k, x, expected",
    [(0, 7, 3.2, 1.0), (1, 0, 0.36, 0.64), (2, 0, 1.0, -0.5)],
)
def test_eval_laguerre_examples(n, k, x, expected):
    assert eval_laguerre(n, k, x) == pytest.approx(expected, abs=1e-15)


def test_exact_oracle_small_cases():
    assert laguerre_exact(2, 0, 1) == Fraction(-1, 2)
    assert laguerre_exact(1, 1, Fraction(36, 100)) == Fraction(164, 100)


@given(
    n=st.integers(0, 30),
    k=st.integers(0, 5),
    x=st.floats(-10, 10, allow_nan=False),
)
def test_recurrence_matches_explicit_sum(n, k, x):
    ref = float(laguerre_exact(n, k, x))
    # relative where |L| >= 1; absolute near the roots, where relative error is undefined
    assert abs(eval_laguerre(n, k, x) - ref) <= 1e-10 * max(abs(ref), 1.0)


def test_sequence_matches_scalar():
    seq = laguerre_sequence(40, 1, 0.64)
    for n in (0, 1, 7, 40):
        assert seq[n] == eval_laguerre(n, 1, 0.64)


def test_f_examples():
    assert eval_f(NonlinearModel.lamb_dicke(0.0), 5) == 1.0
    assert eval_f(NonlinearModel.lamb_dicke(0.9), 0) == 1.0
    # L_1^1(0.36) / (2 L_1^0(0.36)) = 1.64 / 1.28
    assert eval_f(NonlinearModel.lamb_dicke(0.6), 1) == pytest.approx(1.28125, rel=1e-14)


def test_identity_and_eta_zero_agree():
    n = np.arange(60)
    np.testing.assert_array_equal(f_table(NonlinearModel.identity(), 59), np.ones(60))
    np.testing.assert_allclose(f_table(NonlinearModel.lamb_dicke(0.0), 59), np.ones(60), rtol=0, atol=1e-15)
    assert all(eval_f(NonlinearModel.identity(), int(k)) == 1.0 for k in n)


def test_f_continuous_at_eta_zero():
    f = f_table(NonlinearModel.lamb_dicke(1e-8), 50)
    assert np.abs(f - 1).max() < 1e-12


def test_f_table_read_only_and_consistent():
    model = NonlinearModel.lamb_dicke(0.33)
    tab = f_table(model, 30)
    with pytest.raises(ValueError):
        tab[0] = 2.0
    assert [eval_f(model, n) for n in range(31)] == pytest.approx(list(tab), rel=1e-13)


def test_pole_is_an_error():
    # L_1^0(x) = 1 - x vanishes at x = eta^2 = 1
    model = NonlinearModel.lamb_dicke(1.0)
    with pytest.raises(SingularNonlinearity) as info:
        eval_f(model, 1)
    assert info.value.n == 1
    with pytest.raises(SingularNonlinearity):
        f_table(model, 5)
    assert eval_f(model, 0) == 1.0


def test_pole_at_higher_level():
    # smallest root of L_2^0(x) = 1 - 2x + x^2/2 is 2 - sqrt(2)
    model = NonlinearModel.lamb_dicke(math.sqrt(2 - math.sqrt(2)))
    eval_f(model, 1)
    with pytest.raises(SingularNonlinearity) as info:
        eval_f(model, 2)
    assert info.value.n == 2


def test_tabulated_model():
    model = NonlinearModel.tabulated([1.0, 2.0, 0.5])
    assert eval_f(model, 1) == 2.0
    with pytest.raises(IndexOutOfRange):
        eval_f(model, 3)
    with pytest.raises(IndexError):
        f_table(model, 3)
    assert log_f_factorial(model, 2).value == pytest.approx(1.0)


def test_invalid_eta():
    with pytest.raises(ValueError):
        NonlinearModel.lamb_dicke(-0.1)
    with pytest.raises(ValueError):
        NonlinearModel.lamb_dicke(float("nan"))


def test_log_f_factorial_examples():
    assert log_f_factorial(NonlinearModel.identity(), 10) == LogProduct(1, 0.0)
    assert log_f_factorial(NonlinearModel.lamb_dicke(0.7), 0) == LogProduct(1, 0.0)
    # exact f(1) f(2) at x = 0.36 from the rational oracle
    x = Fraction(36, 100)
    f1 = laguerre_exact(1, 1, x) / (2 * laguerre_exact(1, 0, x))
    f2 = laguerre_exact(2, 1, x) / (3 * laguerre_exact(2, 0, x))
    assert f1 * f2 == Fraction(33907, 13792)
    lp = log_f_factorial(NonlinearModel.lamb_dicke(0.6), 2)
    assert lp.sign == 1
    assert lp.log_magnitude == pytest.approx(math.log(33907 / 13792), abs=1e-14)
    assert lp.value == pytest.approx(2.4584541763341066, rel=1e-14)


@given(eta=st.floats(0.0, 0.95), n=st.integers(0, 40))
def test_log_product_accumulates(eta, n):
    model = NonlinearModel.lamb_dicke(eta)
    try:
        nxt = log_f_factorial(model, n).times(eval_f(model, n + 1))
        ref = log_f_factorial(model, n + 1)
    except SingularNonlinearity:
        return
    assert nxt.sign == ref.sign
    assert abs(nxt.log_magnitude - ref.log_magnitude) <= 1e-15 * max(1.0, abs(ref.log_magnitude))


def test_log_table_matches_scalar():
    model = NonlinearModel.lamb_dicke(0.8)
    signs, logs = log_f_factorial_table(model, 25)
    for n in (0, 1, 5, 25):
        lp = log_f_factorial(model, n)
        assert signs[n] == lp.sign
        assert logs[n] == pytest.approx(lp.log_magnitude, abs=1e-12)


def test_zero_factor_gives_sign_zero():
    model = NonlinearModel.tabulated([1.0, 0.5, 0.0, 3.0])
    signs, logs = log_f_factorial_table(model, 3)
    assert list(signs) == [1, 1, 0, 0]
    assert logs[2] == -math.inf and logs[3] == -math.inf
    assert log_f_factorial(model, 3) == LogProduct(0, -math.inf)
    assert log_f_factorial(model, 3).value == 0.0


def test_negative_factor_sign():
    model = NonlinearModel.tabulated([1.0, -2.0, 3.0])
    lp = log_f_factorial(model, 2)
    assert lp.sign == -1
    assert lp.value == pytest.approx(-6.0)
