import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mncodes.analysis import jfunc
from mncodes.analysis.density import (
    de_threshold_for_rate,
    QuantizedDensity,
    _cn_pair,
    _tanh_table,
    cn_combine,
    de_run,
    quantize_gaussian,
    quantize_two_point,
    vn_combine,
)
from mncodes.analysis.pexit import NoConvergenceError, bisect_threshold, pexit_run, pexit_threshold
from mncodes.protograph import preset
from mncodes.ratemath import omega_for_rate

# 30-digit mpmath quadratures of the J function and of biAWGN capacity
J_REF = {0.5: 0.04372996294430945, 1.0: 0.16074721979641687, 2.0: 0.48594415413293532,
         4.0: 0.91282228577448216, 8.0: 0.99986505740822632}
CAP_REF = {-10.0: 0.13141608235284720, 0.0: 0.72145159079038813, 3.0: 0.91235211690594076}


@pytest.mark.parametrize("s", sorted(J_REF))
def test_j_reference(s):
    assert float(jfunc.J(s)) == pytest.approx(J_REF[s], abs=2e-7)


@settings(deadline=None)
@given(st.floats(0.01, 10.0))
def test_j_inverse(s):
    assert abs(float(jfunc.J_inv(jfunc.J(s))) - s) <= 1e-6


# beyond s ~ 17, 1 - J(s) is below double-precision resolution of J itself
@settings(deadline=None)
@given(st.floats(10.0, 12.0))
def test_j_inverse_tail(s):
    assert float(jfunc.J_inv(jfunc.J(s))) == pytest.approx(s, abs=1e-3)


def test_j_monotone():
    s = np.linspace(0, 12, 500)
    assert np.all(np.diff(jfunc.J(s)) > 0)
    assert np.all(np.diff(jfunc.J(np.linspace(12, 60, 500))) >= 0)


@pytest.mark.parametrize("db", sorted(CAP_REF))
def test_capacity_reference(db):
    assert jfunc.biawgn_capacity(db) == pytest.approx(CAP_REF[db], abs=1e-9)


def test_capacity_limits():
    assert jfunc.biawgn_capacity(30.0) == pytest.approx(1.0, abs=1e-9)
    # low-SNR expansion: C ~ Es/N0 / ln 2 bits
    snr = 10 ** (-4.0)
    assert jfunc.biawgn_capacity(-40.0) == pytest.approx(snr / math.log(2), rel=1e-3)


def test_shannon_limits():
    # rate-1/2 BPSK limit: Eb/N0 = 0.187 dB, i.e. Es/N0 = 0.187 - 3.0103 dB
    assert jfunc.shannon_limit(0.5) == pytest.approx(0.187 - 3.0103, abs=2e-3)
    for r in (0.1, 0.3, 0.666):
        assert jfunc.biawgn_capacity(jfunc.shannon_limit(r)) == pytest.approx(r, abs=1e-4)


def test_pexit_monotone_in_snr():
    b = preset("b12")
    assert not pexit_run(b, 0.5, -2.3).converged
    assert pexit_run(b, 0.5, -1.8).converged
    run = pexit_run(b, 0.5, -1.0, record=True)
    assert run.app_mi.shape[1] == 6
    assert np.all(np.diff(run.app_mi[:, :2], axis=0) >= -1e-12)


def test_pexit_omega_domain():
    with pytest.raises(ValueError):
        pexit_run(preset("b12"), 0.6, 0.0)


def test_bisection_on_step():
    res = bisect_threshold(lambda g: g >= 1.234, 0.5, tol_db=1e-3)
    assert 1.234 <= res.gamma_star <= 1.234 + 1e-3
    with pytest.raises(NoConvergenceError):
        bisect_threshold(lambda g: False, 0.5)


def test_pexit_threshold_rate_half():
    assert pexit_threshold(preset("b12"), 0.5).gamma_star == pytest.approx(-2.06, abs=0.1)


@pytest.mark.slow
@pytest.mark.parametrize("rate", [0.3, 0.4, 0.5])
def test_pexit_tracks_de(rate):
    base = preset("b12")
    omega = omega_for_rate(rate, float(base.inner_rate))
    gap = pexit_threshold(base, omega, rate).gamma_star - de_threshold_for_rate(base, rate).gamma_star
    assert abs(gap) <= 0.05


# ---- quantized densities ------------------------------------------------------

BW = 0.05
K = 400


def _boxplus(a, b):
    return 2.0 * math.atanh(math.tanh(a / 2) * math.tanh(b / 2))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, K), st.integers(1, K), st.floats(0, 1), st.floats(0, 1))
def test_cn_pair_two_point_oracle(ka, kb, pa, pb):
    p = quantize_two_point(ka * BW, pa, K, BW)
    q = quantize_two_point(kb * BW, pb, K, BW)
    out = _cn_pair(p, q, _tanh_table(K, BW))
    mag = min(round(_boxplus(ka * BW, kb * BW) / BW), min(ka, kb))
    plus = pa * pb + (1 - pa) * (1 - pb)
    expect = np.zeros(2 * K + 1)
    expect[K + mag] += plus
    expect[K - mag] += 1 - plus
    assert np.allclose(out, expect, atol=1e-15)


def test_cn_with_erasure_is_erasure():
    g = quantize_gaussian(2.0, 4.0, K, BW)
    e = np.zeros(2 * K + 1)
    e[K] = 1.0
    out = cn_combine([g, e], BW)
    assert out[K] == pytest.approx(1.0)


def test_vn_two_point_sum():
    p = quantize_two_point(1.0, 0.7, K, BW)
    q = quantize_two_point(2.5, 0.9, K, BW)
    out = vn_combine([p, q])
    expect = {
        K + 70: 0.7 * 0.9, K + 30: 0.3 * 0.9, K - 30: 0.7 * 0.1, K - 70: 0.3 * 0.1,
    }
    for k, v in expect.items():
        assert out[k] == pytest.approx(v, abs=1e-12)
    assert out.sum() == pytest.approx(1.0, abs=1e-12)


def test_vn_saturates_into_end_bins():
    p = quantize_two_point(15.0, 1.0, K, BW)
    out = vn_combine([p, p, p])
    assert out[-1] == pytest.approx(1.0)


def test_gaussian_moments():
    g = QuantizedDensity(quantize_gaussian(3.0, 6.0, K, BW), BW)
    assert g.mass() == pytest.approx(1.0, abs=1e-12)
    assert float(g.pmf @ g.values) == pytest.approx(3.0, abs=1e-3)
    # error mass of a consistent Gaussian N(m, 2m) is Q(sqrt(m/2))
    from scipy.stats import norm
    assert g.error_probability() == pytest.approx(norm.sf(math.sqrt(1.5)), abs=2e-3)


def test_de_sides_of_threshold():
    b = preset("b12")
    assert de_run(b, 0.5, -1.5, bin_width=0.1).converged
    assert not de_run(b, 0.5, -2.5, bin_width=0.1).converged
