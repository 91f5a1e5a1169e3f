import numpy as np
import pytest

from mncodes.codec import (
    LlrFrame,
    PayloadOverflowError,
    decode_bp,
    decode_full,
    decode_llr,
    encode,
    syndrome_ok,
)
from mncodes.matcher import CompositionError, MatcherSpec, dematch


@pytest.fixture(scope="module")
def spec(code1200):
    return MatcherSpec(code1200.h, 88)


def test_encode_is_codeword(code1200, spec):
    rng = np.random.default_rng(0)
    for _ in range(5):
        idx = int(rng.integers(0, 2**62))
        v, c, x = encode(code1200, spec, idx)
        assert syndrome_ok(code1200, v, c)
        assert int(v.sum()) == spec.w
        assert np.array_equal(x, 1.0 - 2.0 * c)


def test_noiseless_round_trip(code1200, spec):
    idx = 123456789
    v, c, x = encode(code1200, spec, idx)
    frame = LlrFrame.direct(spec, x, sigma2=0.01)
    assert decode_full(code1200, spec, frame) == idx
    res = decode_bp(code1200, frame)
    assert res.converged and res.iterations_used <= 3


def test_epc_frame_prior_signs(spec):
    z = np.zeros(spec.h)
    z[:3] = 1
    f = LlrFrame.epc(spec, z, np.ones(10), 0.5)
    assert np.allclose(f.prior[:3], -spec.delta) and np.allclose(f.prior[3:], spec.delta)
    assert np.allclose(f.channel, 4.0)


def test_small_noise_corrected(code1200, spec):
    rng = np.random.default_rng(7)
    v, c, x = encode(code1200, spec, 42)
    sigma2 = 0.3
    y = x + np.sqrt(sigma2) * rng.standard_normal(x.size)
    assert decode_full(code1200, spec, LlrFrame.direct(spec, y, sigma2)) == 42


def test_bp_single_parity_check_oracle():
    # one check on three bits: extrinsic LLR is 2 atanh(tanh(a/2) tanh(b/2))
    from mncodes.protograph import BaseMatrix
    from mncodes.protograph.lifting import LiftedCode

    base = BaseMatrix(np.array([[1, 1]]), 1)
    code = LiftedCode(base, 1, {(0, 0): (0,), (0, 1): (0,)}, 0)
    res = decode_llr(code, np.array([2.0, -0.5]), max_iter=1)
    # APP of bit 0 is 2 + (-0.5) and of bit 1 is -0.5 + 2; both positive
    assert res.v_hat.tolist() == [0] and res.c_hat.tolist() == [0]


def test_dematch_failures(code1200, spec):
    v, c, x = encode(code1200, spec, 5)
    # a hopeless frame decodes to something of the wrong weight
    junk = LlrFrame(np.full(spec.h, -5.0), np.zeros(code1200.n))
    with pytest.raises((CompositionError, PayloadOverflowError)):
        decode_full(code1200, spec, junk, max_iter=1)


def test_payload_overflow(code1200):
    spec = MatcherSpec(code1200.h, 88)
    top = spec.M - 1
    assert top >= 1 << spec.payload_bits
    v, c, x = encode(code1200, spec, top)
    with pytest.raises(PayloadOverflowError):
        decode_full(code1200, spec, LlrFrame.direct(spec, x, 0.01))
    assert dematch(spec, v) == top


def test_round_trip_many_indices(code1200, spec):
    rng = np.random.default_rng(1)
    k = spec.payload_bits
    for _ in range(1000):
        idx = int.from_bytes(rng.bytes((k + 7) // 8), "big") >> ((-k) % 8)
        _, _, x = encode(code1200, spec, idx)
        assert decode_full(code1200, spec, LlrFrame.direct(spec, x, 0.01)) == idx


def test_uninformative_frame_does_not_converge(code1200):
    half = MatcherSpec(code1200.h, code1200.h // 2)
    assert half.delta == 0.0
    rng = np.random.default_rng(2)
    y = 1.0 + 1e3 * rng.standard_normal(code1200.n)
    assert not decode_bp(code1200, LlrFrame.direct(half, y, 1e6), max_iter=20).converged


def test_scrambled_frame_matches_plain_decode(code1200, spec):
    from mncodes.codec import encode_inner

    rng = np.random.default_rng(3)
    sigma2 = 0.8
    v, c, x = encode(code1200, spec, 777)
    flip = encode_inner(code1200, rng.integers(0, 2, spec.h))
    noise = np.sqrt(sigma2) * rng.standard_normal(code1200.n)
    y_scr = (1.0 - 2.0 * (c ^ flip)) + noise
    corrected = np.where(flip == 1, -y_scr, y_scr)
    # the matched plain frame sees the same noise with the same sign changes
    plain = x + np.where(flip == 1, -noise, noise)
    a = decode_bp(code1200, LlrFrame.direct(spec, corrected, sigma2))
    b = decode_bp(code1200, LlrFrame.direct(spec, plain, sigma2))
    assert np.array_equal(a.v_hat, b.v_hat) and a.iterations_used == b.iterations_used


def test_converged_implies_zero_syndrome(small_code):
    spec = MatcherSpec.from_omega(small_code.h, 0.2)
    rng = np.random.default_rng(4)
    for sigma2 in (0.3, 0.6, 1.0, 1.5):
        for _ in range(30):
            v, c, x = encode(small_code, spec, int(rng.integers(0, spec.M)))
            y = x + np.sqrt(sigma2) * rng.standard_normal(x.size)
            res = decode_bp(small_code, LlrFrame.direct(spec, y, sigma2), max_iter=30)
            word = np.concatenate([res.v_hat, res.c_hat]).astype(np.int64)
            assert res.converged == (not (small_code.H @ word % 2).any())


def test_scaling_reliable_frames_keeps_them_decodable(code1200, spec):
    rng = np.random.default_rng(5)
    kept = 0
    for _ in range(20):
        idx = int(rng.integers(0, 1 << 40))
        _, _, x = encode(code1200, spec, idx)
        y = x + 0.5 * rng.standard_normal(x.size)
        frame = LlrFrame.direct(spec, y, 0.25)
        if decode_full(code1200, spec, frame) != idx:
            continue
        kept += 1
        for t in (1.5, 3.0, 10.0):
            assert decode_full(code1200, spec, LlrFrame(frame.prior, t * frame.channel)) == idx
    assert kept >= 15


@pytest.mark.slow
def test_fer_right_of_threshold(code1200):
    from mncodes.ratemath import omega_for_rate
    from mncodes.simharness import SimConfig, run_point

    half = MatcherSpec.from_omega(code1200.h, omega_for_rate(0.5, float(code1200.base.inner_rate)))
    p = run_point(SimConfig(code1200, half, mode="full_chain", min_errors=100, max_frames=100_000, seed=1), -1.0)
    assert p.fer < 1e-2


def test_codeword_marginals_near_uniform(code1200, spec):
    rng = np.random.default_rng(6)
    k = spec.payload_bits
    cs = []
    for _ in range(400):
        idx = int.from_bytes(rng.bytes((k + 7) // 8), "big") >> ((-k) % 8)
        cs.append(encode(code1200, spec, idx)[1])
    mean = np.mean(cs, axis=0)
    assert 0.4 <= mean.mean() <= 0.6
    # 400 draws put a per-position standard error near 0.025
    assert ((mean >= 0.4) & (mean <= 0.6)).mean() > 0.99
