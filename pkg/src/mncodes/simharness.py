"""Monte Carlo frame-error-rate simulation.

Three modes are supported.  ``epc_allzero`` sends the all-zero codeword and
draws the a-priori observation ``z`` uniformly among weight-``w`` patterns;
``full_chain`` runs message -> matcher -> encoder -> channel -> decoder ->
dematcher; ``full_chain_scrambled`` additionally adds a uniform scrambling
vector to the matcher output and undoes it at the receiver by flipping the
signs of the affected channel observations.

Every frame draws from its own generator keyed by ``(seed, snr index, frame
index)``, so results do not depend on batch size or thread count.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .codec import DEFAULT_MAX_ITER, LlrFrame, decode_bp, encode, encode_inner
from .matcher import CompositionError, MatcherSpec, dematch
from .protograph import LiftedCode

MODES = ("epc_allzero", "full_chain", "full_chain_scrambled")
BATCH = 64


def default_threads() -> int:
    return max(1, int(os.environ.get("MNCODES_THREADS", "1")))


@dataclass
class SimConfig:
    code: LiftedCode
    spec: MatcherSpec
    snr_db: list = field(default_factory=list)
    mode: str = "epc_allzero"
    max_iter: int = DEFAULT_MAX_ITER
    min_errors: int = 100
    max_frames: int = 10_000_000
    seed: int = 0
    threads: int = 1
    fer_floor: float | None = None  # stop the sweep once a point falls below this

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.spec.h != self.code.h:
            raise ValueError(f"matcher length {self.spec.h} does not match code h={self.code.h}")
        if self.min_errors < 1 or self.max_frames < 1:
            raise ValueError("min_errors and max_frames must be positive")

    def as_dict(self) -> dict:
        return {
            "h": self.spec.h, "w": self.spec.w, "snr_db": list(self.snr_db), "mode": self.mode,
            "max_iter": self.max_iter, "min_errors": self.min_errors, "max_frames": self.max_frames,
            "seed": self.seed, "fer_floor": self.fer_floor, "code_hash": self.code.content_hash(),
            "ell": self.code.ell, "lift_seed": self.code.seed,
        }


@dataclass
class FerPoint:
    snr_db: float
    frames: int
    frame_errors: int
    iterations: int

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def avg_iters(self) -> float:
        return self.iterations / self.frames if self.frames else float("nan")

    def wilson(self, confidence: float = 0.95) -> tuple[float, float]:
        if not self.frames:
            return 0.0, 1.0
        ci = binomtest(self.frame_errors, self.frames).proportion_ci(confidence, method="wilson")
        return float(ci.low), float(ci.high)


def sigma2_for(snr_db: float) -> float:
    return 1.0 / (2.0 * 10.0 ** (snr_db / 10.0))


def frame_rng(seed: int, snr_index: int, frame: int) -> np.random.Generator:
    return np.random.default_rng([seed, snr_index, frame])


def awgn(x: np.ndarray, sigma2: float, rng) -> np.ndarray:
    return x + math.sqrt(sigma2) * rng.standard_normal(x.shape)


def constant_weight_pattern(h: int, w: int, rng) -> np.ndarray:
    """Uniformly drawn length-``h`` binary vector of weight exactly ``w``."""
    z = np.zeros(h, dtype=np.uint8)
    z[rng.choice(h, size=w, replace=False)] = 1
    return z


def _epc_frame(cfg: SimConfig, rng, sigma2):
    code, spec = cfg.code, cfg.spec
    z = constant_weight_pattern(spec.h, spec.w, rng)
    y = awgn(np.ones(code.n), sigma2, rng)
    res = decode_bp(code, LlrFrame.epc(spec, z, y, sigma2), cfg.max_iter)
    # reference input is w = 0; any non-zero estimate is a wrong decision on w
    return bool(res.v_hat.any()), res.iterations_used


def _full_frame(cfg: SimConfig, rng, sigma2):
    code, spec = cfg.code, cfg.spec
    k = spec.payload_bits
    index = int.from_bytes(rng.bytes((k + 7) // 8 or 1), "big") >> ((-k) % 8) if k else 0
    v, c, x = encode(code, spec, index)
    flip = None
    if cfg.mode == "full_chain_scrambled":
        s = rng.integers(0, 2, size=spec.h, dtype=np.uint8)
        flip = encode_inner(code, s)
        x = 1.0 - 2.0 * (c ^ flip)
    y = awgn(x, sigma2, rng)
    if flip is not None:
        y = np.where(flip == 1, -y, y)
    res = decode_bp(code, LlrFrame.direct(spec, y, sigma2), cfg.max_iter)
    try:
        got = dematch(spec, res.v_hat)
    except CompositionError:
        return True, res.iterations_used
    # indices beyond the payload range are decoding errors, as in decode_full
    return got != index, res.iterations_used


def _frame(cfg: SimConfig, snr_index: int, sigma2: float, f: int):
    rng = frame_rng(cfg.seed, snr_index, f)
    if cfg.mode == "epc_allzero":
        return _epc_frame(cfg, rng, sigma2)
    return _full_frame(cfg, rng, sigma2)


def run_point(cfg: SimConfig, snr_db: float, snr_index: int = 0, pool=None) -> FerPoint:
    """Simulate one SNR until ``min_errors`` frame errors or ``max_frames`` frames."""
    sigma2 = sigma2_for(snr_db)
    frames = errors = iters = 0
    while frames < cfg.max_frames and errors < cfg.min_errors:
        n = min(BATCH, cfg.max_frames - frames)
        ids = range(frames, frames + n)
        if pool is None:
            out = [_frame(cfg, snr_index, sigma2, f) for f in ids]
        else:
            out = list(pool.map(lambda f: _frame(cfg, snr_index, sigma2, f), ids))
        # tally frame by frame so the stopping frame is independent of batching
        for err, it in out:
            frames += 1
            errors += err
            iters += it
            if errors >= cfg.min_errors:
                break
    return FerPoint(float(snr_db), frames, errors, iters)


def run_epc_point(cfg: SimConfig, snr_db: float, snr_index: int = 0) -> FerPoint:
    if cfg.mode != "epc_allzero":
        raise ValueError("config is not in epc_allzero mode")
    return _with_pool(cfg, lambda pool: run_point(cfg, snr_db, snr_index, pool))


def run_full_chain_point(cfg: SimConfig, snr_db: float, snr_index: int = 0) -> FerPoint:
    if cfg.mode == "epc_allzero":
        raise ValueError("config is in epc_allzero mode")
    return _with_pool(cfg, lambda pool: run_point(cfg, snr_db, snr_index, pool))


def _with_pool(cfg: SimConfig, fn):
    if cfg.threads <= 1:
        return fn(None)
    with ThreadPoolExecutor(cfg.threads) as pool:
        return fn(pool)


def sweep(cfg: SimConfig) -> list[FerPoint]:
    def go(pool):
        points = []
        for k, snr in enumerate(cfg.snr_db):
            p = run_point(cfg, snr, k, pool)
            points.append(p)
            if cfg.fer_floor is not None and p.fer < cfg.fer_floor:
                break
        return points

    return _with_pool(cfg, go)


CSV_HEADER = ("snr_db", "frames", "errors", "fer", "ci_lo", "ci_hi", "avg_iters")


def write_csv(points, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for p in points:
            lo, hi = p.wilson()
            w.writerow([p.snr_db, p.frames, p.frame_errors, repr(p.fer), repr(lo), repr(hi), repr(p.avg_iters)])
