"""Monte-Carlo state evolution and its fixed point.

The scalar recursion

    c+ = noise_var + (N/L) * E |F(X + sqrt(c) V, c; prior) - X|^2

predicts the AMP effective noise level when the denoiser matches the prior.
The expectation is estimated over a frozen batch of (X, prior, V) samples;
freezing the batch makes the fixed-point map deterministic, so plain
successive substitution converges to the 1e-4 relative tolerance instead of
stalling on resampling noise.

The sequential trace replays the algorithm's own moment-matching recursion
on M independent single-user trajectories: each sample carries its own
(rho, eta), activity chain and AR-1 channel, its prior is updated from the
scalar pseudo-observation phi = x + sqrt(c_t) v after each ADT, and the
fixpoint is recomputed per ADT.  A static-prior trace over the identical
samples provides the matched-pair baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import SystemConfig
from .denoiser import BgPrior, denoise_mean
from .rng import stream
from .scenario import ar1_channels, derive_noise_var, gen_user_profiles, markov_activity
from .sequential import _propagate_arrays, moment_match

__all__ = [
    "SeSamples",
    "SeFixpoint",
    "SeTrace",
    "static_sampler",
    "se_step",
    "se_fixpoint",
    "se_sequential_trace",
]

SE_STEP_SAMPLES = 200_000    # default batch for one-shot step / fixpoint
SE_TRACE_SAMPLES = 20_000    # default trajectories for sequential traces
FIXPOINT_TOL = 1e-4
FIXPOINT_MAX_ITERS = 200


@dataclass(frozen=True)
class SeSamples:
    """Frozen Monte-Carlo batch: signals X, per-sample priors, CN(0,1) noise."""

    x: np.ndarray        # (M,) complex
    prior: BgPrior       # per-sample parameter triples
    v: np.ndarray        # (M,) complex, standard circular Gaussian


@dataclass(frozen=True)
class SeFixpoint:
    c: float
    iters: int
    converged: bool


@dataclass(frozen=True)
class SeTrace:
    """Per-ADT fixpoints of the sequential and static recursions."""

    adt: np.ndarray          # 1-based ADT indices
    c_seq: np.ndarray
    c_static: np.ndarray
    nor_seq: np.ndarray      # (P/P0) * c_t
    nor_static: np.ndarray
    n_samples: int
    iters_seq: np.ndarray
    iters_static: np.ndarray
    converged: bool


def _draw_link_stats(cfg: SystemConfig, rng: np.random.Generator, m: int):
    profiles = gen_user_profiles(cfg, rng, n=m)
    rho = np.array([p.channel_var for p in profiles])
    eta = np.array([p.ar_coeff for p in profiles])
    return rho, eta


def _cn_unit(rng: np.random.Generator, shape) -> np.ndarray:
    return np.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def static_sampler(cfg: SystemConfig) -> Callable[[int, np.random.Generator], SeSamples]:
    """Sampler of i.i.d. (X, prior, V) triples under the static signal law.

    rho follows the configured geometry, X = Bernoulli(lam) * CN(0, rho),
    and the per-sample prior is the matched static triple (lam, 0, rho).
    """

    def draw(m: int, rng: np.random.Generator) -> SeSamples:
        rho, _ = _draw_link_stats(cfg, rng, m)
        active = rng.random(m) < cfg.lam
        x = active * np.sqrt(rho) * _cn_unit(rng, m)
        prior = BgPrior(np.full(m, cfg.lam), np.zeros(m, dtype=complex), rho)
        return SeSamples(x, prior, _cn_unit(rng, m))

    return draw


def se_step(c: float, samples: SeSamples, cfg: SystemConfig,
            denoiser: Callable | None = None,
            noise_var: float | None = None) -> float:
    """One state-evolution step: noise_var + (N/L) * mean |f(X+sqrt(c)V) - X|^2."""
    if noise_var is None:
        noise_var = derive_noise_var(cfg)
    f = denoise_mean if denoiser is None else denoiser
    phi = samples.x + np.sqrt(c) * samples.v
    mse = float(np.mean(np.abs(f(phi, c, samples.prior) - samples.x) ** 2))
    return noise_var + (cfg.n_users / cfg.pilot_len) * mse


def se_fixpoint(samples: SeSamples, cfg: SystemConfig,
                denoiser: Callable | None = None,
                noise_var: float | None = None) -> SeFixpoint:
    """Successive substitution from c0 = c0_factor * noise_var.

    Stops at |dc|/c < 1e-4; past 200 iterations the last iterate is
    returned flagged non-converged rather than hidden.
    """
    if noise_var is None:
        noise_var = derive_noise_var(cfg)
    c = cfg.c0_factor * noise_var
    for it in range(1, FIXPOINT_MAX_ITERS + 1):
        c_next = se_step(c, samples, cfg, denoiser=denoiser, noise_var=noise_var)
        done = abs(c_next - c) / c_next < FIXPOINT_TOL
        c = c_next
        if done:
            return SeFixpoint(c, it, True)
    return SeFixpoint(c, FIXPOINT_MAX_ITERS, False)


def se_sequential_trace(cfg: SystemConfig, n_samples: int = SE_TRACE_SAMPLES,
                        trial: int = 0,
                        noise_var: float | None = None) -> SeTrace:
    """Paired sequential / static fixpoint traces over cfg.n_adts ADTs."""
    if noise_var is None:
        noise_var = derive_noise_var(cfg)
    t_total = cfg.n_adts
    rho, eta = _draw_link_stats(cfg, stream(cfg.seed, trial, "se-profiles"), n_samples)
    act = markov_activity(cfg.lam, cfg.p01, cfg.p10, n_samples, t_total,
                          stream(cfg.seed, trial, "se-activity"))
    h = ar1_channels(rho, eta, t_total, stream(cfg.seed, trial, "se-channels"))
    v = _cn_unit(stream(cfg.seed, trial, "se-noise"), (n_samples, t_total))
    x = act * h

    static_prior = BgPrior(np.full(n_samples, cfg.lam),
                           np.zeros(n_samples, dtype=complex), rho)
    prior = static_prior
    c_seq = np.empty(t_total)
    c_static = np.empty(t_total)
    iters_seq = np.empty(t_total, dtype=int)
    iters_static = np.empty(t_total, dtype=int)
    all_converged = True
    for t in range(t_total):
        seq_batch = SeSamples(x[:, t], prior, v[:, t])
        fp = se_fixpoint(seq_batch, cfg, noise_var=noise_var)
        c_seq[t], iters_seq[t] = fp.c, fp.iters
        all_converged &= fp.converged

        static_batch = SeSamples(x[:, t], static_prior, v[:, t])
        fp_s = se_fixpoint(static_batch, cfg, noise_var=noise_var)
        c_static[t], iters_static[t] = fp_s.c, fp_s.iters
        all_converged &= fp_s.converged

        phi = x[:, t] + np.sqrt(c_seq[t]) * v[:, t]
        post = moment_match(phi, c_seq[t], prior, rho=rho)
        prior = _propagate_arrays(post, eta, rho, cfg)

    nor = 10.0 ** ((cfg.tx_power_dbm - cfg.nor_ref_dbm) / 10.0)
    return SeTrace(np.arange(1, t_total + 1), c_seq, c_static,
                   nor * c_seq, nor * c_static, n_samples,
                   iters_seq, iters_static, all_converged)
