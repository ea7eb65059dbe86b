"""Per-ADT AMP loop: iterate pseudo-observations to convergence.

Given the received vector y, the pilot matrix S and one Bernoulli-Gaussian
prior triple per user, the sweep is

    phi = S^H z + mu
    mu+ = F(phi, c),  v+ = G(phi, c)
    z+  = y - S mu+ + (z/L) * sum_n F'(phi_n, c)      (Onsager correction)
    c+  = ||z+||^2 / L                                (empirical mode)

The empirical c update is the default: once the prior is an approximation
rather than the true signal law, the theoretical update
c+ = noise_var + (1/L) sum_n v_n no longer tracks the true effective
noise, while the residual energy still does.  The theoretical form stays
available behind ``mode="theoretical"`` for state-evolution comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import SystemConfig
from .denoiser import BgPrior, denoise_deriv, denoise_mean, denoise_var
from .scenario import derive_noise_var

__all__ = ["AmpState", "AmpDivergenceError", "amp_init", "amp_iterate", "amp_run"]

REL_TOL = 1e-6      # early-exit tolerance on relative change of mu
_REL_FLOOR = 1e-30  # denominator floor for all-zero signals


class AmpDivergenceError(RuntimeError):
    """Raised when an AMP sweep produces non-finite values."""


@dataclass(frozen=True)
class AmpState:
    """One AMP iterate.

    ``phi`` holds the pseudo-observations that produced ``mu``; after
    :func:`amp_run` returns, ``phi = S^H z + mu`` holds exactly for the
    final (z, mu), making (phi, c) the Gaussian pseudo-likelihood
    CN(x; phi, c) consumed by the posterior summarisation.
    """

    mu: np.ndarray    # (N,) complex posterior means
    v: np.ndarray     # (N,) posterior variances
    z: np.ndarray     # (L,) corrected residual
    c: float          # effective noise level
    phi: np.ndarray   # (N,) pseudo-observations
    iter: int


def amp_init(y: np.ndarray, cfg: SystemConfig, n: int | None = None,
             noise_var: float | None = None) -> AmpState:
    """Initial state: mu = 0, z = y, c = c0_factor * noise_var, phi = 0."""
    n = cfg.n_users if n is None else n
    if noise_var is None:
        noise_var = derive_noise_var(cfg)
    return AmpState(
        mu=np.zeros(n, dtype=complex),
        v=np.zeros(n, dtype=float),
        z=np.asarray(y, dtype=complex).copy(),
        c=float(cfg.c0_factor * noise_var),
        phi=np.zeros(n, dtype=complex),
        iter=0,
    )


def amp_iterate(state: AmpState, s_mat: np.ndarray, y: np.ndarray,
                priors: BgPrior, mode: str = "empirical",
                noise_var: float | None = None) -> AmpState:
    """One full AMP sweep; raises AmpDivergenceError on non-finite output."""
    l_dim = s_mat.shape[0]
    phi = s_mat.conj().T @ state.z + state.mu
    mu_new = denoise_mean(phi, state.c, priors)
    v_new = denoise_var(phi, state.c, priors)
    onsager = (state.z / l_dim) * np.sum(denoise_deriv(phi, state.c, priors))
    z_new = y - s_mat @ mu_new + onsager
    if mode == "empirical":
        # ||z||^2/L: the residual-energy estimate of the effective noise
        # VARIANCE (c pairs with psi and noise_var everywhere, so it must
        # carry variance units).  The tiny floor only engages when z is
        # exactly zero (all-zero observations) and keeps c > 0.
        c_new = float(max(np.linalg.norm(z_new) ** 2 / l_dim,
                          np.finfo(float).tiny))
    elif mode == "theoretical":
        if noise_var is None:
            raise ValueError("theoretical mode needs noise_var")
        c_new = float(noise_var + np.sum(v_new) / l_dim)
    else:
        raise ValueError(f"unknown c-update mode {mode!r}")
    if not (np.isfinite(c_new) and c_new > 0.0
            and np.all(np.isfinite(mu_new)) and np.all(np.isfinite(z_new))):
        raise AmpDivergenceError(
            f"non-finite AMP iterate at sweep {state.iter + 1} (c={c_new!r})"
        )
    return AmpState(mu_new, v_new, z_new, c_new, phi, state.iter + 1)


def amp_run(y: np.ndarray, s_mat: np.ndarray, priors: BgPrior,
            cfg: SystemConfig, mode: str = "empirical",
            noise_var: float | None = None) -> AmpState:
    """Run sweeps until the mu change falls below REL_TOL or the cap I hits.

    The returned state carries phi refreshed from the final (z, mu); with a
    zero iteration budget the untouched init state comes back.
    """
    if noise_var is None:
        noise_var = derive_noise_var(cfg)
    state = amp_init(y, cfg, n=s_mat.shape[1], noise_var=noise_var)
    for _ in range(cfg.amp_iters):
        prev_mu = state.mu
        state = amp_iterate(state, s_mat, y, priors, mode=mode, noise_var=noise_var)
        num = np.linalg.norm(state.mu - prev_mu)
        den = max(np.linalg.norm(prev_mu), _REL_FLOOR)
        if num / den < REL_TOL:
            break
    if state.iter > 0:
        state = replace(state, phi=s_mat.conj().T @ state.z + state.mu)
    return state
