"""Zero-forcing directions with water-filled powers via bisection.

Given the effective K x M channel V, the precoder is W = V^H (V V^H)^-1
P^(1/2).  With nu_k the k-th diagonal of Vt^H Vt (Vt the pseudo-inverse
part), the per-user receive powers follow the water-filling rule

    p_k = (1/nu_k) * max(1/mu - nu_k * sigma^2, 0),

where 1/mu is the water level chosen so the transmit powers sum to the
budget: sum_k max(1/mu - nu_k sigma^2, 0) = P_max.  The normalization
factor mu is found by bisection; the search bounds are seeded from the
users whose tilt service factor clears the threshold (unserved users have
huge nu and would wreck the bracket), then bracket-repaired so the
bisection is total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import hermitian_solve


@dataclass
class BeamformingSolution:
    weights: np.ndarray       # (M, K), column k serves GU k
    powers: np.ndarray        # (K,) receive-side allocations p_k
    water_level: float        # 1/mu
    rates: np.ndarray         # (K,) ideal ZF rates log2(1 + p_k/sigma^2)

    @property
    def transmit_power(self) -> float:
        return float(np.real(np.trace(self.weights.conj().T @ self.weights)))


def zf_directions(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pseudo-inverse directions Vt = V^H (V V^H)^-1 and nu = diag(Vt^H Vt).

    The K x K Gram matrix is solved Cholesky-style with diagonal loading so
    that near-rank-deficient channels stay solvable.  A user whose row is
    exactly zero (fully blocked, direct link obstructed) is excluded from
    the solve: its direction column is zero and its nu is +inf, the sentinel
    that makes water-filling allocate it nothing.
    """
    v = np.asarray(v, dtype=complex)
    k, m = v.shape
    if k > m:
        raise ValueError(f"need K <= M for zero-forcing, got K={k}, M={m}")
    active = np.linalg.norm(v, axis=1) > 0.0
    vt = np.zeros((m, k), dtype=complex)
    nu = np.full(k, np.inf)
    if active.any():
        va = v[active]
        gram = va @ va.conj().T
        # Vt_a = Va^H G^-1 = (G^-1 Va)^H since G is Hermitian
        vt_a = hermitian_solve(gram, va).conj().T
        vt[:, active] = vt_a
        nu[active] = np.real(np.einsum("mk,mk->k", vt_a.conj(), vt_a))
    return vt, nu


def water_filling(nu, sigma2: float, p_max: float, kappa,
                  kappa_min: float = 1e-4, tol: float = 1e-6,
                  max_iter: int = 200) -> tuple[np.ndarray, float]:
    """Solve for the water level by bisection on the normalization factor mu.

    Returns (p, mu) with p the per-user receive powers.  The initial bounds
    scan only users with kappa > kappa_min (all users when none qualify, as
    the direct links may still carry signal); the bracket is then repaired by
    halving mu_min / doubling mu_max until it actually contains the root,
    which never moves the fixed point.
    """
    nu = np.asarray(nu, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if nu.size == 0:
        raise ValueError("at least one user is required")
    if np.any(nu <= 0) or sigma2 <= 0 or p_max <= 0:
        raise ValueError("nu, sigma2 and p_max must be positive")

    finite = np.isfinite(nu)
    if not finite.any():
        # every user fully blocked: no channel to pour power into
        return np.zeros(nu.size), nu.size / p_max

    served = kappa > kappa_min
    if not served.any():
        served = np.ones_like(served)

    def total_power(mu: float) -> float:
        return float(np.maximum(1.0 / mu - nu * sigma2, 0.0).sum())

    mu = nu.size / (p_max + sigma2 * nu[finite].sum())
    mu_min = mu_max = mu
    for k in np.flatnonzero(served & finite):
        level = nu[k] * sigma2
        if level <= 1.0 / mu_max:
            mu_max = 1.0 / level
        if level > 1.0 / mu_min:
            mu_min = 1.0 / level

    # bracket repair: total_power is decreasing in mu, diverges as mu -> 0
    while total_power(mu_min) < p_max:
        mu_min /= 2.0
    while total_power(mu_max) > p_max:
        mu_max *= 2.0

    mu_mid = 0.5 * (mu_min + mu_max)
    for _ in range(max_iter):
        mu_mid = 0.5 * (mu_min + mu_max)
        power = total_power(mu_mid)
        if abs(power - p_max) < tol:
            break
        if power > p_max:
            mu_min = mu_mid
        else:
            mu_max = mu_mid
    p = np.maximum(1.0 / mu_mid - nu * sigma2, 0.0) / nu
    return p, mu_mid


def solve_beamforming(v: np.ndarray, sigma2: float, p_max: float, kappa,
                      kappa_min: float = 1e-4) -> BeamformingSolution:
    """Full precoder: ZF directions scaled by water-filled powers."""
    vt, nu = zf_directions(v)
    p, mu = water_filling(nu, sigma2, p_max, kappa, kappa_min=kappa_min)
    weights = vt * np.sqrt(p)[None, :]
    rates = np.log2(1.0 + p / sigma2)
    return BeamformingSolution(
        weights=weights, powers=p, water_level=1.0 / mu, rates=rates
    )
