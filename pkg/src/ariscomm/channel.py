"""Rician fading links, tilt-dependent panel gain, and achievable rates.

Link model
----------
Both hops are Rician: sqrt(rho0/d^alpha) * (sqrt(K/(1+K)) * LOS +
sqrt(1/(1+K)) * NLOS) with i.i.d. unit complex-Gaussian scattering.  The LoS
parts are built from steering phases: the base station is a uniform linear
array along the global x axis, the reflecting panel a uniform planar array
in its own (tilted) x-y plane, both at half-wavelength spacing, times a
global propagation phase exp(-2j*pi*d/wavelength) with a normalized
reference wavelength (default 1 m).  Absolute carrier frequency never
enters; only phase differences matter for the rates.

Panel gain
----------
A node is served only while it lies in the front half-space of the panel.
When both the BS-side and user-side incidence cosines are positive the gain
is D_m^2 * (cos_bs * cos_gu)^z times the diagonal of unit-modulus
reflection coefficients, with D_m = 2(z+1) the directivity of the cos^z
radiation pattern; otherwise the gain is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    AngleOfView,
    EulerAngles,
    incidence_cosine,
    rotation_matrix,
    wrap_angle,
)
from .numerics import RngStream, sample_complex_gaussian


@dataclass(frozen=True)
class RicianParams:
    rho_0: float = 1e-3           # reference path gain at 1 m, linear
    alpha_bs_ris: float = 2.0     # path-loss exponents
    alpha_ris_gu: float = 2.0
    k_bs_ris: float = 10.0        # Rician factors, linear
    k_ris_gu: float = 10.0
    alpha_direct: float = 3.5     # direct BS->GU link (Rayleigh)
    direct_blocked: bool = False

    def __post_init__(self):
        if self.rho_0 <= 0:
            raise ValueError("rho_0 must be positive")
        if min(self.alpha_bs_ris, self.alpha_ris_gu, self.alpha_direct) < 2:
            raise ValueError("path-loss exponents must be >= 2")
        if min(self.k_bs_ris, self.k_ris_gu) < 0:
            raise ValueError("Rician factors must be >= 0")


@dataclass(frozen=True)
class GainModel:
    lambert_exponent: float = 1.0     # z of the cos^z pattern
    service_threshold: float = 1e-4   # kappa_min gate for the bisection bounds

    def __post_init__(self):
        if self.lambert_exponent < 0:
            raise ValueError("lambert_exponent must be >= 0")
        if self.service_threshold <= 0:
            raise ValueError("service_threshold must be positive")

    @property
    def max_directivity(self) -> float:
        return 2.0 * (self.lambert_exponent + 1.0)


@dataclass(frozen=True)
class PanelGeometry:
    """Static array layout: BS ULA size, panel UPA size, reference wavelength."""

    m_antennas: int
    n_elements: int
    wavelength: float = 1.0

    def __post_init__(self):
        if self.m_antennas < 1 or self.n_elements < 1:
            raise ValueError("array sizes must be >= 1")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")

    @property
    def panel_shape(self) -> tuple[int, int]:
        """Rows x cols of the panel, using the largest divisor <= sqrt(N)."""
        n = self.n_elements
        rows = 1
        for d in range(1, int(math.isqrt(n)) + 1):
            if n % d == 0:
                rows = d
        return rows, n // rows


class ReflectionState:
    """Per-sub-surface phases expanded Kronecker-style over the full panel."""

    def __init__(self, phases, elements_per_group: int):
        phases = np.asarray(phases, dtype=float)
        if phases.ndim != 1 or phases.size < 1:
            raise ValueError("phases must be a non-empty 1-D array")
        if elements_per_group < 1:
            raise ValueError("elements_per_group must be >= 1")
        self.phases = np.array([wrap_angle(p) for p in phases])
        self.elements_per_group = int(elements_per_group)

    @property
    def num_groups(self) -> int:
        return self.phases.size

    @property
    def num_elements(self) -> int:
        return self.phases.size * self.elements_per_group

    def coefficients(self) -> np.ndarray:
        """Unit-modulus reflection coefficients for all N elements."""
        return np.repeat(np.exp(1j * self.phases), self.elements_per_group)


@dataclass
class ChannelRealization:
    """One slot's links: BS->panel matrix, panel->GU rows, direct BS->GU rows."""

    bs_ris: np.ndarray    # (M, N)
    ris_gu: np.ndarray    # (K, N)
    direct: np.ndarray    # (K, M)

    def __post_init__(self):
        m, n = self.bs_ris.shape
        k = self.ris_gu.shape[0]
        if self.ris_gu.shape != (k, n) or self.direct.shape != (k, m):
            raise ValueError("channel block dimensions are inconsistent")


def path_loss(d: float, rho_0: float, alpha: float) -> float:
    """Linear power gain rho_0 / d^alpha at distance d (meters)."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return rho_0 / d**alpha


def _bs_steering(m_antennas: int, direction: np.ndarray) -> np.ndarray:
    # ULA along global x, half-wavelength spacing
    return np.exp(1j * np.pi * np.arange(m_antennas) * direction[0])


def _ris_steering(geom: PanelGeometry, euler: EulerAngles, direction: np.ndarray) -> np.ndarray:
    # UPA in the panel's local x-y plane; express the ray in the tilted frame
    local = rotation_matrix(euler).T @ direction
    rows, cols = geom.panel_shape
    r_idx = np.repeat(np.arange(rows), cols)
    c_idx = np.tile(np.arange(cols), rows)
    return np.exp(1j * np.pi * (r_idx * local[0] + c_idx * local[1]))


def los_component(aris_pos, node_pos, euler: EulerAngles, geom: PanelGeometry,
                  matrix: bool) -> np.ndarray:
    """Unit-modulus LoS factor for one link.

    ``matrix=True`` gives the rank-1 (M, N) BS->panel matrix (outer product of
    the two steering vectors); otherwise the (N,) panel->node vector.  Both
    carry the global phase exp(-2j*pi*d/wavelength).
    """
    aris_pos = np.asarray(aris_pos, dtype=float)
    node_pos = np.asarray(node_pos, dtype=float)
    diff = aris_pos - node_pos
    d = np.linalg.norm(diff)
    if d == 0:
        raise ValueError("node coincides with the panel position")
    phase = np.exp(-2j * np.pi * d / geom.wavelength)
    if matrix:
        toward_panel = diff / d
        a_bs = _bs_steering(geom.m_antennas, toward_panel)
        a_ris = _ris_steering(geom, euler, -toward_panel)
        return phase * np.outer(a_bs, a_ris)
    a_ris = _ris_steering(geom, euler, -diff / d)
    return phase * a_ris


def _rician_weights(k_factor: float) -> tuple[float, float]:
    if np.isinf(k_factor):
        return 1.0, 0.0
    return float(np.sqrt(k_factor / (1.0 + k_factor))), float(np.sqrt(1.0 / (1.0 + k_factor)))


def sample_bs_ris_channel(rng: RngStream, geom: PanelGeometry, aris_pos, bs_pos,
                          euler: EulerAngles, p: RicianParams,
                          nlos: np.ndarray | None = None) -> np.ndarray:
    """Draw the (M, N) BS->panel Rician channel for one slot.

    ``nlos`` lets the caller supply pre-drawn scattering (shared between two
    gain assumptions on the same slot); by default it is drawn from ``rng``.
    """
    d = float(np.linalg.norm(np.asarray(aris_pos, float) - np.asarray(bs_pos, float)))
    pl = path_loss(d, p.rho_0, p.alpha_bs_ris)
    los = los_component(aris_pos, bs_pos, euler, geom, matrix=True)
    if nlos is None:
        nlos = sample_complex_gaussian(rng, geom.m_antennas, geom.n_elements)
    w_los, w_nlos = _rician_weights(p.k_bs_ris)
    return np.sqrt(pl) * (w_los * los + w_nlos * nlos)


def sample_ris_gu_channel(rng: RngStream, geom: PanelGeometry, aris_pos, gu_pos,
                          euler: EulerAngles, p: RicianParams,
                          nlos: np.ndarray | None = None) -> np.ndarray:
    """Draw the (N,) panel->GU Rician channel for one slot."""
    d = float(np.linalg.norm(np.asarray(aris_pos, float) - np.asarray(gu_pos, float)))
    pl = path_loss(d, p.rho_0, p.alpha_ris_gu)
    los = los_component(aris_pos, gu_pos, euler, geom, matrix=False)
    if nlos is None:
        nlos = sample_complex_gaussian(rng, 1, geom.n_elements)[0]
    w_los, w_nlos = _rician_weights(p.k_ris_gu)
    return np.sqrt(pl) * (w_los * los + w_nlos * nlos)


def sample_direct_channel(rng: RngStream, m_antennas: int, bs_pos, gu_pos,
                          p: RicianParams) -> np.ndarray:
    """Draw the (M,) direct BS->GU link: Rayleigh, or zeros when blocked."""
    if p.direct_blocked:
        return np.zeros(m_antennas, dtype=complex)
    d = float(np.linalg.norm(np.asarray(bs_pos, float) - np.asarray(gu_pos, float)))
    pl = path_loss(d, p.rho_0, p.alpha_direct)
    return np.sqrt(pl) * sample_complex_gaussian(rng, 1, m_antennas)[0]


def radiation_pattern(azimuth: float, polar: float, g: GainModel) -> float:
    """cos^z radiation pattern: nonzero only in the front hemisphere."""
    c = np.cos(polar)
    if c <= 0.0:
        return 0.0
    return float(c ** g.lambert_exponent)


def service_factor(e: EulerAngles, aov_bs: AngleOfView, aov_gu: AngleOfView,
                   g: GainModel) -> float:
    """Scalar tilt gain D_m^2 (cos_bs * cos_gu)^z, zero outside the half-space."""
    cos_bs = incidence_cosine(e, aov_bs)
    cos_gu = incidence_cosine(e, aov_gu)
    if cos_bs <= 0.0 or cos_gu <= 0.0:
        return 0.0
    return float(g.max_directivity**2 * (cos_bs * cos_gu) ** g.lambert_exponent)


def aris_gain(e: EulerAngles, aov_bs: AngleOfView, aov_gu: AngleOfView,
              refl: ReflectionState, g: GainModel) -> np.ndarray:
    """Diagonal (N, N) panel gain for one GU; exactly zero when unserved."""
    n = refl.num_elements
    factor = service_factor(e, aov_bs, aov_gu, g)
    if factor == 0.0:
        return np.zeros((n, n), dtype=complex)
    return np.diag(factor * refl.coefficients())


def cascade_rows(ch: ChannelRealization, gains) -> np.ndarray:
    """Per-GU cascade rows h_k^H Xi_k H^T without the direct term, (K, M)."""
    k, _ = ch.ris_gu.shape
    rows = np.empty((k, ch.bs_ris.shape[0]), dtype=complex)
    for i in range(k):
        rows[i] = np.conj(ch.ris_gu[i]) @ gains[i] @ ch.bs_ris.T
    return rows


def effective_channel(ch: ChannelRealization, gains) -> np.ndarray:
    """Concatenated BS->GU channel matrix V, one row per GU, (K, M).

    Row k is the panel cascade plus the conjugated direct link.  For several
    panels, sum the ``cascade_rows`` of each and add the direct term once.
    """
    if len(gains) != ch.ris_gu.shape[0]:
        raise ValueError("need one gain matrix per GU")
    return cascade_rows(ch, gains) + np.conj(ch.direct)


def achievable_rate(v: np.ndarray, w: np.ndarray, noise_power: float) -> np.ndarray:
    """Per-GU rates log2(1 + |v_k w_k|^2 / (sum_{j!=k} |v_k w_j|^2 + sigma^2))."""
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    coupling = np.abs(v @ w) ** 2          # (K, K): |v_k w_j|^2
    signal = np.diag(coupling)
    interference = coupling.sum(axis=1) - signal
    return np.log2(1.0 + signal / (interference + noise_power))


def sum_rate(rates) -> float:
    """Total over users and slots; empty input sums to zero."""
    arr = np.asarray(rates, dtype=float)
    return float(arr.sum()) if arr.size else 0.0
