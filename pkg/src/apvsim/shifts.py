"""Parity-odd vector light shift and parity-even systematic shift models.

The parity-odd Larmor shift produced by the crossed waves is the
time-averaged interference term

    shift_vec = eta_c * < 2 (E_pnc . grad) dE_pc/dt  +  E_pnc x (curl dE_pc/dt) >_t

with E_pnc the antinodal (dipole-drive) field, E_pc the nodal
(quadrupole-drive) field, and <.>_t the average over one optical period.
Both fields must share one optical frequency.  The analytic route uses
<Re(X e^-iwt) . Re(Y e^-iwt)>_t = Re(X conj(Y))/2 componentwise, with the
time derivative entering as the complex amplitude -i w B(r); the numeric
route averages the real instantaneous integrand on a uniform time grid and
is kept as an independent cross-check.

The overall coupling eta_c is a calibrated scalar.  Its sign and geometry
dependence are physical; its absolute scale is pinned by ``calibrate_eta``
against a target shift, not computed from atomic structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import (
    BOHR_RADIUS,
    DEFAULT_COUPLING_RATIO,
    DEFAULT_OMEGA_OVER_RABI,
    ELEMENTARY_CHARGE,
    GYROMAGNETIC_RATIO,
    HBAR,
)
from .fields import (
    FieldConfiguration,
    IonSite,
    complex_field_at,
    curl_from_gradient,
    gradient_at,
)

FREQUENCY_RTOL = 1e-9


class FrequencyMismatch(ValueError):
    """The two waves do not share one optical frequency."""


class ZeroShiftGeometry(ValueError):
    """The geometry yields an identically zero shift; calibration impossible."""


@dataclass(frozen=True)
class EtaModel:
    """Calibrated pseudoscalar coupling of the interference shift.

    ``eta_magnitude`` is expressed in units of e*a0 and ``omega_over_rabi``
    is the ratio of the optical frequency to the quadrupole Rabi frequency.
    Only the product enters the shift; the absolute value is fixed by
    calibration against a target shift.
    """

    eta_magnitude: float
    omega_over_rabi: float = DEFAULT_OMEGA_OVER_RABI

    def __post_init__(self):
        if not np.isfinite(self.eta_magnitude) or self.eta_magnitude < 0:
            raise ValueError("eta_magnitude must be finite and >= 0")
        if not self.omega_over_rabi > 0:
            raise ValueError("omega_over_rabi must be > 0")

    @property
    def coupling(self) -> float:
        """Scalar multiplying the field bracket (model prefactor)."""
        return self.eta_magnitude * ELEMENTARY_CHARGE * BOHR_RADIUS * self.omega_over_rabi / HBAR


@dataclass(frozen=True)
class SystematicsValues:
    """One concrete draw of the parity-even systematic knobs."""

    ellipticity: float = 0.0
    misalignment_angles: tuple = (0.0, 0.0, 0.0)   # rad
    b_gradient: float = 0.0                        # tesla per metre along the trap axis
    stray_offset: float = 0.0                      # rad/s, common
    stray_gradient: float = 0.0                    # rad/s per metre along the trap axis
    coupling_ratio: float = DEFAULT_COUPLING_RATIO
    swap_phase_error: float = 0.0                  # rad, imperfection of the pi translation


@dataclass(frozen=True)
class ShiftBudget:
    """Per-ion decomposition of the Larmor-frequency shift (rad/s).

    ``pnc`` is the parity-odd part; the remaining components are parity
    even.  ``total`` is their exact sum.
    """

    site: IonSite
    pnc: float
    zeeman: float
    quad_systematic: float
    stray: float

    @property
    def total(self) -> float:
        return self.pnc + self.zeeman + self.quad_systematic + self.stray


def _check_frequencies(config: FieldConfiguration) -> float:
    w1, w2 = config.pnc_wave.omega, config.pc_wave.omega
    if abs(w1 - w2) > FREQUENCY_RTOL * max(w1, w2):
        raise FrequencyMismatch(f"wave frequencies differ: {w1} vs {w2} rad/s")
    return w2


def pnc_shift_vector(config: FieldConfiguration, r, eta: EtaModel) -> np.ndarray:
    """Time-averaged parity-odd shift vector at r (rad/s), analytic route."""
    omega = _check_frequencies(config)
    a = complex_field_at(config.pnc_wave, r)
    grad = gradient_at(config.pc_wave, r)
    curl = curl_from_gradient(grad)
    # <Re(X e^-iwt) Re(Y e^-iwt)>_t = Re(X conj(Y))/2; dE_pc/dt amplitude = -i w B
    term1 = np.real((1j * omega * np.conj(grad)) @ a)          # 2 * (1/2) = 1
    term2 = 0.5 * np.real(np.cross(a, 1j * omega * np.conj(curl)))
    return eta.coupling * (term1 + term2)


def pnc_shift_numeric(config: FieldConfiguration, r, eta: EtaModel,
                      samples: int = 256) -> np.ndarray:
    """Brute-force time-grid average of the instantaneous real integrand.

    Evaluates the real fields and spatial derivatives on a uniform grid over
    one optical period (the time derivative is taken analytically on the
    real field) and averages.  The integrand is a trigonometric polynomial,
    so the periodic rule is spectrally exact for samples >= 64.
    """
    if samples < 64:
        raise ValueError("samples must be >= 64")
    omega = _check_frequencies(config)
    a = complex_field_at(config.pnc_wave, r)
    grad = gradient_at(config.pc_wave, r)
    curl = curl_from_gradient(grad)
    t = np.arange(samples) * (2.0 * np.pi / omega) / samples
    ph = np.exp(-1j * omega * t)                               # (samples,)
    e_pnc = np.real(a[None, :] * ph[:, None])                  # (samples, 3)
    dgrad = np.real(-1j * omega * grad[None, :, :] * ph[:, None, None])
    dcurl = np.real(-1j * omega * curl[None, :] * ph[:, None])
    term1 = 2.0 * np.einsum("tjl,tl->tj", dgrad, e_pnc)
    term2 = np.cross(e_pnc, dcurl)
    return eta.coupling * np.mean(term1 + term2, axis=0)


def larmor_shift(vec, quantization_axis) -> float:
    """Projection of a shift vector on the quantization axis (rad/s)."""
    axis = np.asarray(quantization_axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise ValueError("quantization_axis must have unit norm")
    return float(np.asarray(vec, dtype=float) @ axis)


def calibrate_eta(config: FieldConfiguration, r, target_shift: float,
                  omega_over_rabi: float = DEFAULT_OMEGA_OVER_RABI) -> EtaModel:
    """Scale the coupling so the projected shift at r equals target_shift.

    target_shift = 0 returns a zero coupling.  A geometry whose shift
    vanishes for any coupling raises ZeroShiftGeometry; a target whose sign
    the geometry cannot produce (the coupling is kept non-negative) raises
    ValueError -- flip the temporal phase difference instead.
    """
    if target_shift == 0.0:
        return EtaModel(eta_magnitude=0.0, omega_over_rabi=omega_over_rabi)
    probe = EtaModel(eta_magnitude=1.0, omega_over_rabi=omega_over_rabi)
    s0 = larmor_shift(pnc_shift_vector(config, r, probe), config.quantization_axis)
    scale = (probe.coupling * config.pnc_wave.amplitude * config.pc_wave.amplitude
             * config.pc_wave.omega * np.linalg.norm(config.pc_wave.wavevector))
    if abs(s0) <= 1e-15 * scale:
        raise ZeroShiftGeometry("projected shift vanishes at this position for any coupling")
    ratio = target_shift / s0
    if ratio < 0:
        raise ValueError("target sign is unreachable in this geometry with a "
                         "non-negative coupling; flip the temporal phase difference")
    return EtaModel(eta_magnitude=ratio, omega_over_rabi=omega_over_rabi)


def quad_systematic_shift(ellipticity: float, misalignment_angles,
                          pnc_reference: float,
                          coupling_ratio: float = DEFAULT_COUPLING_RATIO) -> float:
    """Parity-even quadrupole shift induced by residual circular polarization.

    Modeled as coupling_ratio * pnc_reference * ellipticity * prod(sin(angles)):
    the mimic couples coupling_ratio times more strongly than the parity-odd
    shift and is suppressed linearly by each small alignment angle.  It is
    zero for pure linear polarization or any perfect alignment, and does not
    depend on the wave phases (parity even by construction).
    """
    if not 0.0 <= ellipticity <= 1.0:
        raise ValueError("ellipticity must lie in [0, 1]")
    angles = np.asarray(misalignment_angles, dtype=float)
    return float(coupling_ratio * pnc_reference * ellipticity * np.prod(np.sin(angles)))


def build_budget(config: FieldConfiguration, site: IonSite, eta: EtaModel,
                 systematics: SystematicsValues = SystematicsValues(),
                 pnc_reference: float = None) -> ShiftBudget:
    """Aggregate the per-ion shift budget at one ion site.

    ``pnc_reference`` sets the scale of the polarization-induced quadrupole
    mimic; it defaults to the magnitude of the local parity-odd shift.
    Zeeman and stray terms are linear in position along the trap axis
    (the nodal wave's propagation direction).
    """
    axis = config.quantization_axis
    pnc = larmor_shift(pnc_shift_vector(config, site.position, eta), axis)
    k = config.pc_wave.effective_wavevector()
    trap_axis = k / np.linalg.norm(k)
    x = float(site.position @ trap_axis)
    b_axial = float(config.static_B @ axis) + systematics.b_gradient * x
    zeeman = GYROMAGNETIC_RATIO * b_axial
    quad = quad_systematic_shift(systematics.ellipticity,
                                 systematics.misalignment_angles,
                                 abs(pnc) if pnc_reference is None else pnc_reference,
                                 systematics.coupling_ratio)
    stray = systematics.stray_offset + systematics.stray_gradient * x
    return ShiftBudget(site=site, pnc=pnc, zeeman=zeeman,
                       quad_systematic=quad, stray=stray)
