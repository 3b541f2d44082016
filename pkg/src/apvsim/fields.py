"""Monochromatic vector standing waves and their node/antinode geometry.

A standing wave is represented by its complex amplitude

    A(r) = E0 * p * cos(k . r + phi_s) * exp(i phi_t)

with the physical field E(r, t) = Re[A(r) exp(-i omega t)].  All quantities
are SI: positions in metres, wavevectors in rad/m, amplitudes in V/m.
Superpositions are kept as lists of waves and summed at evaluation time,
never merged symbolically.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .constants import DEFAULT_PNC_AMPLITUDE, DEFAULT_WAVELENGTH, SPEED_OF_LIGHT, XHAT, ZHAT

DISPERSION_RTOL = 1e-9
TRANSVERSALITY_TOL = 1e-9
NODE_TOL = 1e-9          # relative to the wave's own amplitude
SEGMENT_TOL = 1e-12


class DegenerateSegment(ValueError):
    """Segment is orthogonal to the wavevector; the field is constant along it."""


def _readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


def misalignment_rotation(angles) -> Rotation:
    """Rotation for three misalignment angles: rotations about the lab
    x, y, z axes applied in that order (extrinsic), R = Rz(c) Ry(b) Rx(a)."""
    return Rotation.from_euler("xyz", np.asarray(angles, dtype=float))


@dataclass(frozen=True)
class Polarization:
    """Unit-norm complex Jones vector in the lab frame.

    The input vector is normalized on construction; a zero vector is
    rejected.  ``ellipticity`` is 0 for linear and 1 for circular light.
    """

    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=complex).reshape(3)
        norm = np.sqrt(np.vdot(v, v).real)
        if norm == 0.0:
            raise ValueError("polarization vector must be nonzero")
        object.__setattr__(self, "vec", _readonly(v / norm, complex))

    @property
    def ellipticity(self) -> float:
        """|Im(p x p*)|: 0 for linear polarization, 1 for circular."""
        return float(np.linalg.norm(np.imag(np.cross(self.vec, np.conj(self.vec)))))


@dataclass(frozen=True)
class StandingWave:
    """One monochromatic vector standing wave.

    ``wavevector`` and ``polarization`` are the nominal (design) values;
    ``misalignment`` is applied jointly to both at evaluation time.
    """

    wavevector: np.ndarray          # rad/m
    amplitude: float                # V/m, >= 0
    polarization: Polarization
    spatial_phase: float = 0.0      # rad
    temporal_phase: float = 0.0     # rad
    misalignment: np.ndarray = (0.0, 0.0, 0.0)   # rad, see misalignment_rotation
    omega: float = None             # rad/s; defaults to c|k|

    def __post_init__(self):
        k = _readonly(self.wavevector)
        object.__setattr__(self, "wavevector", k)
        object.__setattr__(self, "misalignment", _readonly(self.misalignment))
        if self.omega is None:
            object.__setattr__(self, "omega", SPEED_OF_LIGHT * float(np.linalg.norm(k)))
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        knorm = float(np.linalg.norm(k))
        if knorm == 0.0:
            raise ValueError("wavevector must be nonzero")
        if abs(knorm - self.omega / SPEED_OF_LIGHT) > DISPERSION_RTOL * knorm:
            raise ValueError(f"|k| = {knorm} does not satisfy |k| = omega/c "
                             f"for omega = {self.omega}")
        if abs(np.vdot(self.polarization.vec, k / knorm)) > TRANSVERSALITY_TOL:
            raise ValueError("polarization is not transverse to the wavevector")

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi / float(np.linalg.norm(self.wavevector))

    def effective_wavevector(self) -> np.ndarray:
        return misalignment_rotation(self.misalignment).apply(self.wavevector)

    def effective_polarization(self) -> np.ndarray:
        rot = misalignment_rotation(self.misalignment)
        p = self.polarization.vec
        return rot.apply(p.real) + 1j * rot.apply(p.imag)


@dataclass(frozen=True)
class FieldConfiguration:
    """Crossed standing waves plus the analyzing direction and static field."""

    pnc_wave: StandingWave
    pc_wave: StandingWave
    quantization_axis: np.ndarray = ZHAT
    static_B: np.ndarray = (0.0, 0.0, 0.0)    # tesla

    def __post_init__(self):
        axis = np.asarray(self.quantization_axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("quantization_axis must have unit norm")
        object.__setattr__(self, "quantization_axis", _readonly(axis))
        object.__setattr__(self, "static_B", _readonly(self.static_B))


@dataclass(frozen=True)
class IonSite:
    """Position of one ion plus its node-parity label along the nodal wave."""

    position: np.ndarray     # m
    index: int
    node_parity: int         # (-1)**index for successive nodes

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("index must be >= 0")
        if self.node_parity not in (+1, -1):
            raise ValueError("node_parity must be +1 or -1")
        object.__setattr__(self, "position", _readonly(self.position))


# ---------------------------------------------------------------------------
# field evaluation

def complex_field_at(wave: StandingWave, r) -> np.ndarray:
    """Complex field amplitude A(r); the physical field is Re[A exp(-i w t)]."""
    k = wave.effective_wavevector()
    p = wave.effective_polarization()
    r = np.asarray(r, dtype=float)
    return wave.amplitude * p * np.cos(k @ r + wave.spatial_phase) * np.exp(1j * wave.temporal_phase)


def gradient_at(wave: StandingWave, r) -> np.ndarray:
    """Analytic gradient tensor G[j, l] = dA_j/dx_l at r (V/m^2)."""
    k = wave.effective_wavevector()
    p = wave.effective_polarization()
    r = np.asarray(r, dtype=float)
    return (-wave.amplitude * np.outer(p, k)
            * np.sin(k @ r + wave.spatial_phase) * np.exp(1j * wave.temporal_phase))


def curl_from_gradient(grad: np.ndarray) -> np.ndarray:
    """Curl vector from a gradient tensor with G[j, l] = dA_j/dx_l."""
    return np.array([grad[2, 1] - grad[1, 2],
                     grad[0, 2] - grad[2, 0],
                     grad[1, 0] - grad[0, 1]])


def superposition_field_at(waves, r) -> np.ndarray:
    """Total complex field of a list of waves (fields add linearly)."""
    return sum((complex_field_at(w, r) for w in waves), np.zeros(3, dtype=complex))


def translate_phase(wave: StandingWave, dphi: float) -> StandingWave:
    """Shift the spatial phase by dphi, leaving everything else unchanged."""
    return dataclasses.replace(wave, spatial_phase=wave.spatial_phase + dphi)


def apply_misalignment(wave: StandingWave, angles) -> StandingWave:
    """Rotate the wave's k and polarization jointly by three more angles.

    The new rotation is composed on top of any misalignment already present.
    """
    combined = misalignment_rotation(angles) * misalignment_rotation(wave.misalignment)
    return dataclasses.replace(wave, misalignment=combined.as_euler("xyz"))


def find_nodes(wave: StandingWave, segment) -> list:
    """Positions on the segment (r0, r1) where the field amplitude vanishes.

    Nodes are the zeros of cos(k . r + phi_s); consecutive nodes are
    lambda/2 apart along k.  Raises DegenerateSegment when the segment is
    orthogonal to k and the field is constant along it.
    """
    r0, r1 = (np.asarray(x, dtype=float) for x in segment)
    d = r1 - r0
    dnorm = np.linalg.norm(d)
    if dnorm == 0.0:
        raise ValueError("segment endpoints must be distinct")
    k = wave.effective_wavevector()
    b = k @ d
    if abs(b) / (np.linalg.norm(k) * dnorm) < SEGMENT_TOL:
        raise DegenerateSegment("segment is orthogonal to the wavevector")
    a = k @ r0 + wave.spatial_phase
    # cos(a + s b) = 0  =>  s = (pi/2 + n pi - a) / b
    n_lo = np.ceil((min(a, a + b) - np.pi / 2) / np.pi)
    n_hi = np.floor((max(a, a + b) - np.pi / 2) / np.pi)
    nodes = []
    for n in np.arange(n_lo, n_hi + 1):
        s = (np.pi / 2 + n * np.pi - a) / b
        if -SEGMENT_TOL <= s <= 1.0 + SEGMENT_TOL:
            nodes.append((float(s), r0 + s * d))
    nodes.sort(key=lambda sn: sn[0])
    return [pos for _, pos in nodes]


# ---------------------------------------------------------------------------
# reference geometry: nodal wave along x polarized z, antinodal wave along z

def default_pc_wave(amplitude: float = 1.0e6,
                    wavelength: float = DEFAULT_WAVELENGTH) -> StandingWave:
    """Nodal quadrupole-drive wave: k along x, linear z polarization,
    node at the origin."""
    k = (2.0 * np.pi / wavelength) * XHAT
    return StandingWave(wavevector=k, amplitude=amplitude,
                        polarization=Polarization(ZHAT),
                        spatial_phase=np.pi / 2, temporal_phase=0.0)


def default_pnc_wave(amplitude: float = DEFAULT_PNC_AMPLITUDE,
                     wavelength: float = DEFAULT_WAVELENGTH) -> StandingWave:
    """Antinodal dipole-drive wave: k along z, linear x polarization,
    antinode at the origin, driven in temporal quadrature with the
    nodal wave so the interference shift is maximal."""
    k = (2.0 * np.pi / wavelength) * ZHAT
    return StandingWave(wavevector=k, amplitude=amplitude,
                        polarization=Polarization(XHAT),
                        spatial_phase=0.0, temporal_phase=np.pi / 2)


def default_configuration(pnc_amplitude: float = DEFAULT_PNC_AMPLITUDE,
                          pc_amplitude: float = 1.0e6,
                          static_B=(0.0, 0.0, 5e-4)) -> FieldConfiguration:
    """Crossed-wave reference geometry with the trap axis along x and the
    quantization axis along z."""
    return FieldConfiguration(pnc_wave=default_pnc_wave(pnc_amplitude),
                              pc_wave=default_pc_wave(pc_amplitude),
                              quantization_axis=ZHAT, static_B=static_B)


def sites_at_successive_nodes(config: FieldConfiguration, count: int) -> list:
    """Place ``count`` ions on successive nodes of the nodal wave along its
    own axis, starting from the node nearest the origin."""
    if count < 1:
        raise ValueError("count must be >= 1")
    wave = config.pc_wave
    k = wave.effective_wavevector()
    khat = k / np.linalg.norm(k)
    lam = wave.wavelength
    # window with ~2*count+3 nodes, so count of them always follow the origin node
    span = (count + 1.5) * lam / 2.0
    nodes = find_nodes(wave, (-span * khat, span * khat))
    origin_idx = int(np.argmin([np.linalg.norm(p) for p in nodes]))
    chosen = nodes[origin_idx:origin_idx + count]
    if len(chosen) < count:
        raise RuntimeError("node search window too small for the requested ion count")
    return [IonSite(position=pos, index=i, node_parity=(-1) ** i)
            for i, pos in enumerate(chosen)]
