import numpy as np
import pytest

from apvsim.constants import DEFAULT_WAVELENGTH
from apvsim.fields import FieldConfiguration, Polarization, StandingWave, default_configuration


def random_direction(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_transverse_polarization(rng, khat):
    e1 = rng.normal(size=3)
    e1 -= (e1 @ khat) * khat
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(khat, e1)
    c1, c2 = rng.normal(size=2) + 1j * rng.normal(size=2)
    return Polarization(c1 * e1 + c2 * e2)


def random_wave(rng, wavelength=DEFAULT_WAVELENGTH):
    khat = random_direction(rng)
    return StandingWave(
        wavevector=(2.0 * np.pi / wavelength) * khat,
        amplitude=float(rng.uniform(0.5, 2e6)),
        polarization=random_transverse_polarization(rng, khat),
        spatial_phase=float(rng.uniform(0, 2 * np.pi)),
        temporal_phase=float(rng.uniform(0, 2 * np.pi)),
    )


def random_crossed_config(rng):
    axis = random_direction(rng)
    return FieldConfiguration(pnc_wave=random_wave(rng), pc_wave=random_wave(rng),
                              quantization_axis=axis)


@pytest.fixture
def default_config():
    return default_configuration()


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
