"""Scenario geometry and Rician channel synthesis.

A surface-equipped aerial transmitter hovers above a disk of ground users.
Channels from the surface to each user combine a deterministic planar-array
steering component with i.i.d. circular Gaussian scatter, weighted by the
Rician factor.  The feed antenna sits a fixed distance behind the surface
centre and illuminates the elements with a unit-norm spherical-wave vector.
All draws are keyed by an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class LinkBudget(str, Enum):
    NORMALIZED = "normalized"
    PHYSICAL = "physical"


@dataclass(frozen=True)
class ArrayGeometry:
    """Planar element grid, row-major ordering, spacing in wavelengths."""

    rows: int
    cols: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be positive")
        if self.spacing_wavelengths <= 0:
            raise ValueError("element spacing must be positive")

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols

    def element_offsets(self, wavelength: float) -> np.ndarray:
        """Element positions in metres, centred on the surface centre, z = 0."""
        pitch = self.spacing_wavelengths * wavelength
        xs = (np.arange(self.rows) - (self.rows - 1) / 2.0) * pitch
        ys = (np.arange(self.cols) - (self.cols - 1) / 2.0) * pitch
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        out = np.zeros((self.num_elements, 3))
        out[:, 0] = gx.ravel()
        out[:, 1] = gy.ravel()
        return out


def square_grid(num_elements: int, spacing_wavelengths: float = 0.5) -> ArrayGeometry:
    """Grid closest to square for the requested element count."""
    if num_elements < 1:
        raise ValueError("element count must be positive")
    rows = 1
    for cand in range(int(math.isqrt(num_elements)), 0, -1):
        if num_elements % cand == 0:
            rows = cand
            break
    return ArrayGeometry(rows, num_elements // rows, spacing_wavelengths)


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, carrier, fading, and noise parameters of one deployment."""

    num_ues: int = 10
    uav_position: tuple[float, float, float] = (0.0, 0.0, 100.0)
    ue_center: tuple[float, float] = (0.0, 0.0)
    ue_radius: float = 200.0
    carrier_hz: float = 28e9
    rician_factor_db: float = 5.0
    link_budget: LinkBudget = LinkBudget.NORMALIZED
    array: ArrayGeometry = ArrayGeometry(4, 8)
    noise_density_mw_per_hz: float = 1e-3
    rb_bandwidth_hz: float = 20e6
    feed_offset_m: float = 0.25

    def __post_init__(self):
        if self.num_ues < 1:
            raise ValueError("need at least one UE")
        if self.ue_radius <= 0:
            raise ValueError("UE disk radius must be positive")
        if self.carrier_hz <= 0:
            raise ValueError("carrier frequency must be positive")
        if self.noise_density_mw_per_hz <= 0 or self.rb_bandwidth_hz <= 0:
            raise ValueError("noise density and bandwidth must be positive")
        if self.feed_offset_m <= 0:
            raise ValueError("feed offset must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def noise_mw(self) -> float:
        """Noise power per resource block, N0 * B."""
        return self.noise_density_mw_per_hz * self.rb_bandwidth_hz


@dataclass(frozen=True, eq=False)
class Scenario:
    """Sampled deployment: fixed aerial platform, users on the ground plane."""

    uav_position: np.ndarray
    ue_positions: np.ndarray  # (N, 3)

    def __post_init__(self):
        object.__setattr__(self, "uav_position", np.asarray(self.uav_position, float))
        object.__setattr__(self, "ue_positions", np.asarray(self.ue_positions, float))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One channel realization shared by the optimizer and the harness.

    ``ue_channels`` holds one surface-to-user vector per row, ``feed`` the
    unit-norm feed-to-elements vector, ``noise_mw`` the per-RB noise power.
    """

    ue_channels: np.ndarray = field(repr=False)  # (N, K) complex
    feed: np.ndarray = field(repr=False)  # (K,) complex, unit norm
    noise_mw: float = 0.0
    ue_distances: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        h = np.array(self.ue_channels, dtype=np.complex128)
        f = np.array(self.feed, dtype=np.complex128)
        if not np.isfinite(h).all() or not np.isfinite(f).all():
            raise ValueError("channel entries must be finite")
        if self.noise_mw <= 0:
            raise ValueError("noise power must be positive")
        if abs(np.linalg.norm(f) - 1.0) > 1e-9:
            raise ValueError("feed vector must have unit norm")
        h.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "ue_channels", h)
        object.__setattr__(self, "feed", f)
        d = self.ue_distances
        d = np.zeros(h.shape[0]) if d is None else np.asarray(d, float)
        d.setflags(write=False)
        object.__setattr__(self, "ue_distances", d)

    @property
    def num_ues(self) -> int:
        return self.ue_channels.shape[0]

    @property
    def num_elements(self) -> int:
        return self.ue_channels.shape[1]


def sample_scenario(cfg: ScenarioConfig, seed: int) -> Scenario:
    """Drop users uniformly in the configured ground disk."""
    rng = np.random.default_rng(seed)
    radii = cfg.ue_radius * np.sqrt(rng.random(cfg.num_ues))
    angles = 2.0 * np.pi * rng.random(cfg.num_ues)
    pos = np.zeros((cfg.num_ues, 3))
    pos[:, 0] = cfg.ue_center[0] + radii * np.cos(angles)
    pos[:, 1] = cfg.ue_center[1] + radii * np.sin(angles)
    return Scenario(np.asarray(cfg.uav_position, float), pos)


def path_gain(distance_m: float, carrier_hz: float) -> float:
    """Free-space power gain (c / 4 pi d f)^2."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    amp = SPEED_OF_LIGHT / (4.0 * np.pi * distance_m * carrier_hz)
    return amp * amp


def steering_vector(
    element_offsets: np.ndarray, direction: np.ndarray, wavelength: float
) -> np.ndarray:
    """Planar-array response exp(j 2 pi <r_k, u> / lambda), all entries unit modulus."""
    phase = (2.0 * np.pi / wavelength) * (element_offsets @ np.asarray(direction, float))
    return np.exp(1j * phase)


def feed_vector(cfg: ScenarioConfig) -> np.ndarray:
    """Unit-norm spherical-wave vector from the feed point behind the surface."""
    offsets = cfg.array.element_offsets(cfg.wavelength)
    feed_point = np.array([0.0, 0.0, cfg.feed_offset_m])
    dists = np.linalg.norm(offsets - feed_point, axis=1)
    vec = np.exp(-1j * 2.0 * np.pi * dists / cfg.wavelength)
    return vec / np.linalg.norm(vec)


def synth_channels(scenario: Scenario, cfg: ScenarioConfig, seed: int) -> ChannelSet:
    """Synthesise Rician surface-to-user channels for one realization.

    Per user n the channel is

        h_n = sqrt(g_n) (sqrt(eta/(1+eta)) a_n + sqrt(1/(1+eta)) w_n)

    with eta the linear Rician factor, a_n the steering vector toward the
    user, w_n i.i.d. unit-variance circular Gaussian scatter, and g_n = 1
    under the normalized link budget or the free-space path gain under the
    physical one.  Deterministic in `seed`.
    """
    rng = np.random.default_rng(seed)
    wavelength = cfg.wavelength
    offsets = cfg.array.element_offsets(wavelength)
    num_elems = cfg.array.num_elements

    delta = scenario.ue_positions - scenario.uav_position
    dists = np.linalg.norm(delta, axis=1)
    if not (dists > 0).all():
        raise ValueError("a UE coincides with the UAV position")
    dirs = delta / dists[:, None]

    num_ues = scenario.ue_positions.shape[0]
    los = np.empty((num_ues, num_elems), dtype=np.complex128)
    for n in range(num_ues):
        los[n] = steering_vector(offsets, dirs[n], wavelength)

    scatter = rng.standard_normal((num_ues, num_elems)) + 1j * rng.standard_normal(
        (num_ues, num_elems)
    )
    scatter /= np.sqrt(2.0)

    eta = 10.0 ** (cfg.rician_factor_db / 10.0)
    mix = np.sqrt(eta / (1.0 + eta)) * los + np.sqrt(1.0 / (1.0 + eta)) * scatter

    if cfg.link_budget is LinkBudget.NORMALIZED:
        gains = np.ones(num_ues)
    else:
        gains = np.array([path_gain(d, cfg.carrier_hz) for d in dists])
    channels = np.sqrt(gains)[:, None] * mix

    return ChannelSet(
        ue_channels=channels,
        feed=feed_vector(cfg),
        noise_mw=cfg.noise_mw,
        ue_distances=dists,
    )
