"""Spherical-wavefront channel models for near-field multi-user MIMO.

Geometry helpers and channel synthesis for a base station (BS) uniform
planar array (UPA) serving several multi-antenna users, with optional
single-bounce scatterer paths.  Every UPA lies in a plane parallel to the
y-o-z plane; element (v, h) of an array with spacing ``d`` sits at offset
``(0, (v - 1) d, (h - 1) d)`` from the array reference corner and elements
are flattened row-major (v outer, h inner).

``near`` mode keeps the exact element-wise spherical distances, so the
phase curvature across the aperture is preserved.  ``far`` mode replaces
every propagation path by its planar-wave (first-order) approximation,
which collapses each path to a rank-one outer product.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299792458.0


class NearFieldRegionWarning(UserWarning):
    """A terminal sits beyond the Rayleigh distance of the link aperture."""


@dataclass(frozen=True)
class UpaConfig:
    """Uniform planar array: ``rows`` x ``cols`` elements at ``spacing_m``."""

    rows: int
    cols: int
    spacing_m: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("UPA needs at least one element per axis")
        if self.spacing_m <= 0.0:
            raise ValueError("element spacing must be positive")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def aperture_m(self) -> float:
        """Diagonal extent of the array."""
        dy = (self.rows - 1) * self.spacing_m
        dz = (self.cols - 1) * self.spacing_m
        return float(np.hypot(dy, dz))


@dataclass(frozen=True)
class Placement:
    """Position in spherical coordinates around the BS reference element.

    ``azimuth_rad`` is measured in the x-o-y plane from the x axis and
    ``elevation_rad`` from the z axis, so the Cartesian position is
    ``range_m * (cos az sin el, sin az sin el, cos el)``.
    """

    range_m: float
    azimuth_rad: float
    elevation_rad: float

    def __post_init__(self):
        if self.range_m <= 0.0:
            raise ValueError("range must be positive")

    @property
    def position(self) -> np.ndarray:
        sin_el = np.sin(self.elevation_rad)
        return self.range_m * np.array(
            [
                np.cos(self.azimuth_rad) * sin_el,
                np.sin(self.azimuth_rad) * sin_el,
                np.cos(self.elevation_rad),
            ]
        )


@dataclass(frozen=True)
class User:
    """A multi-antenna terminal: UPA geometry, placement and LoS gain."""

    upa: UpaConfig
    placement: Placement
    gain: complex


@dataclass(frozen=True)
class Scatterer:
    """Point scatterer with a unit-magnitude random phase factor.

    The per-user free-space amplitude of the bounced path depends on both
    hop lengths, so it is applied at channel-assembly time; ``gain`` only
    carries the common phase (and any extra reflectivity scaling).
    """

    placement: Placement
    gain: complex


@dataclass(frozen=True)
class Scenario:
    """One network drop: BS array, users and scatterers at a carrier."""

    bs: UpaConfig
    users: list[User] = field(default_factory=list)
    scatterers: list[Scatterer] = field(default_factory=list)
    carrier_hz: float = 28e9
    noise_w: float = 3.1622776601683794e-14

    def __post_init__(self):
        if self.carrier_hz <= 0.0:
            raise ValueError("carrier frequency must be positive")
        if self.noise_w <= 0.0:
            raise ValueError("noise power must be positive")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    def to_dict(self) -> dict:
        """Plain-type dump used for deterministic serialization."""
        return {
            "bs": [self.bs.rows, self.bs.cols, self.bs.spacing_m],
            "carrier_hz": self.carrier_hz,
            "noise_w": self.noise_w,
            "users": [
                {
                    "upa": [u.upa.rows, u.upa.cols, u.upa.spacing_m],
                    "range_m": u.placement.range_m,
                    "azimuth_rad": u.placement.azimuth_rad,
                    "elevation_rad": u.placement.elevation_rad,
                    "gain": [u.gain.real, u.gain.imag],
                }
                for u in self.users
            ],
            "scatterers": [
                {
                    "range_m": s.placement.range_m,
                    "azimuth_rad": s.placement.azimuth_rad,
                    "elevation_rad": s.placement.elevation_rad,
                    "gain": [s.gain.real, s.gain.imag],
                }
                for s in self.scatterers
            ],
        }


@dataclass(frozen=True)
class ChannelMatrix:
    """Per-user MIMO matrix (user elements x BS elements) and its mode."""

    matrix: np.ndarray
    mode: str


def antenna_positions(upa: UpaConfig, placement: Placement | None = None) -> np.ndarray:
    """Cartesian element coordinates of a UPA, shape (rows*cols, 3).

    With ``placement=None`` the reference element sits at the origin (the
    BS convention); otherwise the reference element sits at the placement
    position and the panel extends along +y / +z from there.
    """
    v = np.arange(upa.rows) * upa.spacing_m
    h = np.arange(upa.cols) * upa.spacing_m
    pos = np.zeros((upa.rows, upa.cols, 3))
    pos[:, :, 1] = v[:, None]
    pos[:, :, 2] = h[None, :]
    pos = pos.reshape(-1, 3)
    if placement is not None:
        pos = pos + placement.position[None, :]
    return pos


def pairwise_distance(rx_coords: np.ndarray, tx_coords: np.ndarray) -> np.ndarray:
    """Euclidean distances between two coordinate sets, shape (n_rx, n_tx)."""
    rx = np.asarray(rx_coords, dtype=float)
    tx = np.asarray(tx_coords, dtype=float)
    diff = rx[:, None, :] - tx[None, :, :]
    return np.linalg.norm(diff, axis=-1)


def array_response(
    upa: UpaConfig,
    focal: np.ndarray,
    wavelength_m: float,
    placement: Placement | None = None,
) -> np.ndarray:
    """Spherical-wave response of a UPA toward a focal point.

    Entry i is ``exp(-j 2 pi / lambda * ||focal - p_i||)`` for element
    coordinate ``p_i``; all entries have unit modulus.
    """
    if wavelength_m <= 0.0:
        raise ValueError("wavelength must be positive")
    pos = antenna_positions(upa, placement)
    dist = np.linalg.norm(np.asarray(focal, dtype=float)[None, :] - pos, axis=-1)
    return np.exp(-2j * np.pi * dist / wavelength_m)


def rayleigh_distance(tx: UpaConfig, rx: UpaConfig, wavelength_m: float) -> float:
    """Classical boundary 2 (D_tx + D_rx)^2 / lambda of the radiating near field."""
    aperture = tx.aperture_m + rx.aperture_m
    return 2.0 * aperture**2 / wavelength_m


def _planar_phase(offsets: np.ndarray, direction: np.ndarray, wavelength_m: float) -> np.ndarray:
    """Linear phase ``exp(+j 2 pi / lambda * direction . offset)`` per element."""
    proj = offsets @ np.asarray(direction, dtype=float)
    return np.exp(2j * np.pi * proj / wavelength_m)


def assemble_channel(scenario: Scenario, mode: str = "near") -> list[ChannelMatrix]:
    """Build the per-user MIMO matrices of a scenario.

    ``near`` evaluates exact element-to-element spherical distances for the
    direct path and every scatterer bounce.  ``far`` linearizes each path
    around the array reference elements, which yields the familiar product
    of steering vectors and a channel of rank at most 1 + L.

    Entry (row, col) of a user matrix pairs user element ``row`` with BS
    element ``col`` (both row-major flattened).  The direct path carries the
    user gain times ``exp(-j 2 pi r_k / lambda)``; each bounce carries the
    free-space amplitude ``lambda / (4 pi (d_bs + d_user))`` of its two hops
    times the scatterer phase factor.
    """
    if mode not in ("near", "far"):
        raise ValueError(f"unknown channel mode: {mode!r}")
    lam = scenario.wavelength_m
    bs_pos = antenna_positions(scenario.bs)
    scat_pos = [s.placement.position for s in scenario.scatterers]
    scat_range = [s.placement.range_m for s in scenario.scatterers]

    outside = [
        k
        for k, u in enumerate(scenario.users)
        if u.placement.range_m >= rayleigh_distance(scenario.bs, u.upa, lam)
    ]
    if outside:
        warnings.warn(
            f"users {outside} lie beyond the Rayleigh distance; the spherical "
            "model degenerates to planar there",
            NearFieldRegionWarning,
            stacklevel=2,
        )

    channels = []
    for user in scenario.users:
        center = user.placement.position
        r_k = user.placement.range_m
        user_pos = antenna_positions(user.upa, user.placement)
        los_scale = user.gain * np.exp(-2j * np.pi * r_k / lam)

        if mode == "near":
            dist = pairwise_distance(user_pos, bs_pos)
            h = los_scale * np.exp(-2j * np.pi * dist / lam)
            for p_l, r_l, scat in zip(scat_pos, scat_range, scenario.scatterers):
                d_user = np.linalg.norm(p_l[None, :] - user_pos, axis=-1)
                d_bs = np.linalg.norm(p_l[None, :] - bs_pos, axis=-1)
                amp = lam / (4.0 * np.pi * (r_l + np.linalg.norm(p_l - center)))
                a_user = np.exp(-2j * np.pi * d_user / lam)
                a_bs = np.exp(-2j * np.pi * d_bs / lam)
                h = h + amp * scat.gain * np.outer(a_user, a_bs)
        else:
            user_off = user_pos - center[None, :]
            u_hat = center / r_k
            a_user = np.conj(_planar_phase(user_off, u_hat, lam))
            a_bs = _planar_phase(bs_pos, u_hat, lam)
            h = los_scale * np.exp(-2j * np.pi * r_k / lam) * np.outer(a_user, a_bs)
            for p_l, r_l, scat in zip(scat_pos, scat_range, scenario.scatterers):
                d_lk = np.linalg.norm(p_l - center)
                w_hat = (p_l - center) / d_lk
                amp = lam / (4.0 * np.pi * (r_l + d_lk))
                a_user = _planar_phase(user_off, w_hat, lam)
                a_bs = _planar_phase(bs_pos, p_l / r_l, lam)
                path_phase = np.exp(-2j * np.pi * (r_l + d_lk) / lam)
                h = h + amp * scat.gain * path_phase * np.outer(a_user, a_bs)

        channels.append(ChannelMatrix(matrix=h, mode=mode))
    return channels


def analytic_dof(
    tx: UpaConfig,
    rx: UpaConfig,
    range_m: float,
    wavelength_m: float,
    n_scatterers: int = 0,
) -> float:
    """Closed-form spatial degrees of freedom of a UPA-to-UPA link.

    Combines the geometric term
    ``2 (Mtv-1)(Mth-1)(Mrv-1)(Mrh-1) d^4 / (lambda r)^2`` (equal element
    spacing at both ends) with the element-count ceilings, each offset by
    the scatterer count.  The raw value is reported without clamping, so
    links deep in the far field return values well below one.
    """
    if range_m <= 0.0:
        raise ValueError("range must be positive")
    if wavelength_m <= 0.0:
        raise ValueError("wavelength must be positive")
    d4 = (tx.spacing_m**2) * (rx.spacing_m**2)
    geo = (
        2.0
        * (tx.rows - 1)
        * (tx.cols - 1)
        * (rx.rows - 1)
        * (rx.cols - 1)
        * d4
        / (wavelength_m * range_m) ** 2
    )
    return float(min(geo + n_scatterers, rx.size + n_scatterers, tx.size + n_scatterers))


def edof(matrix: np.ndarray) -> float:
    """Effective degrees of freedom of a MIMO matrix.

    Participation ratio of the squared singular values,
    ``(sum s^2)^2 / sum s^4``: 1.0 for a rank-one matrix and the full rank
    for equal singular values.
    """
    m = np.asarray(matrix)
    if m.size == 0 or not np.any(m):
        raise ValueError("EDoF is undefined for an all-zero matrix")
    s2 = np.linalg.svd(m, compute_uv=False) ** 2
    return float(s2.sum() ** 2 / (s2**2).sum())
