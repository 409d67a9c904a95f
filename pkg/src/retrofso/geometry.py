"""Link budget constants and corner-cube reflector layouts."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError

MIN_CCR_SPACING = math.sqrt(2.0)  # m, keeps CCR paths beyond the correlation length
DEFAULT_WAVELENGTH = 1550e-9  # m


def attenuation_coefficient(visibility: float, wavelength: float) -> float:
    """Atmospheric attenuation coefficient (1/m) from visibility (Kim model).

    ``sigma = (3.912 / V) * (lambda / 550 nm) ** -q`` with the piecewise
    size-distribution exponent ``q`` of Kim et al.

    Parameters
    ----------
    visibility : float
        Visibility range in metres.
    wavelength : float
        Optical wavelength in metres.
    """
    if not visibility > 0:
        raise ConfigurationError(f"visibility must be positive, got {visibility!r}")
    if not wavelength > 0:
        raise ConfigurationError(f"wavelength must be positive, got {wavelength!r}")
    v_km = visibility / 1000.0
    if v_km > 50:
        q = 1.6
    elif v_km > 6:
        q = 1.3
    elif v_km > 1:
        q = 0.16 * v_km + 0.34
    elif v_km > 0.5:
        q = v_km - 0.5
    else:
        q = 0.0
    return (3.912 / visibility) * (wavelength / 550e-9) ** (-q)


@dataclass(frozen=True)
class LinkGeometry:
    """Physical parameters of the ground-station / UAV link.

    Exactly one of ``visibility`` and ``sigma_atm`` must be given, and
    exactly one of ``theta_gs`` and ``w``. Lengths are in metres, powers in
    watts.
    """

    z: float
    a_gs: float
    a_re: float
    sigma_s: float
    rho_refl: float
    p_gs: float
    p_th: float
    wavelength: float = DEFAULT_WAVELENGTH
    visibility: Optional[float] = None
    sigma_atm: Optional[float] = None
    theta_gs: Optional[float] = None
    w: Optional[float] = None

    def __post_init__(self):
        if (self.visibility is None) == (self.sigma_atm is None):
            raise ConfigurationError("give exactly one of visibility and sigma_atm")
        if (self.theta_gs is None) == (self.w is None):
            raise ConfigurationError("give exactly one of theta_gs and w")
        for name in ("z", "a_gs", "a_re", "p_gs", "p_th", "wavelength"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be a positive finite number, got {value!r}")
        for name in ("visibility", "theta_gs", "w"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigurationError(f"{name} must be positive, got {value!r}")
        if self.sigma_atm is not None and not self.sigma_atm >= 0:
            raise ConfigurationError(f"sigma_atm must be >= 0, got {self.sigma_atm!r}")
        if not self.sigma_s >= 0:
            raise ConfigurationError(f"sigma_s must be >= 0, got {self.sigma_s!r}")
        if not 0 < self.rho_refl <= 1:
            raise ConfigurationError(f"rho_refl must lie in (0, 1], got {self.rho_refl!r}")

    @property
    def beamwidth(self) -> float:
        """Uplink beamwidth at the footprint plane, ``w = z * theta_gs``."""
        if self.w is not None:
            return self.w
        return self.z * self.theta_gs

    @property
    def attenuation(self) -> float:
        if self.sigma_atm is not None:
            return self.sigma_atm
        return attenuation_coefficient(self.visibility, self.wavelength)


@dataclass(frozen=True)
class DerivedBudget:
    """Constants derived from a :class:`LinkGeometry`.

    ``c`` already includes the reflection effect and the ground-station
    power, so outage is ``Prob[S < p_th / c]``.
    """

    c: float
    a0: float
    w: float
    theta_re: float
    g_p: float

    def threshold(self, p_th: float) -> float:
        """Outage threshold on the normalized power ``S``."""
        return p_th / self.c


def derive_budget(geom: LinkGeometry) -> DerivedBudget:
    """Compute the link constant, peak pointing gain and downlink constants."""
    lam = geom.wavelength
    z = geom.z
    w = geom.beamwidth
    theta_re = 1.22 * lam / geom.a_re
    g_p = 2.0 * geom.a_gs**2 / (z * theta_re) ** 2
    geometric = 1.34 * geom.a_gs**2 * geom.a_re**2 / (z**2 * lam**2)
    c = geometric * math.exp(-2.0 * geom.attenuation * z) * geom.rho_refl * geom.p_gs
    a0 = 2.0 * geom.a_re**2 / w**2
    if a0 > 1:
        warnings.warn(
            f"peak pointing gain A0={a0:.3g} exceeds 1; beam is not in the far-field regime",
            RuntimeWarning,
            stacklevel=2,
        )
    return DerivedBudget(c=c, a0=a0, w=w, theta_re=theta_re, g_p=g_p)


@dataclass(frozen=True, eq=False)
class CCRLayout:
    """Positions of the CCRs on the footprint plane, telescope at the origin.

    Parameters
    ----------
    positions : array-like, shape (M, 2)
        Cartesian CCR positions in metres.
    min_spacing : float
        Required clearance between any two CCRs and between each CCR and
        the origin.
    """

    positions: np.ndarray
    min_spacing: float = MIN_CCR_SPACING

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ConfigurationError("positions must be a non-empty (M, 2) array")
        if not np.all(np.isfinite(pos)):
            raise ConfigurationError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        # small slack so that layouts built exactly at the floor pass
        floor = self.min_spacing * (1 - 1e-12)
        radii = np.hypot(pos[:, 0], pos[:, 1])
        if np.any(radii < floor):
            raise ConfigurationError(
                f"CCR closer than {self.min_spacing:.4g} m to the telescope (min {radii.min():.4g} m)"
            )
        if len(pos) > 1:
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.hypot(diff[..., 0], diff[..., 1])
            dist[np.diag_indices(len(pos))] = np.inf
            if np.any(dist < floor):
                raise ConfigurationError(
                    f"CCR pair closer than {self.min_spacing:.4g} m (min {dist.min():.4g} m)"
                )

    def __len__(self):
        return len(self.positions)

    def __eq__(self, other):
        if not isinstance(other, CCRLayout):
            return NotImplemented
        return np.array_equal(self.positions, other.positions) and self.min_spacing == other.min_spacing

    @property
    def m(self) -> int:
        return len(self.positions)

    @property
    def radii(self) -> np.ndarray:
        """Boresight offsets ``|s_i|``."""
        return np.hypot(self.positions[:, 0], self.positions[:, 1])

    @property
    def angles(self) -> np.ndarray:
        """Polar angles ``arg(s_i)``."""
        return np.arctan2(self.positions[:, 1], self.positions[:, 0])

    @classmethod
    def from_polar(cls, radii: Sequence[float], angles: Sequence[float], **kw) -> "CCRLayout":
        r = np.asarray(radii, dtype=float)
        a = np.asarray(angles, dtype=float)
        return cls(np.column_stack([r * np.cos(a), r * np.sin(a)]), **kw)


def layout_linear(m: int, spacing: float, min_spacing: float = MIN_CCR_SPACING) -> CCRLayout:
    """CCRs on the x axis at ``±spacing, ±2*spacing, ...``.

    The origin cell is skipped since the telescope sits there; for odd ``m``
    the extra reflector goes on the positive side.
    """
    if int(m) != m or m < 1:
        raise ConfigurationError(f"number of CCRs must be a positive integer, got {m!r}")
    if not spacing > 0:
        raise ConfigurationError(f"spacing must be positive, got {spacing!r}")
    n_pos = (m + 1) // 2
    xs = [spacing * k for k in range(1, n_pos + 1)]
    xs += [-spacing * k for k in range(1, m - n_pos + 1)]
    xs.sort()
    return CCRLayout(np.column_stack([xs, np.zeros(m)]), min_spacing=min_spacing)


def circular_radius_for(m: int, min_spacing: float = MIN_CCR_SPACING) -> float:
    """Smallest ring radius holding ``m`` equally spaced CCRs at the spacing floor."""
    if m <= 1:
        return min_spacing
    return max(min_spacing, min_spacing / (2.0 * math.sin(math.pi / m)))


def layout_circular(m: int, radius: float, min_spacing: float = MIN_CCR_SPACING) -> CCRLayout:
    """``m`` CCRs equally spaced on a circle, the first at angle 0."""
    if int(m) != m or m < 1:
        raise ConfigurationError(f"number of CCRs must be a positive integer, got {m!r}")
    if not radius > 0:
        raise ConfigurationError(f"radius must be positive, got {radius!r}")
    angles = 2.0 * np.pi * np.arange(m) / m
    return CCRLayout.from_polar(np.full(m, float(radius)), angles, min_spacing=min_spacing)
