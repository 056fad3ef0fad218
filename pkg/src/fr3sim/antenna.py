"""Element patterns, planar arrays, and UE device antenna placement."""

from dataclasses import dataclass, field

import numpy as np

from .geometry import Orientation, gcs_to_lcs, vec3


@dataclass(frozen=True)
class ElementPattern:
    """Parabolic-cut element power pattern with slant polarization.

    phi_3db / theta_3db are the 3 dB beamwidths in degrees, a_max the
    azimuth-cut floor and sla_v the elevation side-lobe floor (both in dB,
    >= 0), max_gain_dbi the boresight directive gain.  slant_deg is the
    polarization slant angle zeta in the element frame.
    """
    phi_3db: float = 65.0
    theta_3db: float = 65.0
    a_max: float = 30.0
    sla_v: float = 30.0
    max_gain_dbi: float = 8.0
    slant_deg: float = 0.0

    @staticmethod
    def directional(slant_deg=0.0):
        return ElementPattern(slant_deg=slant_deg)

    @staticmethod
    def isotropic(slant_deg=0.0):
        return ElementPattern(phi_3db=65.0, theta_3db=65.0, a_max=0.0,
                              sla_v=0.0, max_gain_dbi=0.0, slant_deg=slant_deg)


def element_power_pattern(p, zenith_deg, azimuth_deg):
    """Relative element power pattern A''(theta'', phi'') in dB (<= 0).

    Vertical and horizontal parabolic cuts are combined and floored at
    -a_max.  Add ``p.max_gain_dbi`` for the directive gain.
    """
    zen = np.asarray(zenith_deg, dtype=float)
    az = np.asarray(azimuth_deg, dtype=float)
    a_v = -np.minimum(12.0 * ((zen - 90.0) / p.theta_3db) ** 2, p.sla_v)
    a_h = -np.minimum(12.0 * (az / p.phi_3db) ** 2, p.a_max)
    return -np.minimum(-(a_v + a_h), p.a_max)


def field_pattern_lcs(p, zenith_deg, azimuth_deg):
    """(F_theta, F_phi) in the element frame; |F_th|^2 + |F_ph|^2 = A."""
    a_db = element_power_pattern(p, zenith_deg, azimuth_deg) + p.max_gain_dbi
    amp = 10.0 ** (a_db / 20.0)
    zeta = np.radians(p.slant_deg)
    return amp * np.cos(zeta), amp * np.sin(zeta)


def field_pattern(p, orientation, zenith_deg, azimuth_deg):
    """(F_theta, F_phi) in the GCS for an element mounted with ``orientation``.

    The GCS direction is rotated into the element frame, the slanted field
    components are evaluated there, and the polarization basis is rotated
    back through the angle psi.  Power is preserved exactly.
    """
    zen_l, az_l, psi = gcs_to_lcs(orientation, zenith_deg, azimuth_deg)
    f_th_l, f_ph_l = field_pattern_lcs(p, zen_l, az_l)
    c, s = np.cos(np.radians(psi)), np.sin(np.radians(psi))
    return c * f_th_l - s * f_ph_l, s * f_th_l + c * f_ph_l


@dataclass(frozen=True)
class PanelArray:
    """Uniform planar array of Mg x Ng panels, each M x N elements.

    Spacings are in wavelengths; panel spacings default to M/2 and N/2
    (i.e. M lambda/2 and N lambda/2).  P=2 places co-located +/-45 deg
    slanted element pairs.
    """
    mg: int = 1
    ng: int = 1
    m: int = 1            # vertical elements per panel
    n: int = 1            # horizontal elements per panel
    p: int = 1            # polarizations (1 or 2)
    d_v: float = 0.5
    d_h: float = 0.5
    d_gv: float = 0.0     # 0 -> default M * d_v
    d_gh: float = 0.0     # 0 -> default N * d_h
    element: ElementPattern = field(default_factory=ElementPattern)
    pol_slants: tuple = (45.0, -45.0)

    def n_elements(self):
        return self.mg * self.ng * self.m * self.n * self.p

    def slants(self):
        if self.p == 1:
            return (self.element.slant_deg,)
        return self.pol_slants[: self.p]


def element_positions(a, wavelength):
    """Element offsets in the array frame (boresight +x, columns along +y,
    rows along +z), centered on the array's geometric center.

    Returns (positions (K, 3) in meters, pol_index (K,)).  Ordering is
    polarization-major, then panel row, panel column, element row, element
    column; co-located dual-polarized pairs share a position.
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    d_gv = a.d_gv if a.d_gv > 0 else a.m * a.d_v
    d_gh = a.d_gh if a.d_gh > 0 else a.n * a.d_h
    ys, zs = [], []
    for gv in range(a.mg):
        for gh in range(a.ng):
            for r in range(a.m):
                for c in range(a.n):
                    ys.append(gh * d_gh + c * a.d_h)
                    zs.append(gv * d_gv + r * a.d_v)
    ys = np.array(ys) * wavelength
    zs = np.array(zs) * wavelength
    ys -= ys.mean()
    zs -= zs.mean()
    single = np.stack([np.zeros_like(ys), ys, zs], axis=1)
    pos = np.tile(single, (a.p, 1))
    pol = np.repeat(np.arange(a.p), single.shape[0])
    return pos, pol


@dataclass(frozen=True)
class UEDevice:
    """Handheld or CPE device with candidate antenna locations.

    Dimensions follow the (X, Y, Z) cm convention: handheld (15, 7, 0) lies
    in the horizontal plane, CPE (0, 20, 20) is a vertical square.  Each
    candidate's boresight points along the outward radial from the device
    center (the center candidate uses the device normal).
    """
    kind: str = "handheld"  # "handheld" | "CPE"

    @property
    def dims_cm(self):
        return (15.0, 7.0, 0.0) if self.kind == "handheld" else (0.0, 20.0, 20.0)


def _outward_orientation(offset):
    n = np.linalg.norm(offset)
    if n == 0.0:
        return Orientation(0.0, 0.0, 0.0)
    u = offset / n
    alpha = np.degrees(np.arctan2(u[1], u[0]))
    beta = np.degrees(-np.arcsin(np.clip(u[2], -1.0, 1.0)))
    return Orientation(float(alpha), float(beta), 0.0)


def ue_candidate_locations(device):
    """Candidate (offset, orientation) pairs; offsets in meters.

    Handheld: 4 corners + 4 edge midpoints of the 15 x 7 cm rectangle (8).
    CPE: corners, edge midpoints, and center of the 20 x 20 cm vertical
    square (9).
    """
    if device.kind == "handheld":
        hx, hy = 0.075, 0.035
        offs = [(hx, hy, 0), (hx, -hy, 0), (-hx, hy, 0), (-hx, -hy, 0),
                (hx, 0, 0), (-hx, 0, 0), (0, hy, 0), (0, -hy, 0)]
    elif device.kind == "CPE":
        h = 0.10
        offs = [(0, h, h), (0, h, -h), (0, -h, h), (0, -h, -h),
                (0, h, 0), (0, -h, 0), (0, 0, h), (0, 0, -h), (0, 0, 0)]
    else:
        raise ValueError(f"unknown UE device kind: {device.kind!r}")
    out = []
    for o in offs:
        off = vec3(*o)
        out.append((off, _outward_orientation(off)))
    return out


@dataclass
class MountedArray:
    """An antenna aperture placed in the GCS.

    offsets: (K, 3) element position offsets from ``reference`` in meters.
    orientations: per-element mounting Orientation (pattern frame).
    slants: per-element polarization slant in degrees.
    candidate_index: maps elements to device candidate locations (UE masks);
    -1 when not applicable.
    """
    reference: np.ndarray
    offsets: np.ndarray
    orientations: list
    slants: np.ndarray
    pattern: ElementPattern
    candidate_index: np.ndarray

    @property
    def size(self):
        return self.offsets.shape[0]

    def positions(self):
        return self.reference[None, :] + self.offsets

    def aperture(self):
        """Largest pairwise element separation (meters)."""
        if self.size == 1:
            return 0.0
        span = self.offsets.max(axis=0) - self.offsets.min(axis=0)
        return float(np.linalg.norm(span))

    def pattern_for(self, k):
        base = self.pattern
        return ElementPattern(base.phi_3db, base.theta_3db, base.a_max,
                              base.sla_v, base.max_gain_dbi, float(self.slants[k]))


def mount_bs_array(array, site_position, sector_orientation, wavelength):
    """Place a PanelArray at a site, boresight along the sector bearing."""
    pos_lcs, pol = element_positions(array, wavelength)
    rot = sector_orientation.rotation()
    offsets = pos_lcs @ rot.T
    slants = np.array([array.slants()[i] for i in pol])
    orientations = [sector_orientation] * offsets.shape[0]
    return MountedArray(np.asarray(site_position, dtype=float), offsets,
                        orientations, slants, array.element,
                        np.full(offsets.shape[0], -1, dtype=int))


def mount_ue_device(device, ue_position, dual_polarized=True, pattern=None,
                    device_orientation=Orientation(0, 0, 0)):
    """Place all candidate antennas of a UE device (dual-polarized pairs by
    default) around the UE position.  Device orientation defaults to the
    identity (GCS == device frame)."""
    pat = pattern if pattern is not None else ElementPattern.isotropic()
    rot = device_orientation.rotation()
    cands = ue_candidate_locations(device)
    slant_set = (0.0, 90.0) if dual_polarized else (0.0,)
    offsets, orientations, slants, cidx = [], [], [], []
    for slant in slant_set:
        for i, (off, ori) in enumerate(cands):
            offsets.append(rot @ off)
            orientations.append(Orientation(
                ori.alpha + device_orientation.alpha,
                ori.beta + device_orientation.beta,
                ori.gamma + device_orientation.gamma))
            slants.append(slant)
            cidx.append(i)
    return MountedArray(np.asarray(ue_position, dtype=float),
                        np.array(offsets), orientations, np.array(slants),
                        pat, np.array(cidx, dtype=int))
