"""Path loss, penetration loss, and spatially correlated LSP generation."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .scenario import LOS, NLOS, O2I, LSP_ORDER_LOS, LSP_ORDER_NLOS

C_LIGHT = 3.0e8  # m/s, free-space propagation velocity used throughout

AS_CAP_AZIMUTH = 104.0  # deg
AS_CAP_ZENITH = 52.0    # deg


class ValidityWarning(UserWarning):
    pass


def breakpoint_distance(family, h_bs, h_ue, fc_ghz, env_height=1.0):
    """Dual-slope breakpoint distance in meters; fc enters in Hz."""
    fc_hz = fc_ghz * 1e9
    if family == "rma_dual":
        return 2.0 * np.pi * h_bs * h_ue * fc_hz / C_LIGHT
    # uma/umi form with effective antenna heights
    return 4.0 * (h_bs - env_height) * (h_ue - env_height) * fc_hz / C_LIGHT


def _pl1_rma(d, fc_ghz, h):
    return (20.0 * np.log10(40.0 * np.pi * d * fc_ghz / 3.0)
            + min(0.03 * h ** 1.72, 10.0) * np.log10(d)
            - min(0.044 * h ** 1.72, 14.77)
            + 0.002 * np.log10(h) * d)


def _nlos_rma(d3d, fc_ghz, w, h, h_bs, h_ue):
    return (161.04 - 7.1 * np.log10(w) + 7.5 * np.log10(h)
            - (24.37 - 3.7 * (h / h_bs) ** 2) * np.log10(h_bs)
            + (43.42 - 3.1 * np.log10(h_bs)) * (np.log10(d3d) - 3.0)
            + 20.0 * np.log10(fc_ghz)
            - (3.2 * (np.log10(11.75 * h_ue)) ** 2 - 4.97))


def path_loss(sc, g, state, fc_ghz, nlos_floor=True, strict=False):
    """Outdoor path loss in dB for one link.

    ``nlos_floor`` applies the max(PL_LOS, PL_NLOS) convention for NLOS
    links.  Geometry outside the table validity range raises in strict mode
    and warns (extrapolating) otherwise.
    """
    if g.d3d <= 0:
        raise ValueError("non-positive link distance")
    family = sc.text("pl_family")
    d_min = sc.value("pl_d2d_min") if sc.has("pl_d2d_min") else 0.0
    d_max = sc.value("pl_d2d_max") if sc.has("pl_d2d_max") else np.inf
    if not (d_min <= g.d2d <= d_max):
        msg = f"{sc.name}: d2D={g.d2d:.1f} m outside validity [{d_min}, {d_max}]"
        if strict:
            raise ValueError(msg)
        warnings.warn(msg, ValidityWarning)
    # O2I links use the LOS/NLOS outdoor loss per their LOS draw; the state
    # key only switches the LSP/SSP tables.
    los = state.los == "LOS"

    if family == "rma_dual":
        h = sc.value("avg_building_height")
        w = sc.value("street_width")
        dbp = breakpoint_distance(family, g.h_bs, g.h_ue, fc_ghz)
        if g.d2d <= dbp:
            pl_los = _pl1_rma(g.d3d, fc_ghz, h)
        else:
            pl_los = _pl1_rma(dbp, fc_ghz, h) + 40.0 * np.log10(g.d3d / dbp)
        if los:
            return float(pl_los)
        pl_n = _nlos_rma(g.d3d, fc_ghz, w, h, g.h_bs, g.h_ue)
        return float(max(pl_los, pl_n) if nlos_floor else pl_n)

    if family in ("uma_dual", "umi_dual"):
        h_e = sc.value("pl_env_height") if sc.has("pl_env_height") else 1.0
        dbp = breakpoint_distance(family, g.h_bs, g.h_ue, fc_ghz, h_e)
        if family == "uma_dual":
            a, slope2, corr = 28.0, 40.0, 9.0
        else:
            a, slope2, corr = 32.4, 40.0, 9.5
        slope1 = 22.0 if family == "uma_dual" else 21.0
        if g.d2d <= dbp:
            pl_los = a + slope1 * np.log10(g.d3d) + 20.0 * np.log10(fc_ghz)
        else:
            pl_los = (a + slope2 * np.log10(g.d3d) + 20.0 * np.log10(fc_ghz)
                      - corr * np.log10(dbp ** 2 + (g.h_bs - g.h_ue) ** 2))
        if los:
            return float(pl_los)
        if family == "uma_dual":
            pl_n = 13.54 + 39.08 * np.log10(g.d3d) + 20.0 * np.log10(fc_ghz) \
                - 0.6 * (g.h_ue - 1.5)
        else:
            pl_n = 35.3 * np.log10(g.d3d) + 22.4 + 21.3 * np.log10(fc_ghz) \
                - 0.3 * (g.h_ue - 1.5)
        return float(max(pl_los, pl_n) if nlos_floor else pl_n)

    if family == "inh":
        pl_los = 32.4 + 17.3 * np.log10(g.d3d) + 20.0 * np.log10(fc_ghz)
        if los:
            return float(pl_los)
        pl_n = 17.3 + 38.3 * np.log10(g.d3d) + 24.9 * np.log10(fc_ghz)
        return float(max(pl_los, pl_n) if nlos_floor else pl_n)

    raise ValueError(f"unknown path-loss family {family!r}")


def sf_sigma(sc, state, d2d, fc_ghz, h_bs, h_ue):
    """Shadow-fading standard deviation, resolving dual-slope LOS tables."""
    key = state.state_key
    sigma = sc.value("sf_sigma", key)
    if key == LOS and sc.has("sf_sigma_far", key):
        dbp = breakpoint_distance(sc.text("pl_family"), h_bs, h_ue, fc_ghz,
                                  sc.value("pl_env_height") if sc.has("pl_env_height") else 1.0)
        if d2d > dbp:
            sigma = sc.value("sf_sigma_far", key)
    return sigma


def material_loss(materials, material, fc_ghz):
    """Material penetration loss in dB; linear in frequency."""
    if not (0.5 <= fc_ghz <= 100.0):
        raise ValueError("fc outside the 0.5-100 GHz material model range")
    try:
        intercept, slope = materials[material]
    except KeyError:
        raise ValueError(f"unknown material {material!r}") from None
    return intercept + slope * fc_ghz


_O2I_WEIGHTS = {
    # model -> [(weight, material), ...]; the high-loss weights follow the
    # published SMa outdoor-loss table verbatim.
    "low": [(0.3, "glass"), (0.7, "concrete")],
    "high": [(0.7, "IRR-glass"), (0.7, "concrete")],
    "low-A": [(0.3, "glass"), (0.7, "plywood")],
}
_O2I_SIGMA = {"low": 4.4, "high": 6.5, "low-A": 4.4}


def o2i_penetration(materials, model, fc_ghz, d2d_in, rng):
    """(pl_tw, pl_in, random) building penetration terms in dB."""
    if d2d_in < 0:
        raise ValueError("d2d_in must be non-negative")
    if model not in _O2I_WEIGHTS:
        raise ValueError(f"unknown O2I model {model!r}")
    acc = sum(w * 10.0 ** (-material_loss(materials, m, fc_ghz) / 10.0)
              for w, m in _O2I_WEIGHTS[model])
    pl_tw = 5.0 - 10.0 * np.log10(acc)
    pl_in = 0.5 * d2d_in
    rand = rng.normal(0.0, _O2I_SIGMA[model])
    return float(pl_tw), float(pl_in), float(rand)


@dataclass
class LargeScaleResult:
    pl_outdoor: float
    pl_tw: float = 0.0
    pl_in: float = 0.0
    sf: float = 0.0
    penetration_random: float = 0.0

    @property
    def total(self):
        return self.pl_outdoor + self.pl_tw + self.pl_in + self.penetration_random + self.sf


@dataclass
class LspSet:
    ds: float          # s
    asa: float         # deg
    asd: float         # deg
    zsa: float         # deg
    zsd: float         # deg
    sf_db: float
    k_db: float = None  # LOS only


@dataclass
class CorrelatedField:
    origin: np.ndarray          # (2,) grid origin in meters
    cell: float                 # grid cell size (1 m)
    grids: dict                 # lsp name -> 2D unit-variance grid
    sqrt_c: np.ndarray
    lsp_names: tuple

    def standardized(self, position):
        """Cross-correlated standard-normal LSP vector at a position."""
        ix = int(round((position[0] - self.origin[0]) / self.cell))
        iy = int(round((position[1] - self.origin[1]) / self.cell))
        g0 = self.grids[self.lsp_names[0]]
        if not (0 <= iy < g0.shape[0] and 0 <= ix < g0.shape[1]):
            raise ValueError("position outside the correlated field grid")
        raw = np.array([self.grids[m][iy, ix] for m in self.lsp_names])
        return self.sqrt_c @ raw


def _exp_fir_kernel(d_cor, cell):
    """One-sided separable exponential kernel, truncated at 4 d_cor.

    A causal exponential filter applied along each grid axis produces an
    exactly exponential autocorrelation exp(-lag/d_cor) along the axes
    (a symmetric radial kernel would not).  Coefficients are renormalized
    to unit output variance.
    """
    n = max(1, int(np.ceil(4.0 * d_cor / cell)))
    t = np.arange(n + 1) * cell
    k1 = np.exp(-t / d_cor)
    k = np.outer(k1, k1)
    return k / np.sqrt(np.sum(k ** 2))


def matrix_sqrt_psd(c):
    """Symmetric square root with negative eigenvalues clamped to zero."""
    w, v = np.linalg.eigh(0.5 * (c + c.T))
    clamped = np.clip(w, 0.0, None)
    if np.any(w < -1e-9):
        warnings.warn("cross-correlation matrix not PSD; negative eigenvalues clamped",
                      ValidityWarning)
    root = v @ np.diag(np.sqrt(clamped)) @ v.T
    # renormalize so the implied correlation matrix keeps a unit diagonal
    d = np.sqrt(np.sum(root ** 2, axis=1))
    d[d == 0] = 1.0
    return root / d[:, None]


def _field_grids(positions, sc, state_key, rng, cell):
    """Yield (lsp name, filtered grid) plus the grid origin.

    One i.i.d. N(0,1) grid per LSP is filtered with the exponential kernel
    for that LSP's correlation distance.  The "valid" convolution over a
    padded white grid keeps every stored node at full kernel support,
    i.e. exactly unit variance.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim == 1:
        positions = positions[None, :]
    if positions.shape[0] < 1:
        raise ValueError("at least one position required")
    dcor = sc.correlation_distances(state_key)
    names = LSP_ORDER_LOS if state_key == LOS else LSP_ORDER_NLOS
    margin = 8.0 * max(dcor.values())
    x0 = positions[:, 0].min() - margin
    x1 = positions[:, 0].max() + margin
    y0 = positions[:, 1].min() - margin
    y1 = positions[:, 1].max() + margin
    nx = int(np.ceil((x1 - x0) / cell)) + 1
    ny = int(np.ceil((y1 - y0) / cell)) + 1

    def gen():
        for m in names:
            k = _exp_fir_kernel(dcor[m], cell)
            pad = k.shape[0] - 1
            white = rng.standard_normal((ny + pad, nx + pad))
            yield m, fftconvolve(white, k, mode="valid")

    return np.array([x0, y0]), names, gen()


def build_correlated_field(positions, sc, state_key, rng, cell=1.0):
    """Spatially correlated standard-normal grids for all LSPs of a state;
    cross-correlation is imposed at lookup time by sqrt(C)."""
    origin, names, gen = _field_grids(positions, sc, state_key, rng, cell)
    grids = dict(gen)
    c, _ = sc.cross_correlation(state_key)
    return CorrelatedField(origin, cell, grids, matrix_sqrt_psd(c), names)


def correlated_standard_normals(positions, sc, state_key, rng, cell=1.0):
    """Cross-correlated standard-normal LSP vectors at the given positions.

    Numerically identical to build_correlated_field followed by per-position
    lookups, but only one LSP grid is resident at a time (memory-bounded
    for large layouts).  Returns (values (n_pos, n_lsp), lsp_names).
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim == 1:
        positions = positions[None, :]
    origin, names, gen = _field_grids(positions, sc, state_key, rng, cell)
    raw = np.empty((len(names), positions.shape[0]))
    for i, (_name, grid) in enumerate(gen):
        ix = np.round((positions[:, 0] - origin[0]) / cell).astype(int)
        iy = np.round((positions[:, 1] - origin[1]) / cell).astype(int)
        raw[i] = grid[iy, ix]
    c, _ = sc.cross_correlation(state_key)
    return (matrix_sqrt_psd(c) @ raw).T, names


def lsps_from_standardized(s, lsp_names, g, sc, state, fc_ghz):
    """Transform a cross-correlated standard-normal vector into an LspSet.

    Log-normal back-transform for DS and the angular spreads (with the
    104/52 deg caps), plain normal for SF and K.
    """
    key = state.state_key
    stats = sc.lsp_stats(key, fc_ghz)
    by_name = dict(zip(lsp_names, s))
    sigma_sf = sf_sigma(sc, state, g.d2d, fc_ghz, g.h_bs, g.h_ue)
    ds = 10.0 ** (stats["mu_lg_ds"] + stats["sigma_lg_ds"] * by_name["ds"])
    asa = min(10.0 ** (stats["mu_lg_asa"] + stats["sigma_lg_asa"] * by_name["asa"]), AS_CAP_AZIMUTH)
    asd = min(10.0 ** (stats["mu_lg_asd"] + stats["sigma_lg_asd"] * by_name["asd"]), AS_CAP_AZIMUTH)
    zsa = min(10.0 ** (stats["mu_lg_zsa"] + stats["sigma_lg_zsa"] * by_name["zsa"]), AS_CAP_ZENITH)
    zsd = min(10.0 ** (stats["mu_lg_zsd"] + stats["sigma_lg_zsd"] * by_name["zsd"]), AS_CAP_ZENITH)
    k_db = None
    if key == LOS:
        k_db = stats["mu_k"] + stats["sigma_k"] * by_name["k"]
    return LspSet(ds=float(ds), asa=float(asa), asd=float(asd), zsa=float(zsa),
                  zsd=float(zsd), sf_db=float(sigma_sf * by_name["sf"]), k_db=k_db)


def draw_lsps(field, g, ue_position, sc, state, fc_ghz):
    """LspSet at a UE position from a prebuilt CorrelatedField."""
    return lsps_from_standardized(field.standardized(ue_position),
                                  field.lsp_names, g, sc, state, fc_ghz)
