import numpy as np
import pytest

from fr3sim.antenna import PanelArray, element_positions
from fr3sim.coefficients import draw_phases, synthesize
from fr3sim.geometry import sph_unit
from fr3sim.largescale import C_LIGHT
from fr3sim.nearfield import (element_wise_angles,
                              far_field_phase_error_bound, los_element_phase,
                              nlos_element_phase, source_distances)

from test_coefficients import geom_for, iso_element, simple_cs

LAM = C_LIGHT / 7e9


class TestSourceDistances:
    def test_specular_full_length(self):
        cs = simple_cs(n=4, m=2, p=np.array([0.4, 0.3, 0.2, 0.1]))
        nf = source_distances(cs, 100.0, 0.0, n_spec=2, alpha=2.0, beta=2.0,
                              rng=np.random.default_rng(0))
        total = 100.0 + np.repeat(cs.tap_delays[:, None], 2, axis=1) * C_LIGHT
        # strongest clusters carry sub-cluster delay offsets
        assert np.all(nf.s_bs[:2] == 1.0)
        assert np.allclose(nf.d1[2:] + nf.d2[2:], total[2:], rtol=1e-12)
        assert np.allclose(nf.d1[:2], nf.d2[:2])

    def test_complement_identity(self):
        rng = np.random.default_rng(1)
        for seed in range(50):
            n = 12
            p = rng.dirichlet(np.ones(n))
            cs = simple_cs(n=n, m=20, p=p)
            dtau = 2e-8
            nf = source_distances(cs, 250.0, dtau, n_spec=0, alpha=2.0,
                                  beta=3.0, rng=np.random.default_rng([2, seed]))
            tau_ray = np.repeat(cs.tap_delays[:, None], 20, axis=1)
            from fr3sim.smallscale import SUBCLUSTER_DELAY_FACTORS
            for ci in cs.strongest:
                for gi, grp in enumerate(cs.subclusters):
                    tau_ray[ci, grp] = cs.tap_delays[ci] + \
                        SUBCLUSTER_DELAY_FACTORS[gi] * cs.c_ds
            total = 250.0 + tau_ray * C_LIGHT + dtau * C_LIGHT
            assert np.allclose(nf.d1 + nf.d2, total, rtol=1e-12)
            assert np.all(nf.d1 >= 0) and np.all(nf.d2 >= 0)

    def test_beta_mean(self):
        cs = simple_cs(n=1, m=1)
        rng = np.random.default_rng(3)
        samples = rng.beta(2.0, 2.0, size=1_000_000)
        assert np.mean(samples) == pytest.approx(0.5, abs=0.005)
        samples = rng.beta(2.0, 5.0, size=1_000_000)
        assert np.mean(samples) == pytest.approx(2.0 / 7.0, rel=0.01)

    def test_invalid_beta(self):
        cs = simple_cs(n=2, m=1, p=np.array([0.6, 0.4]))
        with pytest.raises(ValueError):
            source_distances(cs, 10.0, 0.0, 0, -1.0, 2.0,
                             np.random.default_rng(0))


class TestLosPhase:
    def test_reference_element(self):
        ph = los_element_phase(100.0, 100.0, LAM)
        assert ph == pytest.approx(np.exp(-2j * np.pi * 100.0 / LAM), rel=1e-12)

    def test_unit_magnitude(self):
        rng = np.random.default_rng(4)
        d = rng.uniform(1, 500, 100)
        pair = d + rng.uniform(-0.5, 0.5, 100)
        assert np.allclose(np.abs(los_element_phase(d, pair, LAM)), 1.0)

    def test_broadside_pair(self):
        d3d, delta = 40.0, 0.7
        pair = np.hypot(d3d, delta)
        ph = los_element_phase(d3d, pair, LAM)
        assert np.angle(ph * np.exp(2j * np.pi * pair / LAM)) == \
            pytest.approx(0.0, abs=1e-12)


class TestNlosPhase:
    def test_zero_offset(self):
        r_hat = sph_unit(np.array([90.0]), np.array([0.0]))
        ph = nlos_element_phase(np.array([50.0]), r_hat, np.zeros((1, 3)), LAM)
        assert ph[0, 0] == pytest.approx(1.0, rel=1e-12)

    def test_parallel_small_offset(self):
        # element shifted along the ray: plane-wave first-order limit
        delta = LAM / 16
        r_hat = sph_unit(np.array([90.0]), np.array([0.0]))
        d_bar = delta * r_hat
        ph = nlos_element_phase(np.array([1000.0]), r_hat, d_bar, LAM)
        assert np.angle(ph[0, 0]) == pytest.approx(2 * np.pi * delta / LAM, rel=1e-4)

    def test_far_field_limit(self):
        # at d = 1e6 x aperture the spherical phase matches the plane wave
        # within the numerically evaluated Fresnel bound
        arr = PanelArray(m=64, n=16, p=1)
        pos, _ = element_positions(arr, LAM)
        aperture = np.linalg.norm(pos.max(axis=0) - pos.min(axis=0))
        d = 1e6 * aperture
        r_hat = sph_unit(np.array([75.0]), np.array([20.0]))
        nf = nlos_element_phase(np.array([d]), r_hat, pos, LAM)
        pw = np.exp(2j * np.pi * (pos @ r_hat[0]) / LAM)
        err = np.abs(np.angle(nf[:, 0] / pw))
        bound = far_field_phase_error_bound(aperture, LAM, d)
        assert err.max() < 1e-3
        assert err.max() <= bound * 1.1

    def test_degenerate_distance(self):
        r_hat = sph_unit(np.array([90.0]), np.array([0.0]))
        with pytest.raises(ValueError):
            nlos_element_phase(np.array([0.0]), r_hat, np.zeros((1, 3)), LAM)


class TestElementWiseAngles:
    def test_reference_reproduces_nominal(self):
        zen, az = 63.0, -48.0
        d1 = 37.0
        src = d1 * sph_unit(zen, az)
        a, z = element_wise_angles(src, np.zeros((1, 3)))
        assert a[0] == pytest.approx(az, abs=1e-9)
        assert z[0] == pytest.approx(zen, abs=1e-9)

    def test_mirror_symmetry(self):
        src = np.array([10.0, 0.0, 0.0])
        pos = np.array([[0.0, 0.5, 0.0], [0.0, -0.5, 0.0]])
        a, _z = element_wise_angles(src, pos)
        assert a[0] == pytest.approx(-a[1], abs=1e-12)

    def test_spread_shrinks_with_distance(self):
        arr = PanelArray(m=16, n=8, p=1)
        pos, _ = element_positions(arr, LAM)
        r_hat = sph_unit(80.0, 30.0)
        spreads = []
        for d1 in 2.0 * 10 ** np.arange(10):
            a, _ = element_wise_angles(d1 * r_hat, pos)
            spreads.append(a.max() - a.min())
        assert np.all(np.diff(spreads) < 0)

    def test_coincident_rejected(self):
        with pytest.raises(ValueError):
            element_wise_angles(np.zeros(3), np.zeros((1, 3)))


class TestFeatureIsolation:
    def _channels(self, near):
        cs = simple_cs(n=4, m=20, p=np.array([0.4, 0.3, 0.2, 0.1]))
        rng = np.random.default_rng(7)
        cs.aoa = rng.uniform(-180, 180, (4, 20))
        cs.zoa = rng.uniform(20, 160, (4, 20))
        cs.aod = rng.uniform(-180, 180, (4, 20))
        cs.zod = rng.uniform(20, 160, (4, 20))
        ph = draw_phases(4, 20, np.random.default_rng(8))
        bs = iso_element((0.0, 0.0, 10.0))
        bs.offsets = np.array([[0, 0, 0], [0, LAM / 2, 0], [0, LAM, 0]])
        bs.orientations = bs.orientations * 3
        bs.slants = np.zeros(3)
        bs.candidate_index = np.full(3, -1)
        ue = iso_element((30.0, 0.0, 1.5))
        nf = None
        if near:
            nf = source_distances(cs, 30.0, 0.0, 0, 2.0, 2.0,
                                  np.random.default_rng(9))
        return synthesize(geom_for(30.0), cs, ph, bs, ue, LAM,
                          near_field=nf, keep_rays=True)

    def test_amplitudes_and_delays_unchanged(self):
        h_ff = self._channels(False)
        h_nf = self._channels(True)
        assert np.array_equal(h_ff.delays, h_nf.delays)
        for a, b in zip(h_ff.ray_gains, h_nf.ray_gains):
            assert np.allclose(np.abs(a), np.abs(b), rtol=1e-12, atol=1e-15)
            assert not np.allclose(np.angle(a[0, 1:]), np.angle(b[0, 1:]))

    def test_nf_angles_reevaluates_patterns(self):
        # with element-wise angles on, directional patterns change ray
        # amplitudes (feature is optional and off by default)
        from fr3sim.antenna import ElementPattern, PanelArray, mount_bs_array
        from fr3sim.geometry import Orientation
        cs = simple_cs(n=3, m=4, p=np.array([0.5, 0.3, 0.2]))
        rng = np.random.default_rng(12)
        cs.aod = rng.uniform(-60, 60, (3, 4))
        cs.zod = rng.uniform(60, 120, (3, 4))
        ph = draw_phases(3, 4, np.random.default_rng(13))
        bs = mount_bs_array(PanelArray(m=4, n=2, p=1,
                                       element=ElementPattern.directional()),
                            np.array([0.0, 0.0, 10.0]),
                            Orientation(0, 0, 0), LAM)
        ue = iso_element((6.0, 0.0, 1.5))
        nf = source_distances(cs, 6.0, 0.0, 0, 2.0, 2.0,
                              np.random.default_rng(14))
        h_plain = synthesize(geom_for(6.0), cs, ph, bs, ue, LAM,
                             near_field=nf, nf_angles=False, keep_rays=True)
        h_ang = synthesize(geom_for(6.0), cs, ph, bs, ue, LAM,
                           near_field=nf, nf_angles=True, keep_rays=True)
        assert np.array_equal(h_plain.delays, h_ang.delays)
        changed = any(not np.allclose(np.abs(a), np.abs(b))
                      for a, b in zip(h_plain.ray_gains, h_ang.ray_gains))
        assert changed
