import math

import numpy as np
import pytest

from locfuse.locate import rssi_to_range
from locfuse.model import OUTSIDE, RSSI_FLOOR, AccessPoint, LocfuseError, Position, RadioTechnology, Zone, zone_of
from locfuse.propagation import (
    PropagationParams,
    Scenario,
    fspl_db,
    generate_dataset,
    path_loss_db,
    simulate_range,
    simulate_rssi,
    walls_crossed,
)

G = RadioTechnology.FIVE_G
P44 = PropagationParams(pl0=44.0, n=2.0, sigma_shadow=0.0, wall_loss=8.0, range_noise_sigma=0.0)


def one_ap_scenario(params=P44, walls=(), zones=(Zone("A", 0, 0, 5, 5),), region=(0, 0, 10, 10)):
    ap = AccessPoint("g1", G, Position(0, 0, 0), 20.0)
    return Scenario((ap,), zones, walls, {G: params}, region)


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss_db(1.0, P44) == 44.0

    def test_one_decade(self):
        assert path_loss_db(10.0, P44) == pytest.approx(64.0, abs=1e-12)

    def test_fiveg_pl0_is_free_space_at_one_metre(self, scenario):
        # FSPL(1 m, f) = 20 log10(f / MHz) - 27.55, evaluated by hand for f = 3774.990 MHz
        hand = 20 * math.log10(3774.990) - 27.55
        assert hand == pytest.approx(43.988, abs=1e-3)
        assert scenario.params[G].pl0 == pytest.approx(hand, abs=1e-12)
        assert round(scenario.params[G].pl0, 1) == 44.0
        assert fspl_db(1.0, 3774.990) == pytest.approx(hand)

    def test_non_positive_distance(self):
        with pytest.raises(LocfuseError) as exc:
            path_loss_db(0.0, P44)
        assert exc.value.code == "non-positive-distance"

    def test_strictly_increasing(self):
        d = np.linspace(0.1, 50, 200)
        pl = [path_loss_db(v, P44) for v in d]
        assert all(b > a for a, b in zip(pl, pl[1:]))


class TestSimulateRssi:
    rng = np.random.default_rng(0)

    def test_no_walls(self):
        sc = one_ap_scenario()
        assert simulate_rssi(sc.roster[0], Position(10, 0, 0), sc, self.rng) == pytest.approx(-44.0, abs=1e-9)

    def test_one_wall(self):
        sc = one_ap_scenario(walls=((5, -1, 5, 1),))
        assert simulate_rssi(sc.roster[0], Position(10, 0, 0), sc, self.rng) == pytest.approx(-52.0, abs=1e-9)

    def test_floor_clip(self):
        # PL = 150 dB needs 10^((150 - 44) / 20) m
        d = 10 ** ((150 - 44) / 20)
        sc = one_ap_scenario()
        assert simulate_rssi(sc.roster[0], Position(d, 0, 0), sc, self.rng) == RSSI_FLOOR

    def test_coincident(self):
        sc = one_ap_scenario()
        with pytest.raises(LocfuseError) as exc:
            simulate_rssi(sc.roster[0], Position(0, 0, 0), sc, self.rng)
        assert exc.value.code == "degenerate-geometry"

    def test_deterministic_given_seed(self, scenario):
        ap = scenario.roster[0]
        a = simulate_rssi(ap, Position(4, 4, 1.5), scenario, np.random.default_rng(5))
        b = simulate_rssi(ap, Position(4, 4, 1.5), scenario, np.random.default_rng(5))
        assert a == b

    def test_monotone_along_wall_free_ray(self):
        sc = one_ap_scenario()
        vals = [simulate_rssi(sc.roster[0], Position(t, t / 2, 0), sc, self.rng) for t in np.linspace(0.5, 40, 100)]
        assert all(b < a for a, b in zip(vals, vals[1:]) if a > RSSI_FLOOR and b > RSSI_FLOOR)

    def test_reciprocal_with_ranging(self):
        sc = one_ap_scenario(params=PropagationParams(pl0=40.0, n=2.7, sigma_shadow=0.0))
        ap = sc.roster[0]
        for d in (0.7, 1.0, 3.3, 12.5, 31.0):
            rssi = simulate_rssi(ap, Position(d, 0, 0), sc, self.rng)
            assert rssi_to_range(rssi, ap.tx_power, sc.params[G]) == pytest.approx(d, rel=1e-9, abs=1e-9)


class TestWalls:
    def test_counts_each_crossed_wall(self):
        walls = ((1, -1, 1, 1), (2, -1, 2, 1), (3, 5, 3, 6))
        assert walls_crossed(Position(0, 0), Position(5, 0), walls) == 2

    def test_parallel_wall_not_crossed(self):
        assert walls_crossed(Position(0, 0), Position(5, 0), ((0, 1, 5, 1),)) == 0


class TestSimulateRange:
    ap = AccessPoint("g1", G, Position(0, 0, 0))

    def test_noiseless(self):
        assert simulate_range(self.ap, Position(3, 4, 0), P44, np.random.default_rng(0)) == 5.0

    def test_clamped_at_zero(self):
        class FixedDraw:
            def normal(self, loc, scale):
                return -0.5

        assert simulate_range(self.ap, Position(0.2, 0, 0), P44, FixedDraw()) == 0.0

    def test_noise_statistics(self):
        params = PropagationParams(pl0=44.0, n=2.0, range_noise_sigma=1.0)
        rng = np.random.default_rng(11)
        draws = np.array([simulate_range(self.ap, Position(10, 0, 0), params, rng) for _ in range(10_000)])
        assert abs(draws.std() - 1.0) < 0.1
        assert abs(draws.mean() - 10.0) < 0.05
        assert np.all(np.abs(draws - 10) < 5)


class TestGenerate:
    def test_deterministic(self, scenario):
        a = generate_dataset(scenario, 250, 7)
        b = generate_dataset(scenario, 250, 7)
        assert a == b

    def test_cardinality_and_label_closure(self, ref_dataset, scenario):
        assert len(ref_dataset) == 250
        allowed = {z.zone_id for z in scenario.zones} | {OUTSIDE}
        assert set(ref_dataset.labels()) <= allowed

    def test_every_ap_heard(self, ref_dataset, scenario):
        ids = [ap.ap_id for ap in scenario.roster]
        assert all(list(s.rssi) == ids for s in ref_dataset.samples)

    def test_label_soundness(self, ref_dataset):
        assert all(s.zone_label == zone_of(s.truth, ref_dataset.zones) for s in ref_dataset.samples)

    def test_zone_fraction_matches_area(self, scenario):
        ds = generate_dataset(scenario, 10_000, 3)
        x0, y0, x1, y1 = scenario.sampling_region
        region = (x1 - x0) * (y1 - y0)
        labels = ds.labels()
        for z in scenario.zones:
            frac = labels.count(z.zone_id) / len(labels)
            assert abs(frac - z.area / region) < 0.05

    def test_prefix_stable(self, scenario):
        # sample i depends only on (seed, i)
        small = generate_dataset(scenario, 20, 9)
        big = generate_dataset(scenario, 200, 9)
        for a, b in zip(small.samples, big.samples):
            assert (a.truth, a.rssi, a.zone_label) == (b.truth, b.rssi, b.zone_label)

    def test_empty_region(self):
        with pytest.raises(LocfuseError):
            generate_dataset(one_ap_scenario(region=(0, 0, 0, 5)), 10, 1)

    def test_with_ranges(self, scenario):
        ds = generate_dataset(scenario, 5, 1, with_ranges=True)
        assert all(set(s.ranges) == set(s.rssi) and min(s.ranges.values()) >= 0 for s in ds.samples)


class TestReferenceScenario:
    def test_roster(self, scenario):
        techs = [ap.tech for ap in scenario.roster]
        assert len(scenario.roster) == 6
        assert techs.count(RadioTechnology.FIVE_G) == 3
        assert techs.count(RadioTechnology.WIFI) == 3

    def test_heights_and_power(self, scenario):
        gnbs = [ap for ap in scenario.roster if ap.tech is G]
        assert {2.5, 3.5} <= {ap.position.z for ap in gnbs}
        assert all(ap.tx_power == 20.0 for ap in gnbs)
        assert {ap.position.z for ap in scenario.roster if ap.tech is RadioTechnology.WIFI} == {2.0}

    def test_labs(self, scenario):
        assert [(z.x_max - z.x_min, z.y_max - z.y_min) for z in scenario.zones] == [(7.0, 5.0), (7.0, 5.0)]
        assert (7.0, 0.0, 7.0, 5.0) in scenario.walls

    def test_calibration_constants(self, scenario):
        fiveg = scenario.params[G]
        wifi = scenario.params[RadioTechnology.WIFI]
        assert (fiveg.n, wifi.n) == (2.2, 2.5)
        assert fiveg.sigma_shadow == wifi.sigma_shadow == 4.0
        assert fiveg.wall_loss == wifi.wall_loss == 8.0
