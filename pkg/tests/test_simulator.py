"""Tests for the radio model, the simulator and scenario files."""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json

import pytest
from spotex.config import SCENARIOS_DIR
from spotex.errors import ScenarioError
from spotex.proximity.proxlog import dump_record
from spotex.simulation.simulator import (
    ApPlacement, ClientPath, Scenario, Venue, load_scenario, rssi_model, simulate,
)


AP = "02:00:00:00:01:01"
CLIENT_A = "0a:00:00:00:00:01"
CLIENT_B = "0a:00:00:00:00:02"


def _make_scenario(clients, sigma=0.0, seed=7, period=1000, floor=-95.0, aps=None):
    venue = Venue(aps=tuple(aps or [ApPlacement("mycafe", AP, 0.0, 0.0, -40.0)]))
    return Scenario(venue=venue, clients=tuple(clients), scan_period_ms=period, seed=seed,
                    noise_sigma=sigma, visibility_floor=floor)


def _still(mac, x, t_end=2000):
    return ClientPath(mac, ((0, x, 0.0), (t_end, x, 0.0)))


def _scenario_file(tmp_path, data):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return str(path)


class TestRssiModel:
    def test_pass_reference_distance(self):
        assert rssi_model(1.0, -40.0) == pytest.approx(-40.0)

    def test_pass_ten_metres(self):
        assert rssi_model(10.0, -40.0) == pytest.approx(-70.0)

    def test_pass_zero_distance_uses_minimum_separation(self):
        assert rssi_model(0.0, -40.0) == rssi_model(0.1, -40.0)

    def test_pass_clamped(self):
        assert rssi_model(1e6, -40.0) == -100.0
        assert rssi_model(0.1, -10.0) == 0.0

    def test_pass_noise_added(self):
        assert rssi_model(10.0, -40.0, noise=2.5) == pytest.approx(-67.5)


class TestSimulate:
    def test_pass_stationary_client(self):
        records = simulate(_make_scenario([_still(CLIENT_A, 10.0)]))
        assert [r.t for r in records] == [0, 1000, 2000]
        assert {r.fingerprint.observations[0].rssi for r in records} == {-70}

    def test_pass_out_of_range_omitted(self):
        records = simulate(_make_scenario([_still(CLIENT_A, 10.0)], floor=-60.0))
        assert all(r.fingerprint.is_empty for r in records)

    def test_pass_interpolated_position(self):
        path = ClientPath(CLIENT_A, ((0, 1.0, 0.0), (2000, 100.0, 0.0)))
        records = simulate(_make_scenario([path]))
        rssi = [r.fingerprint.observations[0].rssi for r in records if not r.fingerprint.is_empty]
        assert rssi[0] == -40 and rssi == sorted(rssi, reverse=True)

    def test_pass_coincident_clients_identical(self):
        records = simulate(_make_scenario([_still(CLIENT_A, 5.0), _still(CLIENT_B, 5.0)]))
        by_t = {}
        for r in records:
            by_t.setdefault(r.t, []).append(r)
        for pair in by_t.values():
            assert [r.client for r in pair] == [CLIENT_A, CLIENT_B]
            assert pair[0].fingerprint == pair[1].fingerprint

    def test_pass_seed_determinism(self):
        scenario = _make_scenario([_still(CLIENT_A, 5.0, 20000)], sigma=3.0, seed=11)
        first = [dump_record(r) for r in simulate(scenario)]
        assert first == [dump_record(r) for r in simulate(scenario)]

    def test_pass_different_seed_differs(self):
        scenario = _make_scenario([_still(CLIENT_A, 5.0, 20000)], sigma=3.0, seed=11)
        a = [dump_record(r) for r in simulate(scenario)]
        b = [dump_record(r) for r in simulate(scenario.with_seed(12))]
        assert a != b

    def test_pass_strictly_increasing_per_client(self):
        scenario = load_scenario(os.path.join(SCENARIOS_DIR, "convoy.json"))
        records = simulate(scenario)
        for client in scenario.clients:
            times = [r.t for r in records if r.client == client.mac]
            assert all(b - a == scenario.scan_period_ms for a, b in zip(times, times[1:]))


class TestScenarioValidation:
    def test_fail_zero_period(self):
        with pytest.raises(ScenarioError):
            _make_scenario([_still(CLIENT_A, 1.0)], period=0)

    def test_fail_waypoints_out_of_order(self):
        with pytest.raises(ScenarioError):
            ClientPath(CLIENT_A, ((1000, 0.0, 0.0), (0, 1.0, 0.0)))

    def test_fail_duplicate_ap(self):
        with pytest.raises(ScenarioError):
            Venue(aps=(ApPlacement("a", AP, 0, 0), ApPlacement("b", AP, 1, 1)))


class TestLoadScenario:
    def test_pass_bundled_convoy(self):
        scenario = load_scenario(os.path.join(SCENARIOS_DIR, "convoy.json"))
        assert len(scenario.clients) == 4 and scenario.noise_sigma == 0.0

    def test_fail_malformed_json_position(self, tmp_path):
        path = _scenario_file(tmp_path, '{\n  "schema": 1,\n  "seed": ,\n}')
        with pytest.raises(ScenarioError) as exc:
            load_scenario(path)
        assert exc.value.line == 3

    def test_fail_wrong_schema(self, tmp_path):
        with pytest.raises(ScenarioError, match="schema"):
            load_scenario(_scenario_file(tmp_path, {"schema": 2}))

    def test_fail_missing_field(self, tmp_path):
        with pytest.raises(ScenarioError, match="clients"):
            load_scenario(_scenario_file(tmp_path, {"schema": 1, "venue": {"aps": []}}))

    def test_fail_bad_mac(self, tmp_path):
        data = {"schema": 1, "venue": {"aps": [{"ssid": "a", "mac": "zz", "x": 0, "y": 0}]},
                "clients": []}
        with pytest.raises(ScenarioError):
            load_scenario(_scenario_file(tmp_path, data))

    def test_fail_non_numeric_position(self, tmp_path):
        data = {"schema": 1, "venue": {"aps": [{"ssid": "a", "mac": AP, "x": "left", "y": 0}]},
                "clients": []}
        with pytest.raises(ScenarioError, match="'x'"):
            load_scenario(_scenario_file(tmp_path, data))
