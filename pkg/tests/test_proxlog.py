"""Tests for the proximity log store and its JSON Lines format."""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json

import numpy as np
import pytest
from spotex.config import MAX_TIMESTAMP_MS, SEED
from spotex.errors import EmptyWindowError, LogFormatError, OutOfOrderRecordError
from spotex.proximity.proxlog import LogRecord, LogStore, load_log, save_log
from spotex.radio.fingerprint import ApObservation, Fingerprint


CLIENT_A = "0a:00:00:00:00:01"
CLIENT_B = "0a:00:00:00:00:02"
AP = "02:00:00:00:01:01"


def _make_record(client, t, rssi=-50):
    return LogRecord(client, Fingerprint.of(t, [ApObservation("mycafe", AP, rssi)]))


class TestAppend:
    def test_pass_interleaved_clients(self):
        store = LogStore()
        store.append(_make_record(CLIENT_A, 10)).append(_make_record(CLIENT_B, 5))
        assert [r.t for r in store.records()] == [5, 10]

    def test_pass_equal_timestamps(self):
        store = LogStore([_make_record(CLIENT_A, 10, -50), _make_record(CLIENT_A, 10, -60)])
        assert len(store.client_records(CLIENT_A)) == 2

    def test_fail_out_of_order(self):
        store = LogStore([_make_record(CLIENT_A, 10)])
        with pytest.raises(OutOfOrderRecordError, match="out-of-order"):
            store.append(_make_record(CLIENT_A, 9))

    def test_pass_client_mac_normalized(self):
        rec = _make_record(CLIENT_A.upper(), 0)
        assert rec.client == CLIENT_A


class TestQueries:
    def _store(self):
        return LogStore([_make_record(CLIENT_A, 0), _make_record(CLIENT_B, 1000),
                         _make_record(CLIENT_A, 2000, -55), _make_record(CLIENT_B, 3000),
                         _make_record(CLIENT_A, 4000, -60)])

    def test_pass_window_inclusive(self):
        assert [r.t for r in self._store().query_window(1000, 3000)] == [1000, 2000, 3000]

    def test_pass_window_excludes_client(self):
        window = self._store().query_window(0, 4000, exclude_client=CLIENT_A)
        assert {r.client for r in window} == {CLIENT_B}

    def test_pass_empty_result(self):
        assert self._store().query_window(5000, 6000) == []

    def test_fail_inverted_window(self):
        with pytest.raises(EmptyWindowError, match="empty window"):
            self._store().query_window(10, 5)

    def test_pass_previous_is_strict(self):
        prev = self._store().previous_measurement(CLIENT_A, 2000)
        assert prev.t == 0

    def test_pass_previous_none_at_start(self):
        assert self._store().previous_measurement(CLIENT_A, 0) is None

    def test_pass_previous_unknown_client(self):
        assert self._store().previous_measurement("0a:00:00:00:00:09", 10 ** 9) is None

    def test_pass_latest_in(self):
        rec = self._store().latest_in(CLIENT_A, 0, 3999)
        assert rec.t == 2000 and rec.fingerprint.observations[0].rssi == -55

    def test_pass_latest_in_last_on_ties(self):
        store = LogStore([_make_record(CLIENT_A, 10, -50), _make_record(CLIENT_A, 10, -60)])
        assert store.latest_in(CLIENT_A, 0, 10).fingerprint.observations[0].rssi == -60

    def test_pass_anchor(self):
        store = self._store()
        assert store.anchor(CLIENT_A, 3000).t == 2000
        assert store.anchor(CLIENT_A, -1) is None


def _random_appends(rng):
    """Records in a random interleaving; per-client times nondecreasing, ties frequent."""
    clients = [f"0a:00:00:00:00:{c:02x}" for c in range(1, int(rng.integers(1, 5)) + 1)]
    pending = {c: sorted(rng.integers(0, 40, size=int(rng.integers(0, 15))).tolist())
               for c in clients}
    appended = []
    while any(pending.values()):
        live = [c for c in clients if pending[c]]
        client = live[int(rng.integers(0, len(live)))]
        appended.append(_make_record(client, pending[client].pop(0), int(rng.integers(-95, -30))))
    return clients, appended


class TestQueriesAgainstLinearScan:
    def test_pass_query_window(self):
        rng = np.random.default_rng(SEED)
        for _ in range(200):
            clients, appended = _random_appends(rng)
            store = LogStore(appended)
            lo = int(rng.integers(-5, 45))
            hi = lo + int(rng.integers(0, 20))
            excluded = clients[int(rng.integers(0, len(clients)))] if rng.random() < 0.5 else None
            expected = sorted((r for r in appended if lo <= r.t <= hi and r.client != excluded),
                              key=lambda r: r.t)
            assert store.query_window(lo, hi, exclude_client=excluded) == expected

    def test_pass_previous_measurement(self):
        rng = np.random.default_rng(SEED + 1)
        for _ in range(200):
            clients, appended = _random_appends(rng)
            store = LogStore(appended)
            for client in clients:
                at = int(rng.integers(-5, 45))
                earlier = [r for r in appended if r.client == client and r.t < at]
                assert store.previous_measurement(client, at) == (earlier[-1] if earlier else None)


class TestPersistence:
    def test_pass_save_then_load(self, tmp_path):
        path = str(tmp_path / "log.jsonl")
        records = [_make_record(CLIENT_A, 0), _make_record(CLIENT_B, 5)]
        assert save_log(records, path) == 2
        assert load_log(path).records() == records

    def test_pass_line_shape(self, tmp_path):
        path = str(tmp_path / "log.jsonl")
        save_log([_make_record(CLIENT_A, 7)], path)
        with open(path) as f:
            row = json.loads(f.readline())
        assert row == {"t": 7, "client": CLIENT_A,
                       "aps": [{"ssid": "mycafe", "mac": AP, "rssi": -50}]}

    def test_pass_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text("# header\n\n" + json.dumps(_make_record(CLIENT_A, 1).to_dict()) + "\n")
        assert len(load_log(str(path))) == 1

    def test_fail_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text(json.dumps(_make_record(CLIENT_A, 1).to_dict()) + "\n{oops\n")
        with pytest.raises(LogFormatError, match="line 2"):
            load_log(str(path))

    def test_fail_out_of_order_names_line(self, tmp_path):
        path = tmp_path / "log.jsonl"
        rows = [_make_record(CLIENT_A, 5).to_dict(), _make_record(CLIENT_A, 1).to_dict()]
        path.write_text("".join(json.dumps(r) + "\n" for r in rows))
        with pytest.raises(LogFormatError, match="line 2"):
            load_log(str(path))

    def test_fail_missing_field(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text('{"t": 1, "aps": []}\n')
        with pytest.raises(LogFormatError, match="missing"):
            load_log(str(path))

    def test_fail_bad_rssi(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text(json.dumps({"t": 1, "client": CLIENT_A,
                                    "aps": [{"ssid": "x", "mac": AP, "rssi": 12}]}) + "\n")
        with pytest.raises(LogFormatError, match="line 1"):
            load_log(str(path))

    def test_fail_timestamp_out_of_range(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text(json.dumps({"t": MAX_TIMESTAMP_MS + 1, "client": CLIENT_A,
                                    "aps": []}) + "\n")
        with pytest.raises(LogFormatError, match="line 1"):
            load_log(str(path))

    def test_fail_negative_timestamp(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text(json.dumps({"t": -1, "client": CLIENT_A, "aps": []}) + "\n")
        with pytest.raises(LogFormatError, match="outside"):
            load_log(str(path))

    def test_fail_invalid_utf8_names_line(self, tmp_path):
        path = tmp_path / "log.jsonl"
        good = json.dumps(_make_record(CLIENT_A, 1).to_dict()).encode()
        path.write_bytes(good + b"\n" + b'{"t": 2, "client": "\xff"}\n')
        with pytest.raises(LogFormatError, match="line 2.*UTF-8"):
            load_log(str(path))
