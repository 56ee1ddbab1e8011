"""Tests for the check-in registry."""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest
from spotex.config import SEED
from spotex.errors import AlreadyExpiredError, CheckInError, MetricError
from spotex.proximity.checkin import (
    CheckInRecord, CheckInRegistry, load_registry, make_checkin, save_registry,
)
from spotex.radio.fingerprint import ApObservation, Fingerprint, average_vector
from spotex.radio.metrics import distance


APS = [f"02:00:00:00:00:{i:02x}" for i in range(1, 7)]


def _make_fp(t=0, **rssi):
    """Keywords ap1=-50 ... pick APS[0] ..."""
    return Fingerprint.of(t, [ApObservation("net", APS[int(k[2:]) - 1], v) for k, v in rssi.items()])


def _make_record(identity, t=0, ttl=1000, **rssi):
    return make_checkin(identity, _make_fp(t, **rssi), ttl_ms=ttl)


class TestCheckInRecord:
    def test_pass_make_checkin(self):
        rec = _make_record("alice", t=100, ttl=50, ap1=-50)
        assert rec.expires_at == 150

    def test_fail_empty_identity(self):
        with pytest.raises(CheckInError):
            _make_record("", ap1=-50)

    def test_fail_expiry_not_after_scan(self):
        with pytest.raises(CheckInError):
            CheckInRecord("alice", _make_fp(100, ap1=-50), expires_at=100)

    def test_fail_non_integer_attr(self):
        with pytest.raises(CheckInError):
            make_checkin("alice", _make_fp(ap1=-50), attrs={"friends": "many"})

    def test_fail_attrs_not_a_mapping(self):
        with pytest.raises(CheckInError, match="attrs must be an object"):
            CheckInRecord("alice", _make_fp(0, ap1=-50), expires_at=10, attrs=[])


class TestRegister:
    def test_pass_first_checkin(self):
        registry = CheckInRegistry().register(_make_record("alice", ap1=-50), now=0)
        assert len(registry) == 1

    def test_pass_replacement_keeps_newest(self):
        registry = CheckInRegistry()
        registry.register(_make_record("alice", t=0, ap1=-50), now=0)
        registry.register(_make_record("alice", t=10, ap2=-60), now=10)
        assert len(registry) == 1
        assert registry.get("alice").t == 10

    def test_pass_older_record_does_not_replace(self):
        registry = CheckInRegistry()
        registry.register(_make_record("alice", t=10, ap1=-50), now=10)
        registry.register(_make_record("alice", t=0, ap2=-60), now=10)
        assert registry.get("alice").t == 10

    def test_pass_two_identities(self):
        registry = CheckInRegistry()
        registry.register(_make_record("alice", ap1=-50), now=0)
        registry.register(_make_record("bob", ap1=-50), now=0)
        assert len(registry) == 2

    def test_fail_already_expired(self):
        with pytest.raises(AlreadyExpiredError, match="already expired"):
            CheckInRegistry().register(_make_record("alice", ttl=10, ap1=-50), now=10)


class TestNearby:
    def test_pass_empty_registry(self):
        assert CheckInRegistry().nearby(_make_fp(ap1=-50), "euclidean", 10, now=0) == []

    def test_pass_identical_fingerprint_at_zero(self):
        registry = CheckInRegistry().register(_make_record("alice", ap1=-50, ap2=-70), now=0)
        assert registry.nearby(_make_fp(ap1=-50, ap2=-70), "euclidean", 0, now=0) == [("alice", 0.0)]

    def test_fail_no_shared_access_point(self):
        registry = CheckInRegistry().register(_make_record("alice", ap3=-50), now=0)
        assert registry.nearby(_make_fp(ap1=-50), "euclidean", 1e9, now=0) == []

    def test_fail_expired_record(self):
        registry = CheckInRegistry().register(_make_record("alice", ttl=100, ap1=-50), now=0)
        assert registry.nearby(_make_fp(ap1=-50), "euclidean", 10, now=100) == []

    def test_pass_ascending_with_identity_ties(self):
        registry = CheckInRegistry()
        for identity, rssi in (("carol", -60), ("bob", -50), ("alice", -50)):
            registry.register(_make_record(identity, ap1=rssi), now=0)
        hits = registry.nearby(_make_fp(ap1=-50), "euclidean", 100, now=0)
        assert [i for i, _ in hits] == ["alice", "bob", "carol"]

    def test_pass_exclude_identity(self):
        registry = CheckInRegistry()
        registry.register(_make_record("alice", ap1=-50), now=0)
        registry.register(_make_record("bob", ap1=-52), now=0)
        hits = registry.nearby(_make_fp(ap1=-50), "euclidean", 10, now=0, exclude_identity="alice")
        assert [i for i, _ in hits] == ["bob"]

    def test_fail_unknown_metric(self):
        with pytest.raises(MetricError):
            CheckInRegistry().nearby(_make_fp(ap1=-50), "cosine", 1, now=0)

    def test_fail_negative_threshold(self):
        with pytest.raises(CheckInError):
            CheckInRegistry().nearby(_make_fp(ap1=-50), "euclidean", -1, now=0)

    def test_pass_unscorable_pair_skipped(self):
        registry = CheckInRegistry()
        registry.register(_make_record("alice", ap1=0), now=0)
        registry.register(_make_record("bob", ap1=-20), now=0)
        assert [i for i, _ in registry.nearby(_make_fp(ap1=0), "tanimoto", 1.0, now=0)] == ["bob"]

    def test_pass_linear_scan_oracle(self):
        rng = np.random.default_rng(SEED)
        for _ in range(100):
            registry = CheckInRegistry()
            records = []
            for k in range(int(rng.integers(0, 12))):
                heard = [i for i in range(len(APS)) if rng.random() < 0.4]
                fp = Fingerprint.of(int(rng.integers(0, 1000)),
                                    [ApObservation("net", APS[i], int(rng.integers(-95, -30)))
                                     for i in heard])
                rec = make_checkin(f"user{k}", fp, ttl_ms=int(rng.integers(1, 2000)))
                if rec.expires_at > 0:
                    registry.register(rec, now=0)
                    records.append(rec)

            scan = Fingerprint.of(0, [ApObservation("net", APS[i], int(rng.integers(-95, -30)))
                                       for i in range(len(APS)) if rng.random() < 0.5])
            metric = ["euclidean", "tanimoto"][int(rng.integers(0, 2))]
            threshold = float(rng.uniform(0, 120)) if metric == "euclidean" else float(rng.uniform(0, 1))
            now = int(rng.integers(0, 2500))

            expected = []
            for rec in records:
                shared = set(scan.macs) & set(rec.fingerprint.macs)
                if rec.expires_at <= now or not shared:
                    continue
                d = distance(average_vector([scan]), average_vector([rec.fingerprint]), metric).value
                if d <= threshold:
                    expected.append((rec.identity, d))
            expected.sort(key=lambda item: (item[1], item[0]))

            assert registry.nearby(scan, metric, threshold, now) == expected


class TestExpire:
    def _registry(self):
        registry = CheckInRegistry()
        registry.register(_make_record("alice", t=0, ttl=100, ap1=-50), now=0)
        registry.register(_make_record("bob", t=0, ttl=300, ap1=-50), now=0)
        return registry

    def test_pass_nothing_expired(self):
        registry = self._registry()
        assert registry.expire(50) == 0 and len(registry) == 2

    def test_pass_all_expired(self):
        registry = self._registry()
        assert registry.expire(300) == 2 and len(registry) == 0

    def test_pass_mixed(self):
        registry = self._registry()
        registry.expire(100)
        assert [r.identity for r in registry.records()] == ["bob"]


class TestPersistence:
    def test_pass_save_then_load(self, tmp_path):
        path = str(tmp_path / "registry.jsonl")
        registry = CheckInRegistry()
        registry.register(make_checkin("alice", _make_fp(5, ap1=-50), ttl_ms=100,
                                       attrs={"friends": 250}), now=5)
        assert save_registry(registry, path) == 1
        loaded = load_registry(path)
        assert loaded.records() == registry.records()
        assert loaded.get("alice").attrs == {"friends": 250}

    def test_pass_missing_file_is_empty(self, tmp_path):
        assert len(load_registry(str(tmp_path / "absent.jsonl"))) == 0

    def test_fail_bad_line(self, tmp_path):
        path = tmp_path / "registry.jsonl"
        path.write_text('{"identity": "alice"}\n')
        with pytest.raises(CheckInError, match="line 1"):
            load_registry(str(path))

    def test_fail_attrs_list_names_line(self, tmp_path):
        path = tmp_path / "registry.jsonl"
        path.write_text('{"identity": "alice", "t": 0, "expires_at": 10, "attrs": [], '
                        '"aps": []}\n')
        with pytest.raises(CheckInError, match="line 1"):
            load_registry(str(path))

    def test_fail_invalid_utf8(self, tmp_path):
        path = tmp_path / "registry.jsonl"
        path.write_bytes(b'{"identity": "\xff"}\n')
        with pytest.raises(CheckInError, match="line 1.*UTF-8"):
            load_registry(str(path))
