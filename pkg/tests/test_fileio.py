"""File formats: strict loading, canonical dumping, round-trips."""

import json

import pytest

from sdnfence import (
    FlowAction,
    FlowEntry,
    InputFormatError,
    Network,
    Principal,
    dump_policy,
    dump_rules,
    dump_services,
    dump_topology,
    load_policy,
    load_rules,
    load_scenario,
    load_services,
    load_topology,
    read_json,
    write_report,
)
from sdnfence.scenarios import BUILTIN_SCENARIOS


class TestTopologyFiles:
    def test_round_trip(self, tmp_path, two_switch):
        path = tmp_path / "topo.json"
        dump_topology(two_switch.topology, path)
        loaded = load_topology(path)
        assert loaded.terminals == two_switch.topology.terminals
        assert loaded.switches == two_switch.topology.switches
        assert loaded.links == two_switch.topology.links

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "topo.json"
        path.write_text(json.dumps({"terminals": [], "switches": [], "links": [], "xx": 1}))
        with pytest.raises(InputFormatError, match="unknown keys: xx"):
            load_topology(path)

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "topo.json"
        path.write_text(json.dumps({"terminals": [], "switches": []}))
        with pytest.raises(InputFormatError, match="missing key 'links'"):
            load_topology(path)

    def test_wrong_type_rejected(self, tmp_path):
        path = tmp_path / "topo.json"
        path.write_text(json.dumps({
            "terminals": [{"id": "t1", "mac": "00:00:00:00:00:01", "ip": 7}],
            "switches": [],
            "links": [],
        }))
        with pytest.raises(InputFormatError, match="terminals\\[0\\]"):
            load_topology(path)

    def test_boolean_cost_rejected(self, tmp_path):
        path = tmp_path / "topo.json"
        path.write_text(json.dumps({
            "terminals": [],
            "switches": [],
            "links": [{"a": "x", "b": "y", "cost": True}],
        }))
        with pytest.raises(InputFormatError, match="cost"):
            load_topology(path)

    def test_not_json_rejected(self, tmp_path):
        path = tmp_path / "topo.json"
        path.write_text("{nope")
        with pytest.raises(InputFormatError, match="not valid JSON"):
            load_topology(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(InputFormatError, match="cannot read"):
            load_topology(tmp_path / "absent.json")


class TestServiceFiles:
    def test_round_trip(self, tmp_path, blocklist):
        path = tmp_path / "services.json"
        dump_services(blocklist.services, blocklist.consumers, path)
        services, consumers = load_services(path)
        assert services == blocklist.services
        assert consumers == blocklist.consumers

    def test_consumers_are_optional(self, tmp_path):
        path = tmp_path / "services.json"
        path.write_text(json.dumps({
            "services": [{"id": "s1", "uri": "/svc/s1", "terminal": "t1"}],
        }))
        services, consumers = load_services(path)
        assert len(services) == 1
        assert consumers == ()

    def test_privacy_fields_survive(self, tmp_path):
        path = tmp_path / "services.json"
        path.write_text(json.dumps({
            "services": [{
                "id": "s1", "uri": "/svc/s1", "terminal": "t1",
                "privacy_policy": "no-retention",
            }],
            "consumers": [{"id": "c1", "terminal": "t2", "privacy_prefs": "strict"}],
        }))
        services, consumers = load_services(path)
        assert services[0].privacy_policy == "no-retention"
        assert consumers[0].privacy_prefs == "strict"


class TestPolicyFiles:
    def test_round_trip(self, tmp_path, blocklist):
        path = tmp_path / "policy.json"
        dump_policy(blocklist.policy, path)
        doc = load_policy(path)
        assert doc.to_service_policy() == blocklist.policy

    def test_principal_syntax(self, tmp_path):
        path = tmp_path / "policy.json"
        path.write_text(json.dumps({"allow": [["service:s1", "s2"], ["consumer:c1", "s2"]]}))
        doc = load_policy(path)
        assert doc.allow[0][0] == Principal.service("s1")
        assert doc.allow[1][0] == Principal.consumer("c1")

    def test_bad_principal_prefix_rejected(self, tmp_path):
        path = tmp_path / "policy.json"
        path.write_text(json.dumps({"allow": [["host:t1", "s2"]]}))
        with pytest.raises(InputFormatError, match="unknown principal kind"):
            load_policy(path)

    def test_bare_principal_rejected(self, tmp_path):
        path = tmp_path / "policy.json"
        path.write_text(json.dumps({"allow": [["s1", "s2"]]}))
        with pytest.raises(InputFormatError, match="must be written"):
            load_policy(path)

    def test_malformed_pair_rejected(self, tmp_path):
        path = tmp_path / "policy.json"
        path.write_text(json.dumps({"allow": [["service:s1", "s2", "extra"]]}))
        with pytest.raises(InputFormatError, match="expected \\[principal, service-id\\]"):
            load_policy(path)

    def test_conflicting_doc_loads_but_does_not_build(self, tmp_path):
        from sdnfence import PolicyError

        path = tmp_path / "policy.json"
        path.write_text(json.dumps({
            "allow": [["service:s1", "s2"]],
            "deny": [["service:s1", "s2"]],
        }))
        doc = load_policy(path)  # structurally fine
        with pytest.raises(PolicyError):
            doc.to_service_policy()


class TestRuleFiles:
    def test_round_trip_from_network(self, tmp_path, deployed):
        deployed.exercise()
        path = tmp_path / "rules.json"
        dump_rules(deployed.network, path)
        loaded = load_rules(path)
        assert set(loaded) == set(deployed.network.iter_rules())

    def test_wildcard_markers(self, tmp_path):
        entries = [(
            "sw1",
            FlowEntry("00:00:00:00:00:01", "10.0.0.1", None, None, 2, FlowAction.DROP),
        )]
        path = tmp_path / "rules.json"
        dump_rules(entries, path)
        raw = read_json(path)
        row = raw["switches"][0]["entries"][0]
        assert row["dst_mac"] == "*" and row["dst_ip"] == "*"
        assert load_rules(path) == entries

    def test_dump_is_canonical(self, tmp_path):
        a_entries = [
            ("sw1", FlowEntry("00:00:00:00:00:02", "10.0.0.2", "00:00:00:00:00:01", "10.0.0.1", 2, FlowAction.FORWARD, 1)),
            ("sw1", FlowEntry("00:00:00:00:00:01", "10.0.0.1", "00:00:00:00:00:02", "10.0.0.2", 1, FlowAction.FORWARD, 2)),
        ]
        pa, pb = tmp_path / "a.json", tmp_path / "b.json"
        dump_rules(a_entries, pa)
        dump_rules(list(reversed(a_entries)), pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_semantically_broken_entry_rejected(self, tmp_path):
        path = tmp_path / "rules.json"
        path.write_text(json.dumps({"switches": [{"id": "sw1", "entries": [{
            "src_mac": "00:00:00:00:00:01", "src_ip": "10.0.0.1",
            "dst_mac": "*", "dst_ip": "*",
            "in_port": 1, "action": "forward", "out_port": 2,
        }]}]}))
        with pytest.raises(InputFormatError):
            load_rules(path)


class TestScenarioFiles:
    def test_round_trip(self, tmp_path):
        scenario = BUILTIN_SCENARIOS["identity-theft"]
        path = tmp_path / "scenario.json"
        write_report(scenario.to_dict(), path)
        assert load_scenario(path) == scenario

    def test_unknown_outcome_rejected(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({
            "name": "x",
            "steps": [{"at": "t1", "src": "t1", "dst": "t2", "expect": "teleported"}],
        }))
        with pytest.raises(InputFormatError):
            load_scenario(path)

    def test_step_payload_must_be_string(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({
            "name": "x",
            "steps": [{"at": "t1", "src": "t1", "dst": "t2", "expect": "delivered", "payload": 5}],
        }))
        with pytest.raises(InputFormatError):
            load_scenario(path)


class TestReports:
    def test_write_report_sorts_keys_and_ends_with_newline(self, tmp_path):
        path = tmp_path / "report.json"
        write_report({"b": 1, "a": {"z": 1, "y": 2}}, path)
        text = path.read_text()
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')
        assert read_json(path) == {"a": {"y": 2, "z": 1}, "b": 1}
