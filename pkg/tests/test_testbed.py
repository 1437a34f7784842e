"""Deployment wrapper: fabric + controller + service plane in one object."""

import pytest

from sdnfence import (
    NoPolicyUploadedError,
    Principal,
    ServicePolicy,
    Testbed,
    TraceOutcome,
    UnknownTerminalError,
)


def _bed(fixture):
    return Testbed.deploy(
        fixture.topology, fixture.services, fixture.consumers, fixture.policy
    )


class TestDeploy:
    def test_deploy_without_policy_has_empty_fabric(self, two_switch):
        bed = Testbed.deploy(two_switch.topology)
        assert bed.controller.policy is None
        assert bed.network.rule_count() == 0

    def test_send_without_policy_raises(self, two_switch):
        bed = Testbed.deploy(two_switch.topology)
        with pytest.raises(NoPolicyUploadedError):
            bed.send("t1", "t2")

    def test_deploy_pushes_proactive_drops_into_fabric(self, blocklist):
        # the blocklist fixture compiles to one wildcard drop at t5's edge
        assert _bed(blocklist).network.rule_count() == 1

    def test_upload_of_terminal_policy_clears_service_policy(self, two_switch):
        bed = _bed(two_switch)
        assert bed.service_policy is two_switch.policy
        bed.upload(bed.compile_policy(two_switch.policy))
        assert bed.service_policy is None

    def test_unknown_terminal_is_rejected(self, two_switch):
        bed = _bed(two_switch)
        with pytest.raises(UnknownTerminalError):
            bed.packet_between("t1", "t9")


class TestTraffic:
    def test_first_packet_escalates_and_lands_rules(self, two_switch):
        bed = _bed(two_switch)
        result = bed.send("t1", "t3")
        assert result.outcome is TraceOutcome.ESCALATED_DELIVERED
        assert bed.network.rule_count() == 2

    def test_exercise_defaults_to_sorted_allowed_pairs(self, two_switch):
        bed = _bed(two_switch)
        results = bed.exercise()
        assert list(results) == sorted(bed.controller.policy.allow_t)
        assert all(r.delivered for r in results.values())

    def test_inject_without_controller_never_escalates(self, two_switch):
        bed = _bed(two_switch)
        result = bed.inject(
            "t1", bed.packet_between("t1", "t3"), with_controller=False
        )
        assert result.outcome is TraceOutcome.DROPPED
        assert bed.network.rule_count() == 0

    def test_response_rides_mirrored_rules_without_admission(self, two_switch):
        # mutual allow: the lexicographically first direction escalates and
        # installs both directions; the reverse is then delivered over the
        # mirrored rules and never admitted as a pair of its own
        policy = ServicePolicy(
            allow=frozenset(
                {(Principal.service("s1"), "s2"), (Principal.service("s2"), "s1")}
            )
        )
        bed = Testbed.deploy(
            two_switch.topology, two_switch.services, two_switch.consumers, policy
        )
        results = bed.exercise()
        assert results[("t1", "t2")].outcome is TraceOutcome.ESCALATED_DELIVERED
        assert results[("t2", "t1")].outcome is TraceOutcome.DELIVERED
        assert bed.controller.installed_pairs() == frozenset({("t1", "t2")})


class TestUpdate:
    def test_update_pushes_removals_into_fabric(self, two_switch):
        bed = _bed(two_switch)
        bed.exercise()
        before = bed.network.rule_count()
        shrunk = ServicePolicy(
            allow=frozenset({(Principal.service("s1"), "s2")}),
            deny=two_switch.policy.deny,
        )
        delta = bed.update(shrunk)
        assert delta.installs == ()
        assert bed.network.rule_count() == before - len(delta.removals)

    def test_update_before_any_upload_acts_as_first_upload(self, two_switch):
        bed = Testbed.deploy(two_switch.topology, two_switch.services, two_switch.consumers)
        bed.update(two_switch.policy)
        assert bed.send("t1", "t2").delivered


class TestClone:
    def test_clone_traffic_leaves_the_original_untouched(self, two_switch):
        bed = _bed(two_switch)
        probe = bed.clone()
        assert probe.send("t1", "t2").delivered
        assert bed.network.rule_count() == 0
        assert bed.controller.installed_pairs() == frozenset()
        assert probe.controller.installed_pairs() == frozenset({("t1", "t2")})

    def test_clone_carries_exercised_state(self, two_switch):
        bed = _bed(two_switch)
        bed.exercise()
        probe = bed.clone()
        assert probe.network.tables_snapshot() == bed.network.tables_snapshot()
        assert probe.controller.installed_pairs() == bed.controller.installed_pairs()
