"""End-to-end scenario runs: catalog smoke, faults, recovery, determinism."""

import pytest

from pentabft import scenarios
from pentabft.runner import (
    check_delivery_bounds,
    check_prefix_consistency,
    run,
    run_record,
    verify_scenario,
)


def short(cfg, **kw):
    from dataclasses import replace

    return replace(cfg, **kw)


class TestCatalogSmoke:
    @pytest.mark.parametrize("name", sorted(scenarios.CATALOG))
    def test_scenario_passes_its_own_assertions(self, name):
        cfg = scenarios.by_name(name)
        if cfg.rounds > 30:
            cfg = short(cfg, rounds=20)
        cfg.validate()
        result = run(cfg, seed=5)
        assert verify_scenario(cfg, result.record) == []

    def test_unknown_scenario_rejected(self):
        from pentabft.simnet import ConfigError

        with pytest.raises(ConfigError):
            scenarios.by_name("nope")


class TestFaultFree:
    def test_every_complete_slot_commits_directly(self):
        cfg = scenarios.fault_free(1, rounds=20)
        record = run_record(cfg, seed=9)
        ref = record.honest_validators(0)[0]
        commits = [e for e in ref.commit_events if e[2] == "commit"]
        assert len(commits) == (cfg.rounds - 1) * cfg.leaders_per_round
        assert all(rule == "direct" for _, _, _, rule, _, _ in commits)
        assert all(trig == r + 1 for r, _, _, _, trig, _ in commits)

    def test_round_cadence_is_one_delta(self):
        cfg = scenarios.fault_free(1, rounds=10)
        record = run_record(cfg, seed=2)
        ref = record.honest_validators(0)[0]
        entries = [t for _, t in sorted(ref.round_entries.items())]
        gaps = {b - a for a, b in zip(entries[1:], entries[2:])}
        assert gaps == {cfg.delta}

    def test_round_entry_spread_is_bounded(self):
        cfg = scenarios.fault_free(1, rounds=12)
        record = run_record(cfg, seed=3)
        honest = record.honest_validators(0)
        for r in range(1, 12):
            times = [v.round_entries[r] for v in honest if r in v.round_entries]
            assert max(times) - min(times) <= cfg.delta

    def test_delivery_bounds_hold(self):
        cfg = short(scenarios.fault_free(1, rounds=10), record_events=True)
        result = run(cfg, seed=4)
        assert result.sim.delivery_log, "bound scan needs the recorded log"
        assert check_delivery_bounds(result) == []


class TestCrash:
    def test_crash_leader_slots_are_skipped_on_time(self):
        cfg = scenarios.crash_leader(rounds=25)
        record = run_record(cfg, seed=6)
        ref = record.honest_validators(0)[0]
        crashed, crash_round = cfg.crash[0]
        skipped = [
            (r, k)
            for r, k, verdict, _, _, _ in ref.commit_events
            if verdict == "skip"
        ]
        assert skipped, "crashed leader slots must be skipped"
        # the crashed validator's slots after its crash round are skipped
        for r, k in skipped:
            leader = (r + k) % cfg.n
            assert leader == crashed
            assert r >= crash_round

    def test_crash_f_plus_one_halts_dag(self):
        cfg = scenarios.crash_f_plus_1()
        record = run_record(cfg, seed=2)
        crash_round = max(r for _, r in cfg.crash)
        for v in record.epochs[0].validators:
            if not v.faulty:
                assert v.highest_round <= crash_round

    def test_recovery_restarts_reduced_committee(self):
        cfg = scenarios.crash_f_plus_1()
        record = run_record(cfg, seed=2)
        assert len(record.epochs) == 2
        epoch1 = record.epochs[1]
        assert epoch1.members == (0, 1, 2, 3)
        assert epoch1.f == 0
        assert all(v.committed for v in epoch1.validators)
        assert verify_scenario(cfg, record) == []


class TestSplitView:
    def test_divergence_and_identical_recovery(self):
        cfg = scenarios.splitview_3f()
        record = run_record(cfg, seed=3)
        slot_key = f"{cfg.splitview_round}/0"
        outcomes = {
            v.decided.get(slot_key)
            for v in record.epochs[0].validators
            if not v.faulty
        }
        assert len(outcomes) >= 2  # the attacked slot genuinely diverged
        recoveries = {
            (g.recovery_kind, g.recovery_members, g.branch)
            for g in record.epochs[0].guards
            if not g.faulty
        }
        assert len(recoveries) == 1
        kind, members, branch = next(iter(recoveries))
        assert kind == "safety"
        assert set(members) == {3, 4, 5}
        assert branch != ""
        assert verify_scenario(cfg, record) == []


class TestByzantineGuard:
    def test_bogus_proposal_skipped_in_agreement(self):
        cfg = scenarios.byz_guard_recover()
        record = run_record(cfg, seed=4)
        honest = [g for g in record.epochs[0].guards if not g.faulty]
        assert all(g.recovery_members == (4, 5) for g in honest)
        assert verify_scenario(cfg, record) == []


class TestDeterminism:
    @pytest.mark.parametrize(
        "builder",
        [
            lambda: short(scenarios.fault_free(1, rounds=10), record_events=True),
            lambda: short(scenarios.async_adversarial(rounds=10), record_events=True),
            lambda: scenarios.splitview_3f(),
        ],
    )
    def test_same_inputs_byte_identical_records(self, builder):
        a = run_record(builder(), seed=11).to_text()
        b = run_record(builder(), seed=11).to_text()
        assert a == b

    def test_different_seeds_differ_under_random_delays(self):
        cfg = short(scenarios.async_adversarial(rounds=10), record_events=True)
        a = run_record(cfg, seed=1).to_text()
        b = run_record(cfg, seed=2).to_text()
        assert a != b


class TestPartialSynchrony:
    def test_progress_resumes_after_gst(self):
        cfg = scenarios.adversary_matrix("crash", scenarios.PARTIAL, True, rounds=25)
        record = run_record(cfg, seed=8)
        assert check_prefix_consistency(record) == []
        ref = record.honest_validators(0)[0]
        assert ref.highest_round == cfg.rounds
        # post-GST rounds advance at the synchronous cadence
        post = [t for r, t in sorted(ref.round_entries.items()) if t > cfg.gst + 2 * cfg.delta]
        gaps = {b - a for a, b in zip(post, post[1:])}
        assert gaps and max(gaps) <= 2 * cfg.delta
