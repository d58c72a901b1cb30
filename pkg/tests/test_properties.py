"""Protocol invariants as property tests: quorum arithmetic, independent
vote-count oracles against recorded runs, certificate propagation, and
boundary properties checked with hypothesis."""

import math

from hypothesis import given, settings
from hypothesis import strategies as st

from pentabft.committer import LeaderSlot, Verdict, validate_stake_split
from pentabft.dagcore import decode_block, make_block
from pentabft.runner import run, run_record
from pentabft import scenarios


# -- independent oracle: naive recursive vote resolution -------------------------


def naive_voted_block(dag, block, author, round_):
    """Reference depth-first traversal, recursion written the obvious way."""
    if round_ >= block.round:
        return None
    for parent in block.parents:
        if parent.author == author and parent.round == round_:
            return parent.digest
        if parent.round > round_:
            found = naive_voted_block(dag, dag.get(parent), author, round_)
            if found is not None:
                return found
    return None


def naive_tally(dag, committee, decision_round, candidate):
    supports = blames = 0
    for author in committee.members:
        versions = dag.blocks_by(author, decision_round)
        if len(versions) != 1:
            continue
        found = naive_voted_block(dag, versions[0], candidate.author, candidate.round)
        if found == candidate.digest:
            supports += 1
        elif found is None:
            blames += 1
    return supports, blames


class TestVoteOracle:
    def test_fault_free_verdicts_match_brute_force(self):
        cfg = scenarios.fault_free(1, rounds=12)
        result = run(cfg, seed=13)
        state = result.epochs[0]
        committee = state.committee
        node = state.validators[0]
        dag = node.dag
        decided = node.committer.decided_slots()
        for r in range(1, 11):
            for rank in range(cfg.leaders_per_round):
                leader = (r + rank) % committee.size
                candidates = dag.blocks_by(leader, r)
                assert len(candidates) == 1
                supports, blames = naive_tally(dag, committee, r + 1, candidates[0])
                verdict = decided[LeaderSlot(r, rank)]
                if supports >= committee.strong_quorum:
                    assert verdict.verdict is Verdict.COMMIT
                    assert verdict.block == candidates[0].ref()
                if blames >= committee.strong_quorum:
                    assert verdict.verdict is Verdict.SKIP

    def test_dfs_matches_naive_on_equivocating_run(self):
        cfg = scenarios.equivocate_f(rounds=10)
        result = run(cfg, seed=7)
        state = result.epochs[0]
        dag = state.validators[0].dag
        for r in range(1, 9):
            for support in dag.blocks_at_round(r + 1):
                for author in state.committee.members:
                    fast = dag.voted_block(support, author, r)
                    slow = naive_voted_block(dag, support, author, r)
                    assert fast == slow


class TestCertificates:
    def test_strong_certificate_exclusive_per_slot(self):
        cfg = scenarios.equivocate_f(rounds=15)
        result = run(cfg, seed=21)
        state = result.epochs[0]
        committee = state.committee
        dag = state.validators[0].dag
        for r in range(1, 14):
            for author in committee.members:
                versions = dag.blocks_by(author, r)
                certified = [
                    b
                    for b in versions
                    if naive_tally(dag, committee, r + 1, b)[0] >= committee.strong_quorum
                ]
                assert len(certified) <= 1

    def test_strong_support_propagates_linked_weak_certificates(self):
        cfg = scenarios.fault_free(1, rounds=12)
        result = run(cfg, seed=5)
        state = result.epochs[0]
        committee = state.committee
        dag = state.validators[0].dag
        for r in range(1, 8):
            leader = dag.blocks_by(r % committee.size, r)[0]
            supporters = {
                dag.blocks_by(a, r + 1)[0].digest
                for a in committee.members
                if dag.blocks_by(a, r + 1)
                and naive_voted_block(dag, dag.blocks_by(a, r + 1)[0], leader.author, r)
                == leader.digest
            }
            if len(supporters) < committee.strong_quorum:
                continue
            for future_round in (r + 2, r + 3):
                for block in dag.blocks_at_round(future_round):
                    linked = dag.ancestors_at_round(block.ref(), r + 1)
                    assert len(linked & supporters) >= committee.weak_quorum


class TestAsyncCommitProbability:
    def bound(self, n, core, leaders):
        return 1.0 - math.comb(n - core, leaders) / math.comb(n, leaders)

    def test_documented_value_for_small_core(self):
        assert self.bound(6, 3, 2) == 0.8

    def test_deterministic_success_above_three_f(self):
        for core in (3, 4, 5):
            assert self.bound(6, core, 4) == 1.0

    def test_monotone_in_core_size(self):
        values = [self.bound(6, c, 2) for c in range(0, 7)]
        assert values == sorted(values)


class TestVerdictStability:
    def test_cached_verdicts_match_fresh_recomputation(self):
        """A decided slot never regresses: replaying the decision rules over
        the final DAG reproduces every verdict reached incrementally."""
        from pentabft.committer import Committer

        for builder, seed in (
            (lambda: scenarios.crash_leader(rounds=15), 4),
            (lambda: scenarios.equivocate_f(rounds=15), 9),
        ):
            cfg = builder()
            result = run(cfg, seed)
            state = result.epochs[0]
            for vid, node in state.validators.items():
                if vid in state.faulty:
                    continue
                fresh = Committer(node.dag, state.committee, cfg.leaders_per_round)
                fresh_decisions = {
                    d.slot: d for d in fresh.try_decide(0, node.dag.max_round)
                }
                for slot, decided in node.committer.decided_slots().items():
                    again = fresh_decisions[slot]
                    assert again.verdict is decided.verdict, (vid, slot)
                    assert again.block == decided.block


class TestHonestBehavior:
    def test_honest_nodes_never_equivocate(self):
        cfg = scenarios.crash_leader(rounds=15)
        result = run(cfg, seed=3)
        state = result.epochs[0]
        union = state.validators[0].dag
        for v, node in state.validators.items():
            if v in state.faulty:
                continue
            for r in range(1, node.current_round + 1):
                assert len(union.blocks_by(v, r)) <= 1

    def test_commit_log_is_append_only(self):
        cfg = scenarios.fault_free(1, rounds=10)
        result = run(cfg, seed=1)
        node = result.epochs[0].validators[0]
        first = node.poll_commits()
        assert first.committed_leaders == node.committer.committed_leaders
        assert node.poll_commits().is_empty()
        # the sequence itself is the log: ascending slots, no repeats
        slots = [(d.slot.round, d.slot.rank) for d in node.committer.sequence]
        assert slots == sorted(slots)
        assert len(set(slots)) == len(slots)


class TestStakeSplitProperty:
    @given(total=st.integers(min_value=2, max_value=10**6))
    @settings(max_examples=300, deadline=None)
    def test_boundary_is_exact(self, total):
        bound = (5 * (total - 1) + 5) // 6
        assert validate_stake_split(total, bound)
        if bound >= 1:
            assert not validate_stake_split(total, bound - 1)

    @given(total=st.integers(min_value=2, max_value=10**6))
    @settings(max_examples=100, deadline=None)
    def test_bound_matches_real_arithmetic(self, total):
        bound = (5 * (total - 1) + 5) // 6
        assert bound >= 5 * (total - 1) / 6
        assert bound - 1 < 5 * (total - 1) / 6


class TestSerializationProperty:
    payloads = st.lists(st.binary(max_size=64), max_size=4)

    @given(author=st.integers(0, 30), round_=st.integers(0, 500), txs=payloads)
    @settings(max_examples=200, deadline=None)
    def test_encode_decode_roundtrip(self, author, round_, txs):
        block = make_block(author, round_, (), txs)
        again = decode_block(block.encode())
        assert again == block
        assert again.transactions == tuple(txs)
        assert again.digest == block.digest
