"""Core validator state machine: ingest blocks, advance rounds, propose, commit.

A validator is event-driven and single-threaded: `on_block` / `on_timer`
consume one input and return outbound actions. Round advancement is gated on
a strong quorum of the previous round plus either all of that round's leader
blocks or an expired leader timer (partial synchrony only; the asynchronous
variant drops leader timeouts entirely).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .committer import Committer, CommitOutput, CommonCoin, leaders_of_round
from .dagcore import (
    Block,
    BlockRef,
    CoinShare,
    Committee,
    Dag,
    InsertStatus,
    Mode,
    PendingPool,
    ValidationError,
    ValidatorId,
    make_block,
    validate_block,
)
from .messages import Action, ArmTimer, BlockMsg, Broadcast, NodeId, Send, SyncRequest, SyncResponse

LEADER_TIMER = "leader-wait"


@dataclass
class CommitEvent:
    """First time a slot verdict formed at this node, for latency accounting."""

    slot_round: int
    slot_rank: int
    verdict: str
    rule: str  # "direct" | "indirect"
    trigger_round: int
    vtime: int


class CoreValidator:
    """One committee member's full protocol state."""

    def __init__(
        self,
        me: ValidatorId,
        committee: Committee,
        leaders_per_round: int = 2,
        delta: int = 1000,
        coin: Optional[CommonCoin] = None,
        leader_timeout_factor: int = 2,
    ):
        self.me = me
        self.committee = committee
        self.delta = delta
        self.leader_timeout = leader_timeout_factor * delta
        self.dag = Dag(committee)
        self.committer = Committer(self.dag, committee, leaders_per_round, coin)
        self.leaders_per_round = leaders_per_round
        self.pending = PendingPool()
        self.pending_transactions: list[bytes] = []
        self.current_round = 0  # highest round this validator proposed in
        self.round_entry_vtime: dict[int, int] = {0: 0}
        self.leader_deadline: Optional[int] = None
        self.proposed_rounds: set[int] = {0}
        self.invalid_evidence: list[tuple[Block, str]] = []
        self.commit_events: list[CommitEvent] = []
        self.crashed = False
        self.is_silent = False
        self.max_round: Optional[int] = None  # harness-imposed proposal ceiling
        # poll_commits cursor
        self._polled_leaders = 0
        self._polled_delivery = 0

    # -- block intake ----------------------------------------------------------

    def on_block(self, block: Block, sender: Optional[NodeId], now: int) -> list[Action]:
        """Validate and store a block, then refresh decisions and try to advance."""
        actions = self.ingest_block(block, sender, now)
        actions.extend(self.flush(now, trigger_round=block.round))
        return actions

    def ingest_block(self, block: Block, sender: Optional[NodeId], now: int) -> list[Action]:
        try:
            validate_block(block, self.committee)
        except ValidationError as err:
            self.invalid_evidence.append((block, str(err)))
            return []
        outcome = self.dag.insert(block)
        if outcome.status is InsertStatus.MISSING_ANCESTORS:
            if not self.pending.has(block.digest):
                self.pending.add(block, outcome.missing)
                if sender is not None:
                    return [Send(sender, SyncRequest(outcome.missing))]
            return []
        if outcome.status is InsertStatus.INSERTED:
            self._drain_pending(block.digest)
        return []

    def _drain_pending(self, digest: bytes) -> None:
        if self.pending.is_idle():
            return
        ready = self.pending.satisfy(digest)
        while ready:
            next_ready: list[Block] = []
            for blk in ready:
                if self.dag.insert(blk).status is InsertStatus.INSERTED:
                    next_ready.extend(self.pending.satisfy(blk.digest))
            ready = next_ready

    def on_sync_request(self, req: SyncRequest, sender: NodeId) -> list[Action]:
        """Serve a peer's missing ancestors with their full causal closure."""
        blocks: list[Block] = []
        seen: set[bytes] = set()
        stack = [r for r in req.refs if r in self.dag]
        while stack:
            ref = stack.pop()
            if ref.digest in seen:
                continue
            seen.add(ref.digest)
            blk = self.dag.get(ref)
            blocks.append(blk)
            stack.extend(p for p in blk.parents if p.digest not in seen)
        blocks.sort(key=lambda b: (b.round, b.author, b.digest))
        if not blocks:
            return []
        return [Send(sender, SyncResponse(tuple(blocks)))]

    def on_sync_response(self, resp: SyncResponse, sender: NodeId, now: int) -> list[Action]:
        actions: list[Action] = []
        for blk in resp.blocks:
            actions.extend(self.ingest_block(blk, sender, now))
        actions.extend(self.flush(now, trigger_round=-1))
        return actions

    def on_timer(self, timer_id: str, now: int) -> list[Action]:
        if timer_id == LEADER_TIMER:
            return self.flush(now, trigger_round=-1)
        return []

    # -- decisions and round advancement -----------------------------------------

    def flush(self, now: int, trigger_round: int = -1) -> list[Action]:
        """Decision pass plus the round-advance loop."""
        self.committer.extend(trigger_round)
        self._record_commit_events(now)
        actions: list[Action] = []
        while True:
            step = self._advance_once(now)
            if not step:
                break
            actions.extend(step)
            # our own block may complete a quorum for our own decision pass
            self.committer.extend(self.current_round)
            self._record_commit_events(now)
        return actions

    def _record_commit_events(self, now: int) -> None:
        events = self.committer.decision_events
        while len(self.commit_events) < len(events):
            slot, verdict, rule, trig = events[len(self.commit_events)]
            self.commit_events.append(
                CommitEvent(slot.round, slot.rank, verdict.value, rule, trig, now)
            )

    def _advance_once(self, now: int) -> list[Action]:
        """One advance attempt; honest nodes broadcast exactly one new block."""
        block = self.try_advance_round(now)
        if block is None:
            return []
        actions: list[Action] = [Broadcast(BlockMsg(block))]
        if self.committee.mode is Mode.PARTIAL_SYNC:
            actions.append(ArmTimer(LEADER_TIMER, self.leader_timeout))
        return actions

    def try_advance_round(self, now: int) -> Optional[Block]:
        """Produce the next round's block when the previous round is quorate
        and its leaders are either all present or timed out.

        Parents take one block from every author stored at the previous round
        (lowest digest when an author equivocated); the transaction queue is
        drained fully into the new block.
        """
        if not self._can_advance(now):
            return None
        next_round = self.current_round + 1
        parents = self._build_parents()
        txs = tuple(self.pending_transactions)
        self.pending_transactions.clear()
        block = make_block(self.me, next_round, parents, txs, self._next_coin_share(next_round))
        self._enter_round(next_round, now)
        self.dag.insert(block)
        return block

    def _can_advance(self, now: int) -> bool:
        prev = self.current_round
        if self.max_round is not None and prev + 1 > self.max_round:
            return False
        if self.dag.author_count(prev) < self.committee.strong_quorum:
            return False
        if self.committee.mode is Mode.PARTIAL_SYNC:
            if not self._leaders_present(prev) and not self._leader_timer_expired(now):
                return False
        return True

    def _build_parents(self) -> list[BlockRef]:
        prev = self.current_round
        return [
            self.dag.first_block_by(author, prev).ref()
            for author in sorted(self.dag.authors_at_round(prev))
        ]

    def _next_coin_share(self, next_round: int) -> Optional[CoinShare]:
        if self.committee.mode is Mode.ASYNC:
            return CoinShare(self.me, next_round)
        return None

    def _enter_round(self, next_round: int, now: int) -> None:
        assert next_round not in self.proposed_rounds, "honest nodes propose once per round"
        self.proposed_rounds.add(next_round)
        self.current_round = next_round
        self.round_entry_vtime[next_round] = now
        self.leader_deadline = now + self.leader_timeout

    def _leaders_present(self, r: int) -> bool:
        authors = self.dag.authors_at_round(r)
        return all(
            leader in authors
            for leader in leaders_of_round(r, self.committee, self.leaders_per_round)
        )

    def _leader_timer_expired(self, now: int) -> bool:
        return self.leader_deadline is not None and now >= self.leader_deadline

    # -- commit output -------------------------------------------------------------

    def poll_commits(self) -> CommitOutput:
        """Commit log delta since the previous poll; never replays."""
        leaders = self.committer.committed_leaders
        delivery = self.committer.delivery_sequence
        out = CommitOutput(
            list(leaders[self._polled_leaders :]),
            list(delivery[self._polled_delivery :]),
        )
        self._polled_leaders = len(leaders)
        self._polled_delivery = len(delivery)
        return out

    def enqueue_transactions(self, txs: list[bytes]) -> None:
        self.pending_transactions.extend(txs)
