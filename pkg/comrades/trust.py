"""
The paranoid trust model.

A client believes only what it observes itself: a comrade gains trust when a
campaign they shared measurably slowed the target down, or when the comrade
solved a challenge this client issued. Repeated failed campaigns wipe the
whole database.
"""

import enum
import logging
import statistics
from dataclasses import dataclass, field

from comrades.budget import AnswerBudget
from comrades.crypto import (
    ChallengeSolution,
    NoSolution,
    generate_challenge,
    solve_challenge,
)
from comrades.dht import comrades_key, inbox_key
from comrades.payload import build_challenge, build_response
from comrades.pending import PendingChallenges


__all__ = (
    'BudgetExhausted',
    'CampaignOutcome',
    'NoPendingChallenge',
    'NotAComrade',
    'TrustConfig',
    'TrustDb',
    'TrustRecord',
    'VerificationError',
    'Verdict',
    'Verifier',
    'judge_outcome',
    'probe_schedule',
)

log = logging.getLogger(__name__)


class VerificationError(Exception):
    """
    Base class for challenge-response messages that get dropped.
    """


class NotAComrade(VerificationError):
    """
    The peer shares none of this client's campaigns.
    """


class BudgetExhausted(VerificationError):
    """
    This client already answered its quota of challenges for the window.
    """


class NoPendingChallenge(VerificationError):
    """
    A response arrived from a peer that was never challenged, or whose
    challenge has expired.
    """


class Verdict(enum.Enum):
    SUCCESS = 'success'
    FAILURE = 'failure'


@dataclass(frozen=True)
class TrustConfig:
    alpha: float = 2.0
    success_trust: int = 1
    challenge_trust: int = 1
    failures_before_reset: int = 3
    ramp_step: int = 1
    ramp_cap: int = 10
    rechallenge_timeout: int = 120
    probe_count: int = 5
    probe_window: int = 30

    def __post_init__(self):
        if self.alpha <= 1:
            raise ValueError("alpha must be greater than 1")
        if self.failures_before_reset < 1:
            raise ValueError("failures_before_reset must be at least 1")
        if self.probe_count < 1 or self.probe_window < self.probe_count:
            raise ValueError(
                "probe_window must allow probe_count distinct minutes")
        for name in ('success_trust', 'challenge_trust', 'ramp_step',
                     'ramp_cap', 'rechallenge_timeout'):
            if getattr(self, name) < 0:
                raise ValueError("%s must not be negative" % name)

    @property
    def probe_step(self):
        return self.probe_window // self.probe_count


@dataclass(frozen=True)
class CampaignOutcome:
    campaign: object
    baseline_latency: float
    during_latency: float
    comrades: tuple = ()

    @classmethod
    def from_probes(cls, campaign, baseline, during, comrades):
        """
        Build an outcome from raw probe latencies, comparing medians.
        """
        if not baseline or not during:
            raise ValueError("need probes both before and during a campaign")
        return cls(campaign, statistics.median(baseline),
                   statistics.median(during), tuple(comrades))


def probe_schedule(start, cfg):
    """
    Minutes at which a client probes the target of a campaign starting at
    `start`: `probe_count` baseline probes spread over the `probe_window`
    minutes before the start, and as many during the first `probe_window`
    minutes of the campaign.
    """
    step = cfg.probe_step
    baseline = [start - cfg.probe_window + i * step
                for i in range(cfg.probe_count)]
    during = [start + i * step for i in range(cfg.probe_count)]
    return baseline, during


def judge_outcome(outcome, alpha):
    """
    A campaign succeeded if the target's response time grew by at least a
    factor of `alpha`.
    """
    if alpha <= 1:
        raise ValueError("alpha must be greater than 1")
    if outcome.during_latency >= alpha * outcome.baseline_latency:
        return Verdict.SUCCESS
    return Verdict.FAILURE


@dataclass
class TrustRecord:
    trust: int = 0
    verified: bool = False


@dataclass
class TrustDb:
    """
    Per-client trust in other clients, keyed by raw public key.
    """

    floor: int = 0
    records: dict = field(default_factory=dict)
    consecutive_failures: int = 0
    current_min_accumulated_trust: int = None

    def __post_init__(self):
        if self.floor < 0:
            raise ValueError("trust floor must not be negative")
        if self.current_min_accumulated_trust is None:
            self.current_min_accumulated_trust = self.floor

    def trust(self, public_key):
        record = self.records.get(public_key)
        return 0 if record is None else record.trust

    def is_verified(self, public_key):
        record = self.records.get(public_key)
        return record is not None and record.verified

    def accumulated_trust(self, comrades):
        """
        Sum of trust over the given keys; unknown keys count 0.
        """
        return sum(self.trust(pk) for pk in comrades)

    def mark_verified(self, public_key, challenge_trust=1):
        record = self.records.setdefault(public_key, TrustRecord())
        record.verified = True
        record.trust = max(record.trust, challenge_trust)

    def reset(self):
        self.records.clear()
        self.consecutive_failures = 0
        self.current_min_accumulated_trust = self.floor

    def apply_outcome(self, verdict, outcome, cfg):
        """
        Credit every comrade of a successful campaign and raise the launch
        threshold one step; count a failure, resetting everything once
        `cfg.failures_before_reset` happen in a row.
        """
        if verdict is Verdict.SUCCESS:
            for pk in dict.fromkeys(outcome.comrades):
                record = self.records.setdefault(pk, TrustRecord())
                record.trust += cfg.success_trust
            self.consecutive_failures = 0
            cap = max(cfg.ramp_cap, self.floor)
            self.current_min_accumulated_trust = min(
                cap, self.current_min_accumulated_trust + cfg.ramp_step)
        else:
            self.consecutive_failures += 1
            if self.consecutive_failures >= cfg.failures_before_reset:
                log.info("%d failed campaigns in a row; resetting trust",
                         self.consecutive_failures)
                self.reset()
        return self

    def snapshot(self):
        """
        `{hex key prefix: trust}` in ascending key order.
        """
        return {pk[:8].hex(): rec.trust
                for pk, rec in sorted(self.records.items())}


def _ignore(kind, **fields):
    pass


class Verifier(object):
    """
    One client's side of the challenge-response protocol.

    `campaigns` is a callable returning the campaigns this client joined;
    the comrade lists of those campaigns decide whose challenges get
    answered. `clock` returns the current sim-minute.
    """

    def __init__(self, identity, trust_db, dht, sealer, rng, clock,
                 campaigns, max_rand=1000, max_challenges_answered=10,
                 cfg=None, listener=None):
        self.identity = identity
        self.trust_db = trust_db
        self.dht = dht
        self.sealer = sealer
        self.rng = rng
        self.clock = clock
        self.campaigns = campaigns
        self.max_rand = max_rand
        self.cfg = cfg or TrustConfig()
        self.listener = listener or _ignore
        self.budget = AnswerBudget(max_challenges_answered, 60, clock)
        self.pending = PendingChallenges(self.cfg.rechallenge_timeout, clock)
        self.challenges_issued = 0
        self.solve_attempts = 0
        self.challenges_solved = 0
        self.hash_evaluations = 0
        self.verified = 0

    def comrades_of(self, campaign):
        return self.dht.get(
            comrades_key(campaign.start, campaign.url), self.clock())

    def is_comrade(self, public_key):
        if public_key == self.identity.public_key:
            return False
        return any(public_key in self.comrades_of(c) for c in self.campaigns())

    def _send(self, recipient, payload):
        sealed = self.sealer.seal(recipient, payload)
        self.dht.put(inbox_key(recipient), sealed.to_bytes(), self.clock())
        return sealed

    def initiate_verification(self, peer_public_key, shared_campaign):
        """
        Challenge a comrade of `shared_campaign`. Returns the pending record,
        or `None` if the peer is already verified. A peer with a challenge
        still outstanding is not challenged again.
        """
        if self.trust_db.is_verified(peer_public_key):
            return None
        if peer_public_key in self.pending:
            return self.pending[peer_public_key]
        if (peer_public_key == self.identity.public_key
                or shared_campaign not in self.campaigns()
                or peer_public_key not in self.comrades_of(shared_campaign)):
            raise NotAComrade(peer_public_key[:8].hex())
        now = self.clock()
        challenge, rand2 = generate_challenge(
            self.identity, self.max_rand, self.rng, now)
        self.pending.add(peer_public_key, rand2)
        self._send(peer_public_key, build_challenge(challenge))
        self.challenges_issued += 1
        self.listener('challenge_issued', peer=peer_public_key[:8].hex())
        return self.pending[peer_public_key]

    def handle_challenge(self, challenge):
        """
        Solve a comrade's challenge and seal the answer into its inbox.
        Raises `NotAComrade`, `BudgetExhausted` or `NoSolution` when the
        challenge is dropped instead.
        """
        issuer = challenge.issuer_public_key
        if not self.is_comrade(issuer):
            raise NotAComrade(issuer[:8].hex())
        if not self.budget.consume(1):
            raise BudgetExhausted(
                "answered %d challenges this hour" % self.budget.limit)
        self.solve_attempts += 1
        try:
            rand2, work = solve_challenge(challenge, self.max_rand)
        except NoSolution as exc:
            self.hash_evaluations += exc.work
            raise
        self.hash_evaluations += work
        self.challenges_solved += 1
        self.listener('challenge_solved', issuer=issuer[:8].hex(), work=work)
        return self._send(issuer, build_response(
            ChallengeSolution(self.identity.public_key, rand2)))

    def handle_response(self, solution):
        """
        Compare a response with the locally stored answer. Returns `True`
        and trusts the peer on a match; clears the pending record and
        returns `False` otherwise.
        """
        peer = solution.solver_public_key
        pending = self.pending.pop(peer)
        if pending is None:
            raise NoPendingChallenge(peer[:8].hex())
        if solution.rand2 != pending.expected_rand2:
            self.listener('verification_failed', peer=peer[:8].hex())
            return False
        self.trust_db.mark_verified(peer, self.cfg.challenge_trust)
        self.verified += 1
        self.listener('verified', peer=peer[:8].hex())
        return True
