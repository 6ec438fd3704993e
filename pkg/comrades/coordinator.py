"""
The campaign coordinator.

For each target URL a client finds or proposes a start time in the Campaign
Table, registers its public key in the Comrades Table of every start it
joins, and remembers the join locally. Once a joined campaign starts, the
client looks at the comrade list again and only takes part if the campaign
is both big enough and trusted enough.

DHT tables, keyed by hashes of the logical keys:

  Campaign Table  url           -> decimal start minutes (UTF-8)
  Comrades Table  "start|url"   -> raw public keys
  Inbox           public key    -> sealed messages
"""

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field

from comrades.crypto import CryptoError, SealedMessage, Sealer
from comrades.dht import campaign_key, comrades_key, inbox_key
from comrades.payload import CHALLENGE, ProtocolError, read_payload
from comrades.target import accept_all
from comrades.trust import (
    CampaignOutcome,
    TrustConfig,
    TrustDb,
    VerificationError,
    Verifier,
    judge_outcome,
)
from comrades.usage import ALL_WEEK, UsageWindows


__all__ = (
    'CampaignEntry',
    'CampaignStart',
    'CampaignState',
    'Coordinator',
    'CoordinatorConfig',
    'JoinPolicy',
    'LaunchDecision',
    'LocalCampaignDb',
    'NoFeasibleStart',
    'is_suitable',
    'propose_start',
)

log = logging.getLogger(__name__)


class NoFeasibleStart(Exception):
    """
    No minute between min_wait and max_wait from now lies in a usage window.
    """


class JoinPolicy(enum.Enum):
    JOIN_ALL = 'JoinAll'
    HIGHEST_TRUST = 'HighestTrust'


class CampaignState(enum.Enum):
    PENDING = 'pending'
    LAUNCHED = 'launched'
    SKIPPED = 'skipped'


@dataclass(frozen=True)
class CoordinatorConfig:
    min_wait: int = 60
    max_wait: int = 1440
    min_comrades: int = 5
    min_accumulated_trust: int = 0
    usage_windows: UsageWindows = ALL_WEEK
    join_policy: JoinPolicy = JoinPolicy.JOIN_ALL
    poll_interval: int = 15
    max_challenges_answered: int = 10
    max_rand: int = 1000
    grace: int = 5
    campaign_duration: int = 30
    max_challenges_issued: int = 2
    confirm: object = field(default=accept_all, compare=False)

    def __post_init__(self):
        if not 0 < self.min_wait < self.max_wait:
            raise ValueError("need 0 < min_wait < max_wait")
        if self.min_comrades < 1:
            raise ValueError("min_comrades must be at least 1")
        if self.min_accumulated_trust < 0:
            raise ValueError("min_accumulated_trust must not be negative")
        for name in ('poll_interval', 'grace', 'campaign_duration'):
            if getattr(self, name) < 1:
                raise ValueError("%s must be at least 1" % name)
        for name in ('max_challenges_answered', 'max_rand',
                     'max_challenges_issued'):
            if getattr(self, name) < 0:
                raise ValueError("%s must not be negative" % name)


@dataclass(frozen=True)
class CampaignStart:
    url: object
    start: int

    def __post_init__(self):
        if self.start <= 0:
            raise ValueError("campaign start must be positive")


@dataclass
class CampaignEntry:
    campaign: CampaignStart
    joined_at: int
    state: CampaignState = CampaignState.PENDING


class LocalCampaignDb(object):
    """
    The campaigns this client joined, at most one entry per start.
    Launched and Skipped are terminal.
    """

    def __init__(self):
        self.entries = {}

    def __contains__(self, campaign):
        return campaign in self.entries

    def __iter__(self):
        return iter(self.entries.values())

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, campaign):
        return self.entries[campaign]

    def add(self, campaign, joined_at):
        if campaign not in self.entries:
            self.entries[campaign] = CampaignEntry(campaign, joined_at)
        return self.entries[campaign]

    def transition(self, campaign, state):
        entry = self.entries[campaign]
        if entry.state is not CampaignState.PENDING:
            raise ValueError("%s is already %s" % (
                campaign, entry.state.value))
        entry.state = state
        return entry

    def pending(self):
        return [e for e in self.entries.values()
                if e.state is CampaignState.PENDING]

    def campaigns(self):
        return list(self.entries)


@dataclass(frozen=True)
class LaunchDecision:
    campaign: CampaignStart
    launched: bool
    comrade_count: int
    accumulated_trust: int
    threshold: int
    reason: str
    comrades: tuple = ()


def is_suitable(start, now, cfg):
    """
    A start is suitable if it is between min_wait and max_wait minutes
    away (inclusive) and falls inside one of the client's usage windows.
    """
    return (now + cfg.min_wait <= start <= now + cfg.max_wait
            and start in cfg.usage_windows)


def propose_start(now, cfg, rng):
    """
    Draw a start uniformly from the suitable minutes after `now`.
    """
    intervals = cfg.usage_windows.feasible(
        now + cfg.min_wait, now + cfg.max_wait)
    total = sum(last - first + 1 for first, last in intervals)
    if total == 0:
        raise NoFeasibleStart(
            "no usage window between minute %d and %d" % (
                now + cfg.min_wait, now + cfg.max_wait))
    pick = rng.randrange(total)
    for first, last in intervals:
        size = last - first + 1
        if pick < size:
            return first + pick
        pick -= size
    raise AssertionError("unreachable")


def _decode_start(value):
    try:
        start = int(value.decode('ascii'))
    except (UnicodeDecodeError, ValueError):
        return None
    return start if start > 0 else None


def _ignore(kind, **fields):
    pass


class Coordinator(object):
    """
    One client's campaign coordinator.

    `listener(kind, **fields)` is told about every protocol event; the
    simulator turns those into metrics. `opt_out(campaign, now)` is called
    for each campaign the client decides to take part in.
    """

    def __init__(self, identity, cfg, dht, rng, trust_db=None,
                 trust_cfg=None, sealer=None, listener=None, opt_out=None):
        self.identity = identity
        self.cfg = cfg
        self.dht = dht
        self.rng = rng
        self.trust_cfg = trust_cfg or TrustConfig()
        self.trust_db = trust_db or TrustDb(floor=cfg.min_accumulated_trust)
        self.sealer = sealer or Sealer()
        self.listener = listener or _ignore
        self.opt_out = opt_out
        self.db = LocalCampaignDb()
        self.now = 0
        self._proposals = {}
        self.dropped = Counter()
        self.verifier = Verifier(
            identity, self.trust_db, dht, self.sealer, rng,
            clock=lambda: self.now,
            campaigns=self.db.campaigns,
            max_rand=cfg.max_rand,
            max_challenges_answered=cfg.max_challenges_answered,
            cfg=self.trust_cfg,
            listener=self.listener)

    @property
    def public_key(self):
        return self.identity.public_key

    def comrades(self, campaign, now):
        return self.dht.get(comrades_key(campaign.start, campaign.url), now)

    def campaign_starts(self, url, now):
        """
        Start minutes listed in the Campaign Table for `url`, oldest entry
        first. Values that do not parse are ignored.
        """
        starts = {}
        for value in self.dht.get(campaign_key(url), now):
            start = _decode_start(value)
            if start is None:
                log.warning("ignoring malformed campaign entry %r", value[:32])
            else:
                starts[start] = None
        return list(starts)

    def _has_outstanding_proposal(self, url):
        campaign = self._proposals.get(url)
        return (campaign is not None and campaign in self.db
                and self.db[campaign].state is CampaignState.PENDING)

    def handle_url(self, url, now):
        """
        Steps 1-3 for one target URL. Returns the campaigns joined.
        """
        self.now = now
        suitable = []
        for start in self.campaign_starts(url, now):
            if is_suitable(start, now, self.cfg):
                suitable.append(start)
            else:
                self.listener('rejected_unsuitable', url=url.render(),
                              start=start)
        if not suitable:
            if self._has_outstanding_proposal(url):
                log.debug("%s: proposal already outstanding", url)
                return []
            start = propose_start(now, self.cfg, self.rng)
            self.dht.put(campaign_key(url), str(start).encode('ascii'), now)
            self._proposals[url] = CampaignStart(url, start)
            self.listener('proposed', url=url.render(), start=start)
            suitable = [start]

        if self.cfg.join_policy is JoinPolicy.HIGHEST_TRUST and \
                len(suitable) > 1:
            def score(start):
                peers = self.comrades(CampaignStart(url, start), now)
                return (self.trust_db.accumulated_trust(peers), -start)
            suitable = [max(suitable, key=score)]

        joined = []
        for start in suitable:
            campaign = CampaignStart(url, start)
            self.dht.put(comrades_key(start, url), self.public_key, now)
            self.db.add(campaign, now)
            self.listener('joined', url=url.render(), start=start)
            joined.append(campaign)
        return joined

    def tick(self, now):
        """
        Decide on every pending campaign that has started.
        """
        self.now = now
        decisions = []
        for entry in self.db.pending():
            campaign = entry.campaign
            if campaign.start > now:
                continue
            comrades = self.comrades(campaign, now)
            others = tuple(pk for pk in comrades if pk != self.public_key)
            trust = self.trust_db.accumulated_trust(others)
            threshold = self.trust_db.current_min_accumulated_trust
            if now >= campaign.start + self.cfg.grace:
                launched, reason = False, 'late'
            elif len(comrades) <= self.cfg.min_comrades:
                launched, reason = False, 'too_few_comrades'
            elif trust < threshold:
                launched, reason = False, 'insufficient_trust'
            else:
                launched, reason = True, 'launched'
            self.db.transition(
                campaign,
                CampaignState.LAUNCHED if launched else CampaignState.SKIPPED)
            decision = LaunchDecision(
                campaign, launched, len(comrades), trust, threshold, reason,
                others)
            self.listener('launch_decision', url=campaign.url.render(),
                          start=campaign.start, launched=launched,
                          comrade_count=len(comrades),
                          accumulated_trust=trust, threshold=threshold,
                          reason=reason)
            if launched and self.opt_out is not None:
                self.opt_out(campaign, now)
            decisions.append(decision)
        return decisions

    def poll_inbox(self, now):
        """
        Read, remove and act on every message in this client's inbox.
        Returns the decoded payloads as `(tag, obj)` pairs.
        """
        self.now = now
        key = inbox_key(self.public_key)
        payloads = []
        for raw in self.dht.get(key, now):
            self.dht.remove(key, raw)
            try:
                plaintext = self.sealer.open(
                    self.identity, SealedMessage.from_bytes(raw))
                tag, obj = read_payload(plaintext, now)
            except (CryptoError, ProtocolError) as exc:
                log.warning("dropping undecodable inbox message: %s", exc)
                self.dropped['undecodable'] += 1
                continue
            payloads.append((tag, obj))
            try:
                if tag == CHALLENGE:
                    self.verifier.handle_challenge(obj)
                else:
                    self.verifier.handle_response(obj)
            except (VerificationError, CryptoError) as exc:
                reason = type(exc).__name__
                log.debug("dropped %s: %s", reason, exc)
                self.dropped[reason] += 1
                self.listener('challenge_dropped', reason=reason)
        return payloads

    def verify_comrades(self, now):
        """
        Challenge up to `max_challenges_issued` unverified comrades of the
        campaigns still ahead. Returns how many challenges went out.
        """
        self.now = now
        issued = 0
        limit = self.cfg.max_challenges_issued
        for entry in self.db.pending():
            if issued >= limit:
                break
            campaign = entry.campaign
            if campaign.start <= now:
                continue
            for pk in self.comrades(campaign, now):
                if issued >= limit:
                    break
                if (pk == self.public_key
                        or self.trust_db.is_verified(pk)
                        or pk in self.verifier.pending):
                    continue
                self.verifier.initiate_verification(pk, campaign)
                issued += 1
        return issued

    def conclude(self, outcome):
        """
        Judge a campaign this client watched, and let the result move trust.
        """
        verdict = judge_outcome(outcome, self.trust_cfg.alpha)
        self.trust_db.apply_outcome(verdict, outcome, self.trust_cfg)
        self.listener('verdict', url=outcome.campaign.url.render(),
                      start=outcome.campaign.start, verdict=verdict.value,
                      baseline_latency=outcome.baseline_latency,
                      during_latency=outcome.during_latency)
        return verdict

    def outcome(self, campaign, baseline, during, comrades):
        others = [pk for pk in comrades if pk != self.public_key]
        return CampaignOutcome.from_probes(campaign, baseline, during, others)
