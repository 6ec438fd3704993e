"""
Adversaries with full read/write access to the DHT.

None of them can read an honest client's inbox or forge its seals; they can
only do what any participant can: put and remove values, and send sealed
messages to public keys.
"""

import enum
import logging
from dataclasses import dataclass, field

from comrades.crypto import (
    ChallengeSolution,
    ClientIdentity,
    CryptoError,
    SealedMessage,
    Sealer,
    generate_challenge,
)
from comrades.dht import campaign_key, comrades_key, inbox_key
from comrades.payload import (
    CHALLENGE,
    RESPONSE,
    ProtocolError,
    build_challenge,
    build_response,
    read_payload,
)
from comrades.target import InvalidUrl, canonicalize


__all__ = (
    'Adversary',
    'AdversarySpec',
    'ChallengeFlood',
    'MitmForwarder',
    'STRATEGIES',
    'Separation',
    'Strategy',
    'SybilFlood',
    'TimePortal',
    'adversary_step',
    'build_adversary',
)

log = logging.getLogger(__name__)

REQUIRED = object()
TEN_YEARS = 10 * 365 * 24 * 60


class Strategy(enum.Enum):
    TIME_PORTAL = 'TimePortal'
    SEPARATION = 'Separation'
    CHALLENGE_FLOOD = 'ChallengeFlood'
    MITM_FORWARDER = 'MitmForwarder'
    SYBIL_FLOOD = 'SybilFlood'


@dataclass(frozen=True)
class AdversarySpec:
    strategy: Strategy
    params: dict = field(default_factory=dict)


class Adversary(object):
    """
    Base class. `PARAMS` maps each parameter to `(type, default)`;
    `REQUIRED` marks parameters without a default.
    """

    PARAMS = {
        'url': (str, REQUIRED),
        'at': (int, 0),
        'period': (int, 0),
    }

    def __init__(self, name, params, rng):
        self.name = name
        self.params = params
        self.rng = rng
        self.url = canonicalize(params['url'])
        self.stats = {}
        self._last = None

    @classmethod
    def check(cls, params):
        """
        Fill defaults and return `(params, errors)`.
        """
        errors = []
        filled = {}
        for key in params:
            if key not in cls.PARAMS:
                errors.append((key, "unknown parameter"))
        for key, (kind, default) in cls.PARAMS.items():
            if key not in params:
                if default is REQUIRED:
                    errors.append((key, "required"))
                else:
                    filled[key] = default
                continue
            value = params[key]
            if kind is int and (isinstance(value, bool)
                                or not isinstance(value, int)):
                errors.append((key, "expected an integer"))
            elif kind is str and not isinstance(value, str):
                errors.append((key, "expected a string"))
            elif kind is int and value < 0:
                errors.append((key, "must not be negative"))
            else:
                filled[key] = value
        if 'url' in filled:
            try:
                canonicalize(filled['url'])
            except InvalidUrl as exc:
                errors.append(('url', str(exc)))
        errors.extend(cls._check_ranges(filled))
        return filled, errors

    @classmethod
    def _check_ranges(cls, params):
        return []

    @property
    def keys(self):
        """
        Public keys this adversary controls.
        """
        return []

    def due(self, now):
        if now < self.params['at']:
            return False
        if self._last is None:
            return True
        period = self.params['period']
        return period > 0 and now - self._last >= period

    def step(self, now, dht, world):
        if not self.due(now):
            return []
        self._last = now
        return self.act(now, dht, world)

    def act(self, now, dht, world):
        raise NotImplementedError

    def _event(self, action, **fields):
        fields.update(adversary=self.name, action=action)
        return fields

    def _count(self, stat, n=1):
        self.stats[stat] = self.stats.get(stat, 0) + n

    def _starts(self, dht, now):
        starts = {}
        for value in dht.get(campaign_key(self.url), now):
            try:
                starts[int(value.decode('ascii'))] = None
            except ValueError:
                pass
        return list(starts)

    def _inject(self, dht, now, start):
        dht.put(campaign_key(self.url), str(start).encode('ascii'), now)
        self._count('starts_injected')
        return self._event('inject_start', url=self.url.render(), start=start)


class TimePortal(Adversary):
    """
    Pushes a start years into the future into the Campaign Table.
    """

    PARAMS = dict(Adversary.PARAMS, offset_minutes=(int, TEN_YEARS))

    @classmethod
    def _check_ranges(cls, params):
        if params.get('offset_minutes', 1) < 1:
            return [('offset_minutes', "must be at least 1")]
        return []

    def act(self, now, dht, world):
        return [self._inject(dht, now, now + self.params['offset_minutes'])]


class Separation(Adversary):
    """
    Keeps injecting starts only `lead_minutes` ahead, hoping to scatter
    honest clients over many small campaigns.
    """

    PARAMS = dict(Adversary.PARAMS, injection_period=(int, 60),
                  lead_minutes=(int, 60))

    @classmethod
    def _check_ranges(cls, params):
        errors = []
        for key in ('injection_period', 'lead_minutes'):
            if params.get(key, 1) < 1:
                errors.append((key, "must be at least 1"))
        return errors

    def due(self, now):
        if now < self.params['at']:
            return False
        return (self._last is None
                or now - self._last >= self.params['injection_period'])

    def act(self, now, dht, world):
        return [self._inject(dht, now, now + self.params['lead_minutes'])]


class _Registering(Adversary):
    """
    An adversary that signs its own keys up as comrades of every start it
    finds for the URL.
    """

    def __init__(self, name, params, rng):
        super().__init__(name, params, rng)
        self._registered = {}

    def _register(self, dht, now, identities):
        events = []
        for start in self._starts(dht, now):
            if start in self._registered:
                continue
            self._registered[start] = None
            for identity in identities:
                dht.put(comrades_key(start, self.url), identity.public_key,
                        now)
            self._count('comrade_registrations', len(identities))
            events.append(self._event(
                'register_comrades', url=self.url.render(), start=start,
                count=len(identities)))
        return events


class ChallengeFlood(_Registering):
    """
    Joins the victim's campaigns, then buries its inbox in valid challenges.
    """

    PARAMS = dict(Adversary.PARAMS, victim=(int, REQUIRED),
                  count=(int, 200), max_rand=(int, 1000))

    def __init__(self, name, params, rng):
        super().__init__(name, params, rng)
        self.identity = ClientIdentity.generate(rng)
        self.sealer = Sealer(rng)

    @property
    def keys(self):
        return [self.identity.public_key]

    def act(self, now, dht, world):
        events = self._register(dht, now, [self.identity])
        victim = world.client_key(self.params['victim'])
        for _ in range(self.params['count']):
            challenge, _ = generate_challenge(
                self.identity, self.params['max_rand'], self.rng, now)
            sealed = self.sealer.seal(victim, build_challenge(challenge))
            dht.put(inbox_key(victim), sealed.to_bytes(), now)
        self._count('challenges_sent', self.params['count'])
        events.append(self._event(
            'flood', victim=self.params['victim'],
            count=self.params['count']))
        return events

    def collect(self, dht, now):
        """
        Drain the adversary's inbox, counting the answers it extracted.
        The victim's own challenges to its new comrade are counted apart.
        """
        key = inbox_key(self.identity.public_key)
        for raw in dht.get(key, now):
            dht.remove(key, raw)
            try:
                plaintext = self.sealer.open(
                    self.identity, SealedMessage.from_bytes(raw))
                tag, _ = read_payload(plaintext, now)
            except (CryptoError, ProtocolError):
                self._count('undecodable')
                continue
            if tag == RESPONSE:
                self._count('answers_received')
            else:
                self._count('challenges_received')


class MitmForwarder(_Registering):
    """
    Poses as a comrade and passes every challenge it receives on to another
    comrade, hoping the answer can be passed back as its own.

    `relay` forwards the challenge untouched; `rewrite` substitutes its own
    key as the issuer so that any answer comes back to it.
    """

    PARAMS = dict(Adversary.PARAMS, mode=(str, 'rewrite'), period=(int, 1))
    MODES = ('relay', 'rewrite')

    @classmethod
    def _check_ranges(cls, params):
        if params.get('mode', 'rewrite') not in cls.MODES:
            return [('mode', "must be one of %s" % ', '.join(cls.MODES))]
        return []

    def __init__(self, name, params, rng):
        super().__init__(name, params, rng)
        self.identity = ClientIdentity.generate(rng)
        self.sealer = Sealer(rng)
        self._awaiting = []

    @property
    def keys(self):
        return [self.identity.public_key]

    def _victims(self, dht, now, exclude):
        victims = {}
        for start in self._starts(dht, now):
            for pk in dht.get(comrades_key(start, self.url), now):
                if pk not in exclude:
                    victims[pk] = None
        return list(victims)

    def _send(self, dht, now, recipient, payload):
        sealed = self.sealer.seal(recipient, payload)
        dht.put(inbox_key(recipient), sealed.to_bytes(), now)

    def act(self, now, dht, world):
        events = self._register(dht, now, [self.identity])
        key = inbox_key(self.identity.public_key)
        for raw in dht.get(key, now):
            dht.remove(key, raw)
            try:
                plaintext = self.sealer.open(
                    self.identity, SealedMessage.from_bytes(raw))
                tag, obj = read_payload(plaintext, now)
            except (CryptoError, ProtocolError):
                continue
            if tag == CHALLENGE:
                events.extend(self._forward(dht, now, obj))
            elif self._awaiting:
                issuer = self._awaiting.pop(0)
                self._send(dht, now, issuer, build_response(
                    ChallengeSolution(self.identity.public_key, obj.rand2)))
                self._count('responses_relayed')
        return events

    def _forward(self, dht, now, challenge):
        issuer = challenge.issuer_public_key
        victims = self._victims(
            dht, now, (issuer, self.identity.public_key))
        if not victims:
            self._count('challenges_stranded')
            return []
        victim = self.rng.choice(victims)
        if self.params['mode'] == 'rewrite':
            challenge = type(challenge)(
                self.identity.public_key, challenge.rand1,
                challenge.target_hash, now)
            self._awaiting.append(issuer)
        self._send(dht, now, victim, build_challenge(challenge))
        self._count('challenges_forwarded')
        return [self._event('forward', mode=self.params['mode'])]


class SybilFlood(_Registering):
    """
    Registers a crowd of fresh identities as comrades without ever solving
    a challenge.
    """

    PARAMS = dict(Adversary.PARAMS, identity_count=(int, 100))

    @classmethod
    def _check_ranges(cls, params):
        if params.get('identity_count', 1) < 1:
            return [('identity_count', "must be at least 1")]
        return []

    def __init__(self, name, params, rng):
        super().__init__(name, params, rng)
        self.identities = [ClientIdentity.generate(rng)
                           for _ in range(params['identity_count'])]

    @property
    def keys(self):
        return [identity.public_key for identity in self.identities]

    def act(self, now, dht, world):
        return self._register(dht, now, self.identities)


STRATEGIES = {
    Strategy.TIME_PORTAL: TimePortal,
    Strategy.SEPARATION: Separation,
    Strategy.CHALLENGE_FLOOD: ChallengeFlood,
    Strategy.MITM_FORWARDER: MitmForwarder,
    Strategy.SYBIL_FLOOD: SybilFlood,
}


def build_adversary(spec, name, rng):
    cls = STRATEGIES[spec.strategy]
    params, errors = cls.check(spec.params)
    if errors:
        raise ValueError("; ".join("%s: %s" % e for e in errors))
    return cls(name, params, rng)


def adversary_step(adversary, now, dht, world):
    """
    Let one adversary act at `now`. Returns the events it produced.
    """
    events = adversary.step(now, dht, world)
    if isinstance(adversary, ChallengeFlood):
        adversary.collect(dht, now)
    for event in events:
        log.debug("%s at %d: %s", adversary.name, now, event['action'])
    return events
