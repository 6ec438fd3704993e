import random

from comrades.coordinator import (
    CampaignStart,
    CampaignState,
    Coordinator,
    CoordinatorConfig,
    JoinPolicy,
    LocalCampaignDb,
    NoFeasibleStart,
    is_suitable,
    propose_start,
)
from comrades.crypto import ChallengeSolution, ClientIdentity, Sealer, seal
from comrades.dht import SimulatedDht, campaign_key, comrades_key, inbox_key
from comrades.payload import build_response
from comrades.target import canonicalize
from comrades.usage import WEEK, UsageWindows

URL = canonicalize('http://pills.example/buy')

# Only minute 100 of the week is usable.
AT_100 = UsageWindows([(100, 101)])


def _fleet(size, seed=0, **cfg):
    dht = SimulatedDht(ttl=3000)
    cfg = CoordinatorConfig(**cfg)
    events = []
    coordinators = []
    for i in range(size):
        rng = random.Random(seed * 1000 + i)

        def listener(kind, _i=i, **fields):
            events.append((_i, kind, fields))

        launched = []
        coordinator = Coordinator(
            ClientIdentity.generate(rng), cfg, dht, rng, sealer=Sealer(rng),
            listener=listener,
            opt_out=lambda campaign, now, _l=launched: _l.append(
                (campaign, now)))
        coordinator.launched = launched
        coordinators.append(coordinator)
    return dht, coordinators, events


def _kinds(events, kind):
    return [(i, fields) for i, k, fields in events if k == kind]


def test_config_validation():
    for kwargs in ({'min_wait': 0}, {'min_wait': 60, 'max_wait': 60},
                   {'min_comrades': 0}, {'min_accumulated_trust': -1},
                   {'poll_interval': 0}, {'max_rand': -1}):
        try:
            CoordinatorConfig(**kwargs)
            assert False, "%r should be rejected" % (kwargs,)
        except ValueError:
            pass
    assert CoordinatorConfig() == CoordinatorConfig()


def test_is_suitable():
    cfg = CoordinatorConfig()
    assert is_suitable(60, 0, cfg)
    assert is_suitable(1440, 0, cfg)
    assert not is_suitable(59, 0, cfg)
    assert not is_suitable(1441, 0, cfg)
    narrow = CoordinatorConfig(usage_windows=AT_100)
    assert is_suitable(100, 0, narrow)
    assert not is_suitable(101, 0, narrow)
    assert is_suitable(WEEK + 100, WEEK, narrow)


def test_propose_start():
    rng = random.Random(1)
    cfg = CoordinatorConfig()
    for now in range(0, 5000, 37):
        start = propose_start(now, cfg, rng)
        assert is_suitable(start, now, cfg)
    assert propose_start(0, CoordinatorConfig(usage_windows=AT_100),
                         rng) == 100


def test_propose_start_without_window():
    cfg = CoordinatorConfig(usage_windows=AT_100)
    try:
        propose_start(200, cfg, random.Random(1))
        assert False, "No window lies ahead within max_wait"
    except NoFeasibleStart:
        pass


def test_local_campaign_db():
    db = LocalCampaignDb()
    campaign = CampaignStart(URL, 100)
    entry = db.add(campaign, 0)
    assert db.add(campaign, 5) is entry
    assert len(db) == 1
    assert campaign in db
    assert db.pending() == [entry]
    db.transition(campaign, CampaignState.LAUNCHED)
    assert db.pending() == []
    try:
        db.transition(campaign, CampaignState.SKIPPED)
        assert False, "Launched is terminal"
    except ValueError:
        pass


def test_campaign_start_must_be_positive():
    try:
        CampaignStart(URL, 0)
        assert False, "A start must be positive"
    except ValueError:
        pass


def test_first_client_proposes_others_join():
    dht, (c0, c1, c2), events = _fleet(3, usage_windows=AT_100)
    assert c0.handle_url(URL, 0) == [CampaignStart(URL, 100)]
    assert c1.handle_url(URL, 10) == [CampaignStart(URL, 100)]
    assert c2.handle_url(URL, 20) == [CampaignStart(URL, 100)]

    assert dht.get(campaign_key(URL), 20) == [b'100']
    assert dht.get(comrades_key(100, URL), 20) == [
        c0.public_key, c1.public_key, c2.public_key]
    assert [i for i, _ in _kinds(events, 'proposed')] == [0]
    assert len(_kinds(events, 'joined')) == 3


def test_unsuitable_start_is_rejected():
    dht, (c0,), events = _fleet(1, usage_windows=AT_100)
    dht.put(campaign_key(URL), b'10', 0)
    dht.put(campaign_key(URL), str(20 * WEEK).encode('ascii'), 0)
    assert c0.handle_url(URL, 0) == [CampaignStart(URL, 100)]
    rejected = _kinds(events, 'rejected_unsuitable')
    assert [f['start'] for _, f in rejected] == [10, 20 * WEEK]
    assert comrades_key(10, URL) not in dht._tables


def test_malformed_entries_are_ignored():
    dht, (c0,), _ = _fleet(1, usage_windows=AT_100)
    for junk in (b'soon', b'-5', b'0', b'\xff'):
        dht.put(campaign_key(URL), junk, 0)
    assert c0.campaign_starts(URL, 0) == []
    assert c0.handle_url(URL, 0) == [CampaignStart(URL, 100)]


def test_one_outstanding_proposal_per_url():
    dht, (c0,), events = _fleet(1, usage_windows=AT_100)
    c0.handle_url(URL, 0)
    # Minute 100 is now too close, but the earlier proposal still stands.
    assert c0.handle_url(URL, 50) == []
    assert len(_kinds(events, 'proposed')) == 1
    assert dht.get(campaign_key(URL), 50) == [b'100']


def test_join_all_joins_every_suitable_start():
    dht, (c0,), _ = _fleet(1)
    dht.put(campaign_key(URL), b'100', 0)
    dht.put(campaign_key(URL), b'200', 0)
    assert c0.handle_url(URL, 0) == [
        CampaignStart(URL, 100), CampaignStart(URL, 200)]


def test_highest_trust_policy():
    dht, (c0,), _ = _fleet(1, join_policy=JoinPolicy.HIGHEST_TRUST)
    trusted = b't' * 32
    dht.put(campaign_key(URL), b'100', 0)
    dht.put(campaign_key(URL), b'200', 0)
    dht.put(comrades_key(100, URL), b's' * 32, 0)
    dht.put(comrades_key(200, URL), trusted, 0)
    c0.trust_db.mark_verified(trusted)
    assert c0.handle_url(URL, 0) == [CampaignStart(URL, 200)]


def test_highest_trust_ties_go_to_the_earliest():
    dht, (c0,), _ = _fleet(1, join_policy=JoinPolicy.HIGHEST_TRUST)
    dht.put(campaign_key(URL), b'300', 0)
    dht.put(campaign_key(URL), b'100', 0)
    assert c0.handle_url(URL, 0) == [CampaignStart(URL, 100)]


def test_launch_when_enough_comrades():
    dht, fleet, events = _fleet(3, min_comrades=2, usage_windows=AT_100)
    for now, c in enumerate(fleet):
        c.handle_url(URL, now)
    c0 = fleet[0]
    assert c0.tick(99) == []
    [decision] = c0.tick(100)
    assert decision.launched
    assert decision.reason == 'launched'
    assert decision.comrade_count == 3
    assert len(decision.comrades) == 2
    assert c0.public_key not in decision.comrades
    assert c0.launched == [(CampaignStart(URL, 100), 100)]
    assert c0.db[CampaignStart(URL, 100)].state is CampaignState.LAUNCHED
    assert c0.tick(101) == []


def test_skip_with_too_few_comrades():
    _, fleet, _ = _fleet(3, min_comrades=3, usage_windows=AT_100)
    for c in fleet:
        c.handle_url(URL, 0)
    [decision] = fleet[0].tick(100)
    assert not decision.launched
    assert decision.reason == 'too_few_comrades'
    assert fleet[0].launched == []
    assert fleet[0].db[decision.campaign].state is CampaignState.SKIPPED


def test_skip_with_insufficient_trust():
    _, fleet, events = _fleet(3, min_comrades=2, min_accumulated_trust=1,
                              usage_windows=AT_100)
    for c in fleet:
        c.handle_url(URL, 0)
    [decision] = fleet[0].tick(100)
    assert decision.reason == 'insufficient_trust'
    assert decision.threshold == 1
    assert decision.accumulated_trust == 0

    fleet[1].trust_db.mark_verified(fleet[0].public_key)
    [decision] = fleet[1].tick(100)
    assert decision.launched
    assert decision.accumulated_trust == 1
    [(_, fields)] = [e for e in _kinds(events, 'launch_decision')
                     if e[0] == 1]
    assert fields['launched'] and fields['threshold'] == 1


def test_late_client_skips():
    _, fleet, _ = _fleet(3, min_comrades=2, usage_windows=AT_100)
    for c in fleet:
        c.handle_url(URL, 0)
    [decision] = fleet[0].tick(105)
    assert decision.reason == 'late'
    assert not decision.launched


def test_verification_through_the_inbox():
    dht, (c0, c1), events = _fleet(2, max_rand=100, usage_windows=AT_100)
    c0.handle_url(URL, 0)
    c1.handle_url(URL, 0)
    assert c0.verify_comrades(0) == 1
    assert c0.verify_comrades(0) == 0
    c1.poll_inbox(15)
    assert c1.verifier.challenges_solved == 1
    c0.poll_inbox(15)
    assert c0.trust_db.is_verified(c1.public_key)
    assert dht.get(inbox_key(c0.public_key), 15) == []
    assert [i for i, _ in _kinds(events, 'verified')] == [0]


def test_challenges_issued_per_poll_are_limited():
    _, fleet, _ = _fleet(6, max_challenges_issued=2, usage_windows=AT_100)
    for c in fleet:
        c.handle_url(URL, 0)
    assert fleet[0].verify_comrades(0) == 2
    assert fleet[0].verify_comrades(15) == 2
    assert fleet[0].verify_comrades(30) == 1
    assert fleet[0].verify_comrades(100) == 0


def test_bad_inbox_messages_are_dropped():
    dht, (c0, c1), events = _fleet(2, usage_windows=AT_100)
    c0.handle_url(URL, 0)
    c1.handle_url(URL, 0)
    key = inbox_key(c0.public_key)
    dht.put(key, b'garbage', 0)
    dht.put(key, seal(c1.public_key, b'\x02' + b'x' * 40).to_bytes(), 0)
    dht.put(key, seal(c0.public_key, b'\x09junk').to_bytes(), 0)
    dht.put(key, seal(c0.public_key, build_response(
        ChallengeSolution(c1.public_key, 3))).to_bytes(), 0)
    c0.poll_inbox(0)
    assert c0.dropped['undecodable'] == 3
    assert c0.dropped['NoPendingChallenge'] == 1
    assert dht.get(key, 0) == []
    assert _kinds(events, 'challenge_dropped') == [
        (0, {'reason': 'NoPendingChallenge'})]
