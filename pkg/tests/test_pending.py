import pickle

from comrades.pending import PendingChallenge, PendingChallenges


def _clock():
    return 0


def _key(n):
    return bytes([n]) * 32


def _peers(pending):
    return [c.peer_public_key[0] for c in pending.in_issue_order()]


def test_creation():
    pending = PendingChallenges(timeout=120, clock=_clock)
    assert pending.timeout == 120
    assert pending.ring.newer is pending.ring
    assert pending.ring.older is pending.ring
    assert len(pending) == 0
    assert _peers(pending) == []


def test_issue_order():
    pending = PendingChallenges(timeout=120, clock=_clock)
    for n in (3, 1, 2):
        pending.add(_key(n), n)
    assert _peers(pending) == [3, 1, 2]
    pending.pop(_key(1))
    assert _peers(pending) == [3, 2]
    pending.add(_key(1), 1)
    assert _peers(pending) == [3, 2, 1]


def test_add_and_contains():
    pending = PendingChallenges(timeout=120, clock=_clock)
    assert _key(1) not in pending
    assert pending.add(_key(1), 17)
    assert _key(1) in pending
    assert pending[_key(1)].expected_rand2 == 17

    # A peer with an outstanding challenge is not challenged twice.
    assert not pending.add(_key(1), 99)
    assert pending[_key(1)].expected_rand2 == 17
    assert len(pending) == 1


def test_get():
    pending = PendingChallenges(timeout=120, clock=_clock)
    try:
        pending[_key(1)]
        assert False, "Should not be able to look up an unknown peer"
    except KeyError as exc:
        assert 'No pending challenge' in str(exc)


def test_pop():
    pending = PendingChallenges(timeout=120, clock=_clock)
    pending.add(_key(1), 5)
    pending.add(_key(2), 6)
    record = pending.pop(_key(1))
    assert record.peer_public_key == _key(1)
    assert record.expected_rand2 == 5
    assert pending.pop(_key(1)) is None
    assert len(pending) == 1
    assert _key(2) in pending


def test_purge():
    ticks = 0
    fake_clock = lambda: ticks
    pending = PendingChallenges(timeout=120, clock=fake_clock)

    pending.add(_key(1), 1)
    ticks = 30
    pending.add(_key(2), 2)
    ticks = 60
    pending.add(_key(3), 3)
    assert len(pending) == 3

    ticks = 120
    assert _key(1) not in pending
    assert len(pending) == 2
    ticks = 149
    assert len(pending) == 2
    ticks = 150
    assert len(pending) == 1
    assert _key(3) in pending

    # An expired peer may be challenged again.
    assert pending.add(_key(1), 11)
    assert pending[_key(1)].issued_at == 150


def test_pickle():
    original = PendingChallenges(timeout=120, clock=_clock)
    original.add(_key(1), 1)
    original.add(_key(2), 2)
    unpickled = pickle.loads(pickle.dumps(original))
    assert unpickled is not original
    assert unpickled.clock is original.clock
    assert unpickled.timeout == original.timeout
    assert len(unpickled) == 2
    assert unpickled[_key(2)].expected_rand2 == 2
    assert _peers(unpickled) == _peers(original) == [1, 2]


def test_pending_challenge_pickle():
    original = PendingChallenge(_key(3), 42, 7)
    unpickled = pickle.loads(pickle.dumps(original))
    assert unpickled.peer_public_key == _key(3)
    assert unpickled.expected_rand2 == 42
    assert unpickled.issued_at == 7
