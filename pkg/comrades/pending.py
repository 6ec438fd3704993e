"""
Outstanding challenges, keyed by the challenged peer's public key.

Entries sit on a circular list in issue order, oldest first, so expired
challenges come off the front without scanning the whole table.
"""


class PendingChallenge(object):
    """
    The locally stored answer to a challenge sent to a peer.
    """

    __slots__ = (
        'peer_public_key',
        'expected_rand2',
        'issued_at',
    )

    def __init__(self, peer_public_key, expected_rand2, issued_at):
        self.peer_public_key = peer_public_key
        self.expected_rand2 = expected_rand2
        self.issued_at = issued_at

    def __getstate__(self):
        return {k: getattr(self, k) for k in self.__slots__}

    def __setstate__(self, state):
        for k in self.__slots__:
            setattr(self, k, state[k])


class _Link(object):

    __slots__ = ('challenge', 'older', 'newer')

    def __init__(self, challenge=None):
        self.challenge = challenge
        self.older = self.newer = self

    def unlink(self):
        self.older.newer = self.newer
        self.newer.older = self.older
        self.older = self.newer = self

    def append_before(self, ring):
        """
        Put this link just behind `ring`, i.e. newest in its list.
        """
        self.older = ring.older
        self.newer = ring
        ring.older.newer = self
        ring.older = self


class PendingChallenges(object):
    """
    At most one outstanding challenge per peer. A challenge older than
    `timeout` clock units is purged, after which the peer may be challenged
    again.
    """

    __slots__ = (
        'ring',
        'links',
        'timeout',
        'clock',
    )

    def __init__(self, timeout, clock):
        self.timeout = timeout
        self.clock = clock
        self._reset()

    def _reset(self):
        self.ring = _Link()
        self.links = {}

    def _append(self, challenge):
        link = _Link(challenge)
        self.links[challenge.peer_public_key] = link
        link.append_before(self.ring)

    def in_issue_order(self):
        """
        Outstanding challenges, oldest first. Does not purge.
        """
        link = self.ring.newer
        while link is not self.ring:
            yield link.challenge
            link = link.newer

    def __len__(self):
        self.purge()
        return len(self.links)

    def __contains__(self, peer_public_key):
        self.purge()
        return peer_public_key in self.links

    def __getitem__(self, peer_public_key):
        self.purge()
        try:
            return self.links[peer_public_key].challenge
        except KeyError:
            raise KeyError("No pending challenge for %s" % (
                peer_public_key[:8].hex(),)) from None

    def add(self, peer_public_key, expected_rand2):
        """
        Record a challenge issued now. Returns `False` without touching the
        table if one is already outstanding for the peer.
        """
        if peer_public_key in self:
            return False
        self._append(PendingChallenge(
            peer_public_key, expected_rand2, self.clock()))
        return True

    def pop(self, peer_public_key):
        """
        Remove and return the outstanding challenge for the peer, or `None`.
        """
        self.purge()
        link = self.links.pop(peer_public_key, None)
        if link is None:
            return None
        link.unlink()
        return link.challenge

    def purge(self):
        cutoff = self.clock() - self.timeout
        oldest = self.ring.newer
        while oldest is not self.ring and oldest.challenge.issued_at <= cutoff:
            del self.links[oldest.challenge.peer_public_key]
            oldest.unlink()
            oldest = self.ring.newer

    def __getstate__(self):
        return {
            'timeout': self.timeout,
            'clock': self.clock,
            'pending': list(self.in_issue_order()),
        }

    def __setstate__(self, state):
        self.timeout = state['timeout']
        self.clock = state['clock']
        self._reset()
        for challenge in state['pending']:
            self._append(challenge)
