"""
The PUT/GET multimap a DHT provides, and an in-process simulated backend.

Only hashed keys ever reach the store: callers derive a `DhtKey` from the
logical key (a URL, a start||URL string or a public key) and the preimage is
dropped on the spot.
"""

import hashlib
import logging
from dataclasses import dataclass


__all__ = (
    'Dht',
    'DhtKey',
    'DhtRecord',
    'EmptyKey',
    'SimulatedDht',
    'campaign_key',
    'comrades_key',
    'derive_key',
    'inbox_key',
)

log = logging.getLogger(__name__)

KEY_SIZE = 20


class EmptyKey(ValueError):
    """
    A logical key must have at least one byte.
    """


@dataclass(frozen=True)
class DhtKey:
    key: bytes

    def __repr__(self):
        return 'DhtKey(%s)' % self.key.hex()


@dataclass(frozen=True)
class DhtRecord:
    value: bytes
    stored_at: int
    ttl_minutes: int

    def visible_at(self, now):
        return self.stored_at <= now < self.stored_at + self.ttl_minutes


def derive_key(logical_key):
    """
    First 20 bytes of SHA-256 over the logical key.
    """
    if not logical_key:
        raise EmptyKey("logical key must not be empty")
    return DhtKey(hashlib.sha256(logical_key).digest()[:KEY_SIZE])


def campaign_key(url):
    """
    Campaign Table key for a canonical URL.
    """
    return derive_key(url.render().encode('utf-8'))


def comrades_key(start, url):
    """
    Comrades Table key for a (start, canonical URL) pair.
    """
    return derive_key(
        ('%d|%s' % (start, url.render())).encode('utf-8'))


def inbox_key(public_key):
    """
    Inbox key for a raw public key.
    """
    return derive_key(bytes(public_key))


class Dht(object):
    """
    Interface of the store the coordinator relies on. Any DHT offering
    multimap PUT/GET plus value removal can stand behind it.
    """

    def put(self, key, value, now):
        raise NotImplementedError

    def get(self, key, now):
        raise NotImplementedError

    def remove(self, key, value):
        raise NotImplementedError


class SimulatedDht(Dht):
    """
    A single authoritative multimap with set semantics per key.

    Values become visible `latency` minutes after the put and vanish
    `ttl` minutes after that. Re-putting a stored value extends its lifetime
    without moving it in the insertion order.
    """

    def __init__(self, ttl, latency=0):
        if ttl < 1:
            raise ValueError("ttl must be at least one minute")
        if latency < 0:
            raise ValueError("latency must not be negative")
        self.ttl = ttl
        self.latency = latency
        self._tables = {}
        self.puts = 0
        self.gets = 0

    def put(self, key, value, now):
        if not value:
            raise ValueError("value must not be empty")
        self.puts += 1
        stored_at = now + self.latency
        table = self._tables.setdefault(key, {})
        existing = table.get(value)
        if existing is None:
            table[value] = DhtRecord(value, stored_at, self.ttl)
        else:
            expires = max(existing.stored_at + existing.ttl_minutes,
                          stored_at + self.ttl)
            table[value] = DhtRecord(
                value, existing.stored_at, expires - existing.stored_at)

    def get(self, key, now):
        self.gets += 1
        table = self._tables.get(key)
        if not table:
            return []
        return [rec.value for rec in table.values() if rec.visible_at(now)]

    def remove(self, key, value):
        table = self._tables.get(key)
        if table is not None:
            table.pop(value, None)
            if not table:
                del self._tables[key]

    def purge(self, now):
        """
        Drop every record that has expired by `now`.
        """
        dropped = 0
        for key in list(self._tables):
            table = self._tables[key]
            for value in [v for v, rec in table.items()
                          if now >= rec.stored_at + rec.ttl_minutes]:
                del table[value]
                dropped += 1
            if not table:
                del self._tables[key]
        if dropped:
            log.debug("purged %d expired records", dropped)
        return dropped

    def __len__(self):
        return sum(len(table) for table in self._tables.values())
