"""
Identities, hashing, sealed inbox messages and the hashcash challenge.

A challenge hash binds the issuer's public key::

    target_hash = SHA-256(issuer_pk || LE8(rand1) || LE8(rand2))

and the solver brute-forces `rand2` from 0 upwards. A challenge whose hash
was built over some other key has no solution for the stated issuer, which
is what defeats forwarding it to a third party.
"""

import hashlib
import logging
import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF


__all__ = (
    'Challenge',
    'ChallengeSolution',
    'ClientIdentity',
    'CryptoError',
    'DecryptionFailure',
    'NoSolution',
    'NotAddressee',
    'SealedMessage',
    'Sealer',
    'generate_challenge',
    'hash_bytes',
    'key_hash',
    'seal',
    'solve_challenge',
    'unseal',
)

log = logging.getLogger(__name__)

MAX_U64 = 2 ** 64 - 1
KEY_HASH_SIZE = 20

_RAW = serialization.Encoding.Raw
_RAW_PUBLIC = serialization.PublicFormat.Raw
_RAW_PRIVATE = serialization.PrivateFormat.Raw
_NO_ENCRYPTION = serialization.NoEncryption()
_NONCE_SIZE = 12
_INFO = b'comrades inbox v1'


class CryptoError(Exception):
    """
    Base class for failures in this module.
    """


class NoSolution(CryptoError):
    """
    No candidate in [0, max_rand] reproduces the challenge hash.
    """

    def __init__(self, work):
        super().__init__("no solution after %d hash evaluations" % work)
        self.work = work


class NotAddressee(CryptoError):
    """
    The sealed message is addressed to somebody else.
    """


class DecryptionFailure(CryptoError):
    """
    The sealed message is malformed or was tampered with.
    """


def hash_bytes(data):
    """
    SHA-256 of the exact input bytes.
    """
    return hashlib.sha256(data).digest()


def key_hash(public_key):
    """
    The 20-byte digest used to address a key: the recipient tag of sealed
    messages, and the inbox key in the DHT.
    """
    return hash_bytes(public_key)[:KEY_HASH_SIZE]


def _le8(value):
    return value.to_bytes(8, 'little')


class ClientIdentity(object):
    """
    An X25519 keypair. The raw 32-byte public key is the client's identity
    in the Comrades Table and the address of its inbox.
    """

    __slots__ = ('public_key', 'private_key')

    def __init__(self, public_key, private_key):
        if not public_key:
            raise ValueError("public key must not be empty")
        self.public_key = public_key
        self.private_key = private_key

    @classmethod
    def generate(cls, rng=None):
        """
        Create a keypair. With `rng` (a `random.Random`) the key material is
        drawn from it, which makes simulated fleets reproducible.
        """
        if rng is None:
            private = X25519PrivateKey.generate()
        else:
            private = X25519PrivateKey.from_private_bytes(rng.randbytes(32))
        return cls(
            private.public_key().public_bytes(_RAW, _RAW_PUBLIC),
            private.private_bytes(_RAW, _RAW_PRIVATE, _NO_ENCRYPTION))

    def encode(self):
        """
        Canonical encoding of the identity: the raw public key bytes.
        """
        return bytes(self.public_key)

    def __eq__(self, other):
        if not isinstance(other, ClientIdentity):
            return NotImplemented
        return self.public_key == other.public_key

    def __hash__(self):
        return hash(self.public_key)

    def __repr__(self):
        return '<ClientIdentity %s>' % self.public_key[:8].hex()


@dataclass(frozen=True)
class Challenge:
    issuer_public_key: bytes
    rand1: int
    target_hash: bytes
    issued_at: int = 0

    def preimage_prefix(self):
        return self.issuer_public_key + _le8(self.rand1)


@dataclass(frozen=True)
class ChallengeSolution:
    solver_public_key: bytes
    rand2: int

    def matches(self, challenge):
        """
        Whether this solution reproduces the challenge's target hash.
        """
        digest = hash_bytes(challenge.preimage_prefix() + _le8(self.rand2))
        return digest == challenge.target_hash


def generate_challenge(issuer, max_rand, rng, now=0):
    """
    Draw `rand1` and `rand2` uniformly from [0, max_rand] and build the
    challenge. The caller keeps the returned `rand2` to check the answer.
    """
    if not 0 <= max_rand <= MAX_U64:
        raise ValueError("max_rand out of range: %r" % (max_rand,))
    rand1 = rng.randint(0, max_rand)
    rand2 = rng.randint(0, max_rand)
    target = hash_bytes(issuer.public_key + _le8(rand1) + _le8(rand2))
    return Challenge(issuer.public_key, rand1, target, now), rand2


def solve_challenge(challenge, max_rand):
    """
    Find the smallest `test` in [0, max_rand] whose hash matches. Returns
    `(test, work)` where `work` is the number of hash evaluations, i.e.
    `test + 1`. Raises `NoSolution` when the interval is exhausted.
    """
    # Hash the fixed prefix once and copy the state per candidate.
    prefix = hashlib.sha256(challenge.preimage_prefix())
    target = challenge.target_hash
    for test in range(max_rand + 1):
        h = prefix.copy()
        h.update(test.to_bytes(8, 'little'))
        if h.digest() == target:
            return test, test + 1
    raise NoSolution(max_rand + 1)


@dataclass(frozen=True)
class SealedMessage:
    recipient_key_hash: bytes
    ciphertext: bytes

    def to_bytes(self):
        return self.recipient_key_hash + self.ciphertext

    @classmethod
    def from_bytes(cls, data):
        if len(data) <= KEY_HASH_SIZE:
            raise DecryptionFailure("sealed message too short")
        return cls(data[:KEY_HASH_SIZE], data[KEY_HASH_SIZE:])


class Sealer(object):
    """
    Anonymous public-key sealing: an ephemeral X25519 exchange with the
    recipient's key, HKDF-SHA256, then AES-GCM with the recipient tag as
    associated data.

    Ciphertext layout: ephemeral public key (32) || nonce (12) || AEAD output.

    Passing `rng` draws ephemeral keys and nonces from it rather than the
    OS, so a seeded simulation writes identical bytes into the DHT on every
    run.
    """

    __slots__ = ('rng',)

    def __init__(self, rng=None):
        self.rng = rng

    def _random(self, size):
        if self.rng is None:
            return os.urandom(size)
        return self.rng.randbytes(size)

    @staticmethod
    def _derive(shared, recipient_tag):
        return HKDF(
            algorithm=hashes.SHA256(),
            length=32,
            salt=recipient_tag,
            info=_INFO,
        ).derive(shared)

    def seal(self, recipient_public_key, plaintext):
        if not recipient_public_key:
            raise ValueError("recipient public key must not be empty")
        tag = key_hash(recipient_public_key)
        try:
            peer = X25519PublicKey.from_public_bytes(recipient_public_key)
        except ValueError as exc:
            raise CryptoError("unusable recipient key: %s" % exc) from exc
        ephemeral = X25519PrivateKey.from_private_bytes(self._random(32))
        key = self._derive(ephemeral.exchange(peer), tag)
        nonce = self._random(_NONCE_SIZE)
        body = AESGCM(key).encrypt(nonce, plaintext, tag)
        return SealedMessage(
            tag,
            ephemeral.public_key().public_bytes(_RAW, _RAW_PUBLIC)
            + nonce + body)

    def open(self, identity, msg):
        if msg.recipient_key_hash != key_hash(identity.public_key):
            raise NotAddressee("message is not addressed to %r" % (identity,))
        data = msg.ciphertext
        if len(data) < 32 + _NONCE_SIZE + 16:
            raise DecryptionFailure("ciphertext too short")
        nonce = data[32:32 + _NONCE_SIZE]
        private = X25519PrivateKey.from_private_bytes(identity.private_key)
        try:
            shared = private.exchange(
                X25519PublicKey.from_public_bytes(data[:32]))
        except ValueError as exc:
            raise DecryptionFailure("bad ephemeral key: %s" % exc) from exc
        key = self._derive(shared, msg.recipient_key_hash)
        try:
            return AESGCM(key).decrypt(
                nonce, data[32 + _NONCE_SIZE:], msg.recipient_key_hash)
        except InvalidTag as exc:
            raise DecryptionFailure("authentication failed") from exc


_default_sealer = Sealer()


def seal(recipient_public_key, plaintext, sealer=None):
    """
    Encrypt `plaintext` so that only the holder of the matching private key
    can read it.
    """
    return (sealer or _default_sealer).seal(recipient_public_key, plaintext)


def unseal(identity, msg, sealer=None):
    """
    Open a sealed message with `identity`'s private key.
    """
    return (sealer or _default_sealer).open(identity, msg)
