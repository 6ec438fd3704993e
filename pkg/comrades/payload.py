"""
Wire format of the plaintexts carried in sealed inbox messages.

Payload format
~~~~~~~~~~~~~~

Every payload starts with a one-byte type tag. Integers are 8-byte little
endian. Public keys take whatever length is left once the fixed-size fields
are accounted for.

  0x01 (challenge): issuer_pk || LE8(rand1) || target_hash (32 bytes)
  0x02 (response):  solver_pk || LE8(rand2)
"""

from comrades.crypto import Challenge, ChallengeSolution


__all__ = (
    'CHALLENGE',
    'RESPONSE',
    'ProtocolError',
    'build_challenge',
    'build_response',
    'read_payload',
)


CHALLENGE = 0x01
RESPONSE = 0x02

_HASH_SIZE = 32


class ProtocolError(Exception):
    """
    A payload that does not follow the wire format.
    """


def _read_challenge(body, received_at):
    if len(body) <= 8 + _HASH_SIZE:
        raise ProtocolError("challenge payload too short: %d" % len(body))
    pk = body[:-(8 + _HASH_SIZE)]
    rand1 = int.from_bytes(body[len(pk):len(pk) + 8], 'little')
    return Challenge(pk, rand1, body[-_HASH_SIZE:], received_at)


def _read_response(body, received_at):
    if len(body) <= 8:
        raise ProtocolError("response payload too short: %d" % len(body))
    return ChallengeSolution(body[:-8], int.from_bytes(body[-8:], 'little'))


_PAYLOADS = {
    CHALLENGE: _read_challenge,
    RESPONSE: _read_response,
}


def read_payload(data, received_at=0):
    """
    Decode a payload into `(tag, obj)`, where `obj` is a `Challenge` or a
    `ChallengeSolution`.
    """
    if not data:
        raise ProtocolError("empty payload")
    tag = data[0]
    if tag not in _PAYLOADS:
        raise ProtocolError("'0x%02x' is not recognised" % tag)
    return tag, _PAYLOADS[tag](data[1:], received_at)


def build_challenge(challenge):
    if len(challenge.target_hash) != _HASH_SIZE:
        raise ProtocolError("target hash must be %d bytes" % _HASH_SIZE)
    return (bytes([CHALLENGE]) + challenge.issuer_public_key
            + challenge.rand1.to_bytes(8, 'little') + challenge.target_hash)


def build_response(solution):
    return (bytes([RESPONSE]) + solution.solver_public_key
            + solution.rand2.to_bytes(8, 'little'))
