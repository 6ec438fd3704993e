import random

from comrades.crypto import ChallengeSolution, ClientIdentity, \
    generate_challenge
from comrades.payload import (
    CHALLENGE,
    RESPONSE,
    ProtocolError,
    build_challenge,
    build_response,
    read_payload,
)


def test_challenge_layout():
    rng = random.Random(1)
    issuer = ClientIdentity.generate(rng)
    challenge, _ = generate_challenge(issuer, 1000, rng)
    data = build_challenge(challenge)
    assert data[0] == CHALLENGE
    assert data[1:33] == issuer.public_key
    assert data[33:41] == challenge.rand1.to_bytes(8, 'little')
    assert data[41:] == challenge.target_hash

    tag, decoded = read_payload(data, received_at=30)
    assert tag == CHALLENGE
    assert decoded.issuer_public_key == issuer.public_key
    assert decoded.rand1 == challenge.rand1
    assert decoded.target_hash == challenge.target_hash
    assert decoded.issued_at == 30


def test_response_layout():
    data = build_response(ChallengeSolution(b'k' * 32, 258))
    assert data == b'\x02' + b'k' * 32 + b'\x02\x01' + b'\x00' * 6
    tag, decoded = read_payload(data)
    assert tag == RESPONSE
    assert decoded == ChallengeSolution(b'k' * 32, 258)


def test_bad_payloads():
    for data in (b'', b'\x03abc', b'\x01' + b'x' * 40, b'\x02' + b'x' * 8):
        try:
            read_payload(data)
            assert False, "%r should not decode" % data
        except ProtocolError:
            pass


def test_unknown_tag_message():
    try:
        read_payload(b'\x7f')
    except ProtocolError as exc:
        assert str(exc) == "'0x7f' is not recognised"
    else:
        assert False, "Unknown tag should be rejected"
