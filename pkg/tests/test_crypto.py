import random

from comrades.crypto import (
    Challenge,
    ChallengeSolution,
    ClientIdentity,
    DecryptionFailure,
    NoSolution,
    NotAddressee,
    SealedMessage,
    Sealer,
    generate_challenge,
    hash_bytes,
    key_hash,
    seal,
    solve_challenge,
    unseal,
)


def test_hash_bytes():
    assert hash_bytes(b'').hex() == (
        'e3b0c44298fc1c149afbf4c8996fb924'
        '27ae41e4649b934ca495991b7852b855')
    assert len(key_hash(b'x' * 32)) == 20
    assert key_hash(b'x' * 32) == hash_bytes(b'x' * 32)[:20]


def test_identity_generation_is_reproducible():
    a = ClientIdentity.generate(random.Random(7))
    b = ClientIdentity.generate(random.Random(7))
    c = ClientIdentity.generate(random.Random(8))
    assert a == b
    assert a != c
    assert len(a.public_key) == 32
    assert a.encode() == a.public_key
    assert hash(a) == hash(b)


def test_identity_rejects_empty_key():
    try:
        ClientIdentity(b'', b'x')
        assert False, "Should not accept an empty public key"
    except ValueError:
        pass


def test_challenge_round_trip():
    rng = random.Random(1)
    issuer = ClientIdentity.generate(rng)
    challenge, rand2 = generate_challenge(issuer, 500, rng, now=12)
    assert challenge.issuer_public_key == issuer.public_key
    assert challenge.issued_at == 12
    assert 0 <= challenge.rand1 <= 500
    test, work = solve_challenge(challenge, 500)
    assert test == rand2
    assert work == rand2 + 1
    assert ChallengeSolution(b'solver', test).matches(challenge)
    assert not ChallengeSolution(b'solver', test + 1).matches(challenge)


def test_solver_work_over_many_challenges():
    rng = random.Random(2024)
    issuer = ClientIdentity.generate(rng)
    max_rand = 10000
    total = 0
    for _ in range(200):
        challenge, rand2 = generate_challenge(issuer, max_rand, rng)
        test, work = solve_challenge(challenge, max_rand)
        assert test == rand2
        total += work
    mean = total / 200
    assert 0.4 * (max_rand + 1) <= mean <= 0.6 * (max_rand + 1)


def test_zero_max_rand():
    rng = random.Random(3)
    issuer = ClientIdentity.generate(rng)
    challenge, rand2 = generate_challenge(issuer, 0, rng)
    assert challenge.rand1 == 0
    assert rand2 == 0
    assert solve_challenge(challenge, 0) == (0, 1)


def test_rewritten_issuer_has_no_solution():
    rng = random.Random(4)
    issuer = ClientIdentity.generate(rng)
    forger = ClientIdentity.generate(rng)
    challenge, _ = generate_challenge(issuer, 100, rng)
    forged = Challenge(forger.public_key, challenge.rand1,
                       challenge.target_hash)
    try:
        solve_challenge(forged, 100)
        assert False, "A rewritten challenge should not be solvable"
    except NoSolution as exc:
        assert exc.work == 101


def test_generate_rejects_bad_range():
    rng = random.Random(5)
    issuer = ClientIdentity.generate(rng)
    for bad in (-1, 2 ** 64):
        try:
            generate_challenge(issuer, bad, rng)
            assert False, "max_rand %d should be rejected" % bad
        except ValueError:
            pass


def test_seal_and_open():
    rng = random.Random(6)
    alice = ClientIdentity.generate(rng)
    sealed = seal(alice.public_key, b'hello comrade')
    assert sealed.recipient_key_hash == key_hash(alice.public_key)
    assert b'hello comrade' not in sealed.ciphertext
    assert unseal(alice, sealed) == b'hello comrade'

    wire = sealed.to_bytes()
    assert unseal(alice, SealedMessage.from_bytes(wire)) == b'hello comrade'


def test_seeded_sealer_is_deterministic():
    alice = ClientIdentity.generate(random.Random(6))
    one = Sealer(random.Random(9)).seal(alice.public_key, b'x')
    two = Sealer(random.Random(9)).seal(alice.public_key, b'x')
    assert one == two


def test_open_wrong_recipient():
    rng = random.Random(7)
    alice = ClientIdentity.generate(rng)
    mallory = ClientIdentity.generate(rng)
    sealed = seal(alice.public_key, b'secret')
    try:
        unseal(mallory, sealed)
        assert False, "Mallory should not be the addressee"
    except NotAddressee:
        pass

    # Even with the tag forged, Mallory's key cannot authenticate it.
    forged = SealedMessage(key_hash(mallory.public_key), sealed.ciphertext)
    try:
        unseal(mallory, forged)
        assert False, "Mallory should not be able to decrypt"
    except DecryptionFailure:
        pass


def test_open_tampered():
    alice = ClientIdentity.generate(random.Random(8))
    sealed = seal(alice.public_key, b'secret')
    body = bytearray(sealed.ciphertext)
    body[-1] ^= 0x01
    try:
        unseal(alice, SealedMessage(sealed.recipient_key_hash, bytes(body)))
        assert False, "Tampering should be detected"
    except DecryptionFailure:
        pass


def test_open_truncated():
    alice = ClientIdentity.generate(random.Random(9))
    try:
        unseal(alice, SealedMessage(key_hash(alice.public_key), b'short'))
        assert False, "A short ciphertext should be rejected"
    except DecryptionFailure:
        pass
    try:
        SealedMessage.from_bytes(b'x' * 20)
        assert False, "A message without a body should be rejected"
    except DecryptionFailure:
        pass
