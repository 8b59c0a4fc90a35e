import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from ordforge import schnorr
from ordforge.schnorr import (
    SECP256K1,
    CurveParams,
    InvalidPointError,
    Signature,
    aggregate_keys,
    challenge,
    keypair_from_secret,
    merkle_proof,
    merkle_root,
    sign,
    taproot_output,
    tweak_secret,
    verify,
    verify_proof,
    verify_script_path,
)

C = SECP256K1
ORACLE = oracles.SECP


def small_curve():
    """A prime-order curve y^2 = x^3 + 7 over a small field, found by counting."""
    for p in range(1000, 2000):
        if any(p % q == 0 for q in range(2, int(p ** 0.5) + 1)) or p % 4 != 3:
            continue
        points = [(x, y) for x in range(p) for y in range(p) if (y * y - x ** 3 - 7) % p == 0]
        n = len(points) + 1
        if n > 2 and all(n % q for q in range(2, int(n ** 0.5) + 1)):
            return CurveParams("tiny", p, 0, 7, points[0], n), oracles.AffineCurve(p, 0, 7, points[0], n)
    raise AssertionError("no prime-order curve found")


TINY, TINY_ORACLE = small_curve()


def test_generator_matches_oracle():
    for k in (1, 2, 3, 7, 2**128 + 5, C.n - 1):
        assert C.mul_g(k) == ORACLE.mul(ORACLE.G, k)
    assert C.mul_g(C.n) is None


def test_fixed_nonce_signature_frozen():
    d, k, m = 0xC0FFEE, 0xBEEF, b"ordinals"
    R, s = oracles.schnorr_sign(ORACLE, d, k, m)
    sig = sign(d, m, curve=C, nonce=k)
    assert (sig.R, sig.s) == (R, s)
    # frozen from the affine oracle
    assert sig.to_bytes().hex() == (
        "0346c37bfab7a24214b306be55da2ac19b814f151fe06a7fb09821de344b77781b"
        "3d4dabc9b7541d5297fdf3283a9e1215f0d2a3fe09bae2ca90a1ca538ced975a"
    )
    assert verify(C.mul_g(d), m, sig)


def test_identity_is_point_exact():
    rng = random.Random(7)
    for _ in range(20):
        d, k = rng.randrange(1, C.n), rng.randrange(1, C.n)
        m = rng.randbytes(32)
        sig = sign(d, m, curve=C, nonce=k)
        Q = C.mul_g(d)
        e = challenge(sig.R, Q, m)
        lhs = ORACLE.add(ORACLE.mul(ORACLE.G, sig.s), ORACLE.mul(Q, e))
        assert lhs == sig.R


def test_tiny_curve_exhaustive():
    curve = TINY
    for d in range(1, curve.n):
        Q = curve.mul_g(d)
        assert Q == TINY_ORACLE.mul(TINY_ORACLE.G, d)
        assert curve.decode_point(curve.encode_point(Q)) == Q
        sig = sign(d, b"m", curve=curve, nonce=(d * 3) % curve.n or 1)
        assert verify(Q, b"m", sig, curve)


def test_rejects_bad_inputs():
    d = 12345
    sig = sign(d, b"x", nonce=999)
    Q = C.mul_g(d)
    assert not verify(Q, b"y", sig)
    assert not verify(C.mul_g(d + 1), b"x", sig)
    assert not verify(Q, b"x", Signature(sig.R, (sig.s + 1) % C.n))
    with pytest.raises(InvalidPointError):
        verify((1, 1), b"x", sig)
    with pytest.raises(ValueError):
        sign(0, b"x")
    with pytest.raises(ValueError):
        keypair_from_secret(C.n)
    with pytest.raises(ValueError):
        Signature.from_bytes(b"\x02" + bytes(63))


def test_point_codec():
    for k in (1, 2, 99, C.n - 1):
        P = C.mul_g(k)
        raw = C.encode_point(P)
        assert len(raw) == 33 and raw[0] in (2, 3)
        assert C.decode_point(raw) == P
    with pytest.raises(ValueError):
        C.decode_point(b"\x04" + bytes(32))
    with pytest.raises(ValueError):
        C.decode_point(b"\x02" + (5).to_bytes(32, "big"))  # x^3 + 7 = 132 is not a square


def test_signature_bytes_round_trip():
    sig = sign(777, b"abc", nonce=4242)
    raw = sig.to_bytes()
    assert len(raw) == 65
    assert Signature.from_bytes(raw) == sig


def test_aggregate_is_point_sum():
    secrets = [11, 22, 33]
    agg = aggregate_keys([C.mul_g(d) for d in secrets])
    assert agg == C.mul_g(sum(secrets))
    # the aggregate secret signs for the aggregate key
    assert verify(agg, b"m", sign(sum(secrets), b"m", nonce=5))


# -- MAST ------------------------------------------------------------------

def test_merkle_by_hand():
    a, b, c = b"\x51", b"\x52", b"\x53"
    la, lb, lc = (oracles.tagged(b"ord-forge/leaf", s) for s in (a, b, c))

    def node(x, y):
        return oracles.tagged(b"ord-forge/node", min(x, y) + max(x, y))

    assert merkle_root([a]) == la
    assert merkle_root([a, b]) == node(la, lb)
    assert merkle_root([a, b, c]) == node(node(la, lb), lc)
    assert merkle_proof([a, b, c], 2) == [node(la, lb)]
    assert merkle_proof([a, b, c], 0) == [lb, lc]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.binary(min_size=1, max_size=40), min_size=1, max_size=12, unique=True), st.data())
def test_every_leaf_proves(scripts, data):
    root = merkle_root(scripts)
    i = data.draw(st.integers(0, len(scripts) - 1))
    proof = merkle_proof(scripts, i)
    assert verify_proof(root, scripts[i], proof)
    assert not verify_proof(root, scripts[i] + b"\x00", proof)


def test_taproot_tweak_by_hand():
    d = 424242
    P = C.mul_g(d)
    root = merkle_root([b"\x51"])
    t = int.from_bytes(oracles.tagged(b"ord-forge/tweak", C.encode_point(P) + root), "big") % C.n
    commitment = taproot_output(P, root)
    assert commitment.output_key == ORACLE.add(P, ORACLE.mul(ORACLE.G, t))
    assert tweak_secret(d, root) == (d + t) % C.n
    assert C.mul_g(tweak_secret(d, root)) == commitment.output_key
    assert verify_script_path(commitment, b"\x51", [])
    assert not verify_script_path(commitment, b"\x52", [])
    assert not verify_script_path(taproot_output(P), b"\x51", [])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, C.n - 1), st.integers(1, C.n - 1), st.binary(max_size=64))
def test_sign_verify_property(d, k, m):
    sig = sign(d, m, nonce=k)
    assert verify(C.mul_g(d), m, sig)


def test_entropy_hook_is_used():
    draws = []

    def entropy(bound):
        draws.append(bound)
        return 31337

    sig = sign(5, b"m", entropy)
    assert draws == [C.n]
    assert sig.R == C.mul_g(31337)


def test_deterministic_nonce_is_stable():
    assert schnorr.deterministic_nonce(1, b"a") == schnorr.deterministic_nonce(1, b"a")
    assert schnorr.deterministic_nonce(1, b"a") != schnorr.deterministic_nonce(1, b"b")


def test_endomorphism_path_matches_plain_window():
    import dataclasses
    plain = dataclasses.replace(C, glv=None, _table=[])
    beta, lam = C.glv[:2]
    assert C.mul(C.G, lam) == (beta * C.G[0] % C.p, C.G[1])
    rng = random.Random(11)
    for _ in range(50):
        Q, k = C.mul_g(rng.randrange(1, C.n)), rng.randrange(C.n)
        assert C.mul(Q, k) == plain.mul(Q, k)
        k1, k2 = C._split(k)
        assert (k1 + k2 * lam) % C.n == k
        assert max(abs(k1), abs(k2)).bit_length() <= 129
