"""Schnorr signatures over short Weierstrass curves, MAST commitments, taproot keys.

The signature scheme is the textbook variant::

    R = k*G,  e = H(R || Q || m) mod n,  s = (k - e*d) mod n
    valid  iff  s*G + e*Q == R

This is *not* BIP-340: points are 33-byte compressed (not x-only), the whole
of ``R`` travels in the signature, and ``s`` is computed with a minus sign.
Key aggregation is a plain point sum and is not safe against rogue-key
attacks; it is fine for the simulator, not for real funds.
"""

from __future__ import annotations

import hashlib
import secrets
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

Point = Optional[tuple[int, int]]  # None is the point at infinity

MSG_TAG = b"ord-forge/msg"
LEAF_TAG = b"ord-forge/leaf"
NODE_TAG = b"ord-forge/node"
TWEAK_TAG = b"ord-forge/tweak"


_TABLE_LOCK = threading.Lock()


class InvalidPointError(ValueError):
    pass


class DegenerateKeyError(ValueError):
    pass


def tagged_hash(tag: bytes, data: bytes) -> bytes:
    return hashlib.sha256(tag + data).digest()


def _wnaf(k: int, width: int = 5) -> list[int]:
    """Signed digits of k, least significant first; nonzero digits are odd."""
    sign = -1 if k < 0 else 1
    k = abs(k)
    half, full = 1 << (width - 1), 1 << width
    digits = []
    while k:
        if k & 1:
            d = k % full
            if d >= half:
                d -= full
            k -= d
        else:
            d = 0
        digits.append(sign * d)
        k >>= 1
    return digits


@dataclass(frozen=True, eq=False)
class CurveParams:
    """Curve ``y^2 = x^3 + a*x + b`` over GF(p) with a generator of prime order n."""

    name: str
    p: int
    a: int
    b: int
    G: tuple[int, int]
    n: int
    # optional endomorphism (beta, lambda, a1, b1, a2, b2) with lambda*(x, y) == (beta*x, y)
    glv: Optional[tuple[int, int, int, int, int, int]] = field(default=None, repr=False)
    _table: list = field(default_factory=list, repr=False, compare=False)

    @property
    def coord_size(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @property
    def scalar_size(self) -> int:
        return (self.n.bit_length() + 7) // 8

    def on_curve(self, P: Point) -> bool:
        if P is None:
            return False
        x, y = P
        if not (0 <= x < self.p and 0 <= y < self.p):
            return False
        return (y * y - (x * x * x + self.a * x + self.b)) % self.p == 0

    # -- arithmetic in Jacobian coordinates (X, Y, Z), Z == 0 is infinity --

    def _to_jac(self, P: Point):
        return (1, 1, 0) if P is None else (P[0], P[1], 1)

    def _from_jac(self, J) -> Point:
        X, Y, Z = J
        if Z == 0:
            return None
        p = self.p
        zi = pow(Z, -1, p)
        zi2 = zi * zi % p
        return (X * zi2 % p, Y * zi2 * zi % p)

    def _jdouble(self, J):
        X, Y, Z = J
        p = self.p
        if Z == 0 or Y == 0:
            return (1, 1, 0)
        YY = Y * Y % p
        S = 4 * X * YY % p
        M = 3 * X * X
        if self.a:
            M += self.a * pow(Z, 4, p)
        M %= p
        X3 = (M * M - 2 * S) % p
        Y3 = (M * (S - X3) - 8 * YY * YY) % p
        Z3 = 2 * Y * Z % p
        return (X3, Y3, Z3)

    def _jadd(self, J1, J2):
        X1, Y1, Z1 = J1
        X2, Y2, Z2 = J2
        if Z1 == 0:
            return J2
        if Z2 == 0:
            return J1
        p = self.p
        Z1Z1 = Z1 * Z1 % p
        Z2Z2 = Z2 * Z2 % p
        U1 = X1 * Z2Z2 % p
        U2 = X2 * Z1Z1 % p
        S1 = Y1 * Z2 * Z2Z2 % p
        S2 = Y2 * Z1 * Z1Z1 % p
        if U1 == U2:
            if S1 != S2:
                return (1, 1, 0)
            return self._jdouble(J1)
        H = (U2 - U1) % p
        R = (S2 - S1) % p
        HH = H * H % p
        HHH = H * HH % p
        V = U1 * HH % p
        X3 = (R * R - HHH - 2 * V) % p
        Y3 = (R * (V - X3) - S1 * HHH) % p
        Z3 = H * Z1 * Z2 % p
        return (X3, Y3, Z3)

    def _multiples(self, J):
        multiples = [(1, 1, 0), J]
        for _ in range(14):
            multiples.append(self._jadd(multiples[-1], J))
        return multiples

    def _jmul(self, J, k: int):
        if self.glv is not None:
            return self._jmul_glv(J, k)
        # fixed 4-bit window
        multiples = self._multiples(J)
        result = (1, 1, 0)
        for digit in f"{k:x}":
            for _ in range(4):
                result = self._jdouble(result)
            d = int(digit, 16)
            if d:
                result = self._jadd(result, multiples[d])
        return result

    def _split(self, k: int) -> tuple[int, int]:
        """k == k1 + k2*lambda (mod n) with |k1|, |k2| about sqrt(n)."""
        _, lam, a1, b1, a2, b2 = self.glv
        n = self.n
        c1 = (b2 * k + n // 2) // n
        c2 = (-b1 * k + n // 2) // n
        return k - c1 * a1 - c2 * a2, -c1 * b1 - c2 * b2

    def _jmul_glv(self, J, k: int):
        # k*P = k1*P + k2*phi(P), both halves walked together in width-5 NAF
        beta, p = self.glv[0], self.p
        k1, k2 = self._split(k)
        twice = self._jdouble(J)
        odd = [J]  # odd[i] == (2i+1)*P
        for _ in range(7):
            odd.append(self._jadd(odd[-1], twice))
        # phi multiplies x by beta, which in Jacobian form is X*beta
        phi = [(X * beta % p, Y, Z) for X, Y, Z in odd]
        tables = [(odd, _wnaf(k1)), (phi, _wnaf(k2))]
        length = max(len(tables[0][1]), len(tables[1][1]))
        result = (1, 1, 0)
        for i in range(length - 1, -1, -1):
            result = self._jdouble(result)
            for table, digits in tables:
                if i < len(digits) and digits[i]:
                    d = digits[i]
                    X, Y, Z = table[abs(d) >> 1]
                    result = self._jadd(result, (X, Y if d > 0 else p - Y, Z))
        return result

    def _g_table(self):
        # 8-bit windows: table[w][j] = j * 256**w * G, in Jacobian form
        if self._table:
            return self._table
        with _TABLE_LOCK:
            if self._table:
                return self._table
            windows = (self.n.bit_length() + 7) // 8
            base = self._to_jac(self.G)
            for _ in range(windows):
                row = [(1, 1, 0)]
                for _ in range(255):
                    row.append(self._jadd(row[-1], base))
                self._table.append(row)
                base = self._jadd(row[-1], base)
            return self._table

    def _jmul_g(self, k: int):
        result = (1, 1, 0)
        for row in self._g_table():
            if not k:
                break
            result = self._jadd(result, row[k & 0xFF])
            k >>= 8
        return result

    def add(self, P: Point, Q: Point) -> Point:
        return self._from_jac(self._jadd(self._to_jac(P), self._to_jac(Q)))

    def neg(self, P: Point) -> Point:
        return None if P is None else (P[0], (-P[1]) % self.p)

    def mul(self, P: Point, k: int) -> Point:
        k %= self.n
        if P == self.G:
            return self._from_jac(self._jmul_g(k))
        return self._from_jac(self._jmul(self._to_jac(P), k))

    def mul_g(self, k: int) -> Point:
        return self._from_jac(self._jmul_g(k % self.n))

    def mul_add_g(self, a: int, Q: Point, b: int) -> Point:
        """a*G + b*Q."""
        J = self._jadd(self._jmul_g(a % self.n), self._jmul(self._to_jac(Q), b % self.n))
        return self._from_jac(J)

    # -- encoding ----------------------------------------------------------

    def encode_point(self, P: Point) -> bytes:
        if P is None:
            raise InvalidPointError("cannot encode the point at infinity")
        x, y = P
        return bytes([2 + (y & 1)]) + x.to_bytes(self.coord_size, "big")

    def decode_point(self, data: bytes) -> tuple[int, int]:
        if len(data) != 1 + self.coord_size or data[0] not in (2, 3):
            raise InvalidPointError("expected a compressed point")
        x = int.from_bytes(data[1:], "big")
        if x >= self.p:
            raise InvalidPointError("x coordinate out of range")
        rhs = (x * x * x + self.a * x + self.b) % self.p
        y = _sqrt_mod(rhs, self.p)
        if y is None:
            raise InvalidPointError("x coordinate not on curve")
        if (y & 1) != (data[0] & 1):
            y = self.p - y
        return (x, y)


def _sqrt_mod(v: int, p: int) -> Optional[int]:
    if v == 0:
        return 0
    if p % 4 == 3:
        y = pow(v, (p + 1) // 4, p)
        return y if y * y % p == v else None
    # Tonelli-Shanks for the general case
    if pow(v, (p - 1) // 2, p) != 1:
        return None
    q, s = p - 1, 0
    while q % 2 == 0:
        q, s = q // 2, s + 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(v, q, p), pow(v, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2, i = t2 * t2 % p, i + 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


SECP256K1 = CurveParams(
    name="secp256k1",
    p=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F,
    a=0,
    b=7,
    G=(
        0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
        0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8,
    ),
    n=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141,
    glv=(
        0x7AE96A2B657C07106E64479EAC3434E99CF0497512F58995C1396C28719501EE,
        0x5363AD4CC05C30E0A5261C028812645A122E22EA20816678DF02967C1B23BD72,
        0x3086D221A7D46BCDE86C90E49284EB15,
        -0xE4437ED6010E88286F547FA90ABFE4C3,
        0x114CA50F7A8E2F3F657C1108D9D44CFD8,
        0x3086D221A7D46BCDE86C90E49284EB15,
    ),
)


# -- keys and signatures ----------------------------------------------------

Entropy = Callable[[int], int]  # returns a uniform integer in [0, bound)


def _system_entropy(bound: int) -> int:
    return secrets.randbelow(bound)


@dataclass(frozen=True)
class KeyPair:
    d: int
    Q: tuple[int, int]


@dataclass(frozen=True)
class Signature:
    R: tuple[int, int]
    s: int

    def to_bytes(self, curve: CurveParams = SECP256K1) -> bytes:
        return curve.encode_point(self.R) + self.s.to_bytes(curve.scalar_size, "big")

    @classmethod
    def from_bytes(cls, data: bytes, curve: CurveParams = SECP256K1) -> "Signature":
        plen = 1 + curve.coord_size
        if len(data) != plen + curve.scalar_size:
            raise ValueError(f"signature must be {plen + curve.scalar_size} bytes")
        s = int.from_bytes(data[plen:], "big")
        if s >= curve.n:
            raise ValueError("signature scalar out of range")
        return cls(curve.decode_point(data[:plen]), s)


def _random_scalar(curve: CurveParams, entropy: Entropy) -> int:
    while True:
        k = entropy(curve.n)
        if 0 < k < curve.n:
            return k


def deterministic_nonce(d: int, m: bytes, curve: CurveParams = SECP256K1) -> int:
    """Nonce derived from the secret and message, so signing needs no entropy."""
    counter = 0
    while True:
        data = d.to_bytes(curve.scalar_size, "big") + m + counter.to_bytes(4, "big")
        k = int.from_bytes(tagged_hash(b"ord-forge/nonce", data), "big") % curve.n
        if k:
            return k
        counter += 1


def keypair_from_secret(d: int, curve: CurveParams = SECP256K1) -> KeyPair:
    if not 0 < d < curve.n:
        raise ValueError("secret scalar must be in [1, n-1]")
    return KeyPair(d, curve.mul_g(d))


def keygen(entropy: Entropy = _system_entropy, curve: CurveParams = SECP256K1) -> KeyPair:
    return keypair_from_secret(_random_scalar(curve, entropy), curve)


def challenge(R: tuple[int, int], Q: tuple[int, int], m: bytes, curve: CurveParams = SECP256K1) -> int:
    digest = tagged_hash(MSG_TAG, curve.encode_point(R) + curve.encode_point(Q) + m)
    return int.from_bytes(digest, "big") % curve.n


def sign(d: int, m: bytes, entropy: Entropy = _system_entropy, curve: CurveParams = SECP256K1,
         nonce: Optional[int] = None) -> Signature:
    """Sign ``m`` with secret ``d``.  ``nonce`` pins k for reproducible tests."""
    if not 0 < d < curve.n:
        raise ValueError("secret scalar must be in [1, n-1]")
    Q = curve.mul_g(d)
    k = nonce if nonce is not None else _random_scalar(curve, entropy)
    if not 0 < k < curve.n:
        raise ValueError("nonce must be in [1, n-1]")
    R = curve.mul_g(k)
    e = challenge(R, Q, m, curve)
    return Signature(R, (k - e * d) % curve.n)


def verify(Q: Point, m: bytes, sig: Signature, curve: CurveParams = SECP256K1) -> bool:
    if not curve.on_curve(Q):
        raise InvalidPointError("public key is not on the curve")
    if sig.R is None or not curve.on_curve(sig.R) or not 0 <= sig.s < curve.n:
        return False
    e = challenge(sig.R, Q, m, curve)
    return curve.mul_add_g(sig.s, Q, e) == sig.R


def aggregate_keys(points: Sequence[Point], curve: CurveParams = SECP256K1) -> tuple[int, int]:
    if not points:
        raise ValueError("cannot aggregate an empty key list")
    total: Point = None
    for P in points:
        if not curve.on_curve(P):
            raise InvalidPointError("aggregated key is not on the curve")
        total = curve.add(total, P)
    if total is None:
        raise DegenerateKeyError("aggregate key is the point at infinity")
    return total


# -- MAST -------------------------------------------------------------------

def leaf_hash(script: bytes) -> bytes:
    return tagged_hash(LEAF_TAG, script)


def node_hash(a: bytes, b: bytes) -> bytes:
    lo, hi = sorted((a, b))
    return tagged_hash(NODE_TAG, lo + hi)


def _levels(scripts: Sequence[bytes]) -> list[list[bytes]]:
    if not scripts:
        raise ValueError("merkle tree needs at least one script")
    level = [leaf_hash(s) for s in scripts]
    levels = [level]
    while len(level) > 1:
        nxt = [node_hash(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
        levels.append(level)
    return levels


def merkle_root(scripts: Sequence[bytes]) -> bytes:
    return _levels(scripts)[-1][0]


def merkle_proof(scripts: Sequence[bytes], index: int) -> list[bytes]:
    if not 0 <= index < len(scripts):
        raise IndexError(f"script index {index} out of range")
    proof = []
    for level in _levels(scripts)[:-1]:
        sibling = index ^ 1
        if sibling < len(level):
            proof.append(level[sibling])
        index //= 2
    return proof


def root_from_proof(leaf_script: bytes, proof: Sequence[bytes]) -> bytes:
    h = leaf_hash(leaf_script)
    for sibling in proof:
        h = node_hash(h, sibling)
    return h


def verify_proof(root: bytes, leaf_script: bytes, proof: Sequence[bytes]) -> bool:
    return root_from_proof(leaf_script, proof) == root


# -- taproot ----------------------------------------------------------------

@dataclass(frozen=True)
class TaprootCommitment:
    internal_key: tuple[int, int]
    merkle_root: Optional[bytes]
    output_key: tuple[int, int]


def tweak_scalar(P: tuple[int, int], root: Optional[bytes], curve: CurveParams = SECP256K1) -> int:
    data = curve.encode_point(P) + (root or b"")
    return int.from_bytes(tagged_hash(TWEAK_TAG, data), "big") % curve.n


def taproot_output(P: tuple[int, int], root: Optional[bytes] = None,
                   curve: CurveParams = SECP256K1) -> TaprootCommitment:
    """Commit internal key ``P`` and optional script-tree ``root`` into one key."""
    if not curve.on_curve(P):
        raise InvalidPointError("internal key is not on the curve")
    out = curve.add(P, curve.mul_g(tweak_scalar(P, root, curve)))
    if out is None:
        raise DegenerateKeyError("tweaked output key is the point at infinity")
    return TaprootCommitment(P, root, out)


def tweak_secret(d: int, root: Optional[bytes] = None, curve: CurveParams = SECP256K1) -> int:
    """Secret for the key-path spend of ``taproot_output(d*G, root)``."""
    P = curve.mul_g(d)
    return (d + tweak_scalar(P, root, curve)) % curve.n


def verify_script_path(commitment: TaprootCommitment, script: bytes, proof: Sequence[bytes],
                       curve: CurveParams = SECP256K1) -> bool:
    if commitment.merkle_root is None:
        return False
    if not verify_proof(commitment.merkle_root, script, proof):
        return False
    try:
        recomputed = taproot_output(commitment.internal_key, commitment.merkle_root, curve)
    except (InvalidPointError, DegenerateKeyError):
        return False
    return recomputed.output_key == commitment.output_key
