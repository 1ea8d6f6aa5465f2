"""secp256k1 group arithmetic, scalars mod the group order, and keccak-256.

Public points are immutable affine :class:`Point` values holding plain ints.
Internally, multiplication runs in Jacobian coordinates over gmpy2 integers:
variable-base products use the GLV endomorphism with interleaved wNAF, and
products of a fixed base (the generator, or any point wrapped in
:class:`FixedBaseTable`) use a precomputed 8-bit window table.
"""

from __future__ import annotations

import random
import secrets
from dataclasses import dataclass
from typing import Callable, Optional

from Crypto.Hash import keccak as _keccak
from gmpy2 import invert, mpz, powmod

from .errors import DegenerateSecretError, EntropyError, OffCurveError

P = 2**256 - 2**32 - 977
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
B = 7
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

# GLV endomorphism: (x, y) -> (BETA*x, y) equals LAMBDA*(x, y)
BETA = 0x7AE96A2B657C07106E64479EAC3434E99CF0497512F58995C1396C28719501EE
LAMBDA = 0x5363AD4CC05C30E0A5261C028812645A122E22EA20816678DF02967C1B23BD72
_A1 = 0x3086D221A7D46BCDE86C90E49284EB15
_B1 = -0xE4437ED6010E88286F547FA90ABFE4C3
_A2 = 0x114CA50F7A8E2F3F657C1108D9D44CFD8
_B2 = _A1

_P = mpz(P)
_BETA = mpz(BETA)
_SQRT_EXP = mpz((P + 1) // 4)
_WNAF_W = 5


@dataclass(frozen=True, slots=True)
class Point:
    """Affine curve point; ``x is None`` marks the point at infinity."""

    x: Optional[int]
    y: Optional[int]

    @property
    def is_identity(self) -> bool:
        return self.x is None

    def __add__(self, other: Point) -> Point:
        return point_add(self, other)

    def __neg__(self) -> Point:
        return point_neg(self)

    def __rmul__(self, scalar: int) -> Point:
        return point_mul(scalar, self)

    def __repr__(self) -> str:
        if self.x is None:
            return "Point(infinity)"
        return f"Point(x={self.x:#066x}, y={self.y:#066x})"


INFINITY = Point(None, None)
G = Point(GX, GY)


def on_curve(point: Point) -> bool:
    if point.is_identity:
        return True
    x, y = point.x, point.y
    if not (0 <= x < P and 0 <= y < P):
        return False
    return (y * y - x * x * x - B) % P == 0


def lift_x(x: int, odd: bool) -> Point:
    """Return the curve point with abscissa ``x`` and the requested y parity."""
    if not 0 <= x < P:
        raise OffCurveError(f"x coordinate out of field range: {x:#x}")
    rhs = (mpz(x) ** 3 + B) % _P
    y = int(powmod(rhs, _SQRT_EXP, _P))
    if y * y % P != rhs:
        raise OffCurveError(f"x = {x:#x} has no point on secp256k1")
    if (y & 1) != odd:
        y = P - y
    return Point(x, y)


def point_neg(point: Point) -> Point:
    if point.is_identity:
        return point
    return Point(point.x, (P - point.y) % P)


def point_add(a: Point, b: Point) -> Point:
    if a.is_identity:
        return b
    if b.is_identity:
        return a
    if a.x == b.x:
        if (a.y + b.y) % P == 0:
            return INFINITY
        lam = 3 * a.x * a.x * invert(2 * a.y, _P) % _P
    else:
        lam = (b.y - a.y) * invert(b.x - a.x, _P) % _P
    x = (lam * lam - a.x - b.x) % _P
    y = (lam * (a.x - x) - a.y) % _P
    return Point(int(x), int(y))


# Jacobian helpers. A Jacobian triple with Z == 0 is the identity.

_JINF = (mpz(0), mpz(1), mpz(0))


def _jdouble(pt):
    x, y, z = pt
    if not y or not z:
        return _JINF
    a = x * x % _P
    b = y * y % _P
    c = b * b % _P
    d = 2 * ((x + b) ** 2 - a - c) % _P
    e = 3 * a
    f = e * e % _P
    x3 = (f - 2 * d) % _P
    y3 = (e * (d - x3) - 8 * c) % _P
    z3 = 2 * y * z % _P
    return x3, y3, z3


def _jadd_affine(pt, qx, qy):
    """Jacobian ``pt`` plus affine ``(qx, qy)``."""
    x1, y1, z1 = pt
    if not z1:
        return qx, qy, mpz(1)
    z1z1 = z1 * z1 % _P
    u2 = qx * z1z1 % _P
    s2 = qy * z1 * z1z1 % _P
    h = (u2 - x1) % _P
    r = (s2 - y1) % _P
    if not h:
        if not r:
            return _jdouble(pt)
        return _JINF
    hh = h * h % _P
    hhh = h * hh % _P
    v = x1 * hh % _P
    x3 = (r * r - hhh - 2 * v) % _P
    y3 = (r * (v - x3) - y1 * hhh) % _P
    return x3, y3, z1 * h % _P


def _jadd(pt, qt):
    x1, y1, z1 = pt
    x2, y2, z2 = qt
    if not z1:
        return qt
    if not z2:
        return pt
    z1z1 = z1 * z1 % _P
    z2z2 = z2 * z2 % _P
    u1 = x1 * z2z2 % _P
    u2 = x2 * z1z1 % _P
    s1 = y1 * z2 * z2z2 % _P
    s2 = y2 * z1 * z1z1 % _P
    h = (u2 - u1) % _P
    r = (s2 - s1) % _P
    if not h:
        if not r:
            return _jdouble(pt)
        return _JINF
    hh = h * h % _P
    hhh = h * hh % _P
    v = u1 * hh % _P
    x3 = (r * r - hhh - 2 * v) % _P
    y3 = (r * (v - x3) - s1 * hhh) % _P
    return x3, y3, z1 * z2 * h % _P


def _to_affine(pt) -> Point:
    x, y, z = pt
    if not z:
        return INFINITY
    zi = invert(z, _P)
    zi2 = zi * zi % _P
    return Point(int(x * zi2 % _P), int(y * zi2 * zi % _P))


def _batch_affine(points):
    """Montgomery batch inversion; returns affine (x, y) mpz pairs (None for identity)."""
    prefix = []
    acc = mpz(1)
    for _, _, z in points:
        prefix.append(acc)
        if z:
            acc = acc * z % _P
    inv = invert(acc, _P)
    out = [None] * len(points)
    for i in range(len(points) - 1, -1, -1):
        x, y, z = points[i]
        if not z:
            continue
        zi = inv * prefix[i] % _P
        inv = inv * z % _P
        zi2 = zi * zi % _P
        out[i] = (x * zi2 % _P, y * zi2 * zi % _P)
    return out


def _wnaf(k: int, w: int) -> list:
    digits = []
    half = 1 << (w - 1)
    full = 1 << w
    while k:
        if k & 1:
            d = k & (full - 1)
            if d >= half:
                d -= full
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def _glv_split(k: int):
    c1 = (_B2 * k + N // 2) // N
    c2 = (-_B1 * k + N // 2) // N
    return k - c1 * _A1 - c2 * _A2, -c1 * _B1 - c2 * _B2


def _odd_multiples(point: Point, count: int):
    base = (mpz(point.x), mpz(point.y), mpz(1))
    twice = _jdouble(base)
    table = [base]
    for _ in range(count - 1):
        table.append(_jadd(table[-1], twice))
    return _batch_affine(table)


def _glv_mul(k: int, point: Point) -> Point:
    k1, k2 = _glv_split(k)
    t1 = _odd_multiples(point, 1 << (_WNAF_W - 2))
    t2 = [(_BETA * x % _P, y) for x, y in t1]
    # store both signs so the main loop never negates
    tables = []
    for k_i, tab in ((k1, t1), (k2, t2)):
        neg = [(x, _P - y) for x, y in tab]
        if k_i < 0:
            tab, neg = neg, tab
        tables.append((tab, neg))
    n1 = _wnaf(abs(k1), _WNAF_W)
    n2 = _wnaf(abs(k2), _WNAF_W)
    length = max(len(n1), len(n2))
    n1 += [0] * (length - len(n1))
    n2 += [0] * (length - len(n2))
    (pos1, neg1), (pos2, neg2) = tables
    acc = _JINF
    for i in range(length - 1, -1, -1):
        acc = _jdouble(acc)
        d = n1[i]
        if d > 0:
            acc = _jadd_affine(acc, *pos1[d >> 1])
        elif d < 0:
            acc = _jadd_affine(acc, *neg1[(-d) >> 1])
        d = n2[i]
        if d > 0:
            acc = _jadd_affine(acc, *pos2[d >> 1])
        elif d < 0:
            acc = _jadd_affine(acc, *neg2[(-d) >> 1])
    return _to_affine(acc)


class FixedBaseTable:
    """Precomputed multiples of one base point for repeated multiplication.

    Building the table costs roughly 8000 point additions; each product
    afterwards costs at most 32 mixed additions and no doublings.
    """

    WINDOW = 8

    def __init__(self, base: Point):
        if base.is_identity or not on_curve(base):
            raise OffCurveError("fixed-base table needs a non-identity curve point")
        self.base = base
        width = 1 << self.WINDOW
        rows = []
        start = (mpz(base.x), mpz(base.y), mpz(1))
        for _ in range(256 // self.WINDOW):
            row = [start]
            for _ in range(width - 2):
                row.append(_jadd(row[-1], start))
            nxt = _jadd(row[-1], start)
            rows.append(_batch_affine(row))
            start = nxt
        self._rows = rows

    def mul(self, scalar: int) -> Point:
        k = scalar % N
        mask = (1 << self.WINDOW) - 1
        acc = _JINF
        for row in self._rows:
            d = k & mask
            if d:
                acc = _jadd_affine(acc, *row[d - 1])
            k >>= self.WINDOW
        return _to_affine(acc)


_G_TABLE: Optional[FixedBaseTable] = None


def generator_table() -> FixedBaseTable:
    global _G_TABLE
    if _G_TABLE is None:
        _G_TABLE = FixedBaseTable(G)
    return _G_TABLE


def point_mul(scalar: int, point: Point = G) -> Point:
    """Return ``scalar * point``; the scalar is reduced mod N first."""
    k = scalar % N
    if not k or point.is_identity:
        return INFINITY
    if point == G:
        return generator_table().mul(k)
    return _glv_mul(k, point)


def keccak256(data: bytes) -> bytes:
    """Ethereum keccak-256 (original Keccak padding, not FIPS SHA3-256)."""
    return _keccak.new(digest_bits=256, data=bytes(data)).digest()


def scalar_from_digest(digest: bytes) -> int:
    if len(digest) != 32:
        raise ValueError(f"digest must be 32 bytes, got {len(digest)}")
    s = int.from_bytes(digest, "big") % N
    if not s:
        raise DegenerateSecretError("digest reduces to zero mod n")
    return s


def scalar_random(entropy: Callable[[int], bytes] = secrets.token_bytes) -> int:
    """Draw a uniform scalar in [1, n) by rejection sampling 32-byte chunks."""
    while True:
        chunk = entropy(32)
        if len(chunk) < 32:
            raise EntropyError("entropy source exhausted")
        s = int.from_bytes(chunk[:32], "big")
        if 0 < s < N:
            return s


def seeded_entropy(seed: int) -> Callable[[int], bytes]:
    """Deterministic byte stream for tests and benchmarks. Not for real keys."""
    return random.Random(seed).randbytes
