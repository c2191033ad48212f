"""Sieves and elementary multiplicative functions.

Everything here is exact integer arithmetic.  Range routines return numpy
arrays indexed by offset into [lo, hi); single-argument routines work on
Python ints and factor through `factor()`, which does trial division by
sieved primes up to 10**6 and falls back to deterministic Miller-Rabin plus
Pollard rho for the remaining cofactor.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ResourceLimitError

CACHE_MAGIC = b"FPL1"
_TRIAL_LIMIT = 10**6
_DEFAULT_SEGMENT = 1 << 20
_DEFAULT_MAX_LEN = 1 << 31

# primes below 10**6 for trial division, built lazily once
_small_primes: np.ndarray | None = None


def _base_sieve(limit: int) -> np.ndarray:
    """Boolean primality table for [0, limit] by plain Eratosthenes."""
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return flags


def _trial_primes() -> np.ndarray:
    global _small_primes
    if _small_primes is None:
        _small_primes = np.flatnonzero(_base_sieve(_TRIAL_LIMIT)).astype(np.int64)
    return _small_primes


@dataclass(frozen=True)
class SieveTable:
    """Primality (and optionally smallest-prime-factor) data for [lo, hi)."""

    lo: int
    hi: int
    is_prime: np.ndarray                      # bool, length hi - lo
    smallest_factor: np.ndarray | None = None  # int64, 0 where unset, else spf

    def count(self) -> int:
        return int(np.count_nonzero(self.is_prime))

    def primes(self) -> np.ndarray:
        return np.flatnonzero(self.is_prime).astype(np.int64) + self.lo

    def contains(self, n: int) -> bool:
        return self.lo <= n < self.hi

    def prime(self, n: int) -> bool:
        if not self.contains(n):
            raise ArgumentError(f"{n} outside sieved range [{self.lo}, {self.hi})")
        return bool(self.is_prime[n - self.lo])


def sieve_primes(lo: int, hi: int, with_factors: bool = False,
                 segment: int = _DEFAULT_SEGMENT,
                 max_len: int = _DEFAULT_MAX_LEN) -> SieveTable:
    """Sieve [lo, hi), marking composites segment by segment for locality.

    Requires 2 <= lo < hi <= 2**48.  Memory is one bool per integer in the
    range (plus 8 bytes each if with_factors); ranges longer than max_len
    raise ResourceLimitError rather than thrash.
    """
    if not (2 <= lo < hi):
        raise ArgumentError(f"need 2 <= lo < hi, got lo={lo} hi={hi}")
    if hi > 1 << 48:
        raise ArgumentError(f"hi={hi} beyond supported range 2**48")
    n = hi - lo
    if n > max_len:
        raise ResourceLimitError(
            f"range of length {n} exceeds budget {max_len}", estimate=n, budget=max_len)

    root = math.isqrt(hi - 1)
    base = _trial_primes() if root <= _TRIAL_LIMIT else np.flatnonzero(_base_sieve(root)).astype(np.int64)
    base = base[base <= root]

    is_prime = np.ones(n, dtype=bool)
    spf = np.zeros(n, dtype=np.int64) if with_factors else None

    for s0 in range(lo, hi, segment):
        s1 = min(s0 + segment, hi)
        for p in base.tolist():
            start = max(p * p, ((s0 + p - 1) // p) * p)
            if start >= s1:
                continue
            sl = slice(start - lo, s1 - lo, p)
            if with_factors:
                seg_mask = spf[sl] == 0
                spf[sl] = np.where(seg_mask, p, spf[sl])
            is_prime[sl] = False
            # p itself may sit inside the segment; it was just unmarked only
            # if start == p*p <= p, impossible, so primes stay marked.

    if with_factors:
        idx = np.flatnonzero(spf == 0)
        spf[idx] = idx + lo  # primes (and 1, excluded by lo >= 2) are their own spf
    return SieveTable(lo=lo, hi=hi, is_prime=is_prime, smallest_factor=spf)


def primes_upto(n: int) -> np.ndarray:
    """All primes <= n as an int64 array."""
    if n < 2:
        return np.empty(0, dtype=np.int64)
    return sieve_primes(2, n + 1).primes()


# ---------------------------------------------------------------------------
# cache file format: 4-byte magic, lo and hi as little-endian uint64, then
# the primality bitmap MSB-first via packbits.

def save_sieve(table: SieveTable, path: str) -> None:
    """Write the primality part of a table atomically (temp file + rename)."""
    payload = CACHE_MAGIC + struct.pack("<QQ", table.lo, table.hi)
    payload += np.packbits(table.is_prime).tobytes()
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".fpl1-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_sieve(path: str) -> SieveTable:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CACHE_MAGIC:
        raise ArgumentError(f"{path}: bad magic {blob[:4]!r}")
    lo, hi = struct.unpack("<QQ", blob[4:20])
    n = hi - lo
    if len(blob) - 20 != (n + 7) // 8:
        raise ArgumentError(f"{path}: truncated bitmap ({len(blob) - 20} bytes for {n} flags)")
    bits = np.unpackbits(np.frombuffer(blob, dtype=np.uint8, offset=20))[:n]
    return SieveTable(lo=int(lo), hi=int(hi), is_prime=bits.astype(bool))


# ---------------------------------------------------------------------------
# deterministic primality + factoring

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond 2**64."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    """A nontrivial factor of composite odd n (Brent's cycle variant)."""
    if n % 2 == 0:
        return 2
    seed = 1
    while True:
        seed += 1
        x = y = 2
        c = seed
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d


@dataclass(frozen=True)
class FactoredInteger:
    """n together with its sorted prime-power factorization."""

    n: int
    factors: tuple[tuple[int, int], ...]  # ((p, e), ...) with p ascending

    def divisor_count(self) -> int:
        out = 1
        for _, e in self.factors:
            out *= e + 1
        return out


def factor(n: int) -> FactoredInteger:
    """Factor n >= 1: trial division to 10**6, then Miller-Rabin/rho."""
    if n < 1:
        raise ArgumentError(f"factor() needs n >= 1, got {n}")
    m = n
    fac: dict[int, int] = {}
    if m > 1:
        limit = math.isqrt(m)
        for p in _trial_primes().tolist():
            if p > limit:
                break
            if m % p == 0:
                e = 0
                while m % p == 0:
                    m //= p
                    e += 1
                fac[p] = e
                limit = math.isqrt(m)
    # cofactor beyond trial range: prime, prime power, or needs rho
    stack = [m] if m > 1 else []
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_prime(m):
            fac[m] = fac.get(m, 0) + 1
            continue
        # perfect power check keeps rho off p^k inputs it handles poorly
        for k in range(2, m.bit_length()):
            r = round(m ** (1.0 / k))
            for cand in (r - 1, r, r + 1):
                if cand > 1 and cand ** k == m:
                    stack.extend([cand] * k)
                    m = 1
                    break
            if m == 1:
                break
        if m == 1:
            continue
        d = _pollard_rho(m)
        stack.extend([d, m // d])
    items = tuple(sorted(fac.items()))
    return FactoredInteger(n=n, factors=items)


# ---------------------------------------------------------------------------
# multiplicative functions (single argument)

def mobius(n: int) -> int:
    if n < 1:
        raise ArgumentError(f"mobius() needs n >= 1, got {n}")
    out = 1
    for _, e in factor(n).factors:
        if e > 1:
            return 0
        out = -out
    return out


def von_mangoldt(n: int) -> float:
    """log p when n is a prime power p^k, else 0."""
    if n < 1:
        raise ArgumentError(f"von_mangoldt() needs n >= 1, got {n}")
    f = factor(n).factors
    if len(f) == 1:
        return math.log(f[0][0])
    return 0.0


def euler_phi(n: int) -> int:
    if n < 1:
        raise ArgumentError(f"euler_phi() needs n >= 1, got {n}")
    out = n
    for p, _ in factor(n).factors:
        out -= out // p
    return out


def tau_k(n: int, k: int) -> int:
    """Number of ordered k-tuples of positive integers with product n."""
    if n < 1 or k < 1:
        raise ArgumentError(f"tau_k needs n,k >= 1, got n={n} k={k}")
    out = 1
    for _, e in factor(n).factors:
        out *= math.comb(e + k - 1, k - 1)
    return out


def divisors(n: int) -> list[int]:
    """Sorted divisor list of n."""
    divs = [1]
    for p, e in factor(n).factors:
        pk = 1
        block = list(divs)
        for _ in range(e):
            pk *= p
            divs.extend(d * pk for d in block)
    return sorted(divs)


def inv_mod(a: int, q: int) -> int:
    """Inverse of a modulo q; ArgumentError when gcd(a, q) != 1."""
    if q < 1:
        raise ArgumentError(f"modulus must be >= 1, got {q}")
    g = math.gcd(a, q)
    if g != 1:
        raise ArgumentError(f"{a} not invertible mod {q} (gcd {g})")
    return pow(a % q, -1, q)


def unit_inverses(q: int) -> np.ndarray:
    """Array inv[l] with l*inv[l] == 1 mod q for units, and -1 elsewhere."""
    if q < 1:
        raise ArgumentError(f"modulus must be >= 1, got {q}")
    ls = np.arange(q, dtype=np.int64)
    out = np.full(q, -1, dtype=np.int64)
    for l in range(1, q):
        if math.gcd(l, q) == 1:
            out[l] = pow(l, -1, q)
    return out


def primitive_root(p: int, e: int = 1) -> int:
    """A generator of (Z/p^e)^* for odd prime p (e >= 1), or of (Z/2)^*, (Z/4)^*."""
    if e < 1:
        raise ArgumentError(f"exponent must be >= 1, got {e}")
    if p == 2:
        if e == 1:
            return 1
        if e == 2:
            return 3
        raise ArgumentError("(Z/2^e)^* is not cyclic for e >= 3")
    if not is_prime(p):
        raise ArgumentError(f"{p} is not prime")
    # find a root mod p first
    prime_divs = [q for q, _ in factor(p - 1).factors]
    g = None
    for cand in range(2, p):
        if all(pow(cand, (p - 1) // q, p) != 1 for q in prime_divs):
            g = cand
            break
    if g is None:  # p prime guarantees existence; defensive
        raise ArgumentError(f"no primitive root found mod {p}")
    if e == 1:
        return g
    # lift: g works mod p^e unless g^(p-1) == 1 mod p^2
    if pow(g, p - 1, p * p) == 1:
        g += p
    return g


# ---------------------------------------------------------------------------
# range (vectorized) versions used by the decomposition fast paths

def smallest_factor_range(nmax: int) -> np.ndarray:
    """spf[n] for 0 <= n <= nmax (spf[0] = spf[1] = 0)."""
    if nmax < 1:
        raise ArgumentError(f"need nmax >= 1, got {nmax}")
    spf = np.zeros(nmax + 1, dtype=np.int64)
    for p in range(2, math.isqrt(nmax) + 1):
        if spf[p] == 0:
            sl = spf[p * p :: p]
            sl[sl == 0] = p
            spf[p * p :: p] = sl
    idx = np.flatnonzero(spf == 0)
    spf[idx] = idx
    spf[:2] = 0
    return spf


def mobius_range(nmax: int) -> np.ndarray:
    """mu[n] for 0 <= n <= nmax as int8 (mu[0] = 0)."""
    spf = smallest_factor_range(nmax)
    mu = np.zeros(nmax + 1, dtype=np.int8)
    mu[1] = 1
    for n in range(2, nmax + 1):
        p = spf[n]
        m = n // p
        mu[n] = 0 if m % p == 0 else -mu[m]
    return mu


def von_mangoldt_range(nmax: int) -> np.ndarray:
    """Lambda[n] for 0 <= n <= nmax as float64."""
    spf = smallest_factor_range(nmax)
    lam = np.zeros(nmax + 1, dtype=np.float64)
    for n in range(2, nmax + 1):
        p = int(spf[n])
        m = n
        while m % p == 0:
            m //= p
        if m == 1:
            lam[n] = math.log(p)
    return lam
