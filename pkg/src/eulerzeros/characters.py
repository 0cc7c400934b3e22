"""Dirichlet characters built from generators of the unit groups mod q.

Characters are stored through integer discrete-log tables, so every value
is an exact root of unity exp(2*pi*i*t/T) evaluated on demand; no floating
state is accumulated during construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np


def _factorize(n: int) -> List[Tuple[int, int]]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


def euler_phi(n: int) -> int:
    r = n
    for p, _ in _factorize(n):
        r = r // p * (p - 1)
    return r


def _primitive_root_mod_prime_power(p: int, e: int) -> int:
    """Generator of (Z/p^e)* for odd prime p (and p=2 with e<=2)."""
    if p == 2:
        if e == 1:
            return 1
        if e == 2:
            return 3
        raise ValueError("2^e with e>=3 is not cyclic")
    # find a primitive root mod p
    order = p - 1
    factors = [f for f, _ in _factorize(order)]
    g = None
    for cand in range(2, p):
        if all(pow(cand, order // f, p) != 1 for f in factors):
            g = cand
            break
    assert g is not None
    if e == 1:
        return g
    # lift: g works mod p^e unless g^(p-1) == 1 mod p^2
    if pow(g, p - 1, p * p) == 1:
        g += p
    return g


def _component_generators(p: int, e: int) -> List[Tuple[int, int]]:
    """(generator, order) pairs for (Z/p^e)*."""
    q = p**e
    if p == 2 and e >= 3:
        return [(q - 1, 2), (3, 2 ** (e - 2))]  # <-1> x <3>
    if p == 2 and e == 1:
        return []
    g = _primitive_root_mod_prime_power(p, e)
    return [(g, euler_phi(q))]


def _dlog_table(q: int, gens: List[Tuple[int, int]]) -> dict:
    """n mod q -> exponent tuple over gens, for all n coprime to q."""
    table = {1: tuple(0 for _ in gens)}
    if not gens:
        return table
    # enumerate products of generator powers
    idx = [0] * len(gens)
    while True:
        n = 1
        for (g, order), a in zip(gens, idx):
            n = (n * pow(g, a, q)) % q
        table[n] = tuple(idx)
        # odometer increment
        k = 0
        while k < len(gens):
            idx[k] += 1
            if idx[k] < gens[k][1]:
                break
            idx[k] = 0
            k += 1
        if k == len(gens):
            break
    return table


@dataclass
class DirichletCharacter:
    """One character mod q, identified by exponents on fixed generators."""

    modulus: int
    index: Tuple[int, ...]
    _orders: Tuple[int, ...] = field(repr=False)
    _values: np.ndarray = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        """chi(0), chi(1), ..., chi(q-1) as complex128."""
        return self._values

    def __call__(self, n) -> complex:
        return self._values[np.asarray(n) % self.modulus]

    def value_at(self, n: int) -> complex:
        return complex(self._values[n % self.modulus])

    @property
    def is_principal(self) -> bool:
        return all(j == 0 for j in self.index)

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if self.modulus != other.modulus:
            raise ValueError("characters must share a modulus")
        idx = tuple(
            (a + b) % o for a, b, o in zip(self.index, other.index, self._orders)
        )
        vals = self._values * other._values
        # zero pattern is shared; product of exact roots of unity
        return DirichletCharacter(self.modulus, idx, self._orders, vals)

    def power(self, k: int) -> "DirichletCharacter":
        idx = tuple((a * k) % o for a, o in zip(self.index, self._orders))
        vals = np.where(self._values != 0, self._values**k, 0.0)
        return DirichletCharacter(self.modulus, idx, self._orders, vals)

    def conj(self) -> "DirichletCharacter":
        idx = tuple((-a) % o for a, o in zip(self.index, self._orders))
        return DirichletCharacter(self.modulus, idx, self._orders, self._values.conj())


def character_table(q: int) -> List[DirichletCharacter]:
    """All phi(q) Dirichlet characters mod q.

    Unit groups of the prime-power factors are generated explicitly and
    glued by CRT; each character is the exponential of an integer linear
    form on the discrete logs.
    """
    q = int(q)
    if q < 1:
        raise ValueError("modulus must be >= 1")
    if q == 1:
        vals = np.ones(1, dtype=np.complex128)
        return [DirichletCharacter(1, (), (), vals)]

    gens: List[Tuple[int, int]] = []  # (generator lifted mod q, order)
    parts = _factorize(q)
    for p, e in parts:
        pe = p**e
        rest = q // pe
        for g, order in _component_generators(p, e):
            # CRT-lift g to be g mod p^e and 1 mod q/p^e
            if rest == 1:
                lifted = g % q
            else:
                inv = pow(pe, -1, rest)
                lifted = (g * rest * pow(rest, -1, pe) + 1 * pe * inv) % q
            gens.append((lifted, order))

    dlog = _dlog_table(q, gens)
    orders = tuple(order for _, order in gens)

    chars = []
    # all exponent tuples (j_c mod order_c)
    idx = [0] * len(gens)
    while True:
        vals = np.zeros(q, dtype=np.complex128)
        for n, exps in dlog.items():
            t = 0.0
            for j, a, order in zip(idx, exps, orders):
                t += j * a / order
            vals[n % q] = np.exp(2j * math.pi * t)
        chars.append(DirichletCharacter(q, tuple(idx), orders, vals))
        k = 0
        while k < len(gens):
            idx[k] += 1
            if idx[k] < orders[k]:
                break
            idx[k] = 0
            k += 1
        if k == len(gens) or not gens:
            break
    assert len(chars) == euler_phi(q)
    return chars


def principal_character(q: int) -> DirichletCharacter:
    for chi in character_table(q):
        if chi.is_principal:
            return chi
    raise AssertionError("unreachable")
