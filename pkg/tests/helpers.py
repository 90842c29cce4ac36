"""Random generators shared by the property tests."""

import random
from itertools import product

from hydroham.coeffs import coefficient_field
from hydroham.fman import FlatFData
from hydroham.geometry import Connection, TensorField, vector_field
from hydroham.hydro import GeometricData, derivation_from_data
from hydroham.superjet import DiffPoly, EvolutionaryDerivation, monomial


def rand_coeff(n, rng, polynomial=True):
    K = coefficient_field(n)
    c = K.const(rng.randint(-3, 3))
    for a in range(n):
        c += K.const(rng.randint(-2, 2)) * K.var(a) ** rng.randint(0, 2)
    if not polynomial and rng.random() < 0.5:
        c = c / (K.var(rng.randrange(n)) + rng.randint(1, 3))
    return c


def rand_density(n, deg, rng, terms=3, maxs=1):
    """Random DiffPoly of super degree ``deg`` (odd jets up to order ``maxs``)."""
    maxs = max(maxs, -(-deg // n) - 1)  # enough distinct odd generators
    f = DiffPoly(n)
    for _ in range(terms):
        odd = set()
        while len(odd) < deg:
            odd.add((rng.randrange(n), rng.randint(0, maxs)))
        ev = []
        if rng.random() < 0.5:
            ev.append((rng.randrange(n), rng.randint(1, max(maxs, 1)), 1))
        f = f + monomial(n, ev, list(odd), rand_coeff(n, rng))
    return f


def rand_derivation(n, parity, rng, terms=2):
    a = [rand_density(n, parity, rng, terms) if parity >= 0 else DiffPoly(n) for _ in range(n)]
    b = [rand_density(n, parity + 1, rng, terms) for _ in range(n)]
    return EvolutionaryDerivation(parity, a, b)


def rand_constant_matrix(n, rng, lo=-3, hi=3):
    """Random invertible constant (2,0) tensor with integer entries."""
    from hydroham.geometry import det

    while True:
        rows = [[str(rng.randint(lo, hi)) for _ in range(n)] for _ in range(n)]
        T = TensorField.from_nested(n, (2, 0), rows)
        if det(T.comp, n):
            return T


def rand_unipotent_frame(n, rng):
    """Upper unitriangular (1,1) tensor with polynomial entries; always invertible."""
    K = coefficient_field(n)

    def entry(a, b):
        if a == b:
            return K.one
        if a > b:
            return K.zero
        return rand_coeff(n, rng)

    return TensorField(n, (1, 1), entry)


def rng_from(seed):
    return random.Random(seed)


def nested(n, rank, fill="0"):
    if rank == 0:
        return fill
    return [nested(n, rank - 1, fill) for _ in range(n)]


def connection(n, entries):
    """Connection from a dict {(g, a, b): expr} with 1-based indices."""
    K = coefficient_field(n)
    return Connection(n, {tuple(i - 1 for i in k): K(v) for k, v in entries.items()})


def tensor(n, valence, entries):
    """TensorField from a dict with 1-based index tuples; missing entries are zero."""
    K = coefficient_field(n)
    return TensorField(n, valence, {tuple(i - 1 for i in k): K(v) for k, v in entries.items()})


def rand_chart(n, rng):
    """Triangular polynomial map phi^a = v^a + p_a(v^{a+1}, ...); always invertible."""
    K = coefficient_field(n)
    phi = []
    for a in range(n):
        extra = K.zero
        for b in range(a + 1, n):
            extra += K.const(rng.randint(-2, 2)) * K.var(b) ** rng.randint(1, 2)
        phi.append(K.var(a) + extra)
    return phi


def flat_connection_from_chart(phi):
    """The trivial connection of the u = phi(v) chart, written in v: A^g_{ab} = (J^{-1})^g_l d_a d_b phi^l."""
    from hydroham.geometry import inverse

    n = len(phi)
    K = coefficient_field(n)
    J = {(l, a): phi[l].diff(K.gens[a]) for l in range(n) for a in range(n)}
    Ji = inverse(J, n)
    return Connection(n, lambda g, a, b: sum(
        (Ji[g, l] * phi[l].diff(K.gens[a]).diff(K.gens[b]) for l in range(n)), K.zero))


def rand_gsharp(n, rng):
    """Invertible (2,0) tensor: constant invertible matrix times a unipotent polynomial frame."""
    C = rand_constant_matrix(n, rng)
    U = rand_unipotent_frame(n, rng)
    K = coefficient_field(n)
    return TensorField(n, (2, 0), lambda a, b: sum((C[a, m] * U[m, b] for m in range(n)), K.zero))


# ------------------------------------------------------- shared structures

def g2(n, rows):
    return TensorField.from_nested(n, (2, 0), rows)


def constant(n, rows=None):
    rows = rows or [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    return derivation_from_data(GeometricData(g2(n, rows), Connection.trivial(n)))


def kdv():
    return derivation_from_data(GeometricData(g2(1, [["v1"]]), connection(1, {(1, 1, 1): "-1/(2*v1)"})))


def battery():
    """Flat and broken structures in dimension 2."""
    rng = rng_from(2024)
    out = []
    for _ in range(5):
        g = rand_gsharp(2, rng)
        out.append(GeometricData(g, flat_connection_from_chart(rand_chart(2, rng))))
    K = coefficient_field(2)
    out.append(GeometricData(rand_gsharp(2, rng), connection(2, {(1, 2, 2): "v1"})))
    out.append(GeometricData(rand_gsharp(2, rng), connection(2, {(1, 1, 2): "1"})))
    out.append(GeometricData(rand_gsharp(2, rng), connection(2, {(2, 1, 1): "v2", (1, 2, 2): "v1"})))
    for _ in range(3):
        C = Connection(2, {k: K.const(rng.randint(-1, 1)) * K.var(rng.randrange(2)) for k in product(range(2), repeat=3)})
        out.append(GeometricData(rand_gsharp(2, rng), C))
    return [derivation_from_data(d) for d in out]


def diag(n, entries):
    K = coefficient_field(n)
    return TensorField(n, (1, 1), {(i, i): K(e) for i, e in enumerate(entries)})


def gm_counterexample():
    """Flat, torsionless, L = diag(v1, v2) Nijenhuis-free, ahe holds, yet the pencil is not flat."""
    A = Connection.trivial(2)
    B = connection(2, {(2, 1, 1): "1/v2", (2, 2, 2): "1/v2"})
    return diag(2, ["v1", "v2"]), A, B


def algebra(n, table, unit=0):
    """Commutative product with unit d_unit; ``table`` gives c[(a, b, g)] for b <= g, 1-based exprs."""
    K = coefficient_field(n)
    comps = {}
    for b in range(n):
        for a in range(n):
            comps[a, unit, b] = comps[a, b, unit] = K.one if a == b else K.zero
    for (a, b, g), v in table.items():
        comps[a - 1, b - 1, g - 1] = comps[a - 1, g - 1, b - 1] = K(v)
    c = TensorField(n, (1, 2), comps)
    e = vector_field(n, [K.one if i == unit else K.zero for i in range(n)])
    return FlatFData(c, e)
