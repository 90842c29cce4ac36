"""Component tensor calculus over the exact rational coefficient field.

Conventions: a Connection stores Christoffel symbols ``A[g, a, b]`` with
``nabla_{d_a} d_b = A^g_{ab} d_g`` (first lower index is the direction).
Curvature is ``R^g_{a b m} = d_a A^g_{bm} - d_b A^g_{am} + A^g_{al} A^l_{bm}
- A^g_{bl} A^l_{am}``, the component of R(d_a, d_b) d_m.
Vector-valued 1-forms are (1,1) tensors ``X[a, b] = X^a_b``; vector-valued
2-forms are (1,2) tensors antisymmetric in the two lower slots.
"""

from itertools import product

from . import coeffs
from .coeffs import coefficient_field, format_expr
from .errors import DegenerateTensor, NotClosed, SingularPencil, UnsupportedDegree


class TensorField:
    """Dense component array with valence (contravariant, covariant)."""

    __slots__ = ("n", "valence", "comp")

    def __init__(self, n, valence, comp=None):
        self.n = n
        self.valence = tuple(valence)
        K = coefficient_field(n)
        rank = sum(self.valence)
        self.comp = {}
        for idx in product(range(n), repeat=rank):
            value = comp.get(idx, K.zero) if isinstance(comp, dict) else (comp(*idx) if comp else K.zero)
            self.comp[idx] = K(value)

    @property
    def rank(self):
        return sum(self.valence)

    @classmethod
    def from_nested(cls, n, valence, nested):
        """Build from nested lists indexed in slot order."""
        K = coefficient_field(n)
        rank = sum(valence)
        comp = {}
        for idx in product(range(n), repeat=rank):
            x = nested
            for i in idx:
                x = x[i]
            comp[idx] = K(x)
        return cls(n, valence, comp)

    def to_nested(self, fmt=format_expr):
        def build(prefix):
            if len(prefix) == self.rank:
                return fmt(self.comp[prefix])
            return [build(prefix + (i,)) for i in range(self.n)]

        return build(())

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return self.comp[idx]

    def _binary(self, other, op):
        if self.valence != other.valence or self.n != other.n:
            raise ValueError("tensor shape mismatch")
        return TensorField(self.n, self.valence, {k: op(v, other.comp[k]) for k, v in self.comp.items()})

    def __add__(self, other):
        return self._binary(other, lambda x, y: x + y)

    def __sub__(self, other):
        return self._binary(other, lambda x, y: x - y)

    def __neg__(self):
        return TensorField(self.n, self.valence, {k: -v for k, v in self.comp.items()})

    def scale(self, c):
        return TensorField(self.n, self.valence, {k: v * c for k, v in self.comp.items()})

    def __eq__(self, other):
        if not isinstance(other, TensorField):
            return NotImplemented
        return self.valence == other.valence and self.comp == other.comp

    __hash__ = None

    def is_zero(self):
        return not any(self.comp.values())

    def nonzero(self):
        return {k: v for k, v in self.comp.items() if v}

    def __repr__(self):
        return f"TensorField(valence={self.valence}, {self.to_nested()})"


def vector_field(n, components):
    K = coefficient_field(n)
    return TensorField(n, (1, 0), {(i,): K(c) for i, c in enumerate(components)})


def identity(n):
    K = coefficient_field(n)
    return TensorField(n, (1, 1), lambda a, b: K.one if a == b else K.zero)


def matrix_tensor(n, valence, rows):
    return TensorField.from_nested(n, valence, rows)


class Connection:
    """Christoffel symbols A[g, a, b] = A^g_{ab}; no symmetry assumed."""

    __slots__ = ("n", "A")

    def __init__(self, n, christoffels=None):
        self.n = n
        K = coefficient_field(n)
        self.A = {}
        for idx in product(range(n), repeat=3):
            if christoffels is None:
                value = K.zero
            elif isinstance(christoffels, dict):
                value = christoffels.get(idx, K.zero)
            else:
                value = christoffels(*idx)
            self.A[idx] = K(value)

    @classmethod
    def trivial(cls, n):
        return cls(n)

    @classmethod
    def from_nested(cls, n, nested):
        """``nested[g][a][b]`` = A^g_{ab}."""
        return cls(n, lambda g, a, b: nested[g][a][b])

    def to_nested(self, fmt=format_expr):
        r = range(self.n)
        return [[[fmt(self.A[g, a, b]) for b in r] for a in r] for g in r]

    def __getitem__(self, idx):
        return self.A[idx]

    def __add__(self, other):
        if isinstance(other, TensorField):
            if other.valence != (1, 2):
                raise ValueError("can only add a (1,2) tensor to a connection")
            return Connection(self.n, {k: v + other.comp[k] for k, v in self.A.items()})
        raise TypeError("connections can only be shifted by (1,2) tensors")

    def difference(self, other):
        """self - other as a (1,2) tensor."""
        return TensorField(self.n, (1, 2), {k: v - other.A[k] for k, v in self.A.items()})

    def __eq__(self, other):
        if not isinstance(other, Connection):
            return NotImplemented
        return self.A == other.A

    __hash__ = None

    def is_trivial(self):
        return not any(self.A.values())

    def __repr__(self):
        return f"Connection({self.to_nested()})"


def _d(f, i):
    return coeffs.partial_derivative(f, i)


# ------------------------------------------------------------ matrices

def det(M, n):
    """Determinant of the matrix ``M[(i, j)]`` by fraction-free elimination."""
    K = coefficient_field(n)
    rows = [[M[i, j] for j in range(n)] for i in range(n)]
    result = K.one
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col]), None)
        if pivot is None:
            return K.zero
        if pivot != col:
            rows[col], rows[pivot] = rows[pivot], rows[col]
            result = -result
        pv = rows[col][col]
        result = result * pv
        for r in range(col + 1, n):
            if rows[r][col]:
                factor = rows[r][col] / pv
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]
    return result


def inverse(M, n, error=DegenerateTensor):
    """Inverse of ``M[(i, j)]`` as a dict; raises ``error`` if singular."""
    K = coefficient_field(n)
    rows = [[M[i, j] for j in range(n)] + [K.one if i == j else K.zero for j in range(n)] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col]), None)
        if pivot is None:
            raise error("matrix is singular (determinant vanishes identically)")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        pv = rows[col][col]
        rows[col] = [x / pv for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col]:
                factor = rows[r][col]
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]
    return {(i, j): rows[i][n + j] for i in range(n) for j in range(n)}


def matmul(A, B, n):
    K = coefficient_field(n)
    out = {}
    for i in range(n):
        for j in range(n):
            s = K.zero
            for k in range(n):
                if A[i, k] and B[k, j]:
                    s += A[i, k] * B[k, j]
            out[i, j] = s
    return out


def tensor_inverse(T):
    """Matrix inverse of a 2-index tensor, returned with the same slot layout."""
    return inverse(T.comp, T.n)


# ------------------------------------------------------------ operations

def torsion(C):
    n = C.n
    return TensorField(n, (1, 2), lambda l, a, b: C[l, a, b] - C[l, b, a])


def curvature(C):
    n = C.n
    A = C.A
    K = coefficient_field(n)

    def comp(g, a, b, m):
        r = _d(A[g, b, m], a) - _d(A[g, a, m], b)
        for l in range(n):
            r += A[g, a, l] * A[l, b, m] - A[g, b, l] * A[l, a, m]
        return r

    return TensorField(n, (1, 3), comp)


def is_flat(C):
    return torsion(C).is_zero() and curvature(C).is_zero()


def covariant_derivative_vector(C, X):
    """(nabla X)^a_b = d_b X^a + A^a_{bl} X^l as a (1,1) tensor."""
    n = C.n

    def comp(a, b):
        r = _d(X[a], b)
        for l in range(n):
            r += C[a, b, l] * X[l]
        return r

    return TensorField(n, (1, 1), comp)


def d_nabla(C, omega):
    """Exterior covariant derivative of a vector field or vector-valued 1-form."""
    n = C.n
    if omega.valence == (1, 0):
        return covariant_derivative_vector(C, omega)
    if omega.valence == (1, 1):
        def comp(a, b, g):
            r = _d(omega[a, g], b) - _d(omega[a, b], g)
            for l in range(n):
                r += C[a, b, l] * omega[l, g] - C[a, g, l] * omega[l, b]
            return r

        return TensorField(n, (1, 2), comp)
    raise UnsupportedDegree(f"d_nabla is implemented for degree 0 and 1 forms, got valence {omega.valence}")


def d_L_nabla(Cstar, L, omega):
    """L-deformed exterior covariant derivative d_{L nabla*}."""
    n = Cstar.n
    if omega.valence == (1, 0):
        D = covariant_derivative_vector(Cstar, omega)
        return TensorField(n, (1, 1), lambda a, b: sum((L[m, b] * D[a, m] for m in range(n)), coefficient_field(n).zero))
    if omega.valence == (1, 1):
        K = coefficient_field(n)

        def nabla_star(a, m, g):
            # component a of nabla*_{d_m}(omega(d_g))
            r = _d(omega[a, g], m)
            for l in range(n):
                r += Cstar[a, m, l] * omega[l, g]
            return r

        def comp(a, b, g):
            r = K.zero
            for m in range(n):
                if L[m, b]:
                    r += L[m, b] * nabla_star(a, m, g)
                if L[m, g]:
                    r -= L[m, g] * nabla_star(a, m, b)
                # [d_b, d_g]_L = (d_b L^m_g - d_g L^m_b) d_m
                bracket = _d(L[m, g], b) - _d(L[m, b], g)
                if bracket:
                    r -= omega[a, m] * bracket
            return r

        return TensorField(n, (1, 2), comp)
    raise UnsupportedDegree(f"d_L_nabla is implemented for degree 0 and 1 forms, got valence {omega.valence}")


def nijenhuis(L):
    n = L.n
    K = coefficient_field(n)

    def comp(g, a, b):
        r = K.zero
        for m in range(n):
            r += L[m, a] * _d(L[g, b], m) - L[m, b] * _d(L[g, a], m)
            r += -L[g, m] * _d(L[m, b], a) + L[g, m] * _d(L[m, a], b)
        return r

    return TensorField(n, (1, 2), comp)


def covariant_derivative_12(C, T):
    """(nabla T)[g, a, b, m] = nabla_a T^g_{bm} for a (1,2) tensor T."""
    n = C.n

    def comp(g, a, b, m):
        r = _d(T[g, b, m], a)
        for l in range(n):
            r += C[g, a, l] * T[l, b, m] - C[l, a, b] * T[g, l, m] - C[l, a, m] * T[g, b, l]
        return r

    return TensorField(n, (1, 3), comp)


def l_delta(L, C, Cstar):
    """(L Delta)^g_{bm} = L^l_b Delta^g_{lm} with Delta = nabla* - nabla."""
    n = L.n
    K = coefficient_field(n)
    Delta = Cstar.difference(C)
    return TensorField(n, (1, 2), lambda g, b, m: sum((L[l, b] * Delta[g, l, m] for l in range(n)), K.zero))


def gm_flatness_condition(L, C, Cstar):
    """Residual nabla_a(L Delta)^g_{bm} - nabla_b(L Delta)^g_{am}.

    Returns ``(ok, residual)`` with the residual indexed ``[g, a, b, m]``.
    """
    n = L.n
    D = covariant_derivative_12(C, l_delta(L, C, Cstar))
    residual = TensorField(n, (1, 3), lambda g, a, b, m: D[g, a, b, m] - D[g, b, a, m])
    return residual.is_zero(), residual


def ahe_check(L, C, Cstar):
    """d_nabla(L) == d_nabla*(L); returns ``(ok, residual)``."""
    residual = d_nabla(Cstar, L) - d_nabla(C, L)
    return residual.is_zero(), residual


def gm_christoffels_at(L, C, Cstar, z0):
    """Gauss-Manin connection B + z (L_z^{-1})^r_a (B - A)^g_{rb} at z = z0."""
    n = L.n
    K = coefficient_field(n)
    z = K(z0)
    Lz = {(i, j): L[i, j] - (z if i == j else K.zero) for i in range(n) for j in range(n)}
    if not det(Lz, n):
        raise SingularPencil(f"det(L - {format_expr(z)} I) vanishes identically")
    Lzi = inverse(Lz, n, SingularPencil)
    Delta = Cstar.difference(C)

    def comp(g, a, b):
        r = Cstar[g, a, b]
        if z:
            s = K.zero
            for rho in range(n):
                if Lzi[rho, a]:
                    s += Lzi[rho, a] * Delta[g, rho, b]
            r += z * s
        return r

    return Connection(n, comp)


def lie_derivative_product(E, c):
    """(L_E c)^a_{bg} for a (1,2) tensor c."""
    n = c.n
    K = coefficient_field(n)

    def comp(a, b, g):
        r = K.zero
        for m in range(n):
            r += E[m] * _d(c[a, b, g], m) - c[m, b, g] * _d(E[a], m)
            r += c[a, m, g] * _d(E[m], b) + c[a, b, m] * _d(E[m], g)
        return r

    return TensorField(n, (1, 2), comp)


def lie_bracket(X, Y):
    """[X, Y]^a = X^m d_m Y^a - Y^m d_m X^a for vector fields."""
    n = X.n
    K = coefficient_field(n)
    return TensorField(n, (1, 0), lambda a: sum((X[m] * _d(Y[a], m) - Y[m] * _d(X[a], m) for m in range(n)), K.zero))


def multiply(c, X, Y):
    """(X o Y)^a = c^a_{bg} X^b Y^g."""
    n = c.n
    K = coefficient_field(n)
    return TensorField(n, (1, 0), lambda a: sum((c[a, b, g] * X[b] * Y[g] for b in range(n) for g in range(n)), K.zero))


def multiplication_operator(c, X):
    """The (1,1) tensor (X o)^a_b = c^a_{gb} X^g."""
    n = c.n
    K = coefficient_field(n)
    return TensorField(n, (1, 1), lambda a, b: sum((c[a, g, b] * X[g] for g in range(n)), K.zero))


def residual_entries(T):
    """Nonzero components as ``[{indices, expr}]`` with 1-based indices."""
    return [{"indices": [i + 1 for i in k], "expr": format_expr(v)} for k, v in sorted(T.nonzero().items())]


def integrate_closed_form(f, n, error):
    """F with dF = sum f_g dv^g and F(0) = 0, by the straight line from the origin.

    ``f`` must be closed (NotClosed otherwise) and polynomial (``error`` otherwise).
    """
    K = coefficient_field(n)
    residual = {}
    for a in range(n):
        for b in range(a + 1, n):
            r = _d(f[b], a) - _d(f[a], b)
            if r:
                residual[(a, b)] = r
    if residual:
        raise NotClosed("the 1-form is not closed", residual)
    total = K.zero
    for g, fg in enumerate(f):
        if not coeffs.is_polynomial(fg):
            raise error(f"component {g + 1} is not polynomial: {format_expr(fg)}")
        if not fg:
            continue
        poly = fg.numer.mul_ground(1 / fg.denom.LC)
        for exps, c in poly.terms():
            mono = K(c) / (sum(exps) + 1)
            for i, e in enumerate(exps):
                if e:
                    mono = mono * K.var(i) ** e
            total += mono * K.var(g)
    return total


def levi_civita(gsharp):
    """Levi-Civita connection of the metric whose contravariant form is ``gsharp``."""
    n = gsharp.n
    K = coefficient_field(n)
    for a in range(n):
        for b in range(a + 1, n):
            if gsharp[a, b] != gsharp[b, a]:
                raise DegenerateTensor("Levi-Civita connection needs a symmetric metric")
    gl = inverse(gsharp.comp, n)
    half = K.const(1, 2)

    def comp(g, a, b):
        s = K.zero
        for d in range(n):
            if gsharp[g, d]:
                s += gsharp[g, d] * (_d(gl[d, b], a) + _d(gl[d, a], b) - _d(gl[a, b], d))
        return half * s

    return Connection(n, comp)
