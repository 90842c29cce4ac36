"""Flat and bi-flat F-manifolds: checks, principal hierarchy, canonical semisimple data."""

from dataclasses import dataclass
from itertools import product

from . import coeffs
from .coeffs import coefficient_field, format_expr
from .errors import NonPolynomial, NotClosed, PDEViolation, PreconditionFailed, SingularPencil
from .geometry import (
    Connection,
    TensorField,
    covariant_derivative_vector,
    curvature,
    d_nabla,
    det,
    gm_flatness_condition,
    integrate_closed_form,
    inverse,
    levi_civita,
    lie_bracket,
    lie_derivative_product,
    matmul,
    multiplication_operator,
    multiply,
    torsion,
    vector_field,
)
from .hydro import BiGeometricData, HydroFlow
from .superjet import graded_commutator

LAMBDAS = (0, 1, -1)


def _d(f, i):
    return coeffs.partial_derivative(f, i)


@dataclass
class FlatFData:
    """Product ``c[a, b, g] = c^a_{bg}``, unit ``e``, connection (trivial by default)."""

    c: TensorField
    e: TensorField
    nabla: Connection = None

    def __post_init__(self):
        if self.nabla is None:
            self.nabla = Connection.trivial(self.c.n)

    @property
    def n(self):
        return self.c.n


@dataclass
class BiFlatData:
    flat: FlatFData
    nablaStar: Connection
    E: TensorField

    @property
    def n(self):
        return self.flat.n


@dataclass
class HierarchyFlow:
    """X is X_{(alpha, p)}; the flow it drives is the time t^{alpha, p+1}."""

    alpha: int
    p: int
    X: TensorField

    def operator(self, c):
        """The (1,1) tensor X o, i.e. v^a_t = c^a_{lg} X^l v^g_x."""
        return multiplication_operator(c, self.X)

    def hydro_flow(self, c):
        return HydroFlow(self.operator(c))


# ---------------------------------------------------------------- checks

def _coordinate_field(n, i):
    K = coefficient_field(n)
    return vector_field(n, [K.one if j == i else K.zero for j in range(n)])


def hertling_manin_check(c):
    """Nine-term Hertling-Manin expression on all coordinate fields.

    Returns ``(ok, residual)``, residual keyed by ``(x, y, w, z, component)``.
    """
    n = c.n
    fields = [_coordinate_field(n, i) for i in range(n)]
    br = lie_bracket

    def m(X, Y):
        return multiply(c, X, Y)

    residual = {}
    for x, y, w, z in product(range(n), repeat=4):
        X, Y, W, Z = fields[x], fields[y], fields[w], fields[z]
        XY = m(X, Y)
        terms = [
            br(XY, m(W, Z)), -m(br(XY, Z), W), -m(br(XY, W), Z),
            -m(X, br(Y, m(Z, W))), m(m(X, br(Y, Z)), W), m(m(X, br(Y, W)), Z),
            -m(Y, br(X, m(Z, W))), m(m(Y, br(X, Z)), W), m(m(Y, br(X, W)), Z),
        ]
        total = terms[0]
        for t in terms[1:]:
            total = total + t
        for k, v in total.nonzero().items():
            residual[(x, y, w, z) + k] = v
    return not residual, residual


def _assoc_residual(c):
    n = c.n
    K = coefficient_field(n)
    r = range(n)
    res = {}
    for a, b, g, nu in product(r, repeat=4):
        s = sum((c[mu, a, b] * c[nu, mu, g] - c[mu, b, g] * c[nu, mu, a] for mu in r), K.zero)
        if s:
            res[(nu, a, b, g)] = s
    return res


def _comm_residual(c):
    return {k: v - c[k[0], k[2], k[1]] for k, v in c.comp.items() if v != c[k[0], k[2], k[1]]}


def _unit_residual(c, e):
    n = c.n
    K = coefficient_field(n)
    res = {}
    for a, b in product(range(n), repeat=2):
        s = sum((c[a, b, g] * e[g] for g in range(n)), K.zero) - (K.one if a == b else K.zero)
        if s:
            res[(a, b)] = s
    return res


def flat_f_check(d, lambdas=LAMBDAS):
    """Report ``[(name, ok, residual_dict)]`` for a flat F-manifold.

    The family nabla - lambda c is quadratic in lambda, so three distinct
    sample values decide flatness for every lambda.
    """
    if len(set(lambdas)) < 3:
        raise ValueError("need at least three distinct lambda values")
    n = d.n
    report = [
        ("commutativity", *_ok(_comm_residual(d.c))),
        ("unit", *_ok(_unit_residual(d.c, d.e))),
    ]
    K = coefficient_field(n)
    for lam in lambdas:
        lk = K(lam)
        C = Connection(n, lambda g, a, b: d.nabla[g, a, b] - d.c[g, a, b] * lk)
        report.append((f"torsion(nabla - {lam} c)", *_ok(torsion(C).nonzero())))
        report.append((f"curvature(nabla - {lam} c)", *_ok(curvature(C).nonzero())))
    report.append(("nabla e = 0", *_ok(covariant_derivative_vector(d.nabla, d.e).nonzero())))
    report.append(("associativity", *_ok(_assoc_residual(d.c))))
    ok, res = hertling_manin_check(d.c)
    report.append(("Hertling-Manin", ok, res))
    return report


def _ok(res):
    return (not res, res)


def report_ok(report):
    return all(ok for _, ok, _ in report)


def dual_product(c, E):
    """c*^a_{bg} = ((E o)^{-1})^a_m c^m_{bg}."""
    n = c.n
    K = coefficient_field(n)
    Eo = multiplication_operator(c, E)
    if not det(Eo.comp, n):
        raise SingularPencil("det(E o) vanishes identically")
    inv = inverse(Eo.comp, n, SingularPencil)
    return TensorField(n, (1, 2), lambda a, b, g: sum((inv[a, m] * c[m, b, g] for m in range(n)), K.zero))


def biflat_check(b, lambdas=LAMBDAS):
    """Flat F checks for the first structure plus the bi-flat compatibility checks."""
    n = b.n
    c = b.flat.c
    report = flat_f_check(b.flat, lambdas)
    report.append(("torsion(nablaStar)", *_ok(torsion(b.nablaStar).nonzero())))
    report.append(("curvature(nablaStar)", *_ok(curvature(b.nablaStar).nonzero())))
    report.append(("nablaStar E = 0", *_ok(covariant_derivative_vector(b.nablaStar, b.E).nonzero())))
    report.append(("Lie_E c = c", *_ok((lie_derivative_product(b.E, c) - c).nonzero())))
    res = {}
    for k in range(n):
        Xo = multiplication_operator(c, _coordinate_field(n, k))
        diff = d_nabla(b.flat.nabla, Xo) - d_nabla(b.nablaStar, Xo)
        for key, v in diff.nonzero().items():
            res[(k,) + key] = v
    report.append(("(d_nabla - d_nablaStar)(X o) = 0", *_ok(res)))
    return report


# ------------------------------------------------------------- hierarchy

def principal_flows(d, pmax):
    """X_{(a,p)} for p = -1..pmax-1, i.e. the flows t^{a,0}..t^{a,pmax}."""
    n = d.n
    K = coefficient_field(n)
    c = d.c
    if not d.nabla.is_trivial():
        raise PreconditionFailed("principal_flows needs flat coordinates (trivial connection)")
    for v in c.comp.values():
        if not coeffs.is_polynomial(v):
            raise NonPolynomial(f"structure constant {format_expr(v)} is not polynomial")
    flat = Connection.trivial(n)
    out = []
    for alpha in range(n):
        X = _coordinate_field(n, alpha)
        out.append(HierarchyFlow(alpha, -1, X))
        for p in range(0, pmax):
            res = d_nabla(flat, multiplication_operator(c, X))
            if not res.is_zero():
                raise NotClosed(f"d(X o) != 0 at level ({alpha + 1}, {p - 1})", res.nonzero())
            comps = []
            for lam in range(n):
                f = [sum((c[lam, b, g] * X[g] for g in range(n)), K.zero) for b in range(n)]
                comps.append(integrate_closed_form(f, n, NonPolynomial))
            X = vector_field(n, comps)
            out.append(HierarchyFlow(alpha, p, X))
    return out


def _flow_derivation(f, c):
    if isinstance(f, HierarchyFlow):
        f = f.hydro_flow(c)
    elif isinstance(f, TensorField):
        f = HydroFlow(f)
    return HydroFlow(f.X).to_derivation()


def flows_commute(f1, f2, c=None):
    """Whether the two hydrodynamic flows commute (theta images set to zero)."""
    return graded_commutator(_flow_derivation(f1, c), _flow_derivation(f2, c)).is_zero()


# -------------------------------------------------------------- pencils

def frobenius_pencil(eta, c, E, nu=0):
    """(L = E o, trivial nabla, nabla* = Levi-Civita(L eta) + nu c*).

    ``eta`` is the constant contravariant metric eta^{ab}.
    """
    n = c.n
    K = coefficient_field(n)
    L = multiplication_operator(c, E)
    if not det(L.comp, n):
        raise SingularPencil("det(E o) vanishes identically")
    g = TensorField(n, (2, 0), matmul(L.comp, eta.comp, n))
    cstar = dual_product(c, E)
    lc = levi_civita(g)
    nu = K(nu)
    Bstar = Connection(n, lambda a, b, gg: lc[a, b, gg] + nu * cstar[a, b, gg])
    return BiGeometricData(L, Connection.trivial(n), Bstar)


def semisimple_product(n):
    K = coefficient_field(n)
    return TensorField(n, (1, 2), lambda i, j, k: K.one if i == j == k else K.zero)


def euler_field(n):
    K = coefficient_field(n)
    return vector_field(n, [K.var(i) for i in range(n)])


def unit_field(n):
    K = coefficient_field(n)
    return vector_field(n, [K.one] * n)


def check_canonical_system(a, n):
    """Verify the PDE system for the rotation coefficients a[(i, j)] = A^i_{ij}."""
    K = coefficient_field(n)
    u = [K.var(i) for i in range(n)]
    get = lambda i, j: a.get((i, j), K.zero)
    for i, j, k in product(range(n), repeat=3):
        if len({i, j, k}) < 3:
            continue
        r = _d(get(i, j), k) - (-get(i, j) * get(i, k) + get(i, j) * get(j, k) + get(i, k) * get(k, j))
        if r:
            raise PDEViolation("d_k A^i_{ij} = -A^i_{ij} A^i_{ik} + A^i_{ij} A^j_{jk} + A^i_{ik} A^k_{kj}",
                               (i + 1, j + 1, k + 1), r)
    for i, j in product(range(n), repeat=2):
        if i == j:
            continue
        r = sum((_d(get(i, j), k) for k in range(n)), K.zero)
        if r:
            raise PDEViolation("e(A^i_{ij}) = 0", (i + 1, j + 1), r)
    for i, j in product(range(n), repeat=2):
        if i == j:
            continue
        r = sum((u[k] * _d(get(i, j), k) for k in range(n)), K.zero) + get(i, j)
        if r:
            raise PDEViolation("E(A^i_{ij}) = -A^i_{ij}", (i + 1, j + 1), r)


def canonical_connections(a, n):
    """(nabla, nabla*) of the canonical form from a[(i, j)] = A^i_{ij}, i != j."""
    K = coefficient_field(n)
    u = [K.var(i) for i in range(n)]
    get = lambda i, j: a.get((i, j), K.zero)
    A, B = {}, {}
    for i, j in product(range(n), repeat=2):
        if i == j:
            continue
        A[i, i, j] = A[i, j, i] = get(i, j)
        B[i, i, j] = B[i, j, i] = get(i, j)
        A[i, j, j] = -get(i, j)
        B[i, j, j] = -u[i] / u[j] * get(i, j)
    for i in range(n):
        A[i, i, i] = -sum((get(i, l) for l in range(n) if l != i), K.zero)
        B[i, i, i] = -sum((u[l] / u[i] * get(i, l) for l in range(n) if l != i), K.zero) - 1 / u[i]
    return Connection(n, A), Connection(n, B)


def semisimple_canonical(a, n):
    """Assemble and verify the canonical semisimple bi-flat data.

    ``a`` maps 0-based pairs (i, j), i != j, to A^i_{ij}; missing pairs are zero.
    Returns ``(BiFlatData, BiGeometricData)``.
    """
    K = coefficient_field(n)
    a = {k: K(v) for k, v in a.items()}
    for (i, j) in a:
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"bad index pair {(i + 1, j + 1)}")
    check_canonical_system(a, n)
    A, B = canonical_connections(a, n)
    c = semisimple_product(n)
    E = euler_field(n)
    bf = BiFlatData(FlatFData(c, unit_field(n), A), B, E)
    failed = [name for name, ok, _ in biflat_check(bf) if not ok]
    if failed:
        raise PreconditionFailed(f"assembled data fails bi-flat checks: {failed}")
    L = multiplication_operator(c, E)
    bg = BiGeometricData(L, A, B)
    if not gm_flatness_condition(L, A, B)[0]:
        raise PreconditionFailed("assembled data fails the Gauss-Manin flatness condition")
    return bf, bg


def shifted_dual(b, cstar, nu):
    """nabla* + nu * as a Connection."""
    K = coefficient_field(b.n)
    nu = K(nu)
    return Connection(b.n, lambda g, a, bb: b.nablaStar[g, a, bb] + nu * cstar[g, a, bb])
