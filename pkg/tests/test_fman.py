from itertools import product

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import algebra, connection, rand_constant_matrix, rng_from, tensor
from hydroham.coeffs import coefficient_field, evaluate
from hydroham.errors import NonPolynomial, NotClosed, PDEViolation, PreconditionFailed, SingularPencil
from hydroham.fman import (
    BiFlatData,
    FlatFData,
    HierarchyFlow,
    biflat_check,
    canonical_connections,
    dual_product,
    euler_field,
    flat_f_check,
    flows_commute,
    frobenius_pencil,
    hertling_manin_check,
    principal_flows,
    report_ok,
    semisimple_canonical,
    semisimple_product,
    shifted_dual,
    unit_field,
)
from hydroham.geometry import (
    Connection,
    TensorField,
    ahe_check,
    d_nabla,
    gm_flatness_condition,
    multiplication_operator,
    nijenhuis,
    vector_field,
)
from hydroham.hydro import GeometricData, HydroFlow, derivation_from_data, extend_flow, is_gbhs, pencil_from_bi_data

seeds = st.integers(0, 10**6)
K1 = coefficient_field(1)
K2 = coefficient_field(2)


def failed(report):
    return [name for name, ok, _ in report if not ok]


# ------------------------------------------------------ Hertling-Manin

def hm_by_sympy(c):
    """Independent nine-term evaluation with plain sympy expressions."""
    n = c.n
    vs = sympy.symbols(f"v1:{n + 1}")
    C = {k: c[k].as_expr() for k in product(range(n), repeat=3)}

    def br(X, Y):
        return [sympy.expand(sum(X[m] * sympy.diff(Y[a], vs[m]) - Y[m] * sympy.diff(X[a], vs[m]) for m in range(n)))
                for a in range(n)]

    def m(X, Y):
        return [sum(C[a, b, g] * X[b] * Y[g] for b in range(n) for g in range(n)) for a in range(n)]

    def add(*vecs):
        return [sympy.simplify(sum(v[a] for v in vecs)) for a in range(n)]

    neg = lambda X: [-x for x in X]
    E = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    out = {}
    for x, y, w, z in product(range(n), repeat=4):
        X, Y, W, Z = E[x], E[y], E[w], E[z]
        XY = m(X, Y)
        total = add(
            br(XY, m(W, Z)), neg(m(br(XY, Z), W)), neg(m(br(XY, W), Z)),
            neg(m(X, br(Y, m(Z, W)))), m(m(X, br(Y, Z)), W), m(m(X, br(Y, W)), Z),
            neg(m(Y, br(X, m(Z, W)))), m(m(Y, br(X, Z)), W), m(m(Y, br(X, W)), Z),
        )
        for a in range(n):
            if total[a] != 0:
                out[(x, y, w, z, a)] = total[a]
    return out


def test_hertling_manin_examples():
    const = algebra(2, {(2, 2, 2): "3", (1, 2, 2): "2"})
    assert hertling_manin_check(const.c)[0]
    assert hertling_manin_check(semisimple_product(3))[0]


@pytest.mark.parametrize("table", [
    {(1, 2, 2): "v1"},
    {(1, 2, 2): "v2^2", (2, 2, 2): "v1"},
    {(1, 2, 2): "v1*v2", (2, 2, 2): "v2"},
])
def test_hertling_manin_matches_independent_expansion(table):
    c = algebra(2, table).c
    ok, res = hertling_manin_check(c)
    expected = hm_by_sympy(c)
    assert set(res) == set(expected)
    for k, v in res.items():
        assert sympy.simplify(v.as_expr() - expected[k]) == 0
    assert ok == (not expected)


# ---------------------------------------------------------- flat F checks

def test_flat_f_check_examples():
    assert report_ok(flat_f_check(algebra(2, {(2, 2, 2): "1", (1, 2, 2): "-1"})))
    assert report_ok(flat_f_check(FlatFData(semisimple_product(2), unit_field(2))))
    # three-dimensional commutative, unital, non-associative product
    bad = algebra(3, {(2, 2, 2): "1", (3, 2, 3): "1", (1, 3, 3): "1"})
    names = failed(flat_f_check(bad))
    assert "associativity" in names
    assert any(n.startswith("curvature(nabla - ") and "0 c" not in n for n in names)
    assert "curvature(nabla - 0 c)" not in names


def test_flat_f_check_needs_three_lambdas():
    with pytest.raises(ValueError):
        flat_f_check(algebra(1, {}), lambdas=(0, 1, 1))


# ----------------------------------------------------------- dual product

def test_dual_product_examples():
    cs = dual_product(semisimple_product(2), euler_field(2))
    assert cs == tensor(2, (1, 2), {(1, 1, 1): "1/v1", (2, 2, 2): "1/v2"})
    c = algebra(2, {(1, 2, 2): "v1"}).c
    assert dual_product(c, vector_field(2, [K2.one, K2.zero])) == c
    with pytest.raises(SingularPencil):
        dual_product(semisimple_product(2), vector_field(2, [K2.one, K2.zero]))


# --------------------------------------------------------------- bi-flat

def test_biflat_check_canonical():
    bf, _ = semisimple_canonical({}, 2)
    assert report_ok(biflat_check(bf))


def test_biflat_check_same_connection_constant_product():
    d = algebra(2, {(2, 2, 2): "1"})
    bf = BiFlatData(d, Connection.trivial(2), d.e)
    assert failed(biflat_check(bf)) == ["Lie_E c = c"]


def test_biflat_check_perturbed_dual():
    bf, _ = semisimple_canonical({}, 2)
    bad = BiFlatData(bf.flat, bf.nablaStar + tensor(2, (1, 2), {(1, 1, 1): "v2"}), bf.E)
    assert "curvature(nablaStar)" in failed(biflat_check(bad))


# ------------------------------------------------------------- hierarchy

def test_principal_flows_one_dimensional():
    flows = principal_flows(algebra(1, {}), 4)
    got = [f.X[0] for f in flows]
    assert got == [K1("1"), K1("v1"), K1("1/2*v1^2"), K1("1/6*v1^3"), K1("1/24*v1^4")]
    assert [f.p for f in flows] == [-1, 0, 1, 2, 3]


def test_principal_flows_constant_product():
    d = algebra(2, {(2, 2, 2): "1", (1, 2, 2): "2"})
    c = d.c
    flows = {(f.alpha, f.p): f for f in principal_flows(d, 1)}
    for a in range(2):
        X = flows[a, 0].X
        for lam in range(2):
            assert X[lam] == sum((c[lam, b, a] * K2.var(b) for b in range(2)), K2.zero)
        # level -1 drives translations: v_t = c(d_a, v_x)
        assert flows[a, -1].operator(c) == multiplication_operator(c, vector_field(2, [K2.one if i == a else K2.zero for i in range(2)]))


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_principal_flows_satisfy_recursion(seed):
    rng = rng_from(seed)
    p, q = rng.randint(-2, 2), rng.randint(-2, 2)
    d = algebra(2, {(2, 2, 2): str(p), (1, 2, 2): str(q)})
    flows = principal_flows(d, 3)
    by = {(f.alpha, f.p): f.X for f in flows}
    for (a, lvl), X in by.items():
        if lvl == -1:
            continue
        prev = by[a, lvl - 1]
        for lam, b in product(range(2), repeat=2):
            assert X[lam].diff(K2.gens[b]) == sum((d.c[lam, b, g] * prev[g] for g in range(2)), K2.zero)
        assert all(coefficient_at_origin(X[lam]) == 0 for lam in range(2))


def coefficient_at_origin(f):
    return evaluate(f, [0] * len(f.field.gens))


def test_principal_flows_errors():
    with pytest.raises(NonPolynomial):
        principal_flows(algebra(2, {(1, 2, 2): "1/(v1 + 1)"}), 1)
    with pytest.raises(PreconditionFailed):
        d = algebra(1, {})
        principal_flows(FlatFData(d.c, d.e, connection(1, {(1, 1, 1): "v1"})), 1)
    # d2 o d2 = v1 d1 is not the product of a flat F-manifold
    with pytest.raises(NotClosed):
        principal_flows(algebra(2, {(1, 2, 2): "v1"}), 2)


def test_flows_commute_examples():
    d = algebra(1, {})
    flows = principal_flows(d, 2)
    assert flows_commute(flows[1], flows[1], d.c)
    assert flows_commute(flows[1], flows[2], d.c)
    X1 = TensorField.from_nested(2, (1, 1), [["v1", "0"], ["0", "0"]])
    X2 = TensorField.from_nested(2, (1, 1), [["0", "v2"], ["0", "0"]])
    assert not flows_commute(X1, X2)
    assert flows_commute(HydroFlow(X1), HydroFlow(X1))


@pytest.mark.parametrize("d", [
    algebra(2, {(2, 2, 2): "1", (1, 2, 2): "-1"}),
    algebra(2, {(1, 2, 2): "v2"}),
    algebra(2, {(1, 2, 2): "v2^2", (2, 2, 2): "v2"}),
    FlatFData(semisimple_product(2), unit_field(2)),
])
def test_hierarchy_commutes_and_is_hamiltonian(d):
    assert report_ok(flat_f_check(d))
    flows = principal_flows(d, 2)
    for f, g in product(flows, repeat=2):
        assert flows_commute(f, g, d.c)
    rng = rng_from(5)
    for eta in (TensorField(2, (2, 0), {(0, 0): K2.one, (1, 1): K2.one}), rand_constant_matrix(2, rng)):
        D = derivation_from_data(GeometricData(eta, Connection.trivial(2)))
        for f in flows:
            extend_flow(f.hydro_flow(d.c), D)


# ------------------------------------------------------- Frobenius pencil

def test_frobenius_pencil_one_dimensional():
    c, E = semisimple_product(1), euler_field(1)
    eta = TensorField(1, (2, 0), {(0, 0): K1.one})
    b = frobenius_pencil(eta, c, E)
    assert b.L[0, 0] == K1("v1") and b.nabla.is_trivial()
    assert b.nablaStar[0, 0, 0] == K1("-1/(2*v1)")
    D0, D1 = pencil_from_bi_data(b, eta)
    assert is_gbhs(D0, D1)
    b2 = frobenius_pencil(eta, c, E, nu="-1/2")
    assert b2.nablaStar[0, 0, 0] == K1("-1/v1")
    bf = BiFlatData(FlatFData(c, unit_field(1)), b2.nablaStar, E)
    assert report_ok(biflat_check(bf))
    assert "nablaStar E = 0" in failed(biflat_check(BiFlatData(FlatFData(c, unit_field(1)), b.nablaStar, E)))


def test_frobenius_pencil_constant_euler():
    d = algebra(2, {(2, 2, 2): "1"})
    eta = TensorField(2, (2, 0), {(0, 1): K2.one, (1, 0): K2.one})
    b = frobenius_pencil(eta, d.c, vector_field(2, [K2.one, K2.zero]))
    assert b.L == TensorField(2, (1, 1), {(0, 0): K2.one, (1, 1): K2.one})
    assert b.delta().is_zero()
    b2 = frobenius_pencil(eta, d.c, d.e, nu=3)
    assert b2.delta() == d.c.scale(K2(3))
    with pytest.raises(SingularPencil):
        frobenius_pencil(eta, semisimple_product(2), vector_field(2, [K2.one, K2.zero]))


def test_shifted_dual():
    bf, _ = semisimple_canonical({}, 2)
    cs = dual_product(bf.flat.c, bf.E)
    S = shifted_dual(bf, cs, 2)
    assert S.difference(bf.nablaStar) == cs.scale(K2(2))


# -------------------------------------------------------- canonical form

def test_canonical_trivial_rotation_coefficients():
    for n in (2, 3):
        bf, bg = semisimple_canonical({}, n)
        K = coefficient_field(n)
        for i in range(n):
            assert bg.nablaStar[i, i, i] == -1 / K.var(i)
        assert bg.nabla.is_trivial()
        assert ahe_check(bg.L, bg.nabla, bg.nablaStar)[0]
        assert nijenhuis(bg.L).is_zero()
        assert gm_flatness_condition(bg.L, bg.nabla, bg.nablaStar)[0]


@pytest.mark.parametrize("a", ["1", "-2/3", "5"])
def test_canonical_two_dimensional_family(a):
    K = K2
    rot = {(0, 1): K(f"{a}/(v1 - v2)"), (1, 0): K(f"1/(v2 - v1)")}
    bf, bg = semisimple_canonical(rot, 2)
    A, B = canonical_connections(rot, 2)
    assert bg.nabla == A and bg.nablaStar == B
    assert A[0, 0, 1] == rot[0, 1] and A[0, 1, 1] == -rot[0, 1]
    assert B[0, 1, 1] == -K("v1/v2") * rot[0, 1]


def test_canonical_rejects_constant_rotation_coefficient():
    with pytest.raises(PDEViolation) as exc:
        semisimple_canonical({(0, 1): K2.one}, 2)
    assert exc.value.equation == "E(A^i_{ij}) = -A^i_{ij}"
    assert exc.value.indices == (1, 2)


def test_canonical_rejects_non_translation_invariant():
    with pytest.raises(PDEViolation) as exc:
        semisimple_canonical({(0, 1): K2("1/v1")}, 2)
    assert exc.value.equation == "e(A^i_{ij}) = 0"


def test_canonical_pencil_flows_compatible_with_both_structures():
    bf, bg = semisimple_canonical({}, 2)
    D0, D1 = pencil_from_bi_data(bg)
    for f in principal_flows(bf.flat, 2):
        hf = f.hydro_flow(bf.flat.c)
        extend_flow(hf, D0)
        extend_flow(hf, D1)
        assert d_nabla(bg.nablaStar, hf.X).is_zero()


def test_hierarchy_flow_record():
    f = HierarchyFlow(0, -1, unit_field(2))
    assert f.operator(semisimple_product(2)) == TensorField(2, (1, 1), {(0, 0): K2.one, (1, 1): K2.one})
