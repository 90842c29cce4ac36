"""Odd derivations of hydrodynamic type and their geometric data.

Index layout of the stored arrays (all 0-based):
  g[a, b]          = g^{ab}
  Gamma[a, b, c]   = Gamma^{ab}_c
  V[m, l, a]       = V^{ml}_a
  Q[m, l, a, c]    = Q^{ml}_{ac}
The derivation tau acts by
  tau(v^a)     = g^{ab} th_b^1 + Gamma^{ab}_c v^c_x th_b
  tau(th_a)    = V^{ml}_a th_l th_m^1 + Q^{ml}_{ac} v^c_x th_l th_m
"""

from dataclasses import dataclass
from itertools import product

from . import coeffs
from .brackets import Variational1Form
from .coeffs import coefficient_field, format_expr
from .errors import (
    DegenerateTensor,
    Incompatible,
    InconsistentVQ,
    NonIntegrable,
    NotInverse,
    PreconditionFailed,
)
from .geometry import (
    Connection,
    TensorField,
    ahe_check,
    curvature,
    d_nabla,
    det,
    gm_flatness_condition,
    identity,
    integrate_closed_form,
    inverse,
    is_flat,
    matmul,
    nijenhuis,
    torsion,
)
from .superjet import DiffPoly, EvolutionaryDerivation, apply, graded_commutator

HALF = (1, 2)


def _d(f, i):
    return coeffs.partial_derivative(f, i)


def _ginv(g):
    n = g.n
    if not det(g.comp, n):
        raise DegenerateTensor("det(g) vanishes identically")
    return inverse(g.comp, n)


class OddHydroDerivation:
    def __init__(self, g, Gamma, V, Q):
        self.n = g.n
        self.g = g
        self.Gamma = Gamma
        self.V = V
        self.Q = Q
        if not det(g.comp, self.n):
            raise DegenerateTensor("det(g) vanishes identically")
        for key, q in Q.comp.items():
            m, l, a, c = key
            if q + Q[l, m, a, c]:
                raise ValueError(f"Q is not antisymmetric in its upper pair at {key}")
        self._tau = None

    @classmethod
    def from_g_gamma(cls, g, Gamma):
        """Fill V and Q from g and Gamma via the candidate relations."""
        V, Q = vq_from(g, Gamma)
        return cls(g, Gamma, V, Q)

    def to_derivation(self):
        if self._tau is not None:
            return self._tau
        n = self.n
        r = range(n)
        th = [DiffPoly.theta(n, b) for b in r]
        th1 = [DiffPoly.theta(n, b, 1) for b in r]
        vx = [DiffPoly.v(n, c, 1) for c in r]
        a_img, b_img = [], []
        for a in r:
            img = DiffPoly(n)
            for b in r:
                if self.g[a, b]:
                    img = img + th1[b] * self.g[a, b]
                for c in r:
                    if self.Gamma[a, b, c]:
                        img = img + vx[c] * th[b] * self.Gamma[a, b, c]
            a_img.append(img)
            img = DiffPoly(n)
            for m in r:
                for l in r:
                    if self.V[m, l, a]:
                        img = img + th[l] * th1[m] * self.V[m, l, a]
                    for c in r:
                        if self.Q[m, l, a, c]:
                            img = img + vx[c] * th[l] * th[m] * self.Q[m, l, a, c]
            b_img.append(img)
        self._tau = EvolutionaryDerivation(1, a_img, b_img)
        return self._tau

    def __eq__(self, other):
        if not isinstance(other, OddHydroDerivation):
            return NotImplemented
        return (self.g, self.Gamma, self.V, self.Q) == (other.g, other.Gamma, other.V, other.Q)

    __hash__ = None

    def __repr__(self):
        return f"OddHydroDerivation(g={self.g.to_nested()}, Gamma={self.Gamma.to_nested()})"


@dataclass
class GeometricData:
    gsharp: TensorField
    nabla: Connection

    def __post_init__(self):
        if not det(self.gsharp.comp, self.gsharp.n):
            raise DegenerateTensor("det(g) vanishes identically")

    def glow(self):
        """g_{ab} with g^{ma} g_{mb} = delta^a_b."""
        n = self.gsharp.n
        gi = inverse(self.gsharp.comp, n)
        return TensorField(n, (0, 2), lambda a, b: gi[b, a])

    def __eq__(self, other):
        return self.gsharp == other.gsharp and self.nabla == other.nabla


@dataclass
class HydroFlow:
    """v^a_t = X^a_b v^b_x, optionally with th_a -> Y^b_a th_b^1 + M^b_{ac} v^c_x th_b."""

    X: TensorField
    Y: TensorField = None   # Y[b, a] = Y^b_a
    M: TensorField = None   # M[b, a, c] = M^b_{ac}

    @property
    def n(self):
        return self.X.n

    def to_derivation(self):
        n = self.n
        r = range(n)
        vx = [DiffPoly.v(n, c, 1) for c in r]
        a_img = [sum((vx[b] * self.X[a, b] for b in r if self.X[a, b]), DiffPoly(n)) for a in r]
        b_img = []
        for a in r:
            img = DiffPoly(n)
            if self.Y is not None:
                for b in r:
                    if self.Y[b, a]:
                        img = img + DiffPoly.theta(n, b, 1) * self.Y[b, a]
                    for c in r:
                        if self.M[b, a, c]:
                            img = img + vx[c] * DiffPoly.theta(n, b) * self.M[b, a, c]
            b_img.append(img)
        return EvolutionaryDerivation(0, a_img, b_img)


@dataclass
class BiGeometricData:
    L: TensorField
    nabla: Connection
    nablaStar: Connection

    @property
    def n(self):
        return self.L.n

    def delta(self):
        return self.nablaStar.difference(self.nabla)


# ----------------------------------------------------------- dictionary

def vq_from(g, Gamma):
    """V and Q solving the two linear relations that tie them to (g, Gamma).

    g^{ab} V^{ml}_b = Gamma^{al}_c g^{cm}
    g^{ab} Q^{ml}_{bd} = 1/2 (Gamma^{al}_c Gamma^{cm}_d - Gamma^{am}_c Gamma^{cl}_d)
    """
    n = g.n
    K = coefficient_field(n)
    r = range(n)
    gi = _ginv(g)
    half = K.const(*HALF)

    rhs_v = {(a, m, l): sum((Gamma[a, l, c] * g[c, m] for c in r), K.zero)
             for a in r for m in r for l in r}
    rhs_q = {}
    for a, m, l, d in product(r, repeat=4):
        if m < l:
            q = half * sum((Gamma[a, l, c] * Gamma[c, m, d] - Gamma[a, m, c] * Gamma[c, l, d] for c in r), K.zero)
            rhs_q[a, m, l, d], rhs_q[a, l, m, d] = q, -q
        elif m == l:
            rhs_q[a, m, l, d] = K.zero

    V = TensorField(n, (2, 1), lambda m, l, b: sum((gi[b, a] * rhs_v[a, m, l] for a in r if gi[b, a]), K.zero))
    Q = TensorField(n, (2, 2), lambda m, l, b, d: sum((gi[b, a] * rhs_q[a, m, l, d] for a in r if gi[b, a]), K.zero))
    return V, Q


def derivation_from_data(d):
    g, C = d.gsharp, d.nabla
    n = g.n
    K = coefficient_field(n)
    r = range(n)
    Gamma = TensorField(n, (2, 1), lambda a, b, c: _d(g[a, b], c) + sum((g[m, b] * C[a, c, m] for m in r), K.zero))
    return OddHydroDerivation.from_g_gamma(g, Gamma)


def data_from_derivation(D):
    """(g, nabla) with A^l_{ab} = -g_{bm} d_a g^{lm} + g_{bc} Gamma^{lc}_a."""
    V, Q = vq_from(D.g, D.Gamma)
    if V != D.V:
        raise InconsistentVQ(f"V does not match g and Gamma: expected {V.to_nested()}")
    if Q != D.Q:
        raise InconsistentVQ(f"Q does not match g and Gamma: expected {Q.to_nested()}")
    n = D.n
    K = coefficient_field(n)
    r = range(n)
    gi = _ginv(D.g)
    # g_{bm} = gi[m, b]
    A = Connection(n, lambda l, a, b: sum((gi[m, b] * (D.Gamma[l, m, a] - _d(D.g[l, m], a)) for m in r), K.zero))
    return GeometricData(D.g, A)


def is_ghs(D):
    """Return ``(ok, residuals)``; residuals maps ('W', a) / ('Z', a) to tau^2 images."""
    tau = D.to_derivation()
    residuals = {}
    for a in range(D.n):
        w = apply(tau, tau.a[a])
        if w:
            residuals[("W", a)] = w
        z = apply(tau, tau.b[a])
        if z:
            residuals[("Z", a)] = z
    return not residuals, residuals


def is_ghs_geometric(D):
    C = data_from_derivation(D).nabla
    return is_flat(C)


def is_gbhs(D0, D1):
    if not (is_ghs(D0)[0] and is_ghs(D1)[0]):
        return False
    return graded_commutator(D0.to_derivation(), D1.to_derivation()).is_zero()


def bi_data(D0, D1):
    """L = g1 g0^{-1}, nabla from D0 and nabla* from D1."""
    n = D0.n
    gi0 = _ginv(D0.g)
    Lm = matmul(D1.g.comp, gi0, n)
    return BiGeometricData(TensorField(n, (1, 1), Lm), data_from_derivation(D0).nabla, data_from_derivation(D1).nabla)


def check_by_properties(b):
    """The three necessary conditions on bi-Hamiltonian geometric data.

    Returns a list of ``(name, ok, residual)``.
    """
    ok1, r1 = ahe_check(b.L, b.nabla, b.nablaStar)
    N = nijenhuis(b.L)
    ok3, r3 = gm_flatness_condition(b.L, b.nabla, b.nablaStar)
    return [
        ("d_nabla(L) = d_nablaStar(L)", ok1, r1),
        ("Nijenhuis torsion of L vanishes", N.is_zero(), N),
        ("nabla(L Delta) symmetric", ok3, r3),
    ]


def pencil_from_bi_data(b, etasharp=None):
    n = b.n
    if etasharp is None:
        etasharp = TensorField(n, (2, 0), identity(n).comp)
    for name, C in (("nabla", b.nabla), ("nablaStar", b.nablaStar)):
        if not torsion(C).is_zero():
            raise PreconditionFailed(f"{name} has torsion")
        if not curvature(C).is_zero():
            raise PreconditionFailed(f"{name} is not flat")
    if not nijenhuis(b.L).is_zero():
        raise PreconditionFailed("Nijenhuis torsion of L does not vanish")
    if not ahe_check(b.L, b.nabla, b.nablaStar)[0]:
        raise PreconditionFailed("d_nabla(L) != d_nablaStar(L)")
    if not gm_flatness_condition(b.L, b.nabla, b.nablaStar)[0]:
        raise PreconditionFailed("Gauss-Manin flatness condition fails")
    g1 = TensorField(n, (2, 0), matmul(b.L.comp, etasharp.comp, n))
    D0 = derivation_from_data(GeometricData(etasharp, b.nabla))
    D1 = derivation_from_data(GeometricData(g1, b.nablaStar))
    if not is_gbhs(D0, D1):
        raise PreconditionFailed("assembled pencil is not bi-Hamiltonian")
    return D0, D1


# ----------------------------------------------------------------- flows

def extend_flow(flow, D, verify=True):
    """Extend v_t = X v_x to th_a so that it commutes with tau.

    Raises Incompatible with the residual d_nabla X when no extension exists.
    """
    n = D.n
    K = coefficient_field(n)
    r = range(n)
    C = data_from_derivation(D).nabla
    res = d_nabla(C, flow.X)
    if not res.is_zero():
        raise Incompatible("d_nabla X does not vanish", res.nonzero())
    X, g, G = flow.X, D.g, D.Gamma
    gi = _ginv(g)
    Xg = matmul(X.comp, g.comp, n)
    Ym = matmul(gi, Xg, n)   # Ym[b, l] = Y^l_b
    Y = TensorField(n, (1, 1), lambda l, b: Ym[b, l])

    def m_comp(l, b, c):
        s = K.zero
        for a in r:
            if not gi[b, a]:
                continue
            t = sum((X[a, d] * G[d, l, c] - G[a, l, d] * X[d, c] for d in r), K.zero)
            s += gi[b, a] * t
        return s

    M = TensorField(n, (1, 2), m_comp)
    out = HydroFlow(X, Y, M)
    if verify:
        comm = graded_commutator(D.to_derivation(), out.to_derivation())
        if not comm.is_zero():
            raise AssertionError(f"extension does not commute with tau: {comm}")
    return out


def conservation_law_structure(V, n=None):
    """Trivial-connection GHS with g = identity and the flow X^a_b = d_b V^a."""
    n = n or len(V)
    K = coefficient_field(n)
    V = [K(x) for x in V]
    data = GeometricData(TensorField(n, (2, 0), identity(n).comp), Connection.trivial(n))
    X = TensorField(n, (1, 1), lambda a, b: _d(V[a], b))
    return data, HydroFlow(X)


def hamiltonian_one_form(flow, D, verify=True):
    """Variational 1-form H with t = [tau, H].

    The derivation of the result sends th_b to H_b where nabla(g^{ab} H_b) = X;
    as a 1-form its densities are f_b = -H_b.
    """
    n = D.n
    K = coefficient_field(n)
    r = range(n)
    ext = extend_flow(flow, D, verify=verify)
    data = data_from_derivation(D)
    gi = _ginv(D.g)
    X = flow.X
    if not any(D.Gamma.comp.values()):
        # d_c H_b = (g^{-1})_{ba} X^a_c
        H = []
        for b in r:
            f = [sum((gi[b, a] * X[a, c] for a in r), K.zero) for c in r]
            H.append(integrate_closed_form(f, n, NonIntegrable))
    elif data.nabla.is_trivial():
        # d_c K^a = X^a_c, H = g^{-1} K
        Kv = [integrate_closed_form([X[a, c] for c in r], n, NonIntegrable) for a in r]
        H = [sum((gi[b, a] * Kv[a] for a in r), K.zero) for b in r]
    else:
        raise NonIntegrable("need Gamma = 0 or a trivial transported connection to integrate")
    Hder = EvolutionaryDerivation(-1, [DiffPoly(n)] * n, [DiffPoly.const(n, h) for h in H])
    if verify:
        lhs = graded_commutator(D.to_derivation(), Hder)
        if lhs != ext.to_derivation():
            raise AssertionError("[tau, H] does not reproduce the flow")
    return Variational1Form.from_derivation(Hder)


# ------------------------------------------------------- transformations

def odd_change_of_variables(D, T):
    """Change of odd frame th_a = T_a^b s_b, with ``T[b, r] = T^b_r``."""
    n = D.n
    K = coefficient_field(n)
    r = range(n)
    if not det(T.comp, n):
        raise DegenerateTensor("det(T) vanishes identically")
    g = TensorField(n, (2, 0), lambda a, b: sum((D.g[a, p] * T[b, p] for p in r), K.zero))
    Gamma = TensorField(n, (2, 1), lambda a, b, c: sum(
        (D.g[a, p] * _d(T[b, p], c) + D.Gamma[a, p, c] * T[b, p] for p in r), K.zero))
    return OddHydroDerivation.from_g_gamma(g, Gamma)


def _jacobian(maps, n):
    return {(a, b): _d(maps[a], b) for a in range(n) for b in range(n)}


def coordinate_transform(D, phi, phi_inv):
    """Rewrite D in the coordinates vbar = phi(v); phi_inv(vbar) = v.

    Both maps are given as lists of coefficients over the same variable names;
    rational maps are accepted as long as the composition is exactly the identity.
    """
    n = D.n
    K = coefficient_field(n)
    r = range(n)
    phi = [K(x) for x in phi]
    phi_inv = [K(x) for x in phi_inv]
    for a in r:
        if coeffs.compose(phi_inv[a], phi) != K.var(a) or coeffs.compose(phi[a], phi_inv) != K.var(a):
            raise NotInverse(f"component {a + 1} of the supplied inverse does not invert the map")

    def bar(f):
        return coeffs.compose(f, phi_inv)

    J = _jacobian(phi, n)               # dvbar/dv in v
    dJ = {(m, l, p): _d(J[m, l], p) for m in r for l in r for p in r}
    Jb = {k: bar(v) for k, v in J.items()}
    dJb = {k: bar(v) for k, v in dJ.items()}
    Jt = _jacobian(phi_inv, n)          # dv/dvbar in vbar
    g = {k: bar(v) for k, v in D.g.comp.items()}
    Gm = {k: bar(v) for k, v in D.Gamma.comp.items()}

    gbar = TensorField(n, (2, 0), lambda a, m: sum(
        (Jb[a, b] * g[b, l] * Jb[m, l] for b in r for l in r), K.zero))

    def gamma_bar(a, m, d):
        s = K.zero
        for b in r:
            if not Jb[a, b]:
                continue
            for l in r:
                t = sum((Gm[b, l, c] * Jt[c, d] for c in r), K.zero) * Jb[m, l]
                t += g[b, l] * sum((dJb[m, l, p] * Jt[p, d] for p in r), K.zero)
                s += Jb[a, b] * t
        return s

    return OddHydroDerivation.from_g_gamma(gbar, TensorField(n, (2, 1), gamma_bar))


def residual_entries_diffpoly(label, f):
    """Flatten a DiffPoly residual into ``[{indices, expr}]`` entries, one per monomial."""
    from .superjet import monomial_label

    return [{"indices": [label, monomial_label(m)], "expr": format_expr(c)} for m, c in sorted(
        f.terms.items(), key=lambda kv: str(kv[0]))]
