"""Schouten-Nijenhuis bracket, the D-map, and the bracket on variational 1-forms."""

from dataclasses import dataclass

from .coeffs import coefficient_field
from .errors import InhomogeneousInput, NotHamiltonian
from .superjet import (
    DiffPoly,
    EvolutionaryDerivation,
    LocalFunctional,
    graded_commutator,
    var_derivative,
)


def _degree(F):
    d = F.density.super_degree()
    return 0 if d is None else d


def schouten(F, G):
    """[F, G] = int dF/dtheta_a dG/dv^a + (-1)^p dF/dv^a dG/dtheta_a."""
    try:
        p = _degree(F)
    except InhomogeneousInput as exc:
        raise InhomogeneousInput(f"first argument is not theta-homogeneous: {exc}") from None
    n = F.n
    total = DiffPoly(n)
    sign = -1 if p % 2 else 1
    for alpha in range(n):
        ft = var_derivative(F, "odd", alpha)
        gv = var_derivative(G, "even", alpha)
        fv = var_derivative(F, "even", alpha)
        gt = var_derivative(G, "odd", alpha)
        total = total + ft * gv + (fv * gt) * sign
    return LocalFunctional(total)


def d_map(F):
    """D(F): v^a -> dF/dtheta_a, theta_a -> (-1)^p dF/dv^a; parity p - 1."""
    try:
        p = _degree(F)
    except InhomogeneousInput as exc:
        raise InhomogeneousInput(str(exc)) from None
    sign = -1 if p % 2 else 1
    a = [var_derivative(F, "odd", alpha) for alpha in range(F.n)]
    b = [var_derivative(F, "even", alpha) * sign for alpha in range(F.n)]
    return EvolutionaryDerivation(p - 1, a, b, check=False)


def hamiltonian_from_operator(pcoeffs, n=None):
    """P = 1/2 int sum_s P^{ab}_s theta_a theta_b^s.

    ``pcoeffs[s][a][b]`` is P^{ab}_s (a DiffPoly or a coefficient).
    """
    if n is None:
        n = len(pcoeffs[0])
    K = coefficient_field(n)
    half = K.const(1, 2)
    total = DiffPoly(n)
    for s, mat in enumerate(pcoeffs):
        for alpha in range(n):
            for beta in range(n):
                entry = mat[alpha][beta]
                if not isinstance(entry, DiffPoly):
                    entry = DiffPoly.const(n, K(entry))
                if not entry:
                    continue
                if entry.super_degree() not in (None, 0):
                    raise InhomogeneousInput("operator coefficients must have super degree 0")
                total = total + entry * DiffPoly.theta(n, alpha) * DiffPoly.theta(n, beta, s)
    return LocalFunctional(total * half)


def poisson_bracket(F, G, P):
    """{F, G}_P = [[F, P], G] for even functionals F, G."""
    return schouten(schouten(F, P), G)


# ------------------------------------------------------- 1-form bracket

@dataclass(frozen=True)
class Variational1Form:
    """omega = int f_a delta v^a, i.e. the derivation theta_a -> -f_a."""

    f: tuple

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(self.f))
        for alpha, fa in enumerate(self.f):
            if fa.super_degree() not in (None, 0):
                raise InhomogeneousInput(f"density f_{alpha + 1} must have super degree 0")

    @property
    def n(self):
        return len(self.f)

    def as_derivation(self):
        n = self.n
        return EvolutionaryDerivation(-1, [DiffPoly(n)] * n, [-fa for fa in self.f], check=False)

    @classmethod
    def from_derivation(cls, X):
        if X.parity % 2 != 1 or any(X.a):
            raise ValueError("not a variational 1-form derivation")
        return cls([-b for b in X.b])

    def __add__(self, other):
        return Variational1Form([x + y for x, y in zip(self.f, other.f)])

    def __neg__(self):
        return Variational1Form([-x for x in self.f])

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self):
        return not any(self.f)


def require_hamiltonian(tau):
    if tau.parity % 2 != 1:
        raise NotHamiltonian("structure must be an odd derivation")
    if not graded_commutator(tau, tau).is_zero():
        raise NotHamiltonian("[tau, tau] != 0")


def _as_derivation(w):
    return w.as_derivation() if isinstance(w, Variational1Form) else w


def one_form_bracket(omega, zeta, tau, check=True):
    """{omega, zeta}_tau = [[omega, tau], zeta] as a variational 1-form."""
    if check:
        require_hamiltonian(tau)
    X, Y = _as_derivation(omega), _as_derivation(zeta)
    X_tau = graded_commutator(X, tau)
    return Variational1Form.from_derivation(graded_commutator(X_tau, Y))


def jacobi_check(omega, zeta, xi, tau):
    """Cyclic sum of nested 1-form brackets vanishes."""
    require_hamiltonian(tau)
    br = lambda x, y: one_form_bracket(x, y, tau, check=False)
    total = br(omega, br(zeta, xi)) + br(zeta, br(xi, omega)) + br(xi, br(omega, zeta))
    return total.is_zero()


def hamiltonian_flow(tau, omega):
    """The generalised Hamiltonian system [tau, omega]."""
    return graded_commutator(tau, _as_derivation(omega))
