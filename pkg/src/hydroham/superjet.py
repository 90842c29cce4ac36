"""Differential polynomials in even jets v^{a,s} and odd jets theta_a^s.

A monomial is a pair ``(even, odd)``:

* ``even`` -- sorted tuple of ``(alpha, s, exponent)`` with ``s >= 1``
  (the order-0 jets v^alpha live in the rational coefficient);
* ``odd``  -- tuple of ``(alpha, s)`` sorted by ``(s, alpha)`` without
  repeats, read left to right as an ordered product of odd generators.

Indices are 0-based internally.  Odd partial derivatives act from the left.
"""

from dataclasses import dataclass

from . import coeffs
from .coeffs import coefficient_field, format_expr
from .errors import InhomogeneousInput, JetOrderExceeded

MAX_JET_ORDER = 20


def set_max_jet_order(order):
    global MAX_JET_ORDER
    MAX_JET_ORDER = int(order)


def _odd_key(t):
    return (t[1], t[0])


def _merge_odd(a, b):
    """Product of two ordered odd words; returns (sign, word) or (0, None)."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    if set(a) & set(b):
        return 0, None
    inversions = 0
    ka = [_odd_key(t) for t in a]
    for t in b:
        kt = _odd_key(t)
        inversions += sum(1 for k in ka if k > kt)
    word = tuple(sorted(a + b, key=_odd_key))
    return (-1 if inversions % 2 else 1), word


def _sort_odd(word):
    """Sort an odd word, returning (sign, sorted) or (0, None) on repeats."""
    if len(set(word)) != len(word):
        return 0, None
    keys = [_odd_key(t) for t in word]
    inversions = sum(1 for i in range(len(keys)) for j in range(i + 1, len(keys)) if keys[i] > keys[j])
    return (-1 if inversions % 2 else 1), tuple(sorted(word, key=_odd_key))


def _merge_even(a, b):
    if not a:
        return b
    if not b:
        return a
    d = {}
    for alpha, s, e in a + b:
        d[(alpha, s)] = d.get((alpha, s), 0) + e
    return tuple(sorted((k[0], k[1], e) for k, e in d.items()))


def _check_order(s):
    if s > MAX_JET_ORDER:
        raise JetOrderExceeded(f"jet order {s} exceeds the cap {MAX_JET_ORDER}")


class DiffPoly:
    """Element of the graded differential algebra in n field components."""

    __slots__ = ("n", "terms")

    def __init__(self, n, terms=None):
        self.n = n
        self.terms = {}
        if terms:
            K = coefficient_field(n)
            for mono, c in terms.items():
                c = K(c)
                if c:
                    self.terms[mono] = c

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, n):
        return cls(n)

    @classmethod
    def const(cls, n, c):
        return cls(n, {((), ()): c})

    @classmethod
    def v(cls, n, alpha, s=0):
        """The even jet v^{alpha,s} (0-based alpha)."""
        if s == 0:
            return cls(n, {((), ()): coefficient_field(n).var(alpha)})
        _check_order(s)
        return cls(n, {(((alpha, s, 1),), ()): 1})

    @classmethod
    def theta(cls, n, alpha, s=0):
        """The odd jet theta_alpha^s (0-based alpha)."""
        _check_order(s)
        return cls(n, {((), ((alpha, s),)): 1})

    @classmethod
    def _raw(cls, n, terms):
        obj = cls.__new__(cls)
        obj.n = n
        obj.terms = terms
        return obj

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, DiffPoly):
            if other.n != self.n:
                raise ValueError("dimension mismatch")
            return other
        return DiffPoly.const(self.n, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m)
            s = c if s is None else s + c
            if s:
                terms[m] = s
            else:
                terms.pop(m, None)
        return DiffPoly._raw(self.n, terms)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly._raw(self.n, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, DiffPoly):
            K = coefficient_field(self.n)
            c = K(other)
            if not c:
                return DiffPoly(self.n)
            return DiffPoly._raw(self.n, {m: k * c for m, k in self.terms.items()})
        other = self._coerce(other)
        terms = {}
        for (ea, oa), ca in self.terms.items():
            for (eb, ob), cb in other.terms.items():
                sign, word = _merge_odd(oa, ob)
                if not sign:
                    continue
                m = (_merge_even(ea, eb), word)
                c = ca * cb if sign > 0 else -(ca * cb)
                s = terms.get(m)
                s = c if s is None else s + c
                if s:
                    terms[m] = s
                else:
                    terms.pop(m, None)
        return DiffPoly._raw(self.n, terms)

    def __rmul__(self, other):
        # scalars are even, so they commute with everything
        return self.__mul__(other)

    def __eq__(self, other):
        if not isinstance(other, DiffPoly):
            if other == 0:
                return not self.terms
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    # -- gradings -----------------------------------------------------
    def super_degrees(self):
        return {len(o) for (_, o) in self.terms}

    def diff_degrees(self):
        return {sum(s * e for _, s, e in ev) + sum(s for _, s in o) for (ev, o) in self.terms}

    def super_degree(self):
        """The common theta-degree; raises InhomogeneousInput otherwise.

        The zero polynomial reports ``None``.
        """
        degs = self.super_degrees()
        if not degs:
            return None
        if len(degs) > 1:
            raise InhomogeneousInput(f"mixed super degrees {sorted(degs)}")
        return degs.pop()

    def max_jet_order(self):
        best = 0
        for ev, o in self.terms:
            for _, s, _ in ev:
                best = max(best, s)
            for _, s in o:
                best = max(best, s)
        return best

    def coefficient(self, even=(), odd=()):
        K = coefficient_field(self.n)
        return self.terms.get((tuple(even), tuple(odd)), K.zero)

    def jet_free_part(self):
        """Coefficient of the empty monomial (all jets and thetas set to 0)."""
        return self.coefficient()

    # -- partial derivatives -----------------------------------------
    def d_even(self, alpha, s):
        """Partial derivative in v^{alpha,s}."""
        terms = {}
        if s == 0:
            for m, c in self.terms.items():
                dc = coeffs.partial_derivative(c, alpha)
                if dc:
                    terms[m] = dc
            return DiffPoly._raw(self.n, terms)
        for (ev, o), c in self.terms.items():
            for i, (a, t, e) in enumerate(ev):
                if a == alpha and t == s:
                    rest = ev[:i] + (((a, t, e - 1),) if e > 1 else ()) + ev[i + 1:]
                    m = (rest, o)
                    val = c * e
                    prev = terms.get(m)
                    val = val if prev is None else prev + val
                    if val:
                        terms[m] = val
                    else:
                        terms.pop(m, None)
        return DiffPoly._raw(self.n, terms)

    def d_odd(self, alpha, s):
        """Left partial derivative in theta_alpha^s."""
        terms = {}
        key = (alpha, s)
        for (ev, o), c in self.terms.items():
            if key in o:
                i = o.index(key)
                m = (ev, o[:i] + o[i + 1:])
                val = -c if i % 2 else c
                prev = terms.get(m)
                val = val if prev is None else prev + val
                if val:
                    terms[m] = val
                else:
                    terms.pop(m, None)
        return DiffPoly._raw(self.n, terms)

    def even_jets(self):
        """Set of (alpha, s) even jets appearing (s >= 1)."""
        return {(a, s) for (ev, _) in self.terms for a, s, _ in ev}

    def odd_jets(self):
        return {t for (_, o) in self.terms for t in o}

    # -- display ------------------------------------------------------
    def __repr__(self):
        return f"DiffPoly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        out = ""
        for k, ((ev, o), c) in enumerate(sorted(self.terms.items(), key=lambda kv: _mono_sort_key(kv[0]))):
            label = monomial_label((ev, o))
            cs = format_expr(c)
            multi = " + " in cs or " - " in cs
            neg = cs.startswith("-") and not multi
            if neg:
                cs = cs[1:]
            if multi:
                cs = f"({cs})"
            if not label:
                body = cs
            elif cs == "1":
                body = label
            else:
                body = f"{cs}*{label}"
            if k == 0:
                out = ("-" if neg else "") + body
            else:
                out += (" - " if neg else " + ") + body
        return out


def _mono_sort_key(m):
    ev, o = m
    return (len(o), tuple(_odd_key(t) for t in o), ev)


def _jet_name(prefix, alpha, s):
    return f"{prefix}{alpha + 1}" + (f"_{s}" if s else "")


def monomial_label(m):
    """Human-readable label such as ``v1_1^2*th1*th2_1``."""
    ev, o = m
    parts = []
    for a, s, e in ev:
        parts.append(_jet_name("v", a, s) + (f"^{e}" if e > 1 else ""))
    for a, s in o:
        parts.append(_jet_name("th", a, s))
    return "*".join(parts)


def monomial(n, even=(), odd=(), coeff=1):
    """Build ``coeff * prod(even) * prod(odd)`` from 0-based index lists.

    ``even`` holds ``(alpha, s, exp)`` with s >= 1; ``odd`` holds
    ``(alpha, s)`` in the given (not necessarily canonical) order.
    """
    sign, word = _sort_odd(tuple(odd))
    if not sign:
        return DiffPoly(n)
    ev = _merge_even(tuple(), tuple(even)) if even else ()
    for _, s, _ in ev:
        _check_order(s)
    for _, s in word:
        _check_order(s)
    K = coefficient_field(n)
    c = K(coeff)
    return DiffPoly(n, {(ev, word): c if sign > 0 else -c})


# ------------------------------------------------------------------ d_x

def _shift_even(ev, i):
    a, s, e = ev[i]
    _check_order(s + 1)
    rest = list(ev[:i]) + ([(a, s, e - 1)] if e > 1 else []) + list(ev[i + 1:])
    return _merge_even(tuple(rest), ((a, s + 1, 1),)), e


def dx(f):
    """Total x-derivative."""
    n = f.n
    out = {}

    def add(m, c):
        prev = out.get(m)
        c = c if prev is None else prev + c
        if c:
            out[m] = c
        else:
            out.pop(m, None)

    for (ev, o), c in f.terms.items():
        for alpha in range(n):
            dc = coeffs.partial_derivative(c, alpha)
            if dc:
                add((_merge_even(ev, ((alpha, 1, 1),)), o), dc)
        for i in range(len(ev)):
            new_ev, e = _shift_even(ev, i)
            add((new_ev, o), c * e)
        for i, (a, s) in enumerate(o):
            _check_order(s + 1)
            sign, word = _sort_odd(o[:i] + ((a, s + 1),) + o[i + 1:])
            if sign:
                add((ev, word), c if sign > 0 else -c)
    return DiffPoly._raw(n, out)


def dx_power(f, s):
    for _ in range(s):
        f = dx(f)
    return f


# ------------------------------------------------------ local functionals

@dataclass(frozen=True)
class LocalFunctional:
    """The class of a density modulo total x-derivatives."""

    density: DiffPoly

    @property
    def n(self):
        return self.density.n

    def super_degree(self):
        return self.density.super_degree()

    def __add__(self, other):
        return LocalFunctional(self.density + other.density)

    def __sub__(self, other):
        return LocalFunctional(self.density - other.density)

    def __neg__(self):
        return LocalFunctional(-self.density)

    def __mul__(self, c):
        return LocalFunctional(self.density * c)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, LocalFunctional):
            return NotImplemented
        return functional_equal(self, other)

    __hash__ = None


def var_derivative(F, kind, alpha):
    """Variational derivative of F in v^alpha (kind='even') or theta_alpha ('odd')."""
    f = F.density if isinstance(F, LocalFunctional) else F
    if kind == "even":
        orders = {s for a, s in f.even_jets() if a == alpha} | {0}
        part = f.d_even
    elif kind == "odd":
        orders = {s for a, s in f.odd_jets() if a == alpha}
        part = f.d_odd
    else:
        raise ValueError(f"kind must be 'even' or 'odd', not {kind!r}")
    total = DiffPoly(f.n)
    for s in sorted(orders):
        term = part(alpha, s)
        for _ in range(s):
            term = -dx(term)
        total = total + term
    return total


def functional_equal(F, G):
    """Equality in the quotient by total derivatives."""
    diff = F.density - G.density
    if diff.jet_free_part():
        return False
    for alpha in range(diff.n):
        if var_derivative(diff, "even", alpha) or var_derivative(diff, "odd", alpha):
            return False
    return True


# -------------------------------------------------- evolutionary derivations

class EvolutionaryDerivation:
    """A derivation commuting with d_x, given by its generator images.

    ``a[alpha]`` is X(v^alpha) and ``b[alpha]`` is X(theta_alpha); the
    derivation has super degree ``parity`` (any integer; only its residue
    mod 2 enters the sign rules).
    """

    def __init__(self, parity, a, b, check=True):
        self.parity = int(parity)
        self.a = tuple(a)
        self.b = tuple(b)
        if len(self.a) != len(self.b):
            raise ValueError("a and b must have the same length")
        self.n = len(self.a)
        self._cache = {}
        if check:
            for alpha, img in enumerate(self.a):
                d = img.super_degree()
                if d is not None and d != self.parity:
                    raise InhomogeneousInput(f"X(v^{alpha + 1}) has super degree {d}, expected {self.parity}")
            for alpha, img in enumerate(self.b):
                d = img.super_degree()
                if d is not None and d != self.parity + 1:
                    raise InhomogeneousInput(f"X(theta_{alpha + 1}) has super degree {d}, expected {self.parity + 1}")

    @classmethod
    def zero(cls, n, parity=0):
        z = [DiffPoly(n)] * n
        return cls(parity, z, z, check=False)

    def v_image(self, alpha, s):
        """d_x^s X(v^alpha), memoized."""
        key = ("v", alpha, s)
        if key not in self._cache:
            self._cache[key] = self.a[alpha] if s == 0 else dx(self.v_image(alpha, s - 1))
        return self._cache[key]

    def theta_image(self, alpha, s):
        key = ("t", alpha, s)
        if key not in self._cache:
            self._cache[key] = self.b[alpha] if s == 0 else dx(self.theta_image(alpha, s - 1))
        return self._cache[key]

    def __call__(self, f):
        return apply(self, f)

    def __add__(self, other):
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.parity % 2 != other.parity % 2:
            raise ValueError("cannot add derivations of different parity")
        return EvolutionaryDerivation(self.parity, [x + y for x, y in zip(self.a, other.a)],
                                      [x + y for x, y in zip(self.b, other.b)], check=False)

    def __neg__(self):
        return EvolutionaryDerivation(self.parity, [-x for x in self.a], [-x for x in self.b], check=False)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        return EvolutionaryDerivation(self.parity, [x * c for x in self.a], [x * c for x in self.b], check=False)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, EvolutionaryDerivation):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return self.parity % 2 == other.parity % 2 and self.a == other.a and self.b == other.b

    __hash__ = None

    def is_zero(self):
        return not any(self.a) and not any(self.b)

    def __repr__(self):
        a = ", ".join(str(x) for x in self.a)
        b = ", ".join(str(x) for x in self.b)
        return f"EvolutionaryDerivation(parity={self.parity}, v:[{a}], theta:[{b}])"


def apply(X, f):
    """Apply the prolonged derivation X to f with graded Leibniz signs."""
    n = f.n
    p_odd = X.parity % 2
    out = DiffPoly(n)
    for (ev, o), c in f.terms.items():
        tail = DiffPoly._raw(n, {(ev, o): coefficient_field(n).one})
        # coefficient c(v)
        for alpha in range(n):
            dc = coeffs.partial_derivative(c, alpha)
            if dc and X.a[alpha]:
                out = out + (X.a[alpha] * dc) * tail
        if not (ev or o):
            continue
        odd_part = DiffPoly._raw(n, {((), o): coefficient_field(n).one})
        # even jets
        for i, (alpha, s, e) in enumerate(ev):
            img = X.v_image(alpha, s)
            if not img:
                continue
            rest = ev[:i] + (((alpha, s, e - 1),) if e > 1 else ()) + ev[i + 1:]
            rest_poly = DiffPoly._raw(n, {(rest, ()): c * e})
            out = out + img * rest_poly * odd_part
        # odd jets
        if o:
            even_poly = DiffPoly._raw(n, {(ev, ()): c})
            for j, (alpha, s) in enumerate(o):
                img = X.theta_image(alpha, s)
                if not img:
                    continue
                left = DiffPoly._raw(n, {((), o[:j]): coefficient_field(n).one})
                right = DiffPoly._raw(n, {((), o[j + 1:]): coefficient_field(n).one})
                term = even_poly * left * img * right
                if p_odd and j % 2:
                    term = -term
                out = out + term
    return out


def graded_commutator(X, Y):
    """[X, Y] = X Y - (-1)^{pq} Y X, returned by its generator images."""
    sign = -1 if (X.parity * Y.parity) % 2 else 1
    n = X.n
    a, b = [], []
    for alpha in range(n):
        xv, yv = X.a[alpha], Y.a[alpha]
        a.append(apply(X, yv) - apply(Y, xv) * sign)
        xt, yt = X.b[alpha], Y.b[alpha]
        b.append(apply(X, yt) - apply(Y, xt) * sign)
    return EvolutionaryDerivation(X.parity + Y.parity, a, b, check=False)


# -------------------------------------------------------- serialization

def diffpoly_to_json(f):
    """List of ``{coeff, even, odd}`` records with 1-based indices."""
    out = []
    for (ev, o), c in sorted(f.terms.items(), key=lambda kv: _mono_sort_key(kv[0])):
        out.append({
            "coeff": format_expr(c),
            "even": [[a + 1, s, e] for a, s, e in ev],
            "odd": [[a + 1, s] for a, s in o],
        })
    return out


def diffpoly_from_json(data, n):
    total = DiffPoly(n)
    K = coefficient_field(n)
    for rec in data:
        coeff = K(rec.get("coeff", "1"))
        even = []
        for a, s, e in rec.get("even", []):
            if not (1 <= a <= n) or s < 0 or e < 0:
                raise ValueError(f"bad even jet {[a, s, e]}")
            if e == 0:
                continue
            if s == 0:
                coeff = coeff * K.var(a - 1) ** e
            else:
                even.append((a - 1, s, e))
        odd = []
        for a, s in rec.get("odd", []):
            if not (1 <= a <= n) or s < 0:
                raise ValueError(f"bad odd jet {[a, s]}")
            odd.append((a - 1, s))
        total = total + monomial(n, even, odd, coeff)
    return total
