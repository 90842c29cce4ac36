"""hydroham command-line front end."""

import argparse
import json
import random
import sys
import time
from fractions import Fraction

from . import brackets, fman, geometry, hydro, superjet
from .coeffs import coefficient_field, format_expr
from .errors import HydroHamError, Incompatible, InconsistentVQ, ManifestError, PDEViolation, PreconditionFailed
from .geometry import Connection, TensorField
from .manifest import Manifest
from .superjet import DiffPoly, LocalFunctional, monomial_label

COMMANDS = {}


def command(name):
    def deco(fn):
        COMMANDS[name] = fn
        return fn

    return deco


class Report:
    def __init__(self, command):
        self.command = command
        self.checks = []
        self.result = {}

    def check(self, name, ok, residual=None):
        self.checks.append({"name": name, "pass": bool(ok), "residuals": residual_entries(residual)})
        return ok

    @property
    def verdict(self):
        return "pass" if all(c["pass"] for c in self.checks) else "fail"

    def to_json(self, millis):
        out = {"command": self.command, "verdict": self.verdict, "checks": self.checks, "wallMillis": millis}
        if self.result:
            out["result"] = self.result
        return out


# ------------------------------------------------------------ residuals

def _label(k):
    return k + 1 if isinstance(k, int) else k


def _entries_for(indices, value):
    if isinstance(value, DiffPoly):
        return [{"indices": indices + [monomial_label(m)], "expr": format_expr(c)}
                for m, c in sorted(value.terms.items(), key=lambda kv: repr(kv[0]))]
    return [{"indices": indices, "expr": format_expr(value)}]


def residual_entries(residual):
    if residual is None:
        return []
    if isinstance(residual, TensorField):
        residual = residual.nonzero()
    out = []
    for key, value in sorted(residual.items(), key=lambda kv: repr(kv[0])):
        key = key if isinstance(key, tuple) else (key,)
        out.extend(_entries_for([_label(k) for k in key], value))
    return out


def _nested(T):
    return T.to_nested()


# ------------------------------------------------------------ structure

def read_structure(m, obj=None, prefix="$."):
    obj = m.data if obj is None else obj
    if not isinstance(obj, dict):
        raise ManifestError(prefix.rstrip("."), "expected an object describing a structure")
    g = m.tensor("g", (2, 0), obj, prefix)
    if "gamma" in obj:
        Gamma = m.tensor("gamma", (2, 1), obj, prefix)
        V, Q = hydro.vq_from(g, Gamma)
        if "V" in obj:
            V = m.tensor("V", (2, 1), obj, prefix)
        if "Q" in obj:
            Q = m.tensor("Q", (2, 2), obj, prefix)
        return hydro.OddHydroDerivation(g, Gamma, V, Q)
    if "connection" in obj:
        return hydro.derivation_from_data(hydro.GeometricData(g, m.connection("connection", obj, prefix)))
    raise ManifestError(prefix + "gamma", "missing: a structure needs 'gamma' or 'connection'")


def read_two_structures(m):
    node = m.node("structures")
    if not isinstance(node, list) or len(node) != 2:
        raise ManifestError("$.structures", "expected a list of two structures")
    return [read_structure(m, s, f"$.structures[{i}].") for i, s in enumerate(node)]


def _maybe_connection(m, key):
    return m.connection(key) if m.has(key) else Connection.trivial(m.n)


def _flat_data(m):
    c = m.tensor("structureConstants", (1, 2))
    e = m.vector("unit")
    return fman.FlatFData(c, e, _maybe_connection(m, "connection"))


def _tau_images(tau):
    return {("v", a): x for a, x in enumerate(tau.a) if x} | {("theta", a): x for a, x in enumerate(tau.b) if x}


def _ghs_checks(rep, D, label=""):
    ok, res = hydro.is_ghs(D)
    rep.check(f"{label}[tau, tau] = 0", ok, {(k[0], k[1]): v for k, v in res.items()})
    try:
        geo = hydro.is_ghs_geometric(D)
        C = hydro.data_from_derivation(D).nabla
        rep.check(f"{label}transported connection is torsion-free", geometry.torsion(C).is_zero(), geometry.torsion(C))
        rep.check(f"{label}transported connection is flat", geometry.curvature(C).is_zero(), geometry.curvature(C))
        return ok and geo
    except InconsistentVQ as exc:
        rep.check(f"{label}V, Q consistent with g, Gamma ({exc})", False)
        return False


def _derivation_json(D):
    return {"g": _nested(D.g), "gamma": _nested(D.Gamma), "V": _nested(D.V), "Q": _nested(D.Q)}


def _random_frame(n, rng):
    """Unit upper-triangular T with small polynomial entries (always invertible)."""
    K = coefficient_field(n)
    names = [f"v{i + 1}" for i in range(n)]

    def entry(a, b):
        if a == b:
            return K.one
        if a > b:
            return K.zero
        return K(f"{rng.randint(-2, 2)} + {rng.randint(-2, 2)}*{rng.choice(names)}")

    return TensorField(n, (1, 1), entry)


# ------------------------------------------------------------- commands

@command("check-ghs")
def cmd_check_ghs(m, opts, rep):
    D = read_structure(m)
    verdict = _ghs_checks(rep, D)
    if opts.seed is not None:
        rng = random.Random(opts.seed)
        T = _random_frame(m.n, rng)
        Dt = hydro.odd_change_of_variables(D, T)
        rep.check("verdict invariant under a random odd frame change", hydro.is_ghs(Dt)[0] == verdict)


@command("check-gbhs")
def cmd_check_gbhs(m, opts, rep):
    D0, D1 = read_two_structures(m)
    _ghs_checks(rep, D0, "tau0: ")
    _ghs_checks(rep, D1, "tau1: ")
    comm = superjet.graded_commutator(D0.to_derivation(), D1.to_derivation())
    rep.check("[tau0, tau1] = 0", comm.is_zero(), _tau_images(comm))


@command("data")
def cmd_data(m, opts, rep):
    D = read_structure(m)
    try:
        data = hydro.data_from_derivation(D)
    except InconsistentVQ as exc:
        rep.check(f"V, Q consistent with g, Gamma ({exc})", False)
        return
    rep.check("V, Q consistent with g, Gamma", True)
    rep.result = {"g": _nested(data.gsharp), "connection": {"christoffels": data.nabla.to_nested()}}


@command("from-data")
def cmd_from_data(m, opts, rep):
    g = m.tensor("g", (2, 0))
    C = m.connection("connection")
    D = hydro.derivation_from_data(hydro.GeometricData(g, C))
    rep.check("derivation assembled", True)
    rep.result = _derivation_json(D)


def _flow(m):
    return hydro.HydroFlow(m.tensor("flow", (1, 1)))


@command("check-flow")
def cmd_check_flow(m, opts, rep):
    D = read_structure(m)
    try:
        ext = hydro.extend_flow(_flow(m), D)
    except Incompatible as exc:
        rep.check("d_nabla X = 0", False, exc.residual)
        return
    rep.check("d_nabla X = 0", True)
    rep.check("[tau, t] = 0", True)
    rep.result = {"Y": _nested(ext.Y), "M": _nested(ext.M)}


@command("hamiltonian-form")
def cmd_hamiltonian_form(m, opts, rep):
    D = read_structure(m)
    try:
        H = hydro.hamiltonian_one_form(_flow(m), D)
    except Incompatible as exc:
        rep.check("d_nabla X = 0", False, exc.residual)
        return
    rep.check("[tau, H] reproduces the flow", True)
    rep.result = {"H": [str(-f) for f in H.f]}


@command("check-flatf")
def cmd_check_flatf(m, opts, rep):
    for name, ok, res in fman.flat_f_check(_flat_data(m), opts.lambdas):
        rep.check(name, ok, res)


@command("check-biflat")
def cmd_check_biflat(m, opts, rep):
    b = fman.BiFlatData(_flat_data(m), m.connection("nablaStar"), m.vector("euler"))
    for name, ok, res in fman.biflat_check(b, opts.lambdas):
        rep.check(name, ok, res)


@command("hierarchy")
def cmd_hierarchy(m, opts, rep):
    d = _flat_data(m)
    pmax = m.integer("pmax", 2)
    if pmax < 0:
        raise ManifestError("$.pmax", "must be non-negative")
    flows = fman.principal_flows(d, pmax)
    rows = []
    for f in flows:
        der = f.hydro_flow(d.c).to_derivation()
        rows.append({
            "alpha": f.alpha + 1,
            "time": f.p + 1,
            "X": f.X.to_nested(),
            "flow": [str(x) for x in der.a],
        })
    ok = all(fman.flows_commute(f1, f2, d.c) for i, f1 in enumerate(flows) for f2 in flows[i + 1:])
    rep.check("flows commute pairwise", ok)
    rep.result = {"flows": rows}


def _bi_geometric(m):
    return m.tensor("L", (1, 1)), _maybe_connection(m, "connection"), m.connection("nablaStar")


@command("gm-flatness")
def cmd_gm_flatness(m, opts, rep):
    L, C, Cs = _bi_geometric(m)
    ok, res = geometry.gm_flatness_condition(L, C, Cs)
    rep.check("nabla(L Delta) symmetric", ok, res)
    for z in opts.sample_points:
        R = geometry.curvature(geometry.gm_christoffels_at(L, C, Cs, z))
        rep.check(f"curvature of Gauss-Manin connection at z = {z}", R.is_zero(), R)


@command("nijenhuis")
def cmd_nijenhuis(m, opts, rep):
    N = geometry.nijenhuis(m.tensor("L", (1, 1)))
    rep.check("Nijenhuis torsion vanishes", N.is_zero(), N)


@command("hertling-manin")
def cmd_hertling_manin(m, opts, rep):
    ok, res = fman.hertling_manin_check(m.tensor("structureConstants", (1, 2)))
    rep.check("Hertling-Manin", ok, res)


def _canonical_a(m):
    node = m.node("canonicalA")
    if not isinstance(node, dict):
        raise ManifestError("$.canonicalA", "expected an object mapping \"i,j\" to expressions")
    out = {}
    for key, value in node.items():
        where = f"$.canonicalA[{key!r}]"
        try:
            i, j = (int(x) for x in key.split(","))
        except ValueError:
            raise ManifestError(where, "key must look like \"i,j\"") from None
        if not (1 <= i <= m.n and 1 <= j <= m.n) or i == j:
            raise ManifestError(where, "indices must be distinct and in 1..n")
        out[(i - 1, j - 1)] = m.expr(value, where)
    return out


@command("canonical-semisimple")
def cmd_canonical(m, opts, rep):
    a = _canonical_a(m)
    try:
        fman.check_canonical_system(a, m.n)
    except PDEViolation as exc:
        rep.check(f"PDE system: {exc.equation}", False, {tuple(i - 1 for i in exc.indices): exc.residual})
        return
    rep.check("PDE system", True)
    A, B = fman.canonical_connections(a, m.n)
    bf = fman.BiFlatData(fman.FlatFData(fman.semisimple_product(m.n), fman.unit_field(m.n), A), B,
                         fman.euler_field(m.n))
    for name, ok, res in fman.biflat_check(bf, opts.lambdas):
        rep.check(name, ok, res)
    L = geometry.multiplication_operator(bf.flat.c, bf.E)
    ok, res = geometry.gm_flatness_condition(L, A, B)
    rep.check("nabla(L Delta) symmetric", ok, res)
    rep.result = {"nabla": {"christoffels": A.to_nested()}, "nablaStar": {"christoffels": B.to_nested()}}


@command("frobenius-pencil")
def cmd_frobenius_pencil(m, opts, rep):
    eta = m.tensor("eta", (2, 0))
    c = m.tensor("structureConstants", (1, 2))
    E = m.vector("euler")
    nu = m.expr(m.node("nu", "0"), "$.nu")
    b = fman.frobenius_pencil(eta, c, E, nu)
    rep.result = {"L": _nested(b.L), "nablaStar": {"christoffels": b.nablaStar.to_nested()}}
    DE = geometry.covariant_derivative_vector(b.nablaStar, E)
    rep.check("nablaStar E = 0", DE.is_zero(), DE)
    try:
        D0, D1 = hydro.pencil_from_bi_data(b, eta)
    except PreconditionFailed as exc:
        rep.check(f"pencil is bi-Hamiltonian ({exc})", False)
        return
    rep.check("pencil is bi-Hamiltonian", True)


def _functional(m, key):
    node = m.node(key)
    return LocalFunctional(m.diffpoly(node, "$." + key))


def _fmt_functional(F):
    return {"density": str(F.density), "terms": superjet.diffpoly_to_json(F.density)}


@command("bracket")
def cmd_bracket(m, opts, rep):
    F, G = _functional(m, "F"), _functional(m, "G")
    if m.has("P"):
        P = _functional(m, "P")
    else:
        ops = m.node("operator")
        if not isinstance(ops, list) or not ops:
            raise ManifestError("$.operator", "expected a list over s of n x n matrices")
        pcoeffs = []
        for s, mat in enumerate(ops):
            if not isinstance(mat, list) or len(mat) != m.n or any(not isinstance(r, list) or len(r) != m.n for r in mat):
                raise ManifestError(f"$.operator[{s}]", f"expected an {m.n} x {m.n} matrix")
            pcoeffs.append([[m.diffpoly(x, f"$.operator[{s}][{a}][{b}]") for b, x in enumerate(row)]
                            for a, row in enumerate(mat)])
        P = brackets.hamiltonian_from_operator(pcoeffs, m.n)
    PP = brackets.schouten(P, P)
    rep.check("[P, P] = 0", PP == LocalFunctional(DiffPoly(m.n)),
              {("delta/delta v", a): superjet.var_derivative(PP, "even", a) for a in range(m.n)}
              | {("delta/delta theta", a): superjet.var_derivative(PP, "odd", a) for a in range(m.n)})
    rep.result = {"bracket": _fmt_functional(brackets.poisson_bracket(F, G, P))}


@command("schouten")
def cmd_schouten(m, opts, rep):
    F, G = _functional(m, "F"), _functional(m, "G")
    rep.check("inputs are theta-homogeneous", True)
    rep.result = {"bracket": _fmt_functional(brackets.schouten(F, G))}


@command("one-form-bracket")
def cmd_one_form_bracket(m, opts, rep):
    D = read_structure(m)
    tau = D.to_derivation()
    omega = brackets.Variational1Form(m.diffpoly_list("omega"))
    zeta = brackets.Variational1Form(m.diffpoly_list("zeta"))
    ok, res = hydro.is_ghs(D)
    rep.check("[tau, tau] = 0", ok, {(k[0], k[1]): v for k, v in res.items()})
    if not ok:
        return
    br = brackets.one_form_bracket(omega, zeta, tau, check=False)
    back = brackets.one_form_bracket(zeta, omega, tau, check=False)
    anti = br + back
    rep.check("antisymmetry", anti.is_zero(), {("f", a): x for a, x in enumerate(anti.f) if x})
    rep.result = {"bracket": [str(x) for x in br.f]}


# ----------------------------------------------------------------- main

def _parse_points(text):
    try:
        pts = [Fraction(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sample point list {text!r}") from None
    if len(set(pts)) < 3:
        raise argparse.ArgumentTypeError("need at least three distinct sample points")
    return pts


def build_parser():
    p = argparse.ArgumentParser(prog="hydroham", description="Verify hydrodynamic-type Hamiltonian structures.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("manifest")
    p.add_argument("--json", action="store_true", help="print the machine-readable report")
    p.add_argument("--max-jet-order", type=int, default=superjet.MAX_JET_ORDER)
    p.add_argument("--sample-points", type=_parse_points, default=None,
                   help="comma-separated rational parameters for z / lambda sampling")
    p.add_argument("--seed", type=int, default=None)
    return p


def _print_human(out, file):
    print(f"{out['command']}: {out['verdict'].upper()}", file=file)
    for c in out["checks"]:
        print(f"  [{'PASS' if c['pass'] else 'FAIL'}] {c['name']}", file=file)
        for r in c["residuals"]:
            idx = ",".join(str(i) for i in r["indices"])
            print(f"      ({idx}): {r['expr']}", file=file)
    if "result" in out:
        print(json.dumps(out["result"], indent=2), file=file)


def run(command, manifest, opts):
    """Run one command on a loaded Manifest; returns the Report."""
    rep = Report(command)
    try:
        COMMANDS[command](manifest, opts, rep)
    except ManifestError:
        raise
    except HydroHamError as exc:
        # mathematical failures become a failing check rather than a crash
        residual = getattr(exc, "residual", None)
        rep.check(f"{type(exc).__name__}: {exc}", False, residual if isinstance(residual, dict) else None)
    return rep


def main(argv=None):
    parser = build_parser()
    opts = parser.parse_args(argv)
    superjet.set_max_jet_order(opts.max_jet_order)
    opts.lambdas = tuple(opts.sample_points) if opts.sample_points else fman.LAMBDAS
    if opts.sample_points is None:
        opts.sample_points = [Fraction(2), Fraction(3), Fraction(5)]
    start = time.perf_counter()
    try:
        manifest = Manifest.load(opts.manifest)
        rep = run(opts.command, manifest, opts)
    except ManifestError as exc:
        if opts.json:
            print(json.dumps({"command": opts.command, "verdict": "error", "error": str(exc), "path": exc.path}))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2
    millis = int((time.perf_counter() - start) * 1000)
    out = rep.to_json(millis)
    if opts.json:
        print(json.dumps(out, indent=2))
    else:
        _print_human(out, sys.stdout)
    return 0 if out["verdict"] == "pass" else 1


if __name__ == "__main__":
    sys.exit(main())
