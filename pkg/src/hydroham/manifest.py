"""Reading JSON manifests into package objects, with path-qualified errors."""

import json

from .coeffs import coefficient_field
from .errors import ExprSyntaxError, ManifestError, UnknownVariable
from .geometry import Connection, TensorField
from .superjet import DiffPoly, diffpoly_from_json

_MISSING = object()


class Manifest:
    def __init__(self, data, source="<manifest>"):
        if not isinstance(data, dict):
            raise ManifestError("$", "manifest must be a JSON object")
        self.data = data
        self.source = source
        n = data.get("dimension", _MISSING)
        if n is _MISSING:
            raise ManifestError("$.dimension", "missing required key")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ManifestError("$.dimension", "must be a positive integer")
        self.n = n
        self.K = coefficient_field(n)
        coords = data.get("coordinates")
        if coords is not None and (not isinstance(coords, list) or len(coords) != n):
            raise ManifestError("$.coordinates", f"expected a list of {n} names")

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ManifestError("$", f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ManifestError("$", f"invalid JSON: {exc.msg} (line {exc.lineno})") from None
        return cls(data, str(path))

    # -------------------------------------------------------- raw access

    def node(self, path, default=_MISSING, obj=None):
        cur = self.data if obj is None else obj
        for key in path.split("."):
            if not isinstance(cur, dict) or key not in cur:
                if default is not _MISSING:
                    return default
                raise ManifestError("$." + path, "missing required key")
            cur = cur[key]
        return cur

    def has(self, path, obj=None):
        return self.node(path, None, obj) is not None

    # ---------------------------------------------------------- scalars

    def expr(self, value, where):
        if isinstance(value, bool) or not isinstance(value, (str, int)):
            raise ManifestError(where, f"expected an expression string, got {type(value).__name__}")
        try:
            return self.K(str(value))
        except (ExprSyntaxError, UnknownVariable, ZeroDivisionError) as exc:
            raise ManifestError(where, str(exc)) from None

    def integer(self, path, default=_MISSING):
        v = self.node(path, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise ManifestError("$." + path, "expected an integer")
        return v

    # ---------------------------------------------------------- tensors

    def _nested(self, value, rank, where):
        n = self.n
        if rank == 0:
            return self.expr(value, where)
        if not isinstance(value, list) or len(value) != n:
            raise ManifestError(where, f"expected a list of length {n}")
        return [self._nested(v, rank - 1, f"{where}[{i}]") for i, v in enumerate(value)]

    def tensor(self, path, valence, obj=None, prefix="$."):
        value = self.node(path, obj=obj) if obj is not None else self.node(path)
        nested = self._nested(value, sum(valence), prefix + path)
        return TensorField.from_nested(self.n, valence, nested)

    def vector(self, path, obj=None, prefix="$."):
        return self.tensor(path, (1, 0), obj, prefix)

    def connection(self, path, obj=None, prefix="$."):
        node = self.node(path, obj=obj) if obj is not None else self.node(path)
        where = prefix + path
        if not isinstance(node, dict) or "christoffels" not in node:
            raise ManifestError(where + ".christoffels", "missing required key")
        nested = self._nested(node["christoffels"], 3, where + ".christoffels")
        return Connection.from_nested(self.n, nested)

    def diffpoly(self, value, where):
        if isinstance(value, (str, int)) and not isinstance(value, bool):
            return DiffPoly.const(self.n, self.expr(value, where))
        if not isinstance(value, list):
            raise ManifestError(where, "expected a serialized differential polynomial (list of terms)")
        try:
            for i, rec in enumerate(value):
                if not isinstance(rec, dict):
                    raise ManifestError(f"{where}[{i}]", "expected an object with coeff/even/odd")
                if "coeff" in rec:
                    self.expr(rec["coeff"], f"{where}[{i}].coeff")
            return diffpoly_from_json(value, self.n)
        except (ValueError, TypeError) as exc:
            raise ManifestError(where, str(exc)) from None

    def diffpoly_list(self, path):
        value = self.node(path)
        if not isinstance(value, list) or len(value) != self.n:
            raise ManifestError("$." + path, f"expected a list of {self.n} differential polynomials")
        return [self.diffpoly(v, f"$.{path}[{i}]") for i, v in enumerate(value)]

    def expr_list(self, path, length=None):
        value = self.node(path)
        length = self.n if length is None else length
        if not isinstance(value, list) or len(value) != length:
            raise ManifestError("$." + path, f"expected a list of {length} expressions")
        return [self.expr(v, f"$.{path}[{i}]") for i, v in enumerate(value)]
