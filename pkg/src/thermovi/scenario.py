"""INI scenario files: mesh, material, initial data, boundary schedule, time and output.

Closed-form fields are sympy expressions in ``X, Y, Z, t`` built from numbers,
``+ - * / **``, ``sin``, ``cos``, ``pi`` and the material's ``theta0``.  Time
derivatives needed by Dirichlet data are taken symbolically, so the user only
writes the values.  Vectors are written as tuples ``(ex, ey, ez)``.

Facet selectors in ``[mesh]`` are ``all``, ``none``, or comparisons
``X == v`` joined by ``or``; a facet is selected when all its nodes satisfy
one comparison.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import sympy
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .errors import InvalidArgument, ScenarioError, ThermoVIError
from .mesh import LABELS, Mesh, generate_box_tet_mesh, generate_rectangle_tri_mesh, generate_segment_mesh, read_mesh

_SYMBOLS = {name: sympy.Symbol(name, real=True) for name in ("X", "Y", "Z", "t", "theta0")}
_FUNCTIONS = {"sin": sympy.sin, "cos": sympy.cos, "pi": sympy.pi}
_GLOBALS = {
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
    "Function": sympy.Function,
    "Tuple": sympy.Tuple,
}

SCHEMA = {
    "mesh": {"kind", "length", "elements", "lengths", "divisions", "origin", "path", *LABELS},
    "material": {"model", "rho0", "theta0", "c", "gamma", "kappa", "eta0", "E", "lambda", "mu",
                 "allow_nonpositive_temperature"},
    "initial": {"kind", "omega", "K", "amplitude", "motion", "velocity", "thermal_displacement", "temperature"},
    "bc": {"mech_value", "thermal_value", "until", "traction", "entropy_influx", "entropy_source", "gravity"},
    "time": {"integrator", "dt", "safety", "end"},
    "output": {"every", "snapshot_every", "errors"},
}
REQUIRED = ("mesh", "material", "time")

DEFAULT_SAFETY = 0.2


class _Located:
    """Line lookup for sections and keys in the raw config text."""

    def __init__(self, text: str):
        self.sections: dict[str, int] = {}
        self.keys: dict[tuple[str, str], int] = {}
        current = None
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line[0] in "#;":
                continue
            m = re.match(r"\[([^\]]+)\]", line)
            if m:
                current = m.group(1).strip()
                self.sections.setdefault(current, n)
                continue
            m = re.match(r"([^=:\s][^=:]*?)\s*[=:]", line)
            if m and current is not None and not raw[:1].isspace():
                self.keys.setdefault((current, m.group(1).strip()), n)

    def key(self, section, name):
        return self.keys.get((section, name), self.sections.get(section))


@dataclass(frozen=True)
class Expression:
    """A scalar or vector field f(X, Y, Z, t), with its time derivative."""

    source: str
    exprs: tuple
    rates: tuple
    vector: bool

    def _lambdas(self, exprs):
        args = [_SYMBOLS[s] for s in ("X", "Y", "Z", "t")]
        return [sympy.lambdify(args, e, modules="numpy") for e in exprs]

    def __post_init__(self):
        object.__setattr__(self, "_value", self._lambdas(self.exprs))
        object.__setattr__(self, "_rate", self._lambdas(self.rates))

    @staticmethod
    def _eval(fns, X, t, vector):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cols = [X[:, i] if i < X.shape[1] else np.zeros(len(X)) for i in range(3)]
        vals = [np.broadcast_to(np.asarray(f(*cols, t), dtype=float), (len(X),)) for f in fns]
        if vector:
            return np.stack(vals, axis=1)
        return np.array(vals[0])

    def value(self, X, t=0.0):
        return self._eval(self._value, X, t, self.vector)

    def rate(self, X, t=0.0):
        return self._eval(self._rate, X, t, self.vector)

    @property
    def is_constant(self) -> bool:
        return all(not e.free_symbols for e in self.exprs)

    def constant(self):
        vals = [float(e) for e in self.exprs]
        return np.array(vals) if self.vector else vals[0]


def parse_expression(text: str, *, theta0: float | None = None, vector: bool | None = None, dim=None) -> Expression:
    """Parse a field expression; raises :class:`InvalidArgument` on anything outside the grammar."""
    text = text.strip()
    if not text:
        raise InvalidArgument("empty expression")
    if re.search(r"__|\blambda\b|\[|\]|\{|\}|;|:|[A-Za-z_)]\s*\.", text):
        raise InvalidArgument(f"unsupported characters in expression {text!r}")
    try:
        parsed = parse_expr(
            text,
            local_dict={**_SYMBOLS, **_FUNCTIONS},
            global_dict=dict(_GLOBALS),
            transformations=standard_transformations,
            evaluate=True,
        )
    except Exception as exc:  # sympy raises a mix of SyntaxError/TypeError/NameError
        raise InvalidArgument(f"cannot parse expression {text!r}: {exc}") from None
    items = tuple(parsed) if isinstance(parsed, (tuple, sympy.Tuple)) else (parsed,)
    is_vec = isinstance(parsed, (tuple, sympy.Tuple))
    if vector is not None and is_vec != vector:
        raise InvalidArgument(f"expected a {'vector' if vector else 'scalar'} expression, got {text!r}")
    if dim is not None and is_vec and len(items) != dim:
        raise InvalidArgument(f"expected {dim} components, got {len(items)} in {text!r}")
    allowed = set(_SYMBOLS.values())
    out = []
    for e in items:
        if not isinstance(e, sympy.Expr):
            raise InvalidArgument(f"not an arithmetic expression: {text!r}")
        unknown = e.free_symbols - allowed
        if unknown:
            raise InvalidArgument(f"unknown name(s) {sorted(map(str, unknown))} in {text!r}")
        for fn in e.atoms(sympy.Function):
            if fn.func not in (sympy.sin, sympy.cos):
                raise InvalidArgument(f"function {fn.func.__name__} not allowed in {text!r}")
        if _SYMBOLS["theta0"] in e.free_symbols:
            if theta0 is None:
                raise InvalidArgument(f"theta0 is undefined in {text!r}")
            e = e.subs(_SYMBOLS["theta0"], theta0)
        out.append(e)
    t = _SYMBOLS["t"]
    rates = tuple(sympy.diff(e, t) for e in out)
    return Expression(text, tuple(out), rates, is_vec)


def parse_selector(text: str):
    """``all`` | ``none`` | ``X == v [or Y == w ...]`` -> predicate on (n, d) coordinates, or None."""
    text = text.strip()
    if text == "all":
        return lambda x: np.ones(len(x), dtype=bool)
    if text == "none":
        return None
    terms = []
    for term in re.split(r"\s+or\s+", text):
        m = re.fullmatch(r"([XYZ])\s*==\s*(\S.*)", term.strip())
        if not m:
            raise InvalidArgument(f"bad facet selector {term!r}; expected e.g. 'X == 0'")
        value = parse_expression(m.group(2), vector=False)
        if not value.is_constant:
            raise InvalidArgument(f"selector value must be a constant in {term!r}")
        terms.append(("XYZ".index(m.group(1)), value.constant()))

    def where(x):
        scale = max(1.0, float(np.abs(x).max()))
        hit = np.zeros(len(x), dtype=bool)
        for axis, v in terms:
            if axis >= x.shape[1]:
                raise InvalidArgument(f"selector uses coordinate {'XYZ'[axis]} on a {x.shape[1]}D mesh")
            hit |= np.abs(x[:, axis] - v) <= 1e-9 * scale
        return hit

    return where


@dataclass
class Scenario:
    mesh: Mesh
    mesh_spec: dict
    material: dict
    initial: dict
    bc: dict
    integrator: str = "f10"
    dt: float | None = None
    safety: float | None = None
    end: float = 1.0
    every: int = 1
    snapshot_every: int = 0
    errors: bool = False
    source: str | None = None
    notes: dict = field(default_factory=dict)


def _floats(text, n=None):
    try:
        vals = [float(v) for v in re.split(r"[,\s]+", text.strip()) if v]
    except ValueError:
        raise InvalidArgument(f"expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise InvalidArgument(f"expected {n} numbers, got {len(vals)}")
    return vals


def _ints(text, n=None):
    vals = _floats(text, n)
    if any(v != int(v) for v in vals):
        raise InvalidArgument(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise InvalidArgument(f"expected a boolean, got {text!r}")


def build_mesh(spec: dict, base: Path | None = None) -> Mesh:
    kind = spec.get("kind", "segment")
    if kind == "segment":
        mesh = generate_segment_mesh(float(spec["length"]), _ints(spec["elements"], 1)[0],
                                     float(spec.get("origin", 0.0)))
    elif kind == "rectangle":
        origin = _floats(spec["origin"], 2) if "origin" in spec else (0.0, 0.0)
        mesh = generate_rectangle_tri_mesh(_floats(spec["lengths"], 2), _ints(spec["divisions"], 2), origin)
    elif kind == "box":
        origin = _floats(spec["origin"], 3) if "origin" in spec else (0.0, 0.0, 0.0)
        mesh = generate_box_tet_mesh(_floats(spec["lengths"], 3), _ints(spec["divisions"], 3), origin)
    elif kind == "file":
        path = Path(spec["path"])
        if base is not None and not path.is_absolute():
            path = base / path
        mesh = read_mesh(path)
    else:
        raise InvalidArgument(f"unknown mesh kind {kind!r}; use segment, rectangle, box or file")
    for label in LABELS:
        if label in spec:
            where = parse_selector(spec[label])
            if where is not None:
                mesh = mesh.with_labels(label, where)
    return mesh


def refine_mesh_spec(spec: dict, factor: int = 2) -> dict:
    """Generator spec with every division count multiplied by ``factor``."""
    out = dict(spec)
    kind = spec.get("kind", "segment")
    if kind == "segment":
        out["elements"] = str(_ints(spec["elements"], 1)[0] * factor)
    elif kind in ("rectangle", "box"):
        out["divisions"] = ", ".join(str(v * factor) for v in _ints(spec["divisions"]))
    else:
        raise InvalidArgument("only generated meshes can be refined")
    return out


def parse_scenario(text: str, source: str | None = None, base: Path | None = None) -> Scenario:
    """Parse and validate a scenario; every problem raises :class:`ScenarioError`."""
    if not text.strip():
        raise ScenarioError("empty scenario", 1)
    loc = _Located(text)
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<scenario>")
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioError("content before the first [section]", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ScenarioError(exc.message.split(": ", 1)[-1] if hasattr(exc, "message") else str(exc),
                            exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ScenarioError("malformed line", line) from None

    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ScenarioError(f"unknown section [{sec}]", loc.sections.get(sec))
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                raise ScenarioError(f"unknown key {key!r} in [{sec}]", loc.key(sec, key))
    last = len(text.splitlines())
    for sec in REQUIRED:
        if not cp.has_section(sec):
            raise ScenarioError(f"missing required section [{sec}]", last)

    def get(sec):
        return dict(cp[sec]) if cp.has_section(sec) else {}

    def guard(sec, key, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ScenarioError:
            raise
        except (ThermoVIError, ValueError, KeyError, TypeError) as exc:
            msg = f"missing key {exc.args[0]!r} in [{sec}]" if isinstance(exc, KeyError) else str(exc)
            raise ScenarioError(msg, loc.key(sec, key) if key else loc.sections.get(sec, last)) from None

    mesh_spec = get("mesh")
    # check value syntax key by key first so errors point at the offending line
    for key, check in (("length", _floats), ("elements", _ints), ("lengths", _floats),
                       ("divisions", _ints), ("origin", _floats)):
        if key in mesh_spec:
            guard("mesh", key, check, mesh_spec[key])
    for label in LABELS:
        if label in mesh_spec:
            guard("mesh", label, parse_selector, mesh_spec[label])
    mesh = guard("mesh", "kind", build_mesh, mesh_spec, base)

    material = get("material")
    guard("material", "model", _check_material, material, mesh.dim)
    theta0 = float(material["theta0"])

    initial = get("initial")
    kind = initial.get("kind", "fields")
    if kind not in ("harmonic", "fields"):
        raise ScenarioError(f"unknown initial kind {kind!r}", loc.key("initial", "kind"))
    init = {"kind": kind}
    if kind == "harmonic":
        if material.get("model") != "linear":
            raise ScenarioError("harmonic initial data needs the linear model", loc.key("initial", "kind"))
        if ("omega" in initial) == ("K" in initial):
            raise ScenarioError("harmonic initial data needs exactly one of omega or K", loc.key("initial", "kind"))
        for key in ("omega", "K", "amplitude"):
            if key in initial:
                init[key] = guard("initial", key, float, initial[key])
        for key in ("motion", "velocity", "thermal_displacement", "temperature"):
            if key in initial:
                raise ScenarioError(f"{key!r} conflicts with harmonic initial data", loc.key("initial", key))
    else:
        for key in ("omega", "K", "amplitude"):
            if key in initial:
                raise ScenarioError(f"{key!r} only applies to harmonic initial data", loc.key("initial", key))
        defaults = {
            "motion": "(" + ", ".join("XYZ"[: mesh.dim]) + (",)" if mesh.dim == 1 else ")"),
            "velocity": "(" + ", ".join(["0"] * mesh.dim) + (",)" if mesh.dim == 1 else ")"),
            "thermal_displacement": "0",
            "temperature": "theta0",
        }
        for key, default in defaults.items():
            vec = key in ("motion", "velocity")
            init[key] = guard("initial", key if key in initial else None, parse_expression,
                              initial.get(key, default), theta0=theta0, vector=vec, dim=mesh.dim if vec else None)

    bc_raw = get("bc")
    bc = {}
    for key, vec in (("mech_value", True), ("thermal_value", False)):
        if key in bc_raw:
            bc[key] = guard("bc", key, parse_expression, bc_raw[key], theta0=theta0, vector=vec,
                            dim=mesh.dim if vec else None)
    labels_needed = {
        "mech_value": "mech-dirichlet",
        "thermal_value": "thermal-dirichlet",
        "traction": "traction",
        "entropy_influx": "entropy-flux",
    }
    if kind == "harmonic":
        for key in ("mech_value", "thermal_value"):
            if key in bc_raw:
                raise ScenarioError(f"{key!r} conflicts with harmonic boundary data", loc.key("bc", key))
    for key, label in labels_needed.items():
        needs = key in bc_raw or (kind == "harmonic" and key in ("mech_value", "thermal_value"))
        if needs and len(mesh.facets_with_label(label)) == 0:
            where = loc.key("bc", key) if key in bc_raw else loc.key("initial", "kind")
            raise ScenarioError(f"{key} needs facets labelled {label!r} in [mesh]", where)
    bc["until"] = guard("bc", "until", float, bc_raw.get("until", "inf"))
    if "traction" in bc_raw:
        bc["traction"] = guard("bc", "traction", _floats, bc_raw["traction"], mesh.dim)
    if "entropy_influx" in bc_raw:
        bc["entropy_influx"] = guard("bc", "entropy_influx", float, bc_raw["entropy_influx"])
    bc["entropy_source"] = guard("bc", "entropy_source", float, bc_raw.get("entropy_source", "0"))
    if "gravity" in bc_raw:
        bc["gravity"] = guard("bc", "gravity", _floats, bc_raw["gravity"], mesh.dim)

    tm = get("time")
    integrator = tm.get("integrator", "f10")
    if integrator not in ("f10", "f01", "euler-a", "euler-b"):
        raise ScenarioError(f"unknown integrator {integrator!r}", loc.key("time", "integrator"))
    if "end" not in tm:
        raise ScenarioError("missing key 'end' in [time]", loc.sections["time"])
    end = guard("time", "end", float, tm["end"])
    if not end > 0:
        raise ScenarioError("end time must be positive", loc.key("time", "end"))
    dt = safety = None
    if "dt" in tm and "safety" in tm:
        raise ScenarioError("give dt or safety, not both", loc.key("time", "safety"))
    if "dt" in tm:
        dt = guard("time", "dt", float, tm["dt"])
        if not dt > 0:
            raise ScenarioError("dt must be positive", loc.key("time", "dt"))
    else:
        safety = guard("time", "safety", float, tm.get("safety", str(DEFAULT_SAFETY)))
        if not 0 < safety <= 1:
            raise ScenarioError("safety must lie in (0, 1]", loc.key("time", "safety"))
        if material.get("model") != "linear":
            raise ScenarioError("the nonlinear model needs an explicit dt", loc.sections["time"])

    out = get("output")
    every = guard("output", "every", int, out.get("every", "1"))
    snap = guard("output", "snapshot_every", int, out.get("snapshot_every", "0"))
    errors = guard("output", "errors", _bool, out.get("errors", "true" if kind == "harmonic" else "false"))
    if every < 1 or snap < 0:
        raise ScenarioError("output cadence must be positive", loc.key("output", "every"))
    if errors and kind != "harmonic":
        raise ScenarioError("error columns need harmonic initial data", loc.key("output", "errors"))

    sc = Scenario(mesh, mesh_spec, material, init, bc, integrator, dt, safety, end, every, snap, errors, source)
    n = _step_count(sc, loc)
    if n % every:
        raise ScenarioError(f"output cadence {every} does not divide the step count {n}", loc.key("output", "every"))
    return sc


def _step_count(sc: Scenario, loc=None) -> int:
    from .driver import resolve_dt  # local import: driver depends on this module

    dt = resolve_dt(sc)
    n = round(sc.end / dt)
    if not math.isclose(n * dt, sc.end, rel_tol=1e-9):
        line = loc.key("time", "dt") if loc else None
        raise ScenarioError(f"end time {sc.end} is not a whole number of steps of {dt}", line)
    return n


def _check_material(mat: dict, dim: int):
    model = mat.get("model")
    common = ("rho0", "theta0", "c", "gamma", "kappa")
    if model == "linear":
        need = common + (("E",) if dim == 1 else ())
        if dim > 1 and "E" not in mat and not ("lambda" in mat and "mu" in mat):
            raise InvalidArgument("linear model in 2D/3D needs lambda and mu")
    elif model == "nonlinear":
        need = common + ("mu", "lambda")
        if "allow_nonpositive_temperature" in mat:
            raise InvalidArgument("allow_nonpositive_temperature applies only to the linear model")
    else:
        raise InvalidArgument(f"unknown material model {model!r}; use linear or nonlinear")
    for key in need:
        if key not in mat:
            raise InvalidArgument(f"missing material parameter {key!r}")
    for key, v in mat.items():
        if key not in ("model", "allow_nonpositive_temperature"):
            float(v)
    if "allow_nonpositive_temperature" in mat:
        _bool(mat["allow_nonpositive_temperature"])


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(), source=str(path), base=path.parent)


def shipped_config(name: str) -> Path:
    """Path of a bundled scenario such as ``convergence_1d`` or ``beam_3d``."""
    p = Path(__file__).parent / "configs" / f"{name}.ini"
    if not p.exists():
        raise InvalidArgument(f"no shipped config named {name!r}")
    return p
