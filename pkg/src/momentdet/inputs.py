"""Input ingestion shared by the command-line front end.

Generator specs have the form ``name`` or ``name:p1,p2,...``. Atom lists use
``point@weight`` items separated by commas, with point coordinates separated
by ``;`` (for example ``atoms:1;0@1/2,0;1@1/2``).
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from . import mp1d, mpmulti, realize
from .exact import context, parse_scalar, to_mpf
from .mp1d import MomentSequence1D, load_moments
from .mpmulti import Multisequence
from .realize import TensorSequence
from .seqcore import FLOAT, RATIONAL, PositiveSequence, builtin, from_values


class InputError(ValueError):
    """Malformed input file, unknown generator or inconsistent hints."""


def parse_gen(spec: str) -> Tuple[str, List[str]]:
    name, _, rest = spec.partition(":")
    if not name:
        raise InputError(f"empty generator name in {spec!r}")
    params = [p.strip() for p in rest.split(",")] if rest else []
    return name.strip(), params


def load_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path} must hold a JSON object")
    return data


def _num(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational number: {s!r}") from exc


def parse_atoms(params: List[str]) -> List[Tuple[Tuple[Fraction, ...], Fraction]]:
    out = []
    for item in params:
        point, sep, weight = item.partition("@")
        if not sep:
            raise InputError(f"atom {item!r} lacks '@weight'")
        out.append((tuple(_num(x) for x in point.split(";")), _num(weight)))
    if not out:
        raise InputError("atom list is empty")
    dims = {len(p) for p, _ in out}
    if len(dims) != 1:
        raise InputError("atoms have mixed dimensions")
    return out


def _check_mode(mode: Optional[str]) -> None:
    if mode not in (None, RATIONAL, FLOAT):
        raise InputError(f"mode must be rational or float, not {mode!r}")


# ---------------------------------------------------------------------------
# positive sequences (qa, regularize, bump)


def positive_sequence(gen: Optional[str], path: Optional[str], window: int, mode: Optional[str],
                      precision: int) -> Tuple[PositiveSequence, Dict[str, Any]]:
    """A :class:`PositiveSequence` from a builtin name or a sequence file.

    Files hold ``{"values": [...]}`` (``M_start, M_start+1, ...``) or
    ``{"log_values": [...]}`` (natural logs, read in float mode), with an
    optional ``"start"`` index (default 0). Indices below ``start`` are
    filled with 1.
    """
    _check_mode(mode)
    if (gen is None) == (path is None):
        raise InputError("give exactly one of --gen and --file")
    if gen is not None:
        name, params = parse_gen(gen)
        try:
            seq = builtin(name, *params, window=window, mode=mode, precision=precision)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from exc
        return seq, {"kind": "generator", "spec": gen}
    data = load_json(path)
    start = int(data.get("start", 0))
    if start < 0:
        raise InputError("start must be >= 0")
    bits = int(data.get("precision_bits", precision))
    if "values" in data and "log_values" in data:
        raise InputError("give values or log_values, not both")
    if "values" in data:
        fmode = mode or data.get("mode", RATIONAL)
        _check_mode(fmode)
        try:
            vals = [parse_scalar(v, fmode, bits) for v in data["values"]]
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise InputError(f"bad value in {path}: {exc}") from exc
        one = Fraction(1) if fmode == RATIONAL else context(bits).mpf(1)
    elif "log_values" in data:
        if mode == RATIONAL or data.get("mode", FLOAT) == RATIONAL:
            raise InputError("log_values are read in float mode only")
        fmode = FLOAT
        ctx = context(bits)
        vals = [ctx.exp(ctx.mpf(str(v))) for v in data["log_values"]]
        one = ctx.mpf(1)
    else:
        raise InputError(f"{path}: expected a 'values' or 'log_values' list")
    if not vals:
        raise InputError(f"{path}: no values")
    if any(not v > 0 for v in vals):
        raise InputError(f"{path}: values must be strictly positive")
    seq = from_values([one] * start + vals, fmode, bits, name=path)
    return seq, {"kind": "file", "path": path, "start": start, "count": len(vals)}


# ---------------------------------------------------------------------------
# one-dimensional moment sequences


def _as_float_moments(m: MomentSequence1D, precision: int) -> MomentSequence1D:
    ctx = context(precision)
    return MomentSequence1D(lambda n: to_mpf(m[n], ctx), m.max_index, FLOAT, precision, m.parity,
                            m.provenance, m.support_hint)


def _check_hint(hint: str) -> str:
    if hint in ("R", "R+"):
        return hint
    if hint.startswith("[") and hint.endswith("]"):
        parts = hint[1:-1].split(",")
        if len(parts) == 2:
            a, b = (_num(p.strip()) for p in parts)
            if a <= b:
                return hint
    raise InputError(f"support hint {hint!r} is not R, R+ or an interval [a,b] with a <= b")


def hint_interval(hint: str) -> Optional[Tuple[Fraction, Fraction]]:
    if not hint.startswith("["):
        return None
    a, b = hint[1:-1].split(",")
    return _num(a.strip()), _num(b.strip())


def moment_sequence(gen: Optional[str], path: Optional[str], mode: Optional[str],
                    precision: int) -> Tuple[MomentSequence1D, Dict[str, Any]]:
    _check_mode(mode)
    if (gen is None) == (path is None):
        raise InputError("give exactly one of --gen and --file")
    if gen is not None:
        name, params = parse_gen(gen)
        if name in ("finite_atomic", "atoms"):
            atoms = parse_atoms(params)
            if len(atoms[0][0]) != 1:
                raise InputError("finite_atomic needs scalar nodes")
            m = mp1d.finite_atomic([(p[0], w) for p, w in atoms], precision)
        elif name in mp1d.GENERATORS:
            try:
                m = mp1d.GENERATORS[name](*[_param(p) for p in params], precision=precision)
            except TypeError as exc:
                raise InputError(f"bad parameters for {name}: {exc}") from exc
        else:
            raise InputError(f"unknown moment generator {name!r}; known: {sorted(mp1d.GENERATORS)}")
        desc = {"kind": "generator", "spec": gen}
    else:
        data = load_json(path)
        if "moments" not in data:
            raise InputError(f"{path}: expected a 'moments' list")
        if mode is not None:
            data = dict(data, mode=mode)
        try:
            m = load_moments(data)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise InputError(f"bad moment in {path}: {exc}") from exc
        desc = {"kind": "file", "path": path, "count": m.max_index + 1}
    _check_hint(m.support_hint)
    if mode == FLOAT and m.mode == RATIONAL:
        m = _as_float_moments(m, precision)
    elif mode == RATIONAL and m.mode == FLOAT:
        raise InputError("this input is only available in float mode")
    return m, desc


def _param(p: str):
    """Rational when possible (keeps rational generators exact)."""
    try:
        return Fraction(p)
    except ValueError:
        return p


# ---------------------------------------------------------------------------
# multisequences


def _dim_sigma(params: List[str]) -> Tuple[int, Fraction]:
    if not params:
        raise InputError("generator needs the dimension d")
    d = int(params[0])
    if d < 1:
        raise InputError("dimension must be >= 1")
    sigma = _num(params[1]) if len(params) > 1 else Fraction(1)
    return d, sigma


def multisequence(gen: Optional[str], path: Optional[str], deg: int, mode: Optional[str],
                  precision: int) -> Tuple[Multisequence, Dict[str, Any]]:
    """Generators: ``gaussian:d[,sigma]``, ``uniform:d``, ``exponential:d``,
    ``lognormal:d[,sigma]`` (product measures) and ``atoms:...``. Files hold a
    multisequence or ``{"atoms": [{"point": [...], "weight": w}, ...]}``."""
    _check_mode(mode)
    if (gen is None) == (path is None):
        raise InputError("give exactly one of --gen and --file")
    if gen is not None:
        name, params = parse_gen(gen)
        if name == "atoms":
            atoms = parse_atoms(params)
            m = mpmulti.from_atoms([p for p, _ in atoms], [w for _, w in atoms], deg, mode, precision)
        elif name in ("gaussian", "uniform", "exponential", "lognormal"):
            d, sigma = _dim_sigma(params)
            one = {"gaussian": lambda: mp1d.gaussian(sigma, precision),
                   "uniform": lambda: mp1d.uniform(0, 1, precision),
                   "exponential": lambda: mp1d.exponential(1, precision),
                   "lognormal": lambda: mp1d.lognormal(sigma, precision)}[name]
            m = mpmulti.product([one() for _ in range(d)], deg)
        else:
            raise InputError(f"unknown multisequence generator {name!r}")
        desc = {"kind": "generator", "spec": gen}
    else:
        data = load_json(path)
        try:
            if "atoms" in data:
                fmode = mode or data.get("mode", RATIONAL)
                pts = [[parse_scalar(x, fmode, precision) for x in a["point"]] for a in data["atoms"]]
                ws = [parse_scalar(a["weight"], fmode, precision) for a in data["atoms"]]
                m = mpmulti.from_atoms(pts, ws, int(data.get("deg", deg)), fmode, precision)
            else:
                m = Multisequence.from_dict(data)
        except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
            raise InputError(f"malformed multisequence file {path}: {exc}") from exc
        desc = {"kind": "file", "path": path}
    if mode == FLOAT and m.mode == RATIONAL:
        ctx = context(precision)
        m = Multisequence(m.d, m.deg, {a: to_mpf(v, ctx) for a, v in m.values.items()}, FLOAT, precision)
    elif mode == RATIONAL and m.mode == FLOAT:
        raise InputError("this input is only available in float mode")
    return m, desc


# ---------------------------------------------------------------------------
# tensor sequences


def tensor_sequence(gen: Optional[str], path: Optional[str], max_order: int, mode: Optional[str],
                    precision: int) -> Tuple[TensorSequence, Dict[str, Any]]:
    """Generators: ``gaussian:d[,sigma]``, ``rank_one:x;y;...``,
    ``unit_exp_square:d,a`` (``e^{a n^2} e_1^{tensor n}``) and ``atoms:...``.
    Files hold a tensor sequence or an atom list as for multisequences."""
    _check_mode(mode)
    if (gen is None) == (path is None):
        raise InputError("give exactly one of --gen and --file")
    if gen is not None:
        name, params = parse_gen(gen)
        if name == "atoms":
            atoms = parse_atoms(params)
            t = realize.from_atoms([p for p, _ in atoms], [w for _, w in atoms], max_order, precision)
        elif name == "gaussian":
            d, sigma = _dim_sigma(params)
            t = realize.gaussian(d, max_order, sigma, precision)
        elif name == "rank_one":
            if len(params) != 1:
                raise InputError("rank_one takes one vector, e.g. rank_one:1;1/2")
            t = realize.rank_one([_num(x) for x in params[0].split(";")], max_order, precision)
        elif name == "unit_exp_square":
            if len(params) != 2:
                raise InputError("unit_exp_square takes d,a")
            ctx = context(precision)
            d, a = int(params[0]), ctx.mpf(params[1])
            t = realize.scaled_unit(d, max_order, lambda n: ctx.exp(a * n * n), precision)
        else:
            raise InputError(f"unknown tensor generator {name!r}")
        desc = {"kind": "generator", "spec": gen}
    else:
        data = load_json(path)
        try:
            if "atoms" in data:
                fmode = mode or data.get("mode", RATIONAL)
                pts = [[parse_scalar(x, fmode, precision) for x in a["point"]] for a in data["atoms"]]
                ws = [parse_scalar(a["weight"], fmode, precision) for a in data["atoms"]]
                t = realize.from_atoms(pts, ws, max_order, precision)
            else:
                t = TensorSequence.from_dict(data)
        except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
            raise InputError(f"malformed tensor file {path}: {exc}") from exc
        desc = {"kind": "file", "path": path}
    if mode == FLOAT and t.mode == RATIONAL:
        ctx = context(precision)
        t = TensorSequence(t.d, t.max_order, {n: {i: to_mpf(v, ctx) for i, v in e.items()}
                                              for n, e in t.tensors.items()}, FLOAT, precision)
    elif mode == RATIONAL and t.mode == FLOAT:
        raise InputError("this input is only available in float mode")
    return t, desc


def parse_directions(spec: Optional[str], d: int) -> realize.DirectionSet:
    """``"1,0;0,1"`` (vectors separated by ``;``); default: the standard basis."""
    if spec is None:
        vecs = [tuple(Fraction(int(i == j)) for i in range(d)) for j in range(d)]
    else:
        vecs = [tuple(_num(x) for x in v.split(",")) for v in spec.split(";") if v.strip()]
    try:
        E = realize.DirectionSet.make(vecs)
    except ValueError as exc:
        raise InputError(f"bad direction set: {exc}") from exc
    if E.d != d:
        raise InputError(f"directions have dimension {E.d}, tensors have {d}")
    return E


__all__ = [
    "InputError",
    "hint_interval",
    "load_json",
    "moment_sequence",
    "multisequence",
    "parse_atoms",
    "parse_directions",
    "parse_gen",
    "positive_sequence",
    "tensor_sequence",
]
