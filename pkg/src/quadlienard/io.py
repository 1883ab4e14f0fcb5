"""JSON in/out.  Floats are written with 17 significant digits."""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .algebra import ExpWeight, Polynomial, PowerWeight, RationalFn, WeightedFn
from .errors import ParseError
from .reduction import COEFF_NAMES, LienardForm, QuadraticSystem, TransformRecord

__all__ = ["dumps", "parse_system", "load_system", "lienard_to_dict", "lienard_from_dict", "format_weighted"]


def _num(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    s = format(v, ".17g")
    # keep floats recognisable as floats
    return s if any(c in s for c in ".en") else s + ".0"


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: sorted-as-given keys, 17-digit floats, NaN/inf as null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(str(k)) + ": " + dumps(v, indent, _level + 1) for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if hasattr(obj, "to_dict"):
        return dumps(obj.to_dict(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def parse_system(text: str, source: str = "<input>"):
    """(QuadraticSystem, epsilon or None) from a flat JSON object."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{source}: expected a JSON object with keys {', '.join(COEFF_NAMES)}")
    missing = [k for k in COEFF_NAMES if k not in data]
    unknown = [k for k in data if k not in COEFF_NAMES and k != "epsilon"]
    if missing:
        raise ParseError(f"{source}: missing field(s): {', '.join(missing)}")
    if unknown:
        raise ParseError(f"{source}: unknown field(s): {', '.join(unknown)}")
    vals = {}
    for k, v in data.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ParseError(f"{source}: field {k!r} must be a finite number, got {v!r}")
        vals[k] = float(v)
    eps = vals.pop("epsilon", None)
    return QuadraticSystem(**vals), eps


def load_system(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    return parse_system(text, path)


# ---------------------------------------------------------------------------
# reduced forms


def _rational_to_dict(r: RationalFn) -> dict:
    return {"numerator": list(r.numerator.coefficients), "denominator": list(r.denominator.coefficients),
            "poles": list(r.poles)}


def _rational_from_dict(d: dict) -> RationalFn:
    return RationalFn(Polynomial(d["numerator"]), Polynomial(d["denominator"]), poles=d["poles"])


def _weight_to_dict(w) -> dict:
    if w is None:
        return {"kind": "none"}
    if isinstance(w, PowerWeight):
        return {"kind": "power", "base_offset": w.base_offset, "base_slope": w.base_slope, "exponent": w.exponent}
    return {"kind": "exponential", "rate": w.rate}


def _weight_from_dict(d: dict):
    if d["kind"] == "none":
        return None
    if d["kind"] == "power":
        return PowerWeight(d["base_offset"], d["base_slope"], d["exponent"])
    return ExpWeight(d["rate"])


def _poly_str(p: Polynomial) -> str:
    terms = []
    for k, c in enumerate(p.coefficients):
        if c == 0.0:
            continue
        mag = format(abs(c), ".12g")
        body = {0: mag, 1: f"{mag} x"}.get(k, f"{mag} x^{k}")
        if k > 0 and abs(c) == 1.0:
            body = "x" if k == 1 else f"x^{k}"
        terms.append(("-" if c < 0 else "+", body))
    if not terms:
        return "0"
    out = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sgn, body in terms[1:]:
        out += f" {sgn} {body}"
    return out


def format_weighted(w: WeightedFn) -> str:
    """Readable formula, e.g. ``(x^2 + 2 x) * |1 + x|^-3``."""
    core = w.core
    num = _poly_str(core.numerator)
    wt = w.weight
    dp = core.den_power
    if (dp is not None and isinstance(wt, PowerWeight) and dp[0] == 1.0 and dp[2] % 2 == 0
            and abs(wt.base_slope) == 1.0 and dp[1] == wt.root):
        # (x - r)^(2k) = |x - r|^(2k): merge into the weight
        if num == "0":
            return "0"
        expo = wt.exponent - dp[2]
        base = _poly_str(Polynomial((wt.base_offset, wt.base_slope)))
        return f"({num})" + (f" * |{base}|^{format(expo, '.12g')}" if expo != 0.0 else "")
    if core.denominator.degree == 0:
        c = core.denominator.coefficients[0]
        s = f"({num})" if c == 1.0 else f"({num}) / {format(c, '.12g')}"
    elif core.den_power is not None:
        lead, r, k = core.den_power
        lin = _poly_str(Polynomial((-r, 1.0)))
        s = f"({num}) / ({lin})^{k}" if lead == 1.0 else f"({num}) / ({format(lead, '.12g')} ({lin})^{k})"
    else:
        s = f"({num}) / ({_poly_str(core.denominator)})"
    if num == "0":
        return "0"
    if isinstance(wt, PowerWeight) and wt.exponent != 0.0:
        s += f" * |{_poly_str(Polynomial((wt.base_offset, wt.base_slope)))}|^{format(wt.exponent, '.12g')}"
    elif isinstance(wt, ExpWeight) and wt.rate != 0.0:
        s += f" * exp({format(wt.rate, '.12g')} x)"
    return s


def lienard_to_dict(lf: LienardForm) -> dict:
    out = {
        "q": lf.q, "pole": lf.pole, "weight_kind": lf.weight_kind,
        "f": {"core": _rational_to_dict(lf.f.core), "weight": _weight_to_dict(lf.f.weight),
              "formula": format_weighted(lf.f)},
        "g": {"core": _rational_to_dict(lf.g.core), "weight": _weight_to_dict(lf.g.weight),
              "formula": format_weighted(lf.g)},
    }
    for name in ("Q", "R", "P"):
        r = getattr(lf, name)
        out[name] = _rational_to_dict(r) if r is not None else None
    out["system"] = lf.system.to_dict() if lf.system is not None else None
    out["transform"] = lf.record.to_dict()
    return out


def lienard_from_dict(d: dict) -> LienardForm:
    try:
        f = WeightedFn(_rational_from_dict(d["f"]["core"]), _weight_from_dict(d["f"]["weight"]))
        g = WeightedFn(_rational_from_dict(d["g"]["core"]), _weight_from_dict(d["g"]["weight"]))
        Q, R, P = (_rational_from_dict(d[k]) if d.get(k) else None for k in ("Q", "R", "P"))
        system = QuadraticSystem.from_dict(d["system"]) if d.get("system") else None
        record = TransformRecord.from_dict(d["transform"]) if d.get("transform") else None
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed reduced form: {exc}") from None
    return LienardForm(f, g, Q=Q, R=R, P=P, q=d.get("q"), pole=d.get("pole"),
                       weight_kind=d.get("weight_kind"), system=system, record=record)
