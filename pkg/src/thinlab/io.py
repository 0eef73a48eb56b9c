"""File formats and spec strings.

Sequence JSON ``thinlab-seq/1``, profile CSV ``m,N_m,dbar_m,l_m``, index
set JSON, and the text forms of weights and witnesses used on the command
line. Floats are written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from .constructions import IndexSetWithCounts
from .geometry import LOG2, CountProfile, PointSequence
from .weights import Constant, LogL, LogPower, Tabulated, ThetaSpec, WeightError
from .witnesses import ConstantFn, FiniteBlaschke, HInftyFunction, Power, Product

SEQ_FORMAT = "thinlab-seq/1"
PROFILE_HEADER = ("m", "N_m", "dbar_m", "l_m")

if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)


class FormatError(ValueError):
    """A file or spec string violates its format; the message names the field."""


# ---------------------------------------------------------------------------
# sequences


def sequence_to_json(seq: PointSequence) -> dict:
    pts = []
    for k in range(len(seq)):
        p = {"delta": float(seq.deltas[k]), "angle": float(seq.angles[k])}
        if seq.gen is not None and seq.gen[k, 0] >= 0:
            m, j, n = (int(x) for x in seq.gen[k])
            p["gen"] = {"m": m, "j": j} if n == 1 << m else {"m": m, "j": j, "n": n}
        pts.append(p)
    out = {"format": SEQ_FORMAT, "points": pts}
    if seq.claimed_separation is not None:
        out["claimed_separation"] = float(seq.claimed_separation)
    return out


def _field(obj, key, kind, where):
    if key not in obj:
        raise FormatError(f"{where}: missing field '{key}'")
    v = obj[key]
    if kind is float and isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v)
    if kind is int and isinstance(v, int) and not isinstance(v, bool):
        return v
    raise FormatError(f"{where}: field '{key}' must be {kind.__name__}, got {v!r}")


def sequence_from_json(obj: dict) -> PointSequence:
    if not isinstance(obj, dict):
        raise FormatError("sequence file: top level must be an object")
    if obj.get("format") != SEQ_FORMAT:
        raise FormatError(f"sequence file: field 'format' must be {SEQ_FORMAT!r}, got {obj.get('format')!r}")
    pts = obj.get("points")
    if not isinstance(pts, list):
        raise FormatError("sequence file: field 'points' must be a list")
    n = len(pts)
    d = np.empty(n)
    a = np.empty(n)
    gen = np.full((n, 3), -1, dtype=np.int64)
    any_gen = False
    for k, p in enumerate(pts):
        where = f"points[{k}]"
        if not isinstance(p, dict):
            raise FormatError(f"{where}: must be an object")
        d[k] = _field(p, "delta", float, where)
        a[k] = _field(p, "angle", float, where)
        if not (0.0 < d[k] <= 1.0):
            raise FormatError(f"{where}: field 'delta' must lie in (0, 1], got {d[k]!r}")
        if "gen" in p:
            g = p["gen"]
            if not isinstance(g, dict):
                raise FormatError(f"{where}.gen: must be an object")
            m = _field(g, "m", int, where + ".gen")
            j = _field(g, "j", int, where + ".gen")
            nn = _field(g, "n", int, where + ".gen") if "n" in g else 1 << m
            if d[k] != math.ldexp(1.0, -m):
                raise FormatError(f"{where}.gen: 'delta' must equal 2^-{m} for level {m}")
            gen[k] = (m, j, nn)
            any_gen = True
    claimed = obj.get("claimed_separation")
    if claimed is not None and not isinstance(claimed, (int, float)):
        raise FormatError("sequence file: field 'claimed_separation' must be a number")
    return PointSequence(d, a, gen if any_gen else None, None if claimed is None else float(claimed))


def write_json(path, obj) -> None:
    text = json.dumps(obj, indent=1, sort_keys=False, allow_nan=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc


def save_sequence(seq: PointSequence, path) -> None:
    write_json(path, sequence_to_json(seq))


def load_sequence(path) -> PointSequence:
    return sequence_from_json(read_json(path))


# ---------------------------------------------------------------------------
# profiles


def _count_text(prof: CountProfile, i: int) -> str:
    m = int(prof.levels[i])
    if prof.exact is not None and m in prof.exact:
        return str(int(prof.exact[m]))
    return f"exp:{float(prof.log_counts[i])!r}"


def profile_rows(prof: CountProfile) -> list[tuple]:
    rows = []
    for i, m in enumerate(prof.levels.tolist()):
        lc = float(prof.log_counts[i])
        if math.isinf(lc):
            continue
        d = (prof.dbar or {}).get(m)
        rows.append((m, _count_text(prof, i), "" if d is None else repr(float(d)), repr(math.exp(lc - m * LOG2))))
    return rows


def profile_to_csv(prof: CountProfile) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_HEADER)
    for r in profile_rows(prof):
        w.writerow(r)
    return buf.getvalue()


def profile_from_csv(text: str) -> CountProfile:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or tuple(rows[0]) != PROFILE_HEADER:
        raise FormatError(f"profile CSV: header must be {','.join(PROFILE_HEADER)}")
    levels, logs, exact, dbar = [], [], {}, {}
    for k, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        if len(r) != 4:
            raise FormatError(f"profile CSV line {k}: expected 4 fields, got {len(r)}")
        try:
            m = int(r[0])
        except ValueError:
            raise FormatError(f"profile CSV line {k}: field 'm' must be an integer") from None
        if r[1].startswith("exp:"):
            try:
                logs.append(float(r[1][4:]))
            except ValueError:
                raise FormatError(f"profile CSV line {k}: field 'N_m' is malformed") from None
        else:
            try:
                n = int(r[1])
            except ValueError:
                raise FormatError(f"profile CSV line {k}: field 'N_m' must be an integer") from None
            if n < 0:
                raise FormatError(f"profile CSV line {k}: field 'N_m' must be nonnegative")
            exact[m] = n
            logs.append(math.log(n) if n > 0 else -math.inf)
        levels.append(m)
        if r[2] != "":
            try:
                dbar[m] = float(r[2])
            except ValueError:
                raise FormatError(f"profile CSV line {k}: field 'dbar_m' must be a number") from None
    return CountProfile(np.array(levels, dtype=np.int64), np.array(logs), exact, dbar or None)


# ---------------------------------------------------------------------------
# index sets


def index_set_to_json(iset: IndexSetWithCounts) -> dict:
    return iset.to_json()


# ---------------------------------------------------------------------------
# weight specs

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _numbers(body: str, n: int, spec: str) -> list[float]:
    parts = [p.strip() for p in body.split(",")]
    if len(parts) != n or not all(re.fullmatch(_NUM, p) for p in parts):
        raise FormatError(f"weight spec {spec!r}: expected {n} comma-separated numbers")
    return [float(p) for p in parts]


def load_table(path) -> Tabulated:
    """CSV rows ``m,theta_value``; an optional header row is skipped."""
    vals = {}
    with open(path, newline="") as fh:
        for k, r in enumerate(csv.reader(fh), start=1):
            if not r or r[0].strip().startswith("#"):
                continue
            try:
                m, v = int(r[0]), float(r[1])
            except (ValueError, IndexError):
                if k == 1:
                    continue
                raise FormatError(f"{path} line {k}: expected 'm,theta_value'") from None
            vals[m] = v
    if not vals:
        raise FormatError(f"{path}: no samples")
    arr = np.array([vals[m] for m in sorted(vals)])
    # flags are claims checked against the samples; set exactly those that hold
    return Tabulated(vals, bool(np.all(np.diff(arr) >= 0)), bool(np.all(arr > 0)))


def parse_weight(spec: str) -> ThetaSpec:
    """``logpow:c,alpha,beta`` | ``const:c`` | ``logl:k`` | ``table:@file.csv``."""
    kind, sep, body = spec.partition(":")
    if not sep:
        raise FormatError(f"weight spec {spec!r}: expected '<kind>:<args>'")
    try:
        if kind == "logpow":
            return LogPower(*_numbers(body, 3, spec))
        if kind == "const":
            return Constant(*_numbers(body, 1, spec))
        if kind == "logl":
            return LogL(*_numbers(body, 1, spec))
        if kind == "table":
            if not body.startswith("@"):
                raise FormatError(f"weight spec {spec!r}: tables are given as table:@file.csv")
            return load_table(body[1:])
    except WeightError as exc:
        raise FormatError(f"weight spec {spec!r}: {exc}") from exc
    raise FormatError(f"weight spec {spec!r}: unknown kind {kind!r} (logpow, const, logl, table)")


def format_weight(theta: ThetaSpec) -> str:
    return str(theta)


# ---------------------------------------------------------------------------
# witness specs


def _split_top(body: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in body:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == ";" and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out]


def load_zeros(path) -> FiniteBlaschke:
    """Zeros file: a list of DiskPoint objects with optional ``mult``, or a
    sequence file."""
    obj = read_json(path)
    if isinstance(obj, dict) and obj.get("format") == SEQ_FORMAT:
        return FiniteBlaschke.from_sequence(sequence_from_json(obj))
    if isinstance(obj, dict) and "zeros" in obj:
        obj = obj["zeros"]
    if not isinstance(obj, list):
        raise FormatError(f"{path}: expected a list of zeros")
    d, a, mult = [], [], []
    for k, z in enumerate(obj):
        where = f"{path}: zeros[{k}]"
        if not isinstance(z, dict):
            raise FormatError(f"{where}: must be an object")
        d.append(_field(z, "delta", float, where))
        a.append(_field(z, "angle", float, where))
        mult.append(_field(z, "mult", int, where) if "mult" in z else 1)
    return FiniteBlaschke(d, a, mult)


def parse_witness(spec: str) -> HInftyFunction:
    """``const:re,im`` | ``blaschke:@zeros.json`` | ``pow:<spec>^m`` | ``prod:[a;b;...]``."""
    spec = spec.strip()
    kind, sep, body = spec.partition(":")
    if not sep:
        raise FormatError(f"witness spec {spec!r}: expected '<kind>:<args>'")
    if kind == "const":
        parts = [p.strip() for p in body.split(",")]
        if len(parts) == 1:
            parts.append("0")
        if len(parts) != 2 or not all(re.fullmatch(_NUM, p) for p in parts):
            raise FormatError(f"witness spec {spec!r}: expected const:re,im")
        try:
            return ConstantFn(complex(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise FormatError(f"witness spec {spec!r}: {exc}") from exc
    if kind == "blaschke":
        if not body.startswith("@"):
            raise FormatError(f"witness spec {spec!r}: zeros are given as blaschke:@zeros.json")
        return load_zeros(body[1:])
    if kind == "pow":
        base, caret, m = body.rpartition("^")
        if not caret or not m.strip().isdigit() or int(m) < 1:
            raise FormatError(f"witness spec {spec!r}: expected pow:<spec>^m with m >= 1")
        return Power(parse_witness(base), int(m))
    if kind == "prod":
        if not (body.startswith("[") and body.endswith("]")):
            raise FormatError(f"witness spec {spec!r}: expected prod:[spec;spec;...]")
        parts = [p for p in _split_top(body[1:-1]) if p]
        if not parts:
            raise FormatError(f"witness spec {spec!r}: empty product")
        return Product(tuple(parse_witness(p) for p in parts))
    raise FormatError(f"witness spec {spec!r}: unknown kind {kind!r} (const, blaschke, pow, prod)")
