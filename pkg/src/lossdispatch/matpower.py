"""MATPOWER case files: parsing, serialization and conversion to a Network.

Both syntaxes in circulation are accepted: the struct style
(``function mpc = name`` followed by ``mpc.bus = [...]``) and the older
function style (``function [baseMVA, bus, gen, branch, ...] = name`` with
bare ``bus = [...]``).  Only ``baseMVA``, ``bus``, ``gen``, ``branch`` and
``gencost`` are interpreted; every other statement is kept verbatim as an
opaque block so that a parse/serialize round trip loses nothing.

A lossless JSON mirror of :class:`RawCase` is provided by
:func:`raw_to_json` / :func:`raw_from_json`.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .network import (
    Bus,
    Generator,
    Line,
    Network,
    NonConvexCost,
    PiecewiseLinearCost,
    QuadraticCost,
    check_connected,
)

JSON_SCHEMA = "lossdispatch.rawcase/1"

# column indices of the published format (0-based)
BUS_I, BUS_TYPE, PD, QD, GS, BS, BUS_AREA, VM, VA, BASE_KV, ZONE, VMAX, VMIN = range(13)
GEN_BUS, PG, QG, QMAX, QMIN, VG, MBASE, GEN_STATUS, PMAX, PMIN = range(10)
F_BUS, T_BUS, BR_R, BR_X, BR_B, RATE_A, RATE_B, RATE_C, TAP, SHIFT, BR_STATUS, ANGMIN, ANGMAX = range(13)
MODEL, STARTUP, SHUTDOWN, NCOST, COST = range(5)
PW_LINEAR, POLYNOMIAL = 1, 2
REF_BUS, ISOLATED_BUS = 3, 4

MIN_COLUMNS = {"bus": 13, "gen": 10, "branch": 11, "gencost": 5}
TABLES = ("bus", "gen", "branch", "gencost")


class CaseFormatError(ValueError):
    """Base class for every structured error raised on bad case data."""


class CaseSyntaxError(CaseFormatError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class MissingTable(CaseFormatError):
    pass


class ColumnCountMismatch(CaseFormatError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class UnsupportedCost(CaseFormatError):
    pass


class IsolatedBusAfterFiltering(CaseFormatError):
    pass


@dataclass
class OpaqueBlock:
    name: str
    text: str


@dataclass
class RawCase:
    name: str
    base_mva: float
    bus: np.ndarray
    gen: np.ndarray
    branch: np.ndarray
    gencost: np.ndarray | None = None
    version: str | None = "2"
    struct_style: bool = True
    opaque: list[OpaqueBlock] = field(default_factory=list)

    def tables(self) -> dict[str, np.ndarray]:
        out = {"bus": self.bus, "gen": self.gen, "branch": self.branch}
        if self.gencost is not None:
            out["gencost"] = self.gencost
        return out

    def same_content(self, other: "RawCase") -> bool:
        """Bitwise equality of every numeric field and opaque block."""
        if (self.name, self.version, self.struct_style) != (other.name, other.version, other.struct_style):
            return False
        if not _same_float(self.base_mva, other.base_mva):
            return False
        a, b = self.tables(), other.tables()
        if a.keys() != b.keys():
            return False
        for key in a:
            if a[key].shape != b[key].shape or a[key].tobytes() != b[key].tobytes():
                return False
        return [(o.name, o.text) for o in self.opaque] == [(o.name, o.text) for o in other.opaque]


def _same_float(a: float, b: float) -> bool:
    return np.array(a, dtype=float).tobytes() == np.array(b, dtype=float).tobytes()


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_NUMBER = re.compile(r"[+-]?(?:(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|Inf|inf|NaN|nan)\Z")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*")
_FUNC_HEADER = re.compile(
    r"function\s+(?:(?P<out>\[[^\]]*\]|[A-Za-z_]\w*)\s*=\s*)?(?P<name>[A-Za-z_]\w*)\s*(?:\([^)]*\))?\s*\Z"
)


def _to_float(token: str) -> float:
    t = token.lower().lstrip("+")
    if t in ("inf", "-inf", "nan", "-nan"):
        return float(t)
    return float(token)


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self._line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def where(self, pos: int | None = None) -> tuple[int, int]:
        pos = self.pos if pos is None else pos
        lo, hi = 0, len(self._line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._line_starts[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, pos - self._line_starts[lo] + 1

    def error(self, message: str, pos: int | None = None) -> CaseSyntaxError:
        line, col = self.where(pos)
        return CaseSyntaxError(message, line, col)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def skip_comment(self) -> None:
        end = self.text.find("\n", self.pos)
        self.pos = len(self.text) if end < 0 else end

    def skip_blank(self, newlines: bool = True) -> None:
        """Skip whitespace, comments, continuations and (optionally) newlines."""
        while not self.at_end():
            ch = self.peek()
            if ch == "%" or ch == "#":
                self.skip_comment()
            elif self.text.startswith("...", self.pos):
                self.skip_comment()
                if not self.at_end():
                    self.pos += 1
            elif ch in " \t\r" or (newlines and ch == "\n"):
                self.pos += 1
            else:
                return

    def read_string(self) -> str:
        quote = self.peek()
        start = self.pos
        self.pos += 1
        while True:
            if self.at_end() or self.peek() == "\n":
                raise self.error("unterminated string", start)
            if self.peek() == quote:
                if self.text.startswith(quote * 2, self.pos):
                    self.pos += 2
                    continue
                self.pos += 1
                return self.text[start : self.pos]
            self.pos += 1

    def read_delimited(self, open_ch: str, close_ch: str) -> str:
        """Raw text of a bracketed value, honouring strings and comments."""
        start = self.pos
        depth = 0
        while not self.at_end():
            ch = self.peek()
            if ch in "'\"":
                self.read_string()
                continue
            if ch == "%":
                self.skip_comment()
                continue
            if ch == open_ch:
                depth += 1
            elif ch == close_ch:
                depth -= 1
                if depth == 0:
                    self.pos += 1
                    return self.text[start : self.pos]
            self.pos += 1
        raise self.error(f"unterminated {open_ch}", start)

    def read_rest_of_statement(self) -> str:
        start = self.pos
        while not self.at_end() and self.peek() not in ";\n":
            if self.peek() in "'\"":
                self.read_string()
            elif self.peek() == "%":
                break
            elif self.peek() in "[{(":
                pairs = {"[": "]", "{": "}", "(": ")"}
                self.read_delimited(self.peek(), pairs[self.peek()])
            else:
                self.pos += 1
        return self.text[start : self.pos]


def _parse_matrix(sc: _Scanner, table: str) -> np.ndarray:
    """Parse ``[ ... ]`` at the scanner position into a 2-d array."""
    open_pos = sc.pos
    sc.pos += 1
    rows: list[list[float]] = []
    row_lines: list[int] = []
    current: list[float] = []
    current_line = sc.where()[0]

    def end_row():
        nonlocal current
        if current:
            rows.append(current)
            row_lines.append(current_line)
        current = []

    while True:
        sc.skip_blank(newlines=False)
        if sc.at_end():
            raise sc.error("unterminated matrix", open_pos)
        ch = sc.peek()
        if ch == "]":
            sc.pos += 1
            end_row()
            break
        if ch in ";\n":
            sc.pos += 1
            end_row()
            continue
        if ch == ",":
            sc.pos += 1
            continue
        start = sc.pos
        while not sc.at_end() and sc.peek() not in " \t\r\n,;]%":
            sc.pos += 1
        token = sc.text[start : sc.pos]
        if not _NUMBER.match(token):
            raise sc.error(f"invalid number {token[:40]!r} in {table}", start)
        if not current:
            current_line = sc.where(start)[0]
        current.append(_to_float(token))

    if not rows:
        return np.zeros((0, MIN_COLUMNS.get(table, 0)))
    width = len(rows[0])
    for r, ln in zip(rows, row_lines):
        if len(r) != width:
            raise ColumnCountMismatch(f"{table} row has {len(r)} columns, expected {width}", ln)
    need = MIN_COLUMNS.get(table)
    if need is not None and width < need:
        raise ColumnCountMismatch(f"{table} has {width} columns, at least {need} required", row_lines[0])
    return np.array(rows, dtype=float)


def parse_case(text: "str | bytes") -> RawCase:
    """Parse case-file text into a :class:`RawCase`."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CaseSyntaxError(f"not UTF-8 text ({exc.reason})", 1, exc.start + 1) from None
    sc = _Scanner(text)
    name = ""
    struct_style = True
    version: str | None = None
    base_mva: float | None = None
    tables: dict[str, np.ndarray] = {}
    opaque: list[OpaqueBlock] = []
    seen_header = False

    while True:
        sc.skip_blank()
        while sc.peek() == ";" or sc.peek() == ",":
            sc.pos += 1
            sc.skip_blank()
        if sc.at_end():
            break
        stmt_start = sc.pos
        m = _IDENT.match(text, sc.pos)
        if not m:
            raise sc.error(f"unexpected character {sc.peek()!r}")
        ident = m.group(0)
        if ident == "function":
            if seen_header:
                raise sc.error("second function header")
            end = text.find("\n", sc.pos)
            end = len(text) if end < 0 else end
            header = text[sc.pos : end].split("%", 1)[0].strip()
            hm = _FUNC_HEADER.match(header)
            if not hm:
                raise sc.error("malformed function header")
            name = hm.group("name")
            out = hm.group("out") or ""
            struct_style = not out.startswith("[")
            seen_header = True
            sc.pos = end
            continue
        sc.pos = m.end()
        sc.skip_blank(newlines=False)
        key = ident.split(".", 1)[1] if ident.startswith("mpc.") else ident
        if sc.peek() != "=" or text.startswith("==", sc.pos):
            sc.read_rest_of_statement()
            if sc.peek() == ";":
                sc.pos += 1
            opaque.append(OpaqueBlock(ident, text[stmt_start : sc.pos]))
            continue
        sc.pos += 1
        sc.skip_blank(newlines=False)
        ch = sc.peek()
        if key in TABLES:
            if ch != "[":
                raise sc.error(f"expected a matrix for {key}")
            if key in tables:
                raise sc.error(f"duplicate table {key}")
            tables[key] = _parse_matrix(sc, key)
        elif key == "baseMVA":
            val_start = sc.pos
            token = sc.read_rest_of_statement().strip()
            if not _NUMBER.match(token):
                raise sc.error(f"baseMVA must be a number, got {token[:40]!r}", val_start)
            base_mva = _to_float(token)
        elif key == "version" and ch in "'\"":
            version = sc.read_string()[1:-1]
        else:
            if ch == "[":
                sc.read_delimited("[", "]")
            elif ch == "{":
                sc.read_delimited("{", "}")
            sc.read_rest_of_statement()
            if sc.peek() == ";":
                sc.pos += 1
            opaque.append(OpaqueBlock(ident, text[stmt_start : sc.pos]))
            continue
        sc.skip_blank(newlines=False)
        if sc.peek() == ";":
            sc.pos += 1

    for key in ("bus", "gen", "branch"):
        if key not in tables:
            raise MissingTable(f"case has no {key} table")
    if base_mva is None:
        raise MissingTable("case has no baseMVA")
    if not (math.isfinite(base_mva) and base_mva > 0):
        raise CaseFormatError(f"baseMVA must be positive, got {base_mva}")
    return RawCase(
        name=name,
        base_mva=base_mva,
        bus=tables["bus"],
        gen=tables["gen"],
        branch=tables["branch"],
        gencost=tables.get("gencost"),
        version=version,
        struct_style=struct_style,
        opaque=opaque,
    )


def load_case(path) -> RawCase:
    """Read a ``.m`` case file or its ``.json`` mirror."""
    path = str(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if path.endswith(".json"):
        return raw_from_json(data.decode("utf-8"))
    return parse_case(data)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def format_number(v: float) -> str:
    """Shortest text that parses back to exactly ``v``."""
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Inf" if v > 0 else "-Inf"
    if v == 0.0:
        return "-0" if math.copysign(1.0, v) < 0 else "0"
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def _format_table(arr: np.ndarray) -> str:
    lines = ["["]
    for row in arr:
        lines.append("\t" + "\t".join(format_number(float(v)) for v in row) + ";")
    lines.append("]")
    return "\n".join(lines)


def serialize_case(case: "RawCase | Network") -> str:
    """Case-file text for a raw case (or a network, via :func:`network_to_raw`)."""
    raw = network_to_raw(case) if isinstance(case, Network) else case
    name = raw.name or "case"
    out = []
    if raw.struct_style:
        out.append(f"function mpc = {name}")
        prefix = "mpc."
    else:
        outs = ["baseMVA", "bus", "gen", "branch"] + (["gencost"] if raw.gencost is not None else [])
        out.append(f"function [{', '.join(outs)}] = {name}")
        prefix = ""
    if raw.version is not None:
        out.append(f"{prefix}version = '{raw.version}';")
    out.append(f"{prefix}baseMVA = {format_number(raw.base_mva)};")
    for key, arr in raw.tables().items():
        out.append(f"{prefix}{key} = {_format_table(arr)};")
    for block in raw.opaque:
        out.append(block.text)
    return "\n".join(out) + "\n"


def _json_value(v: float):
    if math.isfinite(v):
        return v
    return "NaN" if math.isnan(v) else ("Inf" if v > 0 else "-Inf")


def _from_json_value(v) -> float:
    if isinstance(v, str):
        return _to_float(v)
    return float(v)


def raw_to_json(raw: RawCase) -> str:
    """Lossless JSON mirror; non-finite numbers are encoded as strings."""
    doc = {
        "schema": JSON_SCHEMA,
        "name": raw.name,
        "version": raw.version,
        "struct_style": raw.struct_style,
        "baseMVA": _json_value(raw.base_mva),
    }
    for key, arr in raw.tables().items():
        doc[key] = {"columns": int(arr.shape[1]), "rows": [[_json_value(float(v)) for v in row] for row in arr]}
    doc["opaque"] = [{"name": b.name, "text": b.text} for b in raw.opaque]
    return json.dumps(doc, indent=1)


def raw_from_json(text: str) -> RawCase:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict) or doc.get("schema") != JSON_SCHEMA:
        raise CaseFormatError(f"not a {JSON_SCHEMA} document")
    tables = {}
    try:
        for key in TABLES:
            if key not in doc:
                continue
            spec = doc[key]
            rows = [[_from_json_value(v) for v in row] for row in spec["rows"]]
            arr = np.array(rows, dtype=float).reshape(len(rows), int(spec["columns"]))
            tables[key] = arr
        for key in ("bus", "gen", "branch"):
            if key not in tables:
                raise MissingTable(f"case has no {key} table")
        return RawCase(
            name=str(doc.get("name", "")),
            base_mva=_from_json_value(doc["baseMVA"]),
            bus=tables["bus"],
            gen=tables["gen"],
            branch=tables["branch"],
            gencost=tables.get("gencost"),
            version=doc.get("version"),
            struct_style=bool(doc.get("struct_style", True)),
            opaque=[OpaqueBlock(b["name"], b["text"]) for b in doc.get("opaque", [])],
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CaseFormatError):
            raise
        raise CaseFormatError(f"malformed JSON case: {exc}") from None


# --------------------------------------------------------------------------
# conversion
# --------------------------------------------------------------------------


def _integral_id(v: float, what: str) -> int:
    if not (math.isfinite(v) and v.is_integer()):
        raise CaseFormatError(f"{what} {v} is not an integer")
    return int(v)


def _cost_from_row(row: np.ndarray, base: float, gen_label: str):
    model = row[MODEL]
    ncost = row[NCOST]
    if not (math.isfinite(ncost) and ncost.is_integer() and ncost >= 1):
        raise UnsupportedCost(f"{gen_label}: invalid NCOST {ncost}")
    ncost = int(ncost)
    data = row[COST:]
    if model == POLYNOMIAL:
        if data.size < ncost:
            raise ColumnCountMismatch(f"{gen_label}: {ncost} coefficients declared, {data.size} present")
        coeffs = data[:ncost][::-1]  # c0, c1, c2, ...
        if np.any(coeffs[3:] != 0):
            raise UnsupportedCost(f"{gen_label}: polynomial cost of degree {ncost - 1} > 2")
        c = np.zeros(3)
        c[: min(3, ncost)] = coeffs[:3]
        if not np.all(np.isfinite(c)):
            raise UnsupportedCost(f"{gen_label}: non-finite cost coefficient")
        if c[2] < 0:
            raise UnsupportedCost(f"{gen_label}: concave quadratic cost")
        with np.errstate(over="ignore"):
            c2, c1 = c[2] * base**2, c[1] * base
        if not (math.isfinite(c2) and math.isfinite(c1)):
            raise UnsupportedCost(f"{gen_label}: cost coefficient overflows in per-unit")
        return QuadraticCost(c2=float(c2), c1=float(c1), c0=float(c[0]))
    if model == PW_LINEAR:
        if data.size < 2 * ncost:
            raise ColumnCountMismatch(f"{gen_label}: {ncost} breakpoints declared, {data.size // 2} present")
        pts = data[: 2 * ncost].reshape(ncost, 2)
        if not np.all(np.isfinite(pts)):
            raise UnsupportedCost(f"{gen_label}: non-finite breakpoint")
        try:
            return PiecewiseLinearCost(tuple((p / base, c) for p, c in pts))
        except NonConvexCost as exc:
            raise UnsupportedCost(f"{gen_label}: {exc}") from None
    raise UnsupportedCost(f"{gen_label}: unknown cost model {model}")


def _optional_angle(deg: float, lower: bool) -> float | None:
    # zero or beyond +-360 degrees means "no limit" in the format
    if deg == 0 or not math.isfinite(deg) or (lower and deg <= -360) or (not lower and deg >= 360):
        return None
    return math.radians(deg)


def to_network(raw: RawCase) -> Network:
    """Per-unit :class:`Network` with out-of-service and isolated elements removed."""
    if raw.gencost is None:
        raise MissingTable("case has no gencost table")
    base = float(raw.base_mva)
    if raw.gencost.shape[0] < raw.gen.shape[0]:
        raise ColumnCountMismatch(f"gencost has {raw.gencost.shape[0]} rows for {raw.gen.shape[0]} generators")
    if raw.branch.shape[1] < MIN_COLUMNS["branch"] or raw.bus.shape[1] < MIN_COLUMNS["bus"]:
        raise ColumnCountMismatch("table narrower than the format minimum")

    buses = []
    slack = None
    for row in raw.bus:
        bid = _integral_id(row[BUS_I], "bus id")
        if row[BUS_TYPE] == ISOLATED_BUS:
            continue
        if not (math.isfinite(row[PD]) and math.isfinite(row[VM])):
            raise CaseFormatError(f"bus {bid}: non-finite Pd or Vm")
        buses.append(Bus(bid, voltage=float(row[VM]), demand=float(row[PD]) / base))
        if row[BUS_TYPE] == REF_BUS and slack is None:
            slack = bid
    known = {b.id for b in buses}
    if len(known) != len(buses):
        raise CaseFormatError("duplicate bus ids")
    all_ids = {_integral_id(v, "bus id") for v in raw.bus[:, BUS_I]}

    lines = []
    for k, row in enumerate(raw.branch):
        f = _integral_id(row[F_BUS], "branch from bus")
        t = _integral_id(row[T_BUS], "branch to bus")
        for b in (f, t):
            if b not in all_ids:
                raise CaseFormatError(f"branch {k + 1} references unknown bus {b}")
        if row[BR_STATUS] <= 0 or f not in known or t not in known:
            continue
        if not np.all(np.isfinite(row[[BR_R, BR_X, BR_B, TAP, SHIFT]])):
            raise CaseFormatError(f"branch {k + 1}: non-finite impedance data")
        rate = float(row[RATE_A])
        ratio = float(row[TAP])
        has_angles = raw.branch.shape[1] > ANGMAX
        lines.append(
            Line(
                from_bus=f,
                to_bus=t,
                r=float(row[BR_R]),
                x=float(row[BR_X]),
                shunt_susceptance=float(row[BR_B]) / 2.0,
                tap_ratio=1.0 if ratio == 0 else ratio,
                phase_shift=math.radians(float(row[SHIFT])),
                rating=rate if rate > 0 and math.isfinite(rate) else None,
                angle_min=_optional_angle(float(row[ANGMIN]), True) if has_angles else None,
                angle_max=_optional_angle(float(row[ANGMAX]), False) if has_angles else None,
            )
        )

    gens = []
    for k, row in enumerate(raw.gen):
        bus = _integral_id(row[GEN_BUS], "generator bus")
        if bus not in all_ids:
            raise CaseFormatError(f"generator {k + 1} references unknown bus {bus}")
        if row[GEN_STATUS] <= 0 or bus not in known:
            continue
        cost = _cost_from_row(raw.gencost[k], base, f"generator {k + 1}")
        gens.append(Generator(bus, p_min=float(row[PMIN]) / base, p_max=float(row[PMAX]) / base, cost=cost))

    net = Network(tuple(buses), tuple(lines), tuple(gens), base_mva=base, slack_bus=slack, name=raw.name)
    if not check_connected(net):
        raise IsolatedBusAfterFiltering("network is not connected after removing out-of-service elements")
    return net


def network_to_raw(net: Network, name: str | None = None) -> RawCase:
    """Case tables describing ``net`` (quantities the model does not use are zero)."""
    base = net.base_mva
    gen_buses = {g.bus for g in net.generators}
    bus = np.zeros((net.n, 13))
    for k, b in enumerate(net.buses):
        kind = REF_BUS if b.id == net.slack_bus else (2 if b.id in gen_buses else 1)
        bus[k] = [b.id, kind, b.demand * base, 0, 0, 0, 1, b.voltage, 0, 0, 1, 1.1, 0.9]
    gen = np.zeros((len(net.generators), 10))
    costs = []
    for k, g in enumerate(net.generators):
        gen[k] = [g.bus, 0, 0, 0, 0, 1, base, 1, g.p_max * base, g.p_min * base]
        if isinstance(g.cost, QuadraticCost):
            costs.append([POLYNOMIAL, 0, 0, 3, g.cost.c2 / base**2, g.cost.c1 / base, g.cost.c0])
        else:
            flat = [v for p, c in g.cost.points for v in (p * base, c)]
            costs.append([PW_LINEAR, 0, 0, len(g.cost.points), *flat])
    width = max((len(c) for c in costs), default=7)
    gencost = np.array([c + [0.0] * (width - len(c)) for c in costs], dtype=float).reshape(-1, width)
    branch = np.zeros((net.m, 13))
    for k, ln in enumerate(net.lines):
        branch[k] = [
            ln.from_bus,
            ln.to_bus,
            ln.r,
            ln.x,
            2.0 * ln.shunt_susceptance,
            ln.rating or 0.0,
            0,
            0,
            ln.tap_ratio,
            math.degrees(ln.phase_shift),
            1,
            -360.0 if ln.angle_min is None else math.degrees(ln.angle_min),
            360.0 if ln.angle_max is None else math.degrees(ln.angle_max),
        ]
    return RawCase(name=name or net.name or "case", base_mva=base, bus=bus, gen=gen, branch=branch, gencost=gencost)


def load_network(path) -> Network:
    return to_network(load_case(path))


__all__ = [
    "CaseFormatError",
    "CaseSyntaxError",
    "ColumnCountMismatch",
    "IsolatedBusAfterFiltering",
    "MissingTable",
    "OpaqueBlock",
    "RawCase",
    "UnsupportedCost",
    "format_number",
    "load_case",
    "load_network",
    "network_to_raw",
    "parse_case",
    "raw_from_json",
    "raw_to_json",
    "serialize_case",
    "to_network",
]
