"""Field sweeps of pair correlation measures along the XY chain ground state."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .chain import ChainParams, ground_sector, pair_rdms, parity_crossings
from .entropy import EntropyFunctional
from .errors import DomainError, QcorrError
from .measures import (
    concurrence, entanglement_of_formation, geometric_deficit_I2, info_deficit,
    quantum_discord, to_bloch,
)

BASE_MEASURES = ("C", "E", "D", "I1", "I2")
ANGLE_MEASURES = ("gamma_D", "gamma_I1", "gamma_I2")
DEFAULT_MEASURES = BASE_MEASURES
SIDE_POLICIES = ("both", "left", "right")
FORMATS = ("csv", "json")
_Q_PATTERN = re.compile(r"^(Iq|IRq)\(([^()]+)\)$")
TRANSITION_TOL = 1e-10  # bisection tolerance on B, in units of Jx
ANGLE_MARGIN = 0.01


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def parse_measures(names) -> tuple[str, ...]:
    """Normalise a measure list such as ``"C,E,Iq(2),gamma_D"``.

    Returns the names in canonical column order.  Unknown names or
    non-positive ``q`` raise :class:`DomainError`.
    """
    items = [s.strip() for s in names.split(",")] if isinstance(names, str) else list(names)
    items = [s for s in items if s]
    if not items:
        raise DomainError("measures: empty measure list")
    base, tsallis, renyi, angles = set(), {}, {}, set()
    for item in items:
        m = _Q_PATTERN.match(item)
        if item in BASE_MEASURES:
            base.add(item)
        elif item in ANGLE_MEASURES:
            angles.add(item)
        elif m:
            try:
                q = float(m.group(2))
            except ValueError:
                raise DomainError(f"measures: bad entropic index in {item!r}") from None
            if not q > 0 or not math.isfinite(q):
                raise DomainError(f"measures: q must be > 0 in {item!r}")
            if abs(q - 1) < 1e-6:
                raise DomainError(f"measures: q = 1 is the von Neumann deficit, use I1 ({item!r})")
            (tsallis if m.group(1) == "Iq" else renyi)[q] = f"{m.group(1)}({q:g})"
        else:
            raise DomainError(f"measures: unknown measure {item!r}")
    out = [m for m in BASE_MEASURES if m in base]
    out += [tsallis[q] for q in sorted(tsallis)]
    out += [renyi[q] for q in sorted(renyi)]
    out += [m for m in ANGLE_MEASURES if m in angles]
    return tuple(out)


def _q_of(name: str) -> float:
    return float(_Q_PATTERN.match(name).group(2))


@dataclass(frozen=True)
class SweepConfig:
    """Chain, field grid, separations and measures of one sweep.

    ``separations`` is ``"all"`` (``1..n/2``) or a tuple of separations.
    """

    n: int
    chi: float
    jx: float = 1.0
    b_min: float = 0.0
    b_max: float = 1.5
    b_steps: int = 300
    separations: object = "all"
    measures: tuple = DEFAULT_MEASURES
    output_format: str = "csv"
    side_limits: str = "both"
    transition_scan: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise DomainError(f"n: must be an even integer >= 4, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not -1 <= self.chi <= 1:
            raise DomainError(f"chi: must lie in [-1, 1], got {self.chi}")
        if not self.jx > 0:
            raise DomainError(f"jx: must be > 0, got {self.jx}")
        if not (math.isfinite(self.b_min) and math.isfinite(self.b_max)):
            raise DomainError("b_min/b_max: must be finite")
        if self.b_min > self.b_max:
            raise DomainError(f"b_min: {self.b_min} exceeds b_max {self.b_max}")
        if self.b_min < 0 < self.b_max:
            raise DomainError("b_min: a field grid may not straddle B = 0")
        if int(self.b_steps) != self.b_steps or self.b_steps < 1:
            raise DomainError(f"b_steps: must be a positive integer, got {self.b_steps}")
        object.__setattr__(self, "b_steps", int(self.b_steps))
        seps = self.separations
        if isinstance(seps, str):
            if seps != "all":
                seps = tuple(int(s) for s in seps.split(",") if s.strip())
        else:
            seps = tuple(int(s) for s in seps)
        if seps != "all":
            if not seps or min(seps) < 1 or max(seps) > self.n // 2:
                raise DomainError(f"separations: must lie in [1, {self.n // 2}]")
            seps = tuple(sorted(set(seps)))
        object.__setattr__(self, "separations", seps)
        object.__setattr__(self, "measures", parse_measures(self.measures))
        if self.output_format not in FORMATS:
            raise DomainError(f"output_format: must be one of {FORMATS}")
        if self.side_limits not in SIDE_POLICIES:
            raise DomainError(f"side_limits: must be one of {SIDE_POLICIES}")

    @property
    def separation_list(self) -> tuple[int, ...]:
        return tuple(range(1, self.n // 2 + 1)) if self.separations == "all" else self.separations

    @property
    def params(self) -> ChainParams:
        return ChainParams(self.n, self.jx, self.chi * self.jx, 0.0)

    def fields(self) -> np.ndarray:
        if self.b_steps == 1:
            return np.array([self.b_min])
        return np.linspace(self.b_min, self.b_max, self.b_steps)

    def columns(self) -> list[str]:
        return ["B", "L", "parity", *self.measures, "flags"]

    def meta(self) -> dict:
        d = asdict(self)
        d["separations"] = "all" if self.separations == "all" else list(self.separations)
        d["measures"] = list(self.measures)
        d["version"] = __version__
        return d


@dataclass
class Row:
    B: float
    L: int
    parity: int
    values: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    error: str | None = None

    def as_dict(self, columns) -> dict:
        d = {"B": self.B, "L": self.L, "parity": self.parity}
        for c in columns[3:-1]:
            d[c] = self.values.get(c, float("nan"))
        d["flags"] = ";".join(self.flags)
        if self.error is not None:
            d["error"] = self.error
        return d


@dataclass(frozen=True)
class EvalPoint:
    """One field and parity sector to evaluate, with the flags its rows carry."""

    b: float
    parity: int
    flags: tuple = ()


def _pair_measures(x, measures) -> tuple[dict, bool]:
    vals, degenerate = {}, False
    need = set(measures)
    if need & {"C", "E"}:
        c = concurrence(x)
        vals["C"] = c
        if "E" in need:
            vals["E"] = entanglement_of_formation(c)
    if need & {"D", "gamma_D"}:
        o = quantum_discord(x)
        vals["D"], vals["gamma_D"] = o.value, o.gamma
        degenerate |= o.degenerate
    if need & {"I1", "gamma_I1"}:
        o = info_deficit(x)
        vals["I1"], vals["gamma_I1"] = o.value, o.gamma
        degenerate |= o.degenerate
    if need & {"I2", "gamma_I2"}:
        o = geometric_deficit_I2(x)
        vals["I2"], vals["gamma_I2"] = o.value, o.gamma
        degenerate |= o.degenerate
    for name in measures:
        if name.startswith("Iq("):
            vals[name] = info_deficit(x, EntropyFunctional.tsallis(_q_of(name))).value
        elif name.startswith("IRq("):
            vals[name] = info_deficit(x, EntropyFunctional.renyi(_q_of(name))).value
    return {k: v for k, v in vals.items() if k in need}, degenerate


def evaluate_point(cfg: SweepConfig, pt: EvalPoint) -> list[Row]:
    """Rows for every separation at one field and sector; failures become error rows."""
    seps = cfg.separation_list
    try:
        p = cfg.params.with_field(abs(pt.b))
        states = pair_rdms(p, pt.parity, seps)
    except QcorrError as exc:
        return [Row(pt.b, L, pt.parity, flags=list(pt.flags), error=str(exc)) for L in seps]
    rows = []
    for L in seps:
        try:
            vals, deg = _pair_measures(states[L], cfg.measures)
        except QcorrError as exc:
            rows.append(Row(pt.b, L, pt.parity, flags=list(pt.flags), error=str(exc)))
            continue
        flags = list(pt.flags)
        if deg and "degenerate" not in flags:
            flags.insert(0, "degenerate")
        rows.append(Row(pt.b, L, pt.parity, vals, flags))
    return rows


def _side_points(b: float, left: int, right: int, policy: str, exact: bool) -> list[EvalPoint]:
    base = ("degenerate", "crossing") if exact else ("crossing",)
    pts = []
    if policy in ("both", "left"):
        pts.append(EvalPoint(b, left, base + ("left-limit",)))
    if policy in ("both", "right"):
        pts.append(EvalPoint(b, right, base + ("right-limit",)))
    return pts


def evaluation_points(cfg: SweepConfig) -> list[EvalPoint]:
    """Grid points in their ground sector plus side-limit points at each parity crossing.

    A crossing between two grid points is located with Brent's method and
    reported at the crossing field; a grid point sitting exactly on a
    crossing is replaced by its side limits.
    """
    p0 = cfg.params
    grid = cfg.fields()
    gs = [ground_sector(p0.with_field(abs(b))) for b in grid]
    eps = 1e-7 * cfg.jx
    pts: list[EvalPoint] = []
    for i, (b, g) in enumerate(zip(grid, gs)):
        if i > 0 and not g.degenerate and not gs[i - 1].degenerate and g.parity != gs[i - 1].parity:
            lo, hi = sorted((abs(grid[i - 1]), abs(b)))
            found = parity_crossings(p0, lo, hi, n_grid=2)
            bc = found[0] if found else 0.5 * (grid[i - 1] + b)
            left, right = gs[i - 1].parity, g.parity
            if grid[i - 1] < 0:
                left, right = right, left
            pts.extend(_side_points(math.copysign(bc, b), left, right, cfg.side_limits, False))
        if g.degenerate:
            lo = ground_sector(p0.with_field(max(abs(b) - eps, 0.0))).parity
            hi = ground_sector(p0.with_field(abs(b) + eps)).parity
            if lo == hi:
                lo = -hi
            pts.extend(_side_points(float(b), lo, hi, cfg.side_limits, True))
        else:
            pts.append(EvalPoint(float(b), g.parity))
    return pts


def _workers() -> int:
    raw = os.environ.get("QCORR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise DomainError(f"QCORR_THREADS must be an integer, got {raw!r}") from None


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list[Row]:
    """All rows of a sweep, ordered by field (crossing rows at their field) then separation."""
    pts = evaluation_points(cfg)
    workers = _workers() if workers is None else max(1, workers)
    if workers > 1 and len(pts) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(evaluate_point, [cfg] * len(pts), pts))
    else:
        chunks = [evaluate_point(cfg, pt) for pt in pts]
    return [row for chunk in chunks for row in chunk]


def rows_to_csv(cfg: SweepConfig, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = cfg.columns()
    w.writerow(cols)
    for r in rows:
        d = r.as_dict(cols)
        w.writerow([_fmt(d[c]) for c in cols])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def rows_to_json(cfg: SweepConfig, rows, meta_extra: dict | None = None) -> str:
    cols = cfg.columns()
    meta = cfg.meta()
    if meta_extra:
        meta.update(meta_extra)
    out = {"meta": meta,
           "rows": [{k: _json_value(v) for k, v in r.as_dict(cols).items()} for r in rows]}
    return json.dumps(out, indent=1, sort_keys=False) + "\n"


def render(cfg: SweepConfig, rows) -> str:
    if cfg.output_format == "json":
        mirrored = bool(cfg.b_min < 0)
        return rows_to_json(cfg, rows, {"negative_fields_mirrored": mirrored})
    return rows_to_csv(cfg, rows)


# --------------------------------------------------------------------------
# measurement transitions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionResult:
    """Measurement transition at one separation.

    ``kind`` is ``"I2"`` (sharp field in ``start == end``) or ``"I1"`` (the
    interval between leaving the transverse axis and reaching the field axis).
    ``status`` is ``"ok"`` or ``"no transition"``.
    """

    L: int
    kind: str
    start: float
    end: float
    status: str = "ok"


def _ground_pair(p: ChainParams, b: float, L: int):
    q = p.with_field(b)
    return pair_rdms(q, ground_sector(q).parity, [L])[L]


def _i2_margin(p: ChainParams, b: float, L: int) -> float:
    """``jx**2 - (rB**2 + jz**2)``: positive when the transverse measurement wins."""
    bl = to_bloch(_ground_pair(p, b, L))
    jt = max(abs(bl.J[0, 0]), abs(bl.J[1, 1]))
    return jt * jt - (bl.rB[2] ** 2 + bl.J[2, 2] ** 2)


def _bisect(fun, lo: float, hi: float, tol: float) -> float:
    flo = fun(lo) > 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (fun(mid) > 0) == flo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_measurement_transition(cfg: SweepConfig, kinds=("I2", "I1")) -> list[TransitionResult]:
    """Per-separation fields where the minimising measurement moves from ``x`` to ``z``.

    The ``I2`` field is the first sign change of ``jx**2 - (rB**2 + jz**2)``
    along the configured field grid, refined by bisection to ``1e-10 Jx``.
    The ``I1`` interval runs from where the optimal ``gamma`` drops below
    ``pi/2 - 0.01`` to where it drops below ``0.01``, both refined the same way.
    """
    if not 0 < cfg.chi <= 1:
        raise DomainError(f"chi: transition scan needs 0 < chi <= 1, got {cfg.chi}")
    p0 = cfg.params
    grid = np.abs(cfg.fields())
    tol = TRANSITION_TOL * cfg.jx
    out = []
    for L in cfg.separation_list:
        if "I2" in kinds:
            vals = np.array([_i2_margin(p0, b, L) for b in grid])
            idx = np.flatnonzero((vals[:-1] > 0) & (vals[1:] <= 0))
            if idx.size:
                i = int(idx[0])
                bt = _bisect(lambda b: _i2_margin(p0, b, L), grid[i], grid[i + 1], tol)
                out.append(TransitionResult(L, "I2", float(bt), float(bt)))
            else:
                out.append(TransitionResult(L, "I2", math.nan, math.nan, "no transition"))
        if "I1" in kinds:
            out.append(_i1_interval(p0, grid, L, tol))
    return out


def scan_transitions(cfgs, kinds=("I2", "I1"), workers: int | None = None):
    """:func:`scan_measurement_transition` over several configs, in input order."""
    cfgs = list(cfgs)
    workers = _workers() if workers is None else max(1, workers)
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(scan_measurement_transition, cfgs, [kinds] * len(cfgs)))
    return [scan_measurement_transition(c, kinds) for c in cfgs]


def _i1_gamma(p: ChainParams, b: float, L: int) -> float:
    o = info_deficit(_ground_pair(p, b, L))
    return math.nan if o.degenerate else o.gamma


def _i1_interval(p0: ChainParams, grid, L: int, tol: float) -> TransitionResult:
    gam = np.array([_i1_gamma(p0, b, L) for b in grid])
    hi_mark, lo_mark = math.pi / 2 - ANGLE_MARGIN, ANGLE_MARGIN
    left = np.flatnonzero((gam[:-1] >= hi_mark) & (gam[1:] < hi_mark))
    if not left.size:
        return TransitionResult(L, "I1", math.nan, math.nan, "no transition")
    i = int(left[0])
    after = np.flatnonzero((gam[i:-1] > lo_mark) & (gam[i + 1:] <= lo_mark))
    if not after.size:
        return TransitionResult(L, "I1", math.nan, math.nan, "no transition")
    j = i + int(after[0])

    def leave(b):
        g = _i1_gamma(p0, b, L)
        return 1.0 if not (g < hi_mark) else -1.0

    def reach(b):
        g = _i1_gamma(p0, b, L)
        return 1.0 if not (g <= lo_mark) else -1.0

    start = _bisect(leave, grid[i], grid[i + 1], max(tol, 1e-9))
    end = _bisect(reach, grid[j], grid[j + 1], max(tol, 1e-9))
    return TransitionResult(L, "I1", float(start), float(end))


def transitions_to_csv(results_by_chi) -> str:
    """``chi,L,kind,start,end,status`` rows for ``[(chi, [TransitionResult, ...]), ...]``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["chi", "L", "kind", "start", "end", "status"])
    for chi, results in results_by_chi:
        for r in results:
            w.writerow([_fmt(float(chi)), r.L, r.kind, _fmt(r.start), _fmt(r.end), r.status])
    return buf.getvalue()


__all__ = [
    "SweepConfig", "Row", "EvalPoint", "TransitionResult", "parse_measures",
    "evaluation_points", "evaluate_point", "run_sweep", "render", "rows_to_csv",
    "rows_to_json", "scan_measurement_transition", "scan_transitions",
    "transitions_to_csv",
]
