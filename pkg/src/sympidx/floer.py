"""Action and index bookkeeping for the model Hamiltonians near a Morse-Bott
minimum.

Fibre-wise the model functions depend on rho(X) = |X|^2 / 4 pi, whose flow is
1-periodic. Between the rho-levels the functions are linear with an
irrational slope, so one-periodic orbits sit on finitely many levels x_l
(convex corners) and y_l (concave corners). Everything here is exact
leading-order arithmetic on those levels; the neglected smoothing errors are
modelled by a slack ``eta`` subtracted from every strict inequality.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import InconsistentChern, InvalidParams

PI2 = math.pi ** 2
SLOPE_NUDGE = 1e-9 * math.sqrt(2.0)


@dataclass(frozen=True)
class GeometryParams:
    """dim M = 2m, codim M = 2q, level K = r^2 with shell half-width eps0.

    ``lam_min`` and ``lam_max`` bound the fibre Hessian of K against the
    Euclidean form.
    """
    m: int
    q: int
    r: float
    eps0: float
    lam_min: float = 1.0
    lam_max: float = 1.0

    def __post_init__(self):
        bad = self.violations()
        if bad:
            raise InvalidParams("; ".join(bad))

    @property
    def r2(self) -> float:
        return self.r * self.r

    @classmethod
    def from_r2(cls, m: int, q: int, r2: float, eps0: float, lam_min: float = 1.0,
                lam_max: float = 1.0) -> "GeometryParams":
        if not r2 > 0:
            raise InvalidParams("r^2 must be positive")
        return cls(m, q, math.sqrt(r2), eps0, lam_min, lam_max)

    def violations(self) -> list[str]:
        return geometry_violations(self.m, self.q, self.r, self.eps0, self.lam_min, self.lam_max)

    def scaled(self, t: float) -> "GeometryParams":
        """r^2 and eps0 multiplied by t."""
        return GeometryParams(self.m, self.q, self.r * math.sqrt(t), self.eps0 * t,
                              self.lam_min, self.lam_max)


def geometry_violations(m, q, r, eps0, lam_min=1.0, lam_max=1.0) -> list[str]:
    out = []
    if not (isinstance(m, (int, np.integer)) and m >= 1):
        out.append("m must be a positive integer")
    if not (isinstance(q, (int, np.integer)) and q >= 1):
        out.append("q must be a positive integer")
    if not r > 0:
        out.append("r must be positive")
    if not eps0 > 0:
        out.append("eps0 must be positive")
    elif r > 0 and eps0 > r * r / 10 * (1 + 1e-12):
        out.append("eps0 <= r^2/10 required")
    if not (0 < lam_min <= lam_max):
        out.append("0 < lam_min <= lam_max required")
    return out


@dataclass(frozen=True)
class Level:
    kind: str
    sign: str
    l: int
    rho: float
    action: float
    index_lo: int
    index_hi: int

    @property
    def name(self) -> str:
        return f"{self.kind}{self.l}{self.sign}"

    def meets(self, degrees: Iterable[int]) -> bool:
        return any(self.index_lo <= d <= self.index_hi for d in degrees)


def index_interval(kind: str, l: int, m: int, q: int) -> tuple[int, int]:
    if kind == "x":
        return (2 * l - 1) * q - m + 1, (2 * l + 1) * q + m
    if kind == "y":
        return (2 * l - 1) * q - m, (2 * l + 1) * q + m - 1
    raise ValueError("kind must be 'x' or 'y'")


@dataclass(frozen=True)
class LevelScheme:
    params: GeometryParams
    rho1m: float
    rho2m: float
    rho3m: float
    rho1p: float
    rho2p: float
    rho3p: float
    C: float
    a: float
    b: float
    slope: float
    k: int
    n0: int
    levels: tuple[Level, ...] = field(repr=False)

    def level(self, kind: str, l: int, sign: str) -> Level:
        for lv in self.levels:
            if lv.kind == kind and lv.l == l and lv.sign == sign:
                return lv
        raise KeyError(f"{kind}{l}{sign}")

    def relevant(self) -> list[Level]:
        """Levels whose index interval meets n0 - 1, n0 or n0 + 1."""
        return [lv for lv in self.levels if lv.meets((self.n0 - 1, self.n0, self.n0 + 1))]

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("levels", "params")}
        d["params"] = asdict(self.params)
        d["levels"] = [asdict(lv) for lv in self.levels]
        return d

    def levels_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "sign", "l", "rho", "action", "index_lo", "index_hi"])
        for lv in self.levels:
            w.writerow([lv.kind, lv.sign, lv.l, format(lv.rho, ".17g"), format(lv.action, ".17g"),
                        lv.index_lo, lv.index_hi])
        return buf.getvalue()


def _x_action(C, l, rho1):
    return C + 4 * PI2 * l * rho1


def _y_action(l, rho2):
    return 4 * PI2 * l * rho2


def derive_levels(p: GeometryParams) -> LevelScheme:
    """rho-levels, C(r), the window (a, b), the count k and all level data."""
    rho3m = (p.r2 - 2 * p.eps0) / (4 * math.pi * p.lam_max)
    rho2m = 2 * rho3m / 3
    rho1m = rho3m / 3
    rho1p = (p.r2 + 2 * p.eps0) / (4 * math.pi * p.lam_min)
    rho2p = rho1p + rho1m
    rho3p = rho1p + 2 * rho1m
    C = 8 * PI2 * rho3p
    a = C + 2 * PI2 * rho1m
    b = C + 6 * PI2 * rho3p
    slope = C / rho1m * (1 + SLOPE_NUDGE)
    k = int(math.floor(slope))
    n0 = 1 + p.q - p.m
    levels = []
    for sign, r1, r2 in (("-", rho1m, rho2m), ("+", rho1p, rho2p)):
        for l in range(1, k + 1):
            levels.append(Level("x", sign, l, r1, _x_action(C, l, r1), *index_interval("x", l, p.m, p.q)))
            levels.append(Level("y", sign, l, r2, _y_action(l, r2), *index_interval("y", l, p.m, p.q)))
    return LevelScheme(p, rho1m, rho2m, rho3m, rho1p, rho2p, rho3p, C, a, b, slope, k, n0, tuple(levels))


@dataclass(frozen=True)
class WindowReport:
    verdicts: dict
    eta: float
    lambda0: float

    @property
    def all_true(self) -> bool:
        return all(self.verdicts.values())


def check_window(s: LevelScheme, lambda0: float = math.inf, eta: Optional[float] = None) -> WindowReport:
    """Verdicts (1)-(6) on the window and the index intervals.

    1. C < a < b < 2C
    2. A(x1+-) in (a, b)
    3. A(y1+-) < A(y2+-) < a
    4. index intervals of x_l (l >= 2) and y_l (l >= 3) start above n0 + 1
    5. 2C < lambda0
    6. apart from x1, only y1 and y2 have intervals containing n0 - 1 or n0
    """
    eta = 1e-3 * s.C if eta is None else float(eta)
    v = {}
    v["1"] = s.a - s.C > eta and s.b - s.a > eta and 2 * s.C - s.b > eta
    v["2"] = all(s.a + eta < s.level("x", 1, g).action < s.b - eta for g in "+-")
    v["3"] = all(s.level("y", 1, g).action + eta < s.level("y", 2, g).action < s.a - eta for g in "+-")
    v["4"] = all(lv.index_lo > s.n0 + 1 for lv in s.levels
                 if (lv.kind == "x" and lv.l >= 2) or (lv.kind == "y" and lv.l >= 3))
    v["5"] = 2 * s.C + eta < lambda0
    near = {(lv.kind, lv.l) for lv in s.levels if lv.meets((s.n0 - 1, s.n0))}
    v["6"] = near - {("x", 1)} <= {("y", 1), ("y", 2)}
    return WindowReport(v, eta, float(lambda0))


@dataclass(frozen=True)
class CappingShift:
    """lambda0: generator of the sphere areas (inf if there are none).
    case "i": c1 vanishes on spheres; case "ii": c1 = lam * [omega] on spheres."""
    lambda0: float
    case: str = "i"
    lam: Optional[float] = None

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise InvalidParams("lambda0 must be positive")
        if self.case not in ("i", "ii"):
            raise InvalidParams("case must be 'i' or 'ii'")
        if self.case == "ii" and (self.lam is None or not math.isfinite(self.lam) or self.lam == 0):
            raise InvalidParams("case ii needs a finite nonzero ratio lam")


def recap_lattice(action: float, index_lo: int, index_hi: int, shift: CappingShift,
                  k_range: Iterable[int]) -> list[tuple[float, int, int]]:
    """Action and index interval after recapping by j spheres of area lambda0."""
    js = list(k_range)
    if math.isinf(shift.lambda0):
        return [(action, index_lo, index_hi)] if 0 in js else []
    step = 0
    if shift.case == "ii":
        raw = 2 * shift.lam * shift.lambda0
        step = int(round(raw))
        if abs(raw - step) > 1e-9 or step % 2:
            raise InconsistentChern(f"2 lam lambda0 = {raw:.12g} is not an even integer")
    return [(action + j * shift.lambda0, index_lo + j * step, index_hi + j * step) for j in js]


def recap_window_hits(s: LevelScheme, shift: CappingShift, k_range: Iterable[int]) -> list[tuple[str, int]]:
    """(level, j) with j != 0 whose recap lands in (a, b) at a degree near n0."""
    js = [j for j in k_range if j != 0]
    degrees = (s.n0 - 1, s.n0, s.n0 + 1)
    hits = []
    for lv in s.levels:
        for j, (A, lo, hi) in zip(js, recap_lattice(lv.action, lv.index_lo, lv.index_hi, shift, js)):
            if s.a < A < s.b and any(lo <= d <= hi for d in degrees):
                hits.append((lv.name, j))
    return hits


@dataclass(frozen=True)
class HomotopyReport:
    margin: float
    s_at_min: float
    level_at_min: str
    samples: int
    crossed: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.margin > 0 and not self.crossed


def homotopy_actions(s: LevelScheme, t: float) -> dict[str, float]:
    """Actions of the relevant levels at stage t of the slide from F+ (t = 0) to F- (t = 1).

    rho1(t) = (1 - t) rho1+ + t rho1-, rho2(t) = rho1(t) + rho1-; C is held fixed.
    """
    rho1 = (1 - t) * s.rho1p + t * s.rho1m
    rho2 = rho1 + s.rho1m
    out = {}
    for kind, l in sorted({(lv.kind, lv.l) for lv in s.relevant()}):
        out[f"{kind}{l}"] = _x_action(s.C, l, rho1) if kind == "x" else _y_action(l, rho2)
    return out


def homotopy_trace(p: GeometryParams, samples: int = 100) -> HomotopyReport:
    """Slide the + configuration onto the - one and watch the relevant actions.

    rho1(s) = (1 - s) rho1+ + s rho1-, rho2(s) = rho1(s) + rho1-, with C and the
    window held fixed. A level is relevant when its index interval meets
    n0 - 1, n0 or n0 + 1; its clearance is the signed distance to the nearer
    window end, positive as long as it stays on its starting side.
    """
    if samples < 10:
        raise ValueError("samples must be >= 10")
    sch = derive_levels(p)
    margin, s_min, name_min = math.inf, 0.0, ""
    crossed = set()
    start_side = {}
    for s in np.linspace(0.0, 1.0, samples):
        for name, A in homotopy_actions(sch, float(s)).items():
            side = (A > sch.a) + (A > sch.b)
            start_side.setdefault(name, side)
            if side != start_side[name]:
                crossed.add(name)
            clear = min(abs(A - sch.a), abs(A - sch.b))
            if clear < margin:
                margin, s_min, name_min = clear, float(s), name
    if crossed:
        margin = -margin
    return HomotopyReport(float(margin), s_min, name_min, samples, tuple(sorted(crossed)))


def energy_threshold(p: GeometryParams, h: float) -> float:
    """Largest r^2 (same eps0 / r^2 and Hessian bounds) with every action in (0, h).

    Actions are homogeneous of degree one in r^2, so this is r^2 h / max action.
    """
    if not h > 0:
        raise InvalidParams("h must be positive")
    sch = derive_levels(p)
    return p.r2 * h / max(lv.action for lv in sch.levels)
