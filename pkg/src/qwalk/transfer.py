"""Pure states and numerical decisions about state transfer.

All verdicts are numerical: PST means fidelity ``|y^T U(t) x| >= 1 - pst_tol``.
An empty search result means "not found on the scanned horizon" and is never
evidence that transfer is impossible.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .spectral import SUPPORT_TOL, SpectralDecomposition, support_mask

PST_TOL = 1e-9
COSPECTRAL_TOL = 1e-8
GOLDEN_ITERS = 60
_INVPHI = (math.sqrt(5) - 1) / 2


class StateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PureState:
    """Real unit vector tagged with how it was built.

    ``kind`` is one of ``vertex``, ``pair``, ``plus``, ``s_pair``, ``raw`` and
    ``params`` holds the vertices (and ``s`` for s-pair states).
    """

    vector: np.ndarray
    kind: str = "raw"
    params: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        norm = np.linalg.norm(v)
        if not abs(norm - 1) <= 1e-12:
            raise StateError(f"state is not unit length (norm {norm:.15g})")
        object.__setattr__(self, "vector", v)

    @property
    def n(self) -> int:
        return len(self.vector)

    def __str__(self):
        p = self.params
        if self.kind == "vertex":
            return f"v:{p[0]}"
        if self.kind in ("pair", "plus"):
            return f"{self.kind}:{p[0]},{p[1]}"
        if self.kind == "s_pair":
            return f"spair:{p[0]},{p[1]}:{p[2]:g}"
        return "raw"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params), "label": str(self),
                "vector": self.vector.tolist()}


def _check_vertices(n, *vs):
    for v in vs:
        if not 0 <= v < n:
            raise StateError(f"vertex {v} out of range for n={n}")
    if len(vs) == 2 and vs[0] == vs[1]:
        raise StateError("pair-type states need two distinct vertices")


def vertex_state(n: int, a: int) -> PureState:
    _check_vertices(n, a)
    x = np.zeros(n)
    x[a] = 1.0
    return PureState(x, "vertex", (a,))


def s_pair_state(n: int, a: int, b: int, s: float) -> PureState:
    """``(e_a + s e_b) / sqrt(1 + s^2)``; ``s = -1`` is a pair state, ``s = 1`` a plus state."""
    _check_vertices(n, a, b)
    if s == 0:
        raise StateError("s must be non-zero")
    x = np.zeros(n)
    x[a] = 1.0
    x[b] = s
    x /= math.sqrt(1 + s * s)
    kind, params = {-1: ("pair", (a, b)), 1: ("plus", (a, b))}.get(s, ("s_pair", (a, b, float(s))))
    return PureState(x, kind, params)


def pair_state(n: int, a: int, b: int) -> PureState:
    return s_pair_state(n, a, b, -1.0)


def plus_state(n: int, a: int, b: int) -> PureState:
    return s_pair_state(n, a, b, 1.0)


def raw_state(vector) -> PureState:
    v = np.asarray(vector, dtype=float)
    return PureState(v / np.linalg.norm(v), "raw", ())


_STATE_RE = re.compile(r"^(v|pair|plus|spair):([0-9,\s]+)(?::(.+))?$")


def parse_state(text: str, n: int) -> PureState:
    """Parse ``v:3``, ``pair:1,4``, ``plus:2,5`` or ``spair:1,4:0.5``."""
    m = _STATE_RE.match(text.strip())
    if not m:
        raise StateError(f"cannot parse state {text!r}")
    kind, verts, extra = m.groups()
    try:
        vs = [int(s) for s in verts.split(",") if s.strip()]
    except ValueError as exc:
        raise StateError(f"bad vertex list in {text!r}") from exc
    want = 1 if kind == "v" else 2
    if len(vs) != want:
        raise StateError(f"{kind} state needs {want} vertices: {text!r}")
    if kind == "v":
        return vertex_state(n, vs[0])
    if kind == "spair":
        if extra is None:
            raise StateError(f"spair needs a coefficient: {text!r}")
        return s_pair_state(n, vs[0], vs[1], float(extra))
    if extra is not None:
        raise StateError(f"unexpected suffix in {text!r}")
    return (pair_state if kind == "pair" else plus_state)(n, *vs)


def standard_states(n: int) -> list[PureState]:
    """All vertex, pair and plus states on ``n`` vertices."""
    out = [vertex_state(n, a) for a in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            out.append(pair_state(n, a, b))
            out.append(plus_state(n, a, b))
    return out


class Verdict(str, Enum):
    PST = "PST"
    NO_PST_AT_TIME = "NO_PST_AT_TIME"
    PERIODIC = "PERIODIC"
    NOT_STRONGLY_COSPECTRAL = "NOT_STRONGLY_COSPECTRAL"
    FIXED_STATE = "FIXED_STATE"


@dataclass
class TransferReport:
    verdict: Verdict
    time: float
    phase: complex
    fidelity: float
    residual: float
    strongly_cospectral: bool | None = None

    @property
    def is_pst(self) -> bool:
        return self.verdict in (Verdict.PST, Verdict.PERIODIC)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "time": self.time,
            "phase": {"re": self.phase.real, "im": self.phase.imag},
            "fidelity": self.fidelity,
            "residual": self.residual,
            "strongly_cospectral": self.strongly_cospectral,
        }


def _vec(x) -> np.ndarray:
    return np.asarray(getattr(x, "vector", x), dtype=float)


def _amplitude_fn(d: SpectralDecomposition, x, y):
    """Return ``t -> y^T U(t) x`` evaluated on arrays of times."""
    xv, yv = _vec(x), _vec(y)
    if xv.shape != yv.shape or xv.shape[0] != d.order:
        raise StateError(f"dimension mismatch: {xv.shape}, {yv.shape}, order {d.order}")
    a = d.overlaps(xv, yv)
    keep = np.abs(a) > 0
    a, theta = a[keep], d.eigenvalues[keep]

    def amp(t):
        t = np.asarray(t, dtype=float)
        return np.exp(1j * np.multiply.outer(t, theta)) @ a

    return amp


def amplitude(d: SpectralDecomposition, x, y, t: float) -> complex:
    return complex(_amplitude_fn(d, x, y)(t))


def fidelity(d: SpectralDecomposition, x, y, t: float) -> float:
    """``|y^T U(t) x|``."""
    return abs(amplitude(d, x, y, t))


def fidelity_curve(d: SpectralDecomposition, x, y, times) -> np.ndarray:
    return np.abs(_amplitude_fn(d, x, y)(np.asarray(times, dtype=float)))


def _parallel(x, y) -> bool:
    return abs(float(_vec(x) @ _vec(y))) >= 1 - 1e-12


def is_strongly_cospectral(d: SpectralDecomposition, x, y, tol: float = COSPECTRAL_TOL) -> bool:
    """``F_j x = +-F_j y`` on every supported eigenvalue, with equal supports."""
    if _parallel(x, y):
        raise StateError("strong cospectrality is defined for linearly independent states")
    xv, yv = _vec(x), _vec(y)
    if not np.array_equal(support_mask(d, xv, tol), support_mask(d, yv, tol)):
        return False
    fx, fy = d.components(xv), d.components(yv)
    for cx, cy in zip(fx, fy):
        if min(np.linalg.norm(cx - cy), np.linalg.norm(cx + cy)) > tol:
            return False
    return True


def detect_pst(d: SpectralDecomposition, x, y, t: float, pst_tol: float = PST_TOL,
               cospectral_tol: float = COSPECTRAL_TOL) -> TransferReport:
    amp = amplitude(d, x, y, t)
    fid = abs(amp)
    phase = amp / fid if fid > 0 else complex(1.0)
    ok = fid >= 1 - pst_tol
    if _parallel(x, y):
        verdict = Verdict.PERIODIC if ok else Verdict.NO_PST_AT_TIME
        return TransferReport(verdict, t, phase, fid, 1 - fid, None)
    sc = is_strongly_cospectral(d, x, y, cospectral_tol)
    if int(support_mask(d, x, SUPPORT_TOL).sum()) == 1:
        verdict = Verdict.FIXED_STATE
    elif ok:
        verdict = Verdict.PST
    elif not sc:
        verdict = Verdict.NOT_STRONGLY_COSPECTRAL
    else:
        verdict = Verdict.NO_PST_AT_TIME
    return TransferReport(verdict, t, phase, fid, 1 - fid, sc)


def is_periodic_at(d: SpectralDecomposition, x, t: float, tol: float = PST_TOL) -> bool:
    return fidelity(d, x, x, t) >= 1 - tol


def default_grid_step(d: SpectralDecomposition) -> float:
    diam = d.diameter
    return math.pi / (64 * diam) if diam > 0 else 0.05


def _golden(f, lo: float, hi: float, iters: int = GOLDEN_ITERS, maximize: bool = True):
    sign = -1.0 if maximize else 1.0
    c = hi - _INVPHI * (hi - lo)
    e = lo + _INVPHI * (hi - lo)
    fc, fe = sign * f(c), sign * f(e)
    for _ in range(iters):
        if fc < fe:
            hi, e, fe = e, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = sign * f(c)
        else:
            lo, c, fc = c, e, fe
            e = lo + _INVPHI * (hi - lo)
            fe = sign * f(e)
    t = (lo + hi) / 2
    return t, f(t)


def _grid(t_max: float, step: float) -> np.ndarray:
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    count = max(2, int(math.ceil(t_max / step)) + 1)
    return np.linspace(0.0, t_max, count)


def _local_extrema(vals: np.ndarray, maximize: bool) -> np.ndarray:
    v = vals if maximize else -vals
    inner = np.where((v[1:-1] >= v[:-2]) & (v[1:-1] >= v[2:]))[0] + 1
    if v[-1] > v[-2]:
        inner = np.append(inner, len(v) - 1)
    return inner


def _refined_extrema(f, t_max, step, iters, maximize):
    grid = _grid(t_max, step)
    vals = f(grid)
    found = []
    for i in _local_extrema(vals, maximize):
        lo = grid[i - 1]
        hi = grid[min(i + 1, len(grid) - 1)]
        t, val = _golden(lambda s: float(f(s)), lo, hi, iters, maximize)
        found.append((float(t), float(val)))
    return grid, vals, found


def search_pst(d: SpectralDecomposition, x, y, t_max: float, grid_step: float | None = None,
               refine_iters: int = GOLDEN_ITERS, pst_tol: float = PST_TOL) -> list[tuple[float, float]]:
    """Times in ``(0, t_max]`` where fidelity from ``x`` to ``y`` reaches ``1 - pst_tol``.

    The grid is scanned for local maxima, each refined by golden-section search.
    """
    amp = _amplitude_fn(d, x, y)
    f = lambda t: np.abs(amp(t))
    step = grid_step or default_grid_step(d)
    _, _, found = _refined_extrema(f, t_max, step, refine_iters, maximize=True)
    hits = []
    for t, val in found:
        if t <= step / 2 or val < 1 - pst_tol:
            continue
        if hits and abs(t - hits[-1][0]) < step:
            if val > hits[-1][1]:
                hits[-1] = (t, val)
            continue
        hits.append((t, val))
    return hits


def sedentariness_estimate(d: SpectralDecomposition, x, t_max: float,
                           grid_step: float | None = None) -> float:
    """Minimum of ``|x^T U(t) x|`` over a refined scan of ``(0, t_max]``.

    This is an upper bound for the true infimum over all ``t > 0``.
    """
    amp = _amplitude_fn(d, x, x)
    f = lambda t: np.abs(amp(t))
    step = grid_step or default_grid_step(d)
    _, vals, found = _refined_extrema(f, t_max, step, GOLDEN_ITERS, maximize=False)
    best = float(vals[1:].min())
    for _, val in found:
        best = min(best, val)
    return best


@dataclass
class PGSTScan:
    time: float
    fidelity: float
    records: list = field(default_factory=list)


def pgst_heuristic(d: SpectralDecomposition, x, y, t_max: float, target: float = 1.0,
                   grid_step: float | None = None) -> PGSTScan:
    """Best fidelity found on ``(0, t_max]`` plus the sequence of record values.

    Pretty good state transfer is a limit property; a finite scan can only
    suggest it.
    """
    amp = _amplitude_fn(d, x, y)
    f = lambda t: np.abs(amp(t))
    step = grid_step or default_grid_step(d)
    _, _, found = _refined_extrema(f, t_max, step, GOLDEN_ITERS, maximize=True)
    scan = PGSTScan(0.0, float(f(0.0)))
    for t, val in found:
        if t <= 0:
            continue
        if val > scan.fidelity:
            scan.time, scan.fidelity = t, val
            scan.records.append((t, val))
            if val >= target:
                break
    return scan
