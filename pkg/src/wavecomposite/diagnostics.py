"""
Norms, decay fits, heat-kernel weights and region classification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import erf

from . import gas
from .errors import DataError, DomainError, ResolutionError, UsageError
from .gas import GasParams
from .riemann import WavePattern

NORM_KINDS = ("L1", "L2", "Linf", "H1", "W2inf")


def norm(f, kind: str, dx: float = 1.0) -> float:
    """Grid norm of a sampled field.

    L1/L2 use the trapezoidal rule, derivatives (H1, W2inf) centered
    differences (one-sided at the ends).
    """
    if kind not in NORM_KINDS:
        raise UsageError(f"unknown norm kind {kind!r}")
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise DataError("field contains non-finite values")
    if f.size == 0:
        return 0.0
    if kind == "Linf":
        return float(np.max(np.abs(f)))
    if kind == "L1":
        return float(np.trapezoid(np.abs(f), dx=dx)) if f.size > 1 else 0.0
    if kind == "L2":
        return float(np.sqrt(np.trapezoid(f * f, dx=dx))) if f.size > 1 else 0.0
    d1 = np.gradient(f, dx, edge_order=2) if f.size > 2 else np.zeros_like(f)
    if kind == "H1":
        return float(np.sqrt(np.trapezoid(f * f + d1 * d1, dx=dx)))
    d2 = np.zeros_like(f)
    if f.size > 2:
        d2[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / dx ** 2
        d2[0], d2[-1] = d2[1], d2[-2]
    return float(np.max(np.abs(f)) + np.max(np.abs(d1)) + np.max(np.abs(d2)))


class DecayFit(NamedTuple):
    exponent: float
    prefactor: float
    r2: float


def fit_decay(t, values, model: str = "exp", min_samples: int = 10) -> DecayFit:
    """Least-squares fit of ``C exp(k t)`` ("exp") or ``C (1+t)^k`` ("power")."""
    if model not in ("exp", "power"):
        raise UsageError(f"model must be 'exp' or 'power', got {model!r}")
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise DataError("time and value arrays differ in shape")
    if t.size < min_samples:
        raise DataError(f"need at least {min_samples} samples, got {t.size}")
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise DataError("decay fit needs finite positive values")
    xs = t if model == "exp" else np.log1p(t)
    ys = np.log(v)
    A = np.vstack([xs, np.ones_like(xs)]).T
    (k, c), *_ = np.linalg.lstsq(A, ys, rcond=None)
    resid = ys - (k * xs + c)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(k), float(np.exp(c)), r2)


def late_slope(t, values, model: str = "power"):
    """Log-log (or log-linear) slope of a positive series over the second half of its range."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = t >= 0.5 * (t[0] + t[-1])
    xs = np.log1p(t[sel]) if model == "power" else t[sel]
    return float(np.polyfit(xs, np.log(v[sel]), 1)[0])


def detect_floor(t, values, tail_fraction: float = 0.2, flat_ratio: float = 0.1) -> float:
    """Round-off floor of a decaying series, or 0 if it is still decaying at the end.

    The series is treated as floored when the log-slope over its last
    ``tail_fraction`` is shallower than ``flat_ratio`` times the slope over
    its first half; the floor is then ten times the smallest tail value.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    pos = v > 0
    if pos.sum() < 10:
        return 0.0
    t, v = t[pos], v[pos]
    head = t <= t[0] + 0.5 * (t[-1] - t[0])
    tail = t >= t[-1] - tail_fraction * (t[-1] - t[0])
    if head.sum() < 3 or tail.sum() < 3:
        return 0.0
    s_head = np.polyfit(t[head], np.log(v[head]), 1)[0]
    s_tail = np.polyfit(t[tail], np.log(v[tail]), 1)[0]
    if s_head < 0 and s_tail > flat_ratio * s_head:
        return float(10 * np.min(v[tail]))
    return 0.0


# ---------------------------------------------------------------------------
# heat kernel weight

@dataclass(frozen=True)
class HeatKernelWeight:
    sigma: float = 0.1

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")

    def w(self, x, t):
        x = np.asarray(x, dtype=float)
        return (1 + t) ** -0.5 * np.exp(-self.sigma * x * x / (1 + t))

    def g(self, x, t):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sqrt(np.pi / self.sigma) * (1 + erf(x * np.sqrt(self.sigma / (1 + t))))

    def w_x(self, x, t):
        x = np.asarray(x, dtype=float)
        return -2 * self.sigma * x / (1 + t) * self.w(x, t)

    def g_t(self, x, t):
        x = np.asarray(x, dtype=float)
        return -0.5 * x / (1 + t) ** 1.5 * np.exp(-self.sigma * x * x / (1 + t))

    @property
    def g_sup(self) -> float:
        return float(np.sqrt(np.pi / self.sigma))


def g_sup_numeric(hk: HeatKernelWeight, t: float = 0.0, n: int = 200001) -> float:
    """sup_x g(x, t) by direct quadrature of w over a wide window."""
    L = 40.0 * np.sqrt((1 + t) / hk.sigma)
    x = np.linspace(-L, L, n)
    w = hk.w(x, t)
    return float(np.trapezoid(w, x))


class WeightedIntegral(NamedTuple):
    lhs: float
    rhs: float
    terms: tuple
    richardson: float


def weighted_square_integral(t, x, h, h_x, hk: HeatKernelWeight, rtol: float = 0.1) -> WeightedIntegral:
    """Both sides of the weighted heat-kernel inequality for a sampled field.

    ``h`` and ``h_x`` are arrays of shape (nt, nx) on the time samples ``t``
    and the uniform grid ``x``.  Returns the left side
    ``int int h^2 w^2``, the right side
    ``4 pi ||h(0)||^2 + 4 pi/sigma int ||h_x||^2 + 8 sigma int int h_t h g^2``
    (with ``h_t`` from time differences), the three right-hand terms and the
    relative Richardson difference between the full and the every-other
    sample evaluation.
    """
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    h_x = np.asarray(h_x, dtype=float)
    if h.ndim != 2 or h.shape != h_x.shape or h.shape[0] != t.size:
        raise DataError("h and h_x must be (nt, nx) arrays matching t")
    if t.size < 3:
        raise DataError("need at least three time samples")
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(h_x))):
        raise DataError("non-finite values in h")

    def sides(ts, hs, hxs):
        dx = x[1] - x[0]
        W = np.array([hk.w(x, tt) for tt in ts])
        G = np.array([hk.g(x, tt) for tt in ts])
        lhs = np.trapezoid(np.trapezoid(hs ** 2 * W ** 2, dx=dx, axis=1), ts)
        h0 = 4 * np.pi * np.trapezoid(hs[0] ** 2, dx=dx)
        hxint = 4 * np.pi / hk.sigma * np.trapezoid(np.trapezoid(hxs ** 2, dx=dx, axis=1), ts)
        # duality term: midpoint rule in time with h_t from forward differences
        dt = np.diff(ts)
        ht = np.diff(hs, axis=0) / dt[:, None]
        hm = 0.5 * (hs[1:] + hs[:-1])
        Gm = 0.5 * (G[1:] + G[:-1])
        dual = 8 * hk.sigma * np.sum(dt * np.trapezoid(ht * hm * Gm ** 2, dx=dx, axis=1))
        return float(lhs), float(h0 + hxint + dual), (float(h0), float(hxint), float(dual))

    lhs, rhs, terms = sides(t, h, h_x)
    lhs2, rhs2, _ = sides(t[::2], h[::2], h_x[::2])
    scale = max(abs(lhs), abs(rhs), 1e-300)
    rich = max(abs(lhs - lhs2), abs(rhs - rhs2)) / scale if scale > 1e-300 else 0.0
    if rich > rtol:
        raise ResolutionError(f"time sampling too coarse: Richardson difference {rich:.3f}")
    return WeightedIntegral(lhs, rhs, terms, float(rich))


# ---------------------------------------------------------------------------
# regions

OMEGA_MINUS = "Omega_minus"
OMEGA_C = "Omega_c"
OMEGA_PLUS = "Omega_plus"


def region_speeds(g: GasParams, pat: WavePattern):
    lam1 = gas.eigenvalue(g, pat.vm_left, pat.thm_left, 1)
    lam3 = gas.eigenvalue(g, pat.vm_right, pat.thm_right, 3)
    return lam1, lam3


def classify_region(g: GasParams, pat: WavePattern, x, t: float):
    """Omega_minus if 2x < lambda_1(v^o_-) t, Omega_plus if 2x > lambda_3(v^o_+) t, else Omega_c."""
    if not t > 0:
        raise DomainError("t must be positive")
    lam1, lam3 = region_speeds(g, pat)
    xa = np.asarray(x, dtype=float)
    out = np.where(2 * xa > lam3 * t, OMEGA_PLUS, np.where(2 * xa < lam1 * t, OMEGA_MINUS, OMEGA_C))
    return str(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# run reports

TINY = 1e-14


@dataclass
class RunReport:
    series: dict = field(default_factory=dict)       # name -> {"t": [...], "values": [...]}
    fits: dict = field(default_factory=dict)         # name -> {"exponent", "prefactor", "r2"}
    verdicts: dict = field(default_factory=dict)     # name -> {"pass", "value", "threshold", "series", ...}
    provenance: dict = field(default_factory=dict)

    def add_series(self, name, t, values):
        self.series[name] = {"t": np.asarray(t, float).tolist(), "values": np.asarray(values, float).tolist()}

    def add_verdict(self, name, passed, value, threshold, series=None, note=""):
        if series is not None and series not in self.series:
            raise DataError(f"verdict {name!r} references unknown series {series!r}")
        self.verdicts[name] = {"pass": bool(passed), "value": value, "threshold": threshold,
                               "series": series, "note": note}

    @property
    def all_pass(self) -> bool:
        return all(v["pass"] for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {"series": self.series, "fits": self.fits, "verdicts": self.verdicts,
                "provenance": self.provenance, "all_pass": self.all_pass}


def _at(t, y, tc):
    return float(y[int(np.argmin(np.abs(t - tc)))])


def _decay_verdict(rep, name, t, y, t0, t1, series, band=None):
    """ratio y(t0)/y(t1) >= 2 (and optional per-checkpoint band); trivially true for identically tiny series."""
    a, b = _at(t, y, t0), _at(t, y, t1)
    if max(a, b) <= TINY:
        rep.add_verdict(name, True, 0.0, 2.0, series, "series identically zero")
        return
    ratio = a / b if b > 0 else float("inf")
    ok = ratio >= 2.0
    note = ""
    if band is not None:
        cps = [c for c in band if t0 <= c <= t1]
        vals = [_at(t, y, c) for c in cps]
        mono = all(v2 <= 1.05 * v1 for v1, v2 in zip(vals, vals[1:]))
        ok = ok and mono
        note = "checkpoints " + ", ".join(f"{c:g}:{v:.3e}" for c, v in zip(cps, vals))
    rep.add_verdict(name, ok, ratio, 2.0, series, note)


def verify(out_dir) -> RunReport:
    """Re-derive every verdict of a finished ``simulate`` run from its files."""
    from pathlib import Path

    from . import io

    out = Path(out_dir)
    meta_path = out / "run.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"{meta_path} missing; not a simulate output directory")
    meta = io.read_json(meta_path)
    _, norms = io.read_csv(out / "norms.csv")
    t = norms["t"]
    rep = RunReport(provenance={k: meta.get(k) for k in ("config_digest", "version", "grid", "T", "delta",
                                                          "eps1")})
    for k, v in norms.items():
        if k != "t":
            rep.add_series(k, t, v)

    # snapshots
    pos_ok = True
    for name in meta["snapshots"]:
        path = out / name
        if not path.exists():
            raise FileNotFoundError(f"checkpoint file {path} missing")
        snap = io.read_snapshot(path)
        pos_ok &= bool(np.all(snap.column("v") > 0) and np.all(snap.column("theta") > 0))
    rep.add_verdict("positivity", pos_ok, pos_ok, True)

    rep.add_verdict("conservation", meta["conservation"]["relative"] <= 1e-9, meta["conservation"]["relative"], 1e-9)
    ex, lit = meta["initial_identity"]
    rep.add_verdict("initial_identity_exact", ex <= 1e-10, ex, 1e-10,
                    note="phi2 (U~ - (1-eta) u_- - eta u_+) form")
    rep.add_verdict("initial_identity_contact_only", lit <= 1e-10, lit, 1e-10,
                    note="phi2 u_cd(x,0) form; exact only without rarefactions")

    dx = meta["grid"]["dx"]
    width = float(meta["min_profile_width"])
    resolved = width / dx >= 8.0
    rep.add_verdict("resolution", resolved, width / dx, 8.0, note="narrowest profile width over dx")
    reliability = "" if resolved else "unreliable: grid does not resolve the profiles"

    T = float(t[-1])
    y = norms["Linf_diff_ansatz"]
    if T >= 80 - 1e-9:
        _decay_verdict(rep, "ansatz_decay", t, y, 10.0, 80.0, "Linf_diff_ansatz", band=(10, 20, 40, 80))
        _decay_verdict(rep, "riemann_fan_decay", t, norms["Linf_diff_riemann"], 20.0, 80.0, "Linf_diff_riemann")
    a_half, a_end = _at(t, y, T / 2), _at(t, y, T)
    rep.add_verdict("half_vs_end", a_end < a_half or max(a_half, a_end) <= TINY, a_end / a_half if a_half else 0.0,
                    1.0, "Linf_diff_ansatz")
    for key in ("ansatz_decay", "riemann_fan_decay", "half_vs_end"):
        if key in rep.verdicts and reliability:
            rep.verdicts[key]["note"] = (rep.verdicts[key]["note"] + "; " + reliability).strip("; ")

    h1 = norms["H1_pert"]
    t_ref = min(10.0, T)
    sel = t >= t_ref - 1e-9
    h_ref = _at(t, h1, t_ref)
    growth = float(np.max(h1[sel] ** 2) / h_ref ** 2) if h_ref > TINY else 0.0
    rep.add_verdict("h1_monitor", growth <= 4.0, growth, 4.0, "H1_pert", f"relative to t={t_ref:g}")

    late = (t >= 10) & (y > 0)
    if late.sum() >= 10:
        f = fit_decay(t[late], y[late], "power")
        rep.fits["Linf_diff_ansatz"] = f._asdict()

    sigma = meta["sigma"]
    c2 = meta.get("C2")
    if c2 is not None:
        rep.add_verdict("sigma_admissible", sigma <= c2 / 4, sigma, c2 / 4, note="sigma <= C2/4")

    hist = out / "phi_history.bin"
    if hist.exists():
        snap = io.read_snapshot(hist)
        _, tt = io.read_csv(out / "phi_times.csv")
        x = np.linspace(snap.x_min, snap.x_max, snap.columns.shape[1] + 1)
        x = 0.5 * (x[1:] + x[:-1])
        h = snap.columns
        hx = np.gradient(h, x[1] - x[0], axis=1)
        try:
            wi = weighted_square_integral(tt["t"], x, h, hx, HeatKernelWeight(sigma))
            rep.add_verdict("heat_kernel_inequality", wi.lhs <= wi.rhs, wi.lhs, wi.rhs,
                            note=f"slack {wi.rhs - wi.lhs:.3e}, Richardson {wi.richardson:.2e}")
        except ResolutionError as exc:
            rep.add_verdict("heat_kernel_inequality", False, float("nan"), 0.1, note=str(exc))
    return rep


def restrict(fine, factor: int):
    """Cell averages of a fine-grid field onto a grid ``factor`` times coarser."""
    fine = np.asarray(fine, dtype=float)
    return fine.reshape(-1, factor).mean(axis=1)


def observed_order(coarse, mid, fine) -> float:
    """Three-grid order log2(|u_h - u_h/2| / |u_h/2 - u_h/4|) in max norm, fields restricted to the coarse grid."""
    coarse = np.asarray(coarse, float)
    m = restrict(mid, mid.size // coarse.size)
    f = restrict(fine, fine.size // coarse.size)
    e1 = float(np.max(np.abs(coarse - m)))
    e2 = float(np.max(np.abs(m - f)))
    if e2 == 0:
        raise DataError("finest two solutions coincide; order undefined")
    return float(np.log2(e1 / e2))
