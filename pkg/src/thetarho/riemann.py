"""Period matrices of hyperelliptic curves y^2 = prod_j (x - e_j), e_j real.

Holomorphic differentials are du_n = DIFFERENTIAL_SCALE * x^(g-n) dx / y for
n = 1..g.  Row k of ``omega`` (``omega_prime``) holds the integrals of all g
differentials over the cycle a_k (b_k), so tau = omega' omega^{-1} and
normalized coordinates are v = u omega^{-1} for row vectors u.

Cycles follow the cut picture with cuts (e_{2k-1}, e_{2k}), k = 1..g, and
one cut (e_{2g+1}, e_0) through infinity.  a_k encircles cut k; b_k runs
from cut k to the cut at infinity, which in homology is the sum of the loops
around the gaps (e_{2l}, e_{2l+1}) for l = k..g.  All cycle integrals are
assembled from the boundary values of the segment integrals taken along the
upper edge of the real axis.

Each segment integral has inverse square-root singularities at both ends;
after x = mid + half * t the weight 1/sqrt(1 - t^2) is absorbed exactly by
Gauss-Chebyshev nodes and the rest of the integrand is analytic.
"""
from __future__ import annotations

from contextlib import nullcontext
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from thetarho.errors import DomainError, NumericError, OrientationError, VerificationError

# Fixed once by the genus-1 First Thomae calibration (tests/test_riemann.py):
# with these two constants the multiplier in the constant formula is exactly 1.
DIFFERENTIAL_SCALE = Fraction(1, 2)
ORIENTATION = -1

MIN_NODES = 16
MAX_NODES = 4096


def _to_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class HyperellipticCurve:
    """Curve with finite, real, strictly increasing branch points."""

    branch_points: tuple

    def __post_init__(self):
        pts = tuple(_to_fraction(x) for x in self.branch_points)
        if len(pts) < 4 or len(pts) % 2:
            raise DomainError("need an even number >= 4 of branch points")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise DomainError("branch points must be strictly increasing")
        object.__setattr__(self, "branch_points", pts)

    @classmethod
    def parse(cls, text: str) -> "HyperellipticCurve":
        """Inline comma/space separated list, e.g. ``"0,1,2,3"`` or ``"0 1/2 2 3"``."""
        parts = text.replace(",", " ").split()
        return cls(tuple(Fraction(p) for p in parts))

    @property
    def genus(self) -> int:
        return len(self.branch_points) // 2 - 1

    @property
    def roots(self) -> np.ndarray:
        return np.array([float(x) for x in self.branch_points])

    def affine(self, lam, shift=0) -> "HyperellipticCurve":
        lam, shift = Fraction(lam), Fraction(shift)
        if lam <= 0:
            raise DomainError("only orientation-preserving affine maps (lam > 0) keep the labelling")
        return HyperellipticCurve(tuple(lam * e + shift for e in self.branch_points))


@dataclass(frozen=True)
class PeriodData:
    omega: np.ndarray
    omega_prime: np.ndarray
    tau: np.ndarray
    segments: np.ndarray = field(repr=False)
    legendre_residual: float = 0.0
    symmetry_residual: float = 0.0
    min_eig_im_tau: float = 0.0
    quadrature_error: float = 0.0
    nodes: int = 0
    det_omega: complex = 0.0
    condition: float = 0.0
    digits: int = 15
    mp: dict | None = field(default=None, repr=False)  # mpmath omega / omega_prime / tau when digits > 15

    @property
    def genus(self) -> int:
        return self.tau.shape[0]

    def certificates(self) -> dict:
        return {
            "legendre_residual": self.legendre_residual,
            "symmetry_residual": self.symmetry_residual,
            "min_eig_im_tau": self.min_eig_im_tau,
            "quadrature_error": self.quadrature_error,
            "nodes": self.nodes,
            "condition_omega": self.condition,
        }


def _segment_integrals_float(e: np.ndarray, nodes: int) -> np.ndarray:
    """W[s, n-1] = int_{e_s}^{e_{s+1}} x^(g-n) dx / y_+ (upper edge), float64."""
    n_pts = len(e)
    g = n_pts // 2 - 1
    k = np.arange(1, nodes + 1)
    t = np.cos((2 * k - 1) * np.pi / (2 * nodes))
    out = np.empty((n_pts - 1, g), dtype=complex)
    for s in range(n_pts - 1):
        lo, hi = e[s], e[s + 1]
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        x = mid + half * t
        h = np.ones_like(x)
        for j in range(n_pts):
            if j not in (s, s + 1):
                h *= np.abs(x - e[j])
        w = np.pi / nodes / np.sqrt(h)
        # y_+ = sqrt|f| * exp(i pi N / 2) with N roots to the right of x
        phase = np.exp(-0.5j * np.pi * (n_pts - 1 - s))
        for n in range(1, g + 1):
            out[s, n - 1] = phase * np.sum(w * x ** (g - n))
    return out


def _segment_integrals_mp(e, nodes: int):
    n_pts = len(e)
    g = n_pts // 2 - 1
    out = mpmath.matrix(n_pts - 1, g)
    ts = [mpmath.cos((2 * k - 1) * mpmath.pi / (2 * nodes)) for k in range(1, nodes + 1)]
    for s in range(n_pts - 1):
        lo, hi = e[s], e[s + 1]
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        acc = [mpmath.mpf(0)] * g
        for t in ts:
            x = mid + half * t
            h = mpmath.mpf(1)
            for j in range(n_pts):
                if j not in (s, s + 1):
                    h *= abs(x - e[j])
            w = 1 / mpmath.sqrt(h)
            for n in range(1, g + 1):
                acc[n - 1] += w * x ** (g - n)
        phase = mpmath.expjpi(-mpmath.mpf(n_pts - 1 - s) / 2)
        for n in range(g):
            out[s, n] = phase * mpmath.pi / nodes * acc[n]
    return out


def _assemble(seg, g: int):
    """Cycle integrals from segment integrals; works for numpy and mpmath rows."""
    c = ORIENTATION * 2 * DIFFERENTIAL_SCALE
    omega = [[c * seg[2 * k - 1][n] for n in range(g)] for k in range(1, g + 1)]
    omega_p = [[c * sum(seg[2 * l][n] for l in range(k, g + 1)) for n in range(g)]
               for k in range(1, g + 1)]
    return omega, omega_p


def segment_integrals(curve: HyperellipticCurve, digits: int = 15, nodes: int | None = None):
    """Segment integrals with node doubling until the change is below 10^-digits.

    Returns (segments, error_estimate, nodes_used).  ``digits`` above 15
    switches to mpmath at ``digits + 10`` working precision.
    """
    high = digits > 15
    target = 10.0 ** (-digits)
    if high:
        e = [mpmath.mpf(x.numerator) / x.denominator for x in curve.branch_points]
        compute = lambda m: _segment_integrals_mp(e, m)
        diff = lambda a, b: float(mpmath.mnorm(a - b, 1) / max(mpmath.mnorm(b, 1), 1))
    else:
        e = curve.roots
        compute = lambda m: _segment_integrals_float(e, m)
        diff = lambda a, b: float(np.abs(a - b).max() / max(np.abs(b).max(), 1.0))
        target = max(target, 1e-15)
    with mpmath.workdps(digits + 10) if high else nullcontext():
        m = nodes or MIN_NODES
        prev = compute(m)
        while True:
            cur = compute(2 * m)
            err = diff(prev, cur)
            if nodes is not None or err <= target:
                return cur, err, 2 * m
            m *= 2
            if 2 * m > MAX_NODES:
                raise NumericError(f"quadrature did not converge: change {err:.3e} at {m} nodes "
                                   f"(target {target:.1e})")
            prev = cur


def periods(curve: HyperellipticCurve, digits: int = 15, nodes: int | None = None) -> PeriodData:
    g = curve.genus
    seg, err, used = segment_integrals(curve, digits, nodes)
    mp = None
    if digits > 15:
        with mpmath.workdps(digits + 10):
            rows = [[seg[s, n] for n in range(g)] for s in range(seg.rows)]
            om, omp = _assemble(rows, g)
            om_m, omp_m = mpmath.matrix(om), mpmath.matrix(omp)
            tau_m = omp_m * om_m ** -1
            tau_m = (tau_m + tau_m.T) / 2
            mp = {"omega": om_m, "omega_prime": omp_m, "tau": tau_m}
        to_np = lambda a: np.array([[complex(x) for x in r] for r in a])
        omega, omega_p = to_np(om), to_np(omp)
        seg_np = np.array([[complex(x) for x in r] for r in rows])
    else:
        om, omp = _assemble(seg, g)
        omega, omega_p, seg_np = np.array(om), np.array(omp), seg
    tau = omega_p @ np.linalg.inv(omega)
    sym = float(np.abs(tau - tau.T).max())
    tau = (tau + tau.T) / 2
    leg = omega.T @ omega_p - omega_p.T @ omega
    scale = np.abs(omega).max() * np.abs(omega_p).max()
    lam = float(np.linalg.eigvalsh(tau.imag).min())
    if lam <= 0:
        raise OrientationError(f"Im tau not positive definite (min eigenvalue {lam:.3e})")
    return PeriodData(
        omega=omega,
        omega_prime=omega_p,
        tau=tau,
        segments=seg_np,
        legendre_residual=float(np.abs(leg).max() / scale),
        symmetry_residual=sym,
        min_eig_im_tau=lam,
        quadrature_error=err,
        nodes=used,
        det_omega=complex(np.linalg.det(omega)),
        condition=float(np.linalg.cond(omega)),
        digits=digits,
        mp=mp,
    )


def abel_images(pd: PeriodData) -> np.ndarray:
    """Normalized Abel images v(e_j) of all branch points, base point e_0 (rows)."""
    cum = np.vstack([np.zeros(pd.genus), np.cumsum(pd.segments, axis=0)])
    return ORIENTATION * float(DIFFERENTIAL_SCALE) * cum @ np.linalg.inv(pd.omega)


def half_period_characteristic(v: np.ndarray, tau: np.ndarray, tol: float = 1e-8):
    """Solve v = eps/2 + tau eps'/2 for bit vectors (eps', eps); None if v is no half period."""
    y = tau.imag
    top = 2 * np.linalg.solve(y, v.imag)
    bottom = 2 * (v.real - tau.real @ top / 2)
    rt, rb = np.round(top), np.round(bottom)
    if max(np.abs(top - rt).max(), np.abs(bottom - rb).max()) > tol:
        return None
    return rt.astype(int) % 2, rb.astype(int) % 2


def affine_rescale_check(curve: HyperellipticCurve, lam, shift=0, digits: int = 15,
                         tol: float | None = None) -> dict:
    """Compare tau(e) with tau(lam * e + shift)."""
    tol = tol if tol is not None else 10.0 ** (-(min(digits, 15) - 3))
    t0 = periods(curve, digits).tau
    t1 = periods(curve.affine(lam, shift), digits).tau
    dev = float(np.abs(t0 - t1).max())
    report = {"name": "affine_rescale", "params": {"lam": str(Fraction(lam)), "shift": str(Fraction(shift))},
              "observed": dev, "tolerance": tol, "pass": dev <= tol}
    if not report["pass"]:
        raise VerificationError(f"tau changed by {dev:.3e} under affine map", witness=report)
    return report


def agm(a, b, tol=0.0):
    """Arithmetic-geometric mean of two positive reals at the current mpmath precision."""
    a, b = mpmath.mpf(a), mpmath.mpf(b)
    rel = max(mpmath.mpf(tol), 16 * mpmath.eps)
    for _ in range(200):
        if abs(a - b) <= rel * abs(a):
            break
        a, b = (a + b) / 2, mpmath.sqrt(a * b)
    else:
        raise NumericError("AGM iteration did not settle")
    return (a + b) / 2


def genus1_tau_agm(e, digits: int = 15):
    """Closed-form tau of y^2 = prod (x - e_j), four real ordered roots, via AGM.

    Cut integral pi / AGM(sqrt(A), sqrt(C)), gap integral pi / AGM(sqrt(A), sqrt(B))
    with A = (e3-e1)(e2-e0), B = (e2-e1)(e3-e0), C = (e3-e2)(e1-e0).
    Returns a complex, or an mpmath mpc when digits > 15.
    """
    with mpmath.workdps(max(digits, 15) + 10):
        e0, e1, e2, e3 = [mpmath.mpf(Fraction(x).numerator) / Fraction(x).denominator for x in e]
        a = (e3 - e1) * (e2 - e0)
        b = (e2 - e1) * (e3 - e0)
        c = (e3 - e2) * (e1 - e0)
        tau = mpmath.mpc(0, 1) * agm(mpmath.sqrt(a), mpmath.sqrt(c)) / agm(mpmath.sqrt(a), mpmath.sqrt(b))
    return tau if digits > 15 else complex(tau)


def default_curve(g: int) -> HyperellipticCurve:
    """Reference curve with branch points 0, 1, ..., 2g+1."""
    return HyperellipticCurve(tuple(range(2 * g + 2)))


__all__ = [
    "DIFFERENTIAL_SCALE", "ORIENTATION", "HyperellipticCurve", "PeriodData", "periods",
    "abel_images", "half_period_characteristic", "affine_rescale_check", "genus1_tau_agm",
    "default_curve", "agm", "segment_integrals",
]
