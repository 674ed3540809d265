"""Riemann theta functions with half-integer characteristics, and numeric checks.

theta[eps](v; tau) = sum_n exp(i pi x^T tau x + 2 i pi x^T (v + eps/2)),
x = n + eps'/2, with eps' the top row of the characteristic.

The lattice sum is truncated to the ellipsoid pi x^T Im(tau) x <= L + margin,
L = -log(tol), inside the box |x_i| <= R with
R = ceil(sqrt(L / (pi lambda_min))) + g.  The omitted tail is below tol.

Derivatives in tau use the independent-entry convention
d/dtau_ij of x^T tau x = x_i x_j for every (i, j), off-diagonal included;
with it the heat equation reads Hess_v theta = 4 i pi d_tau theta entrywise.
"""
from __future__ import annotations

from contextlib import nullcontext
from functools import lru_cache
import mpmath
import numpy as np

from thetarho import goepel, rho
from thetarho.charkit import (
    Characteristic,
    PartitionChar,
    SymplecticElement,
    all_characteristics,
    char_of_partition,
    gamma_action,
    generators,
    identity_element,
    partition_of_char,
    partition_table,
)
from thetarho.errors import DomainError, VerificationError
from thetarho.riemann import HyperellipticCurve, PeriodData, periods

# lattice points whose squared-norm weight is within this of the cutoff are kept
_MARGIN = 12.0


def truncation_radius(tau: np.ndarray, tol: float) -> tuple[int, float]:
    """(R, lambda_min) for the Gaussian tail bound; raises on indefinite Im tau."""
    y = np.asarray(tau).imag
    lam = float(np.linalg.eigvalsh((y + y.T) / 2).min())
    if lam <= 0:
        raise DomainError(f"Im tau is not positive definite (min eigenvalue {lam:.3e})")
    g = y.shape[0]
    big_l = -np.log(tol)
    return int(np.ceil(np.sqrt(big_l / (np.pi * lam)))) + g, lam


class ThetaEvaluator:
    """Theta series at a fixed tau, in double precision or with mpmath.

    ``digits > 15`` switches every sum to mpmath at ``digits + 5`` working
    precision; ``tau`` may then be an mpmath matrix.
    """

    def __init__(self, tau, tol: float = 1e-15, radius: int | None = None, digits: int = 15):
        self.digits = digits
        self.high = digits > 15
        if self.high:
            self.tau_mp = mpmath.matrix(tau)
            tau = np.array(self.tau_mp.tolist(), dtype=complex)
            tol = min(tol, 10.0 ** (-digits - 2))
        self.tau = np.asarray(tau, dtype=complex)
        g = self.tau.shape[0]
        if self.tau.shape != (g, g) or np.abs(self.tau - self.tau.T).max() > 1e-12 * max(1, np.abs(self.tau).max()):
            raise DomainError("tau must be a symmetric square matrix")
        self.genus = g
        self.tol = tol
        r0, self.lambda_min = truncation_radius(self.tau, tol)
        self.radius = radius if radius is not None else r0
        self._cutoff = -np.log(tol) + _MARGIN
        self._points: dict[int, np.ndarray] = {}

    def points(self, top: int) -> np.ndarray:
        """Truncated lattice x = n + eps'/2 for the top row bitmask ``top``."""
        if top not in self._points:
            g, r = self.genus, self.radius
            shift = np.array([((top >> i) & 1) / 2 for i in range(g)])
            axis = np.arange(-r, r + 1)
            box = np.array(np.meshgrid(*([axis] * g), indexing="ij")).reshape(g, -1).T + shift
            q = np.pi * np.einsum("ki,ij,kj->k", box, self.tau.imag, box)
            self._points[top] = box[q <= self._cutoff]
        return self._points[top]

    def _terms(self, char: Characteristic, v):
        if char.genus != self.genus:
            raise DomainError("characteristic genus does not match tau")
        x = self.points(char.top)
        _, eps = char.vectors()
        w = np.asarray(v, dtype=complex) + eps / 2
        if self.high:
            return x, self._terms_mp(x, w)
        phase = 1j * np.pi * (np.einsum("ki,ij,kj->k", x, self.tau, x) + 2 * x @ w)
        return x, np.exp(phase)

    def _terms_mp(self, x, w):
        with mpmath.workdps(self.digits + 5):
            g = self.genus
            wm = [mpmath.mpc(c) for c in w]
            out = []
            for row in x:
                xr = [mpmath.mpf(2 * c) / 2 for c in row]
                s = sum(xr[i] * self.tau_mp[i, j] * xr[j] for i in range(g) for j in range(g))
                s += 2 * sum(xr[i] * wm[i] for i in range(g))
                out.append(mpmath.expjpi(s))
            return out

    def _sum(self, weights, terms, coef: int = 1, pi_power: int = 0):
        """coef * (i pi)^pi_power * sum weights * terms."""
        if self.high:
            with mpmath.workdps(self.digits + 5):
                acc = mpmath.fsum(mpmath.mpf(a) * t for a, t in zip(weights, terms))
                return coef * mpmath.mpc(0, mpmath.pi) ** pi_power * acc
        return coef * (1j * np.pi) ** pi_power * np.sum(weights * terms)

    def value(self, char: Characteristic, v=None):
        v = np.zeros(self.genus) if v is None else v
        x, t = self._terms(char, v)
        return self._sum(np.ones(len(x)), t)

    def gradient(self, char: Characteristic, v=None):
        """d theta / d v_k as a length-g array (objects in mp mode)."""
        v = np.zeros(self.genus) if v is None else v
        x, t = self._terms(char, v)
        out = [self._sum(x[:, k], t, 2, 1) for k in range(self.genus)]
        return np.array(out, dtype=object if self.high else complex)

    def _quadratic(self, char, v, coef, pi_power):
        v = np.zeros(self.genus) if v is None else v
        x, t = self._terms(char, v)
        g = self.genus
        h = np.empty((g, g), dtype=object if self.high else complex)
        for i in range(g):
            for j in range(i, g):
                h[i, j] = h[j, i] = self._sum(x[:, i] * x[:, j], t, coef, pi_power)
        return h

    def hessian(self, char: Characteristic, v=None):
        return self._quadratic(char, v, 4, 2)

    def tau_derivative(self, char: Characteristic, v=None):
        """d theta / d tau_ij, each entry varied independently."""
        return self._quadratic(char, v, 1, 1)


@lru_cache(maxsize=32)
def _evaluator_cached(tau_bytes: bytes, g: int, tol: float) -> ThetaEvaluator:
    return ThetaEvaluator(np.frombuffer(tau_bytes, dtype=complex).reshape(g, g), tol)


def evaluator(tau, tol: float = 1e-15) -> ThetaEvaluator:
    tau = np.ascontiguousarray(tau, dtype=complex)
    return _evaluator_cached(tau.tobytes(), tau.shape[0], tol)


def theta_char(char: Characteristic, v, tau, derivative: tuple = (), tol: float = 1e-15) -> complex:
    """theta[char](v; tau) or its v-derivative for a multi-index of order <= 2."""
    if len(derivative) > 2:
        raise DomainError("derivative order above 2 is not supported")
    ev = evaluator(tau, tol)
    if not derivative:
        return complex(ev.value(char, v))
    if len(derivative) == 1:
        return complex(ev.gradient(char, v)[derivative[0]])
    i, j = derivative
    return complex(ev.hessian(char, v)[i, j])


# -- numeric values of rho images -----------------------------------------

def _period_arrays(pd: PeriodData, high: bool):
    if high and pd.mp is not None:
        om = pd.mp["omega"]
        return np.array(om.tolist(), dtype=object), mpmath.det(om), mpmath.pi
    return pd.omega, np.linalg.det(pd.omega), np.pi


def image_value(img: rho.RhoImage, curve: HyperellipticCurve, pd: PeriodData, high: bool = False):
    """Numeric value of a rho image with the unresolved eighth root set to 1.

    Root differences are positive by construction (increasing real roots,
    normal ordering), so the quarter powers are the positive real roots.
    Returns a scalar, a g-vector (gradient part) or a g x g matrix (Hessian part).
    """
    g = curve.genus
    roots = curve.branch_points
    with mpmath.workdps(pd.digits + 5) if high else nullcontext():
        omega, det, pi = _period_arrays(pd, high)
        if high:
            e = [mpmath.mpf(r.numerator) / r.denominator for r in roots]
            scalar = mpmath.mpf(1)
            for (i, l), q in img.quarters:
                scalar *= (e[i] - e[l]) ** (mpmath.mpf(q) / 4)
            scalar *= mpmath.power(det / pi ** g, mpmath.mpf(img.omega_power.numerator) / img.omega_power.denominator)
            scalar *= (4j * pi) ** (-img.tau_order) * img.sign
        else:
            e = [float(r) for r in roots]
            scalar = 1.0
            for (i, l), q in img.quarters:
                scalar *= (e[i] - e[l]) ** (q / 4)
            scalar = complex(scalar) * complex(det / np.pi ** g) ** float(img.omega_power)
            scalar *= (4j * np.pi) ** (-img.tau_order) * img.sign
        out = scalar
        for kind, idx in img.parts:
            if kind == "grad":
                vec = np.array(rho.gradient_vector(idx, g, roots), dtype=object)
                vec = np.array([_num(x, high) for x in vec], dtype=object if high else complex)
                out = out * (omega @ vec)
            else:
                s = rho.s_matrix(idx, g, roots).tolist()
                s = np.array([[_num(x, high) for x in r] for r in s], dtype=object if high else complex)
                out = out * (omega @ s @ omega.T)
        return out


def _num(x, high):
    if high:
        return mpmath.mpf(x.numerator) / x.denominator if hasattr(x, "numerator") else mpmath.mpf(x)
    return float(x)


def _fit(lhs, rhs) -> tuple[complex, float]:
    """Least-squares scalar eps with lhs ~ eps rhs, and the relative residual."""
    a = np.asarray(lhs, dtype=complex).ravel()
    b = np.asarray(rhs, dtype=complex).ravel()
    eps = np.vdot(b, a) / np.vdot(b, b)
    res = float(np.linalg.norm(a - eps * b) / max(np.linalg.norm(a), 1e-300))
    return complex(eps), res


def _fit_stats(lhs, rhs, high: bool, digits: int = 15) -> dict:
    """eps, relative residual, ||eps| - 1| and |eps^8 - 1| for lhs ~ eps rhs."""
    if not high:
        eps, res = _fit(lhs, rhs)
        return {"eps": eps, "residual": res, "abs_dev": abs(abs(eps) - 1), "eighth_dev": abs(eps ** 8 - 1)}
    with mpmath.workdps(digits + 5):
        a = [mpmath.mpc(x) for x in np.asarray(lhs, dtype=object).ravel()]
        b = [mpmath.mpc(x) for x in np.asarray(rhs, dtype=object).ravel()]
        eps = mpmath.fsum(mpmath.conj(y) * x for x, y in zip(a, b)) / mpmath.fsum(abs(y) ** 2 for y in b)
        res = mpmath.sqrt(mpmath.fsum(abs(x - eps * y) ** 2 for x, y in zip(a, b)))
        res /= mpmath.sqrt(mpmath.fsum(abs(x) ** 2 for x in a))
        return {"eps": complex(eps), "residual": float(res), "abs_dev": float(abs(abs(eps) - 1)),
                "eighth_dev": float(abs(eps ** 8 - 1))}


# -- Thomae formulas -------------------------------------------------------

def verify_thomae(curve: HyperellipticCurve, order: int, chars=None, digits: int = 15,
                  tol: float = 1e-6, pd: PeriodData | None = None, strict: bool = True) -> dict:
    """Fit eps in the Thomae formula of the given order for each characteristic.

    order 1: theta constants of multiplicity 0; order 2: v-gradients at
    multiplicity 1; order 3: v-Hessians at multiplicity 2.  Vector and
    matrix formulas fit a single eps across all entries.
    """
    if order not in (1, 2, 3):
        raise DomainError("order must be 1, 2 or 3")
    g = curve.genus
    m = order - 1
    pd = pd or periods(curve, digits)
    high = digits > 15
    if high and pd.mp is None:
        raise DomainError("high-precision fit needs periods computed with digits > 15")
    ev = ThetaEvaluator(pd.mp["tau"], digits=digits) if high else evaluator(pd.tau)
    if chars is None:
        chars = [p for p in partition_table(g).values() if p.multiplicity == m]
    parts = [p if isinstance(p, PartitionChar) else partition_of_char(p) for p in chars]
    if not parts:
        raise DomainError(f"genus {g} has no characteristic of multiplicity {m}")
    image_of = {1: rho.rho_theta, 2: rho.rho_dtheta, 3: rho.rho_d2theta}[order]
    rows = []
    for p in parts:
        if p.multiplicity != m:
            raise DomainError(f"order {order} needs multiplicity {m}, got {p}")
        c = char_of_partition(p)
        lhs = {1: ev.value, 2: ev.gradient, 3: ev.hessian}[order](c)
        rhs = image_value(image_of(p), curve, pd, high)
        if order == 1:
            lhs, rhs = [lhs], [rhs]
        rows.append({"partition": str(p), "characteristic": str(c), **_fit_stats(lhs, rhs, high, digits)})
    eps0 = rows[0]["eps"]
    spread = max(abs(r["eps"] - eps0) for r in rows)
    worst = max(rows, key=lambda r: max(r["residual"], r["abs_dev"], r["eighth_dev"]))
    report = {
        "name": f"thomae_order{order}",
        "genus": g,
        "count": len(rows),
        "eps": _round_complex(eps0),
        "eps_constant": spread < tol,
        "eps_spread": spread,
        "max_residual": max(r["residual"] for r in rows),
        "max_abs_dev": max(r["abs_dev"] for r in rows),
        "max_eighth_dev": max(r["eighth_dev"] for r in rows),
        "worst": worst["partition"],
        "tolerance": tol,
        "rows": rows,
    }
    report["pass"] = max(report["max_residual"], report["max_abs_dev"], report["max_eighth_dev"]) < tol
    if strict and not report["pass"]:
        raise VerificationError(f"Thomae order {order} fails at {worst['partition']}", witness=worst)
    return report


def _round_complex(z: complex, nd: int = 12) -> complex:
    return complex(round(z.real, nd), round(z.imag, nd))


# -- vanishing, heat equation ----------------------------------------------

def vanishing_census(curve: HyperellipticCurve, rel: float = 1e-6, pd: PeriodData | None = None) -> dict:
    """Even theta constants below rel * max |even theta constant|."""
    pd = pd or periods(curve)
    ev = evaluator(pd.tau)
    vals = {c: abs(complex(ev.value(c))) for c in all_characteristics(curve.genus) if c.is_even}
    top = max(vals.values())
    small = sorted((c for c, v in vals.items() if v < rel * top), key=lambda c: c.code)
    singular = sorted((c for c in vals if partition_of_char(c).multiplicity >= 2), key=lambda c: c.code)
    nonzero_min = min(v for c, v in vals.items() if c not in small) / top
    return {
        "name": "vanishing",
        "genus": curve.genus,
        "vanishing": [str(partition_of_char(c)) for c in small],
        "count": len(small),
        "expected": len(singular),
        "matches_singular": small == singular,
        "max_vanishing_rel": max((vals[c] / top for c in small), default=0.0),
        "min_nonvanishing_rel": nonzero_min,
        "threshold": rel,
        "pass": small == singular,
    }


def heat_check(char: Characteristic, tau, v=None, tol: float = 1e-8) -> dict:
    """max |Hess_v theta - 4 i pi d_tau theta| relative to max |Hess_v theta|."""
    ev = evaluator(tau)
    h = ev.hessian(char, v)
    d = ev.tau_derivative(char, v)
    scale = max(np.abs(h).max(), 1e-300)
    res = float(np.abs(h - 4j * np.pi * d).max())
    rel = res / scale if np.abs(h).max() > 0 else res
    return {"name": "heat", "characteristic": str(char), "residual": rel, "absolute": res,
            "tolerance": tol, "pass": rel < tol or res < tol}


def tau_derivative_fd(char: Characteristic, tau, i: int, j: int, symmetric: bool, h0: float = 1e-3,
                      levels: int = 4) -> complex:
    """Finite-difference d theta / d tau_ij with Richardson extrapolation over step halving.

    ``symmetric`` moves tau_ij and tau_ji together; otherwise only tau_ij moves.
    """
    tau = np.asarray(tau, dtype=complex)
    g = tau.shape[0]
    e = np.zeros((g, g))
    e[i, j] = 1
    if symmetric and i != j:
        e[j, i] = 1
    zero = np.zeros(g)

    def val(t):
        # x^T t x only sees the symmetric part
        return complex(ThetaEvaluator((t + t.T) / 2).value(char, zero))

    table = []
    h = h0
    for _ in range(levels):
        table.append((val(tau + h * e) - val(tau - h * e)) / (2 * h))
        h /= 2
    # central differences have even error expansions: eliminate h^2, h^4, ...
    for k in range(1, levels):
        f = 4 ** k
        table = [(f * table[n + 1] - table[n]) / (f - 1) for n in range(len(table) - 1)]
    return table[0]


def heat_convention_check(char: Characteristic, tau, tol: float = 1e-6) -> dict:
    """Compare the series d_tau with finite differences under both entry conventions.

    Needs an even characteristic: odd ones vanish identically at v = 0.
    """
    if char.is_odd:
        raise DomainError("convention check needs an even characteristic")
    ev = evaluator(tau)
    series = ev.tau_derivative(char)
    h = ev.hessian(char)
    g = series.shape[0]
    out = {}
    for name, sym in (("independent", False), ("symmetric", True)):
        fd = np.array([[tau_derivative_fd(char, tau, i, j, sym) for j in range(g)] for i in range(g)])
        out[name] = {
            "fd_vs_series": float(np.abs(fd - series).max() / np.abs(series).max()),
            "heat_residual": float(np.abs(h - 4j * np.pi * fd).max() / np.abs(h).max()),
        }
    best = min(out, key=lambda k: out[k]["heat_residual"])
    return {"name": "heat_convention", "characteristic": str(char), "conventions": out, "chosen": best,
            "tolerance": tol, "pass": best == "independent" and out[best]["heat_residual"] < tol}


# -- modular transformations ----------------------------------------------

def _m_and_det(gamma: SymplecticElement, tau):
    m = gamma.automorphy(tau)
    return m, complex(np.linalg.det(m))


def _multiplier_stats(mults, residuals, tol, name, gamma, target):
    mults = [complex(x) for x in mults]
    report = {
        "name": f"transform_{target}",
        "gamma": gamma.matrix().tolist(),
        "multipliers": sorted({_round_complex(x, 8) for x in mults}, key=lambda z: (z.real, z.imag)),
        "max_abs_dev": max(abs(abs(x) - 1) for x in mults),
        "max_eighth_dev": max(abs(x ** 8 - 1) for x in mults),
        "max_residual": max(residuals),
        "tolerance": tol,
        "label": name,
    }
    report["pass"] = max(report["max_abs_dev"], report["max_eighth_dev"], report["max_residual"]) < tol
    return report


def transform_check(gamma: SymplecticElement, curve: HyperellipticCurve, target: str, tol: float = 1e-6,
                    pd: PeriodData | None = None, strict: bool = True) -> dict:
    """Fit the multiplier of a theta transformation law at a hyperelliptic tau.

    lemma_I2: Hess_v theta[gamma.eps](0; gamma<tau>) against
    det(c tau + d)^{1/2} (c tau + d) Hess_v theta[eps](0; tau) (c tau + d)^T
    for every singular even eps (theta[eps](0; tau) = 0 there).
    theorem_chi_monomial: the product of theta constants over every wholly
    even nonsingular rank-g system against det(c tau + d)^{4} times the product
    at tau, the system carried by gamma.
    """
    g = curve.genus
    pd = pd or periods(curve)
    tau = pd.tau
    tau2 = gamma.act(tau)
    tau2 = (tau2 + tau2.T) / 2
    ev, ev2 = evaluator(tau), evaluator(tau2)
    m, det = _m_and_det(gamma, tau)
    mults, residuals = [], []
    if target == "lemma_I2":
        sing = [char_of_partition(p) for p in partition_table(g).values() if p.multiplicity == 2]
        if not sing:
            raise DomainError(f"genus {g} has no singular even characteristic")
        for c in sing:
            lhs = ev2.hessian(gamma_action(gamma, c))
            rhs = np.sqrt(det) * m @ ev.hessian(c) @ m.T
            eps, res = _fit(lhs, rhs)
            mults.append(eps)
            residuals.append(res)
    elif target == "theorem_chi_monomial":
        d = 1 << g
        systems = [s for grp in goepel.enumerate_groups(g, g) for s in goepel.wholly_even_systems(grp)
                   if not s.singular()]
        vals = {c: complex(ev.value(c)) for c in all_characteristics(g) if c.is_even}
        vals2 = {c: complex(ev2.value(c)) for c in all_characteristics(g) if c.is_even}
        for s in systems:
            chars = s.elements
            lhs = np.prod([vals2[gamma_action(gamma, c)] for c in chars])
            rhs = det ** (d // 2) * np.prod([vals[c] for c in chars])
            mults.append(lhs / rhs)
            residuals.append(0.0)
    else:
        raise DomainError(f"unknown transformation target {target!r}")
    report = _multiplier_stats(mults, residuals, tol, f"genus {g}", gamma, target)
    if strict and not report["pass"]:
        raise VerificationError(f"transformation {target} fails", witness=report)
    return report


def generator_sweep(curve: HyperellipticCurve, target: str, tol: float = 1e-6, pd=None) -> list[dict]:
    pd = pd or periods(curve)
    gens = [identity_element(curve.genus)] + generators(curve.genus)
    return [transform_check(gam, curve, target, tol, pd, strict=False) for gam in gens]


# -- chi forms ---------------------------------------------------------------

def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    return float(np.abs(a - b).max() / np.abs(b).max())


def chi_forms(curve: HyperellipticCurve, which: str, tol: float = 1e-6, pd: PeriodData | None = None,
              strict: bool = True) -> dict:
    """Theta side against rho side for d_tau chi18 and d_tau chi4 (genus 3), or the
    vanishing of the ten singular factors of chi68 (genus 4)."""
    g = curve.genus
    pd = pd or periods(curve)
    ev = evaluator(pd.tau)
    if which == "chi68-partial":
        if g != 4:
            raise DomainError("chi68 lives in genus 4")
        evens = [c for c in all_characteristics(4) if c.is_even]
        top = max(abs(complex(ev.value(c))) for c in evens)
        sing = [c for c in evens if partition_of_char(c).multiplicity == 2]
        worst = max(abs(complex(ev.value(c))) for c in sing) / top
        report = {"name": "chi68_partial", "singular": len(sing), "max_singular_rel": worst,
                  "tolerance": tol, "pass": len(sing) == 10 and worst < tol}
    elif which in ("chi18", "chi4"):
        if g != 3:
            raise DomainError(f"{which} lives in genus 3")
        k = char_of_partition(PartitionChar.of(3, ()))
        dtau_sing = ev.hessian(k) / (4j * np.pi)
        vals = {c: complex(ev.value(c)) for c in all_characteristics(3) if c.is_even}
        if which == "chi18":
            families = [[c for c in vals]]
        else:
            families = [[char_of_partition(p) for p in s.partitions()]
                        for s in goepel.singular_systems(3, 3)]
        lhs_all, rhs_all, res = [], [], []
        for fam in families:
            lhs = dtau_sing * np.prod([vals[c] for c in fam if c != k])
            img = rho.rho_monomial([partition_of_char(c) for c in fam])
            rhs = image_value(img, curve, pd)
            lhs_all.append(lhs)
            rhs_all.append(rhs)
            res.append(_rel(lhs, rhs))
        mutual = max(_rel(x, lhs_all[0]) for x in lhs_all)
        eps, fit_res = _fit(lhs_all[0], rhs_all[0])
        report = {"name": f"dtau_{which}", "variants": len(families), "max_residual": max(res),
                  "mutual_spread": mutual, "fitted_multiplier": _round_complex(eps), "fit_residual": fit_res,
                  "tolerance": tol, "pass": max(res) < tol and mutual < max(tol / 100, 1e-8)}
    else:
        raise DomainError(f"unknown form {which!r}")
    if strict and not report["pass"]:
        raise VerificationError(f"{which} check fails", witness=report)
    return report
