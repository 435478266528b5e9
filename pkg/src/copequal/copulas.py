"""Parametric copula families: evaluation, sampling, Kendall-tau targeting.

Supported families
------------------
independence, gaussian, student_t, clayton, frank, gumbel,
sym_joe_clayton (two tail-dependence parameters, bivariate only),
plackett (bivariate only).

Gaussian and Student-t use an exchangeable correlation matrix for d > 2.
All cdf evaluations are exact closed forms except the elliptical families,
which use deterministic quadrature in d = 2 and scipy's numeric integrators
for d > 2 (values are clipped into the Frechet envelope, which every copula
satisfies exactly, so clipping can only reduce numeric error).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special, stats
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, ParameterDomainError

__all__ = [
    "FAMILIES",
    "CopulaSpec",
    "cdf",
    "sample",
    "tau_to_params",
    "population_tau",
    "spec_to_json",
    "spec_from_json",
]

FAMILIES = (
    "independence",
    "gaussian",
    "student_t",
    "clayton",
    "frank",
    "gumbel",
    "sym_joe_clayton",
    "plackett",
)

_ALIASES = {
    "indep": "independence",
    "normal": "gaussian",
    "student": "student_t",
    "student-t": "student_t",
    "studentt": "student_t",
    "t": "student_t",
    "sjc": "sym_joe_clayton",
    "sym-jc": "sym_joe_clayton",
    "symjoeclayton": "sym_joe_clayton",
}

_BIVARIATE_ONLY = ("sym_joe_clayton", "plackett")

_PARAM_COUNT = {
    "independence": 0,
    "gaussian": 1,
    "student_t": 2,
    "clayton": 1,
    "frank": 1,
    "gumbel": 1,
    "sym_joe_clayton": 2,
    "plackett": 1,
}


def canonical_family(name: str) -> str:
    key = str(name).strip().lower().replace(" ", "_")
    key = _ALIASES.get(key, key)
    if key not in FAMILIES:
        raise ParameterDomainError(f"unknown copula family {name!r}")
    return key


@dataclass(frozen=True)
class CopulaSpec:
    """A copula family plus its parameters and dimension."""

    family: str
    params: tuple[float, ...] = ()
    dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "family", canonical_family(self.family))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        object.__setattr__(self, "dim", int(self.dim))
        _validate(self)


def _validate(spec: CopulaSpec) -> None:
    fam, p, d = spec.family, spec.params, spec.dim
    if d < 2:
        raise ParameterDomainError(f"dim must be >= 2, got {d}")
    if fam in _BIVARIATE_ONLY and d != 2:
        raise ParameterDomainError(f"{fam} supports d = 2 only, got d = {d}")
    if len(p) != _PARAM_COUNT[fam]:
        raise ParameterDomainError(
            f"{fam} takes {_PARAM_COUNT[fam]} parameter(s), got {len(p)}"
        )
    if any(not math.isfinite(v) for v in p):
        raise ParameterDomainError(f"{fam} parameters must be finite, got {p}")
    if fam == "gaussian":
        _check_rho(p[0], d)
    elif fam == "student_t":
        _check_rho(p[0], d)
        if p[1] <= 0:
            raise ParameterDomainError(f"student_t needs nu > 0, got {p[1]}")
    elif fam == "clayton":
        if p[0] <= 0:
            raise ParameterDomainError(f"clayton needs theta > 0, got {p[0]}")
    elif fam == "frank":
        if p[0] == 0:
            raise ParameterDomainError("frank needs theta != 0")
        if d > 2 and p[0] < 0:
            raise ParameterDomainError("frank with d > 2 needs theta > 0")
    elif fam == "gumbel":
        if p[0] < 1:
            raise ParameterDomainError(f"gumbel needs theta >= 1, got {p[0]}")
    elif fam == "sym_joe_clayton":
        if not (0 < p[0] < 1 and 0 < p[1] < 1):
            raise ParameterDomainError(
                f"sym_joe_clayton tail parameters must lie in (0, 1), got {p}"
            )
    elif fam == "plackett":
        if p[0] <= 0:
            raise ParameterDomainError(f"plackett needs theta > 0, got {p[0]}")


def _check_rho(rho: float, d: int) -> None:
    lo = -1.0 / (d - 1)
    if not (lo < rho < 1.0):
        raise ParameterDomainError(
            f"exchangeable correlation must lie in ({lo:.4g}, 1) for d={d}, got {rho}"
        )


# ---------------------------------------------------------------------------
# deterministic bivariate normal / t cdfs (Gauss-Legendre quadrature)
# ---------------------------------------------------------------------------

_GL64 = leggauss(64)
_GL96 = leggauss(96)


def _bvn_cdf(x, y, rho: float):
    """P(Z1 <= x, Z2 <= y) for standard bivariate normal with correlation rho.

    Uses the identity d/drho Phi2 = bivariate density, integrated along
    rho(phi) = sin(phi) so the integrand stays smooth up to |rho| -> 1.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    base = special.ndtr(x) * special.ndtr(y)
    if rho == 0.0:
        return base
    upper = math.asin(rho)
    nodes, weights = _GL64
    phi = 0.5 * upper * (nodes + 1.0)  # signed interval [0, asin(rho)]
    w = 0.5 * upper * weights
    sin_phi = np.sin(phi)
    cos2 = np.cos(phi) ** 2
    xx = x[..., None]
    yy = y[..., None]
    expo = -(xx**2 - 2.0 * xx * yy * sin_phi + yy**2) / (2.0 * cos2)
    corr = (np.exp(expo) * w).sum(axis=-1) / (2.0 * math.pi)
    return base + corr


def _bvt_cdf(x, y, rho: float, nu: float):
    """Bivariate Student-t cdf via its normal scale-mixture representation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nodes, weights = _GL96
    s = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    q = stats.chi2.ppf(s, df=nu)
    scale = np.sqrt(q / nu)
    vals = _bvn_cdf(x[..., None] * scale, y[..., None] * scale, rho)
    return (vals * w).sum(axis=-1)


# ---------------------------------------------------------------------------
# cdf
# ---------------------------------------------------------------------------


def _frechet_clip(c, u):
    lower = np.maximum(u.sum(axis=-1) - (u.shape[-1] - 1), 0.0)
    upper = u.min(axis=-1)
    return np.clip(c, lower, upper)


def _cdf_many(spec: CopulaSpec, u: np.ndarray) -> np.ndarray:
    """Vectorized cdf over rows of u (shape (k, d)); no boundary short-cuts."""
    fam = spec.family
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if fam == "independence":
            return u.prod(axis=-1)
        if fam == "gaussian":
            rho = spec.params[0]
            x = special.ndtri(u)
            if spec.dim == 2:
                c = _bvn_cdf(x[..., 0], x[..., 1], rho)
            else:
                cov = np.full((spec.dim, spec.dim), rho)
                np.fill_diagonal(cov, 1.0)
                c = stats.multivariate_normal.cdf(
                    x, mean=np.zeros(spec.dim), cov=cov, abseps=1e-10, releps=0.0
                )
            return _frechet_clip(c, u)
        if fam == "student_t":
            rho, nu = spec.params
            x = special.stdtrit(nu, u)
            if spec.dim == 2:
                c = _bvt_cdf(x[..., 0], x[..., 1], rho, nu)
            else:
                cov = np.full((spec.dim, spec.dim), rho)
                np.fill_diagonal(cov, 1.0)
                c = stats.multivariate_t.cdf(
                    x,
                    loc=np.zeros(spec.dim),
                    shape=cov,
                    df=nu,
                    random_state=np.random.default_rng(0),
                )
            return _frechet_clip(c, u)
        if fam == "clayton":
            theta = spec.params[0]
            s = (u ** (-theta)).sum(axis=-1) - (u.shape[-1] - 1)
            return s ** (-1.0 / theta)
        if fam == "frank":
            theta = spec.params[0]
            em1 = math.expm1(-theta)
            t = -np.log(np.expm1(-theta * u) / em1).sum(axis=-1)
            return -np.log1p(em1 * np.exp(-t)) / theta
        if fam == "gumbel":
            theta = spec.params[0]
            s = ((-np.log(u)) ** theta).sum(axis=-1)
            return np.exp(-(s ** (1.0 / theta)))
        if fam == "plackett":
            return _plackett_cdf(u[..., 0], u[..., 1], spec.params[0])
        if fam == "sym_joe_clayton":
            return _sjc_cdf(u[..., 0], u[..., 1], *spec.params)
    raise AssertionError(fam)


def cdf(spec: CopulaSpec, u) -> float:
    """Copula cdf C(u) at a single point of the unit cube.

    Boundary identities (grounded at 0, uniform margins, pinned at 1) are
    returned exactly rather than through the numeric evaluators.
    """
    point = np.asarray(u, dtype=float)
    if point.shape != (spec.dim,):
        raise DomainError(f"point has shape {point.shape}, expected ({spec.dim},)")
    if np.any(point < 0.0) or np.any(point > 1.0):
        raise DomainError(f"point {point} lies outside the unit cube")
    if np.any(point == 0.0):
        return 0.0
    interior = point < 1.0
    k = int(interior.sum())
    if k == 0:
        return 1.0
    if k == 1:
        return float(point[interior][0])
    if k < spec.dim:
        # lower-dimensional margin of an exchangeable / Archimedean family
        sub = _margin_spec(spec, k)
        return float(np.clip(_cdf_many(sub, point[interior][None, :])[0], 0.0, 1.0))
    return float(np.clip(_cdf_many(spec, point[None, :])[0], 0.0, 1.0))


def _margin_spec(spec: CopulaSpec, k: int) -> CopulaSpec:
    """The k-variate margin of spec (all families here are exchangeable)."""
    if k == 1:
        raise AssertionError("handled by caller")
    return CopulaSpec(spec.family, spec.params, dim=k)


def _plackett_cdf(u, v, theta: float):
    if theta == 1.0:
        return u * v
    s = 1.0 + (theta - 1.0) * (u + v)
    disc = s**2 - 4.0 * theta * (theta - 1.0) * u * v
    r = np.sqrt(np.maximum(disc, 0.0))
    return (s - r) / (2.0 * (theta - 1.0))


def _plackett_du(u, v, theta: float):
    """dC/du for the Plackett copula (conditional cdf of V given U=u)."""
    if theta == 1.0:
        return np.broadcast_arrays(np.asarray(v, dtype=float), u)[0].copy()
    s = 1.0 + (theta - 1.0) * (u + v)
    r = np.sqrt(np.maximum(s**2 - 4.0 * theta * (theta - 1.0) * u * v, 1e-300))
    return 0.5 * (1.0 - (s - 2.0 * theta * v) / r)


def _sjc_kappa_gamma(lam_u: float, lam_l: float) -> tuple[float, float]:
    kappa = 1.0 / math.log2(2.0 - lam_u)
    gamma = -1.0 / math.log2(lam_l)
    return kappa, gamma


def _jc_cdf(u, v, kappa: float, gamma: float):
    x = 1.0 - (1.0 - u) ** kappa
    y = 1.0 - (1.0 - v) ** kappa
    with np.errstate(divide="ignore", over="ignore"):
        t = x ** (-gamma) + y ** (-gamma) - 1.0
        inner = np.where(np.isfinite(t), t ** (-1.0 / gamma), 0.0)
    return 1.0 - (1.0 - inner) ** (1.0 / kappa)


def _jc_du(u, v, kappa: float, gamma: float):
    """dC/du of the Joe-Clayton copula; valid on the open square."""
    x = 1.0 - (1.0 - u) ** kappa
    y = 1.0 - (1.0 - v) ** kappa
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        t = x ** (-gamma) + y ** (-gamma) - 1.0
        tg = np.where(np.isfinite(t), t ** (-1.0 / gamma), 0.0)
        out = (
            (1.0 - tg) ** (1.0 / kappa - 1.0)
            * np.where(np.isfinite(t), t ** (-1.0 / gamma - 1.0), 0.0)
            * x ** (-gamma - 1.0)
            * (1.0 - u) ** (kappa - 1.0)
        )
    return np.nan_to_num(out, nan=0.0, posinf=1.0, neginf=0.0)


def _sjc_cdf(u, v, lam_u: float, lam_l: float):
    kappa, gamma = _sjc_kappa_gamma(lam_u, lam_l)
    return 0.5 * (
        _jc_cdf(u, v, kappa, gamma) + u + v - 1.0 + _jc_cdf(1.0 - u, 1.0 - v, kappa, gamma)
    )


def _sjc_du(u, v, lam_u: float, lam_l: float):
    kappa, gamma = _sjc_kappa_gamma(lam_u, lam_l)
    return np.clip(
        0.5 * (_jc_du(u, v, kappa, gamma) + 1.0 - _jc_du(1.0 - u, 1.0 - v, kappa, gamma)),
        0.0,
        1.0,
    )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample(spec: CopulaSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. points in [0,1]^d whose joint law has copula ``spec``.

    Deterministic given the generator state; the generator is advanced.
    """
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    fam, d = spec.family, spec.dim
    if fam == "independence":
        return rng.random((n, d))
    if fam == "gaussian":
        z = _exchangeable_normal(spec.params[0], d, n, rng)
        return special.ndtr(z)
    if fam == "student_t":
        rho, nu = spec.params
        z = _exchangeable_normal(rho, d, n, rng)
        w = rng.chisquare(nu, size=n)
        w = np.maximum(w, 1e-300)
        t = z / np.sqrt(w / nu)[:, None]
        return special.stdtr(nu, t)
    if fam == "clayton":
        theta = spec.params[0]
        v = rng.gamma(1.0 / theta, 1.0, size=n)
        v = np.maximum(v, 1e-300)
        e = rng.exponential(1.0, size=(n, d))
        return (1.0 + e / v[:, None]) ** (-1.0 / theta)
    if fam == "gumbel":
        theta = spec.params[0]
        if theta == 1.0:
            return rng.random((n, d))
        v = _positive_stable(1.0 / theta, n, rng)
        e = rng.exponential(1.0, size=(n, d))
        return np.exp(-((e / v[:, None]) ** (1.0 / theta)))
    if fam == "frank":
        theta = spec.params[0]
        if d == 2:
            return _frank_pair(theta, n, rng)
        p = -math.expm1(-theta)
        v = stats.logser.rvs(p, size=n, random_state=rng).astype(float)
        e = rng.exponential(1.0, size=(n, d))
        em1 = math.expm1(-theta)
        return -np.log1p(em1 * np.exp(-e / v[:, None])) / theta
    if fam == "plackett":
        return _plackett_pair(spec.params[0], n, rng)
    if fam == "sym_joe_clayton":
        return _conditional_pair(
            lambda uu, vv: _sjc_du(uu, vv, *spec.params), n, rng
        )
    raise AssertionError(fam)


def _exchangeable_normal(rho: float, d: int, n: int, rng) -> np.ndarray:
    cov = np.full((d, d), rho)
    np.fill_diagonal(cov, 1.0)
    chol = np.linalg.cholesky(cov)
    return rng.standard_normal((n, d)) @ chol.T


def _positive_stable(alpha: float, n: int, rng) -> np.ndarray:
    """One-sided stable draws with Laplace transform exp(-t^alpha), 0<alpha<1."""
    t = (rng.random(n) * (1.0 - 2e-12) + 1e-12) * math.pi
    w = np.maximum(rng.exponential(1.0, size=n), 1e-300)
    frac = (1.0 - alpha) / alpha
    return (
        np.sin(alpha * t)
        / np.sin(t) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * t) / w) ** frac
    )


def _frank_pair(theta: float, n: int, rng) -> np.ndarray:
    """Bivariate Frank via closed-form conditional inversion (any theta != 0)."""
    u = rng.random(n)
    w = rng.random(n)
    a = np.exp(-theta * u)
    num = a * (1.0 - w) + w * math.exp(-theta)
    den = a * (1.0 - w) + w
    v = -(np.log(num) - np.log(den)) / theta
    return np.column_stack([u, v])


def _plackett_pair(theta: float, n: int, rng) -> np.ndarray:
    u = rng.random(n)
    t = rng.random(n)
    a = t * (1.0 - t)
    b = theta + a * (theta - 1.0) ** 2
    cc = 2.0 * a * (u * theta**2 + 1.0 - u) + theta * (1.0 - 2.0 * a)
    dd = math.sqrt(theta) * np.sqrt(theta + 4.0 * a * u * (1.0 - u) * (1.0 - theta) ** 2)
    v = (cc - (1.0 - 2.0 * t) * dd) / (2.0 * b)
    return np.column_stack([u, np.clip(v, 0.0, 1.0)])


def _conditional_pair(du_fn, n: int, rng, iters: int = 60) -> np.ndarray:
    """Sample (U, V) by bisection on the conditional cdf v -> dC/du(u, v)."""
    u = np.clip(rng.random(n), 1e-12, 1.0 - 1e-12)
    w = rng.random(n)
    lo = np.zeros(n)
    hi = np.ones(n)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = du_fn(u, mid) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.column_stack([u, 0.5 * (lo + hi)])


# ---------------------------------------------------------------------------
# Kendall's tau <-> parameters
# ---------------------------------------------------------------------------

_GL128 = leggauss(128)


def _debye1(theta: float) -> float:
    """First Debye function D1(theta) = (1/theta) * int_0^theta t/(e^t - 1) dt."""

    def integrand(t):
        return 1.0 if t == 0.0 else t / math.expm1(t)

    val, _ = quad(integrand, 0.0, theta, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val / theta


def _frank_tau(theta: float) -> float:
    if theta == 0.0:
        return 0.0
    return 1.0 - 4.0 / theta * (1.0 - _debye1(theta))


def _tau_by_quadrature(du_fn) -> float:
    """tau = 1 - 4 * int int dC/du * dC/dv for an exchangeable copula."""
    nodes, weights = _GL128
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    uu, vv = np.meshgrid(t, t, indexing="ij")
    d1 = du_fn(uu, vv)
    d2 = du_fn(vv, uu)  # exchangeability: dC/dv (u,v) = dC/du (v,u)
    integral = float(w @ (d1 * d2) @ w)
    return 1.0 - 4.0 * integral


def population_tau(spec: CopulaSpec) -> float:
    """Population Kendall's tau of a bivariate margin of the family."""
    fam, p = spec.family, spec.params
    if fam == "independence":
        return 0.0
    if fam in ("gaussian", "student_t"):
        return 2.0 / math.pi * math.asin(p[0])
    if fam == "clayton":
        return p[0] / (p[0] + 2.0)
    if fam == "gumbel":
        return 1.0 - 1.0 / p[0]
    if fam == "frank":
        return _frank_tau(p[0])
    if fam == "plackett":
        return _tau_by_quadrature(lambda u, v: _plackett_du(u, v, p[0]))
    if fam == "sym_joe_clayton":
        return _tau_by_quadrature(lambda u, v: _sjc_du(u, v, *p))
    raise AssertionError(fam)


def tau_to_params(family: str, tau: float, *, dim: int = 2, nu: float = 4.0) -> CopulaSpec:
    """Build a spec whose population Kendall's tau equals ``tau``.

    Closed forms where they exist; Frank inverts the Debye relation and
    Plackett / sym_joe_clayton invert a quadrature tau functional by root
    bracketing (inversion tolerance 1e-6 on tau).  For sym_joe_clayton the
    two tail parameters are constrained equal.
    """
    fam = canonical_family(family)
    if not -1.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (-1, 1), got {tau}")
    if fam == "independence":
        if tau != 0.0:
            raise DomainError("independence copula has tau = 0")
        return CopulaSpec(fam, (), dim)
    if fam == "gaussian":
        return CopulaSpec(fam, (math.sin(math.pi * tau / 2.0),), dim)
    if fam == "student_t":
        return CopulaSpec(fam, (math.sin(math.pi * tau / 2.0), float(nu)), dim)
    if fam == "clayton":
        if tau <= 0.0:
            raise DomainError(f"clayton requires tau > 0, got {tau}")
        return CopulaSpec(fam, (2.0 * tau / (1.0 - tau),), dim)
    if fam == "gumbel":
        if tau <= 0.0:
            raise DomainError(f"gumbel requires tau > 0, got {tau}")
        return CopulaSpec(fam, (1.0 / (1.0 - tau),), dim)
    if fam == "frank":
        if tau == 0.0:
            raise DomainError("frank is undefined at tau = 0 (theta = 0)")
        theta = _invert_tau(_frank_tau, abs(tau), 1e-8, 500.0, "frank")
        return CopulaSpec(fam, (math.copysign(theta, tau),), dim)
    if fam == "plackett":
        if tau == 0.0:
            return CopulaSpec(fam, (1.0,), dim)
        fn = lambda th: _tau_by_quadrature(lambda u, v: _plackett_du(u, v, th))
        log_theta = _invert_tau(
            lambda lt: fn(math.exp(lt)), tau, -30.0, 30.0, "plackett"
        )
        return CopulaSpec(fam, (math.exp(log_theta),), dim)
    if fam == "sym_joe_clayton":
        if tau <= 0.0:
            raise DomainError(f"sym_joe_clayton requires tau > 0, got {tau}")
        fn = lambda lam: _tau_by_quadrature(lambda u, v: _sjc_du(u, v, lam, lam))
        lam = _invert_tau(fn, tau, 1e-4, 1.0 - 1e-4, "sym_joe_clayton")
        return CopulaSpec(fam, (lam, lam), dim)
    raise AssertionError(fam)


def _invert_tau(tau_fn, target: float, lo: float, hi: float, label: str) -> float:
    f_lo = tau_fn(lo) - target
    f_hi = tau_fn(hi) - target
    if f_lo * f_hi > 0:
        raise ConvergenceError(
            f"{label}: tau={target} not bracketed on [{lo}, {hi}] "
            f"(f(lo)={f_lo:.3g}, f(hi)={f_hi:.3g})"
        )
    try:
        root = brentq(lambda x: tau_fn(x) - target, lo, hi, xtol=1e-13, rtol=1e-15)
    except (ValueError, RuntimeError) as exc:  # pragma: no cover
        raise ConvergenceError(f"{label}: tau inversion failed: {exc}") from exc
    if abs(tau_fn(root) - target) > 1e-6:
        raise ConvergenceError(
            f"{label}: inversion residual {abs(tau_fn(root) - target):.3g} exceeds 1e-6"
        )
    return root


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def spec_to_json(spec: CopulaSpec) -> dict:
    return {"family": spec.family, "params": list(spec.params), "dim": spec.dim}


def spec_from_json(obj: dict) -> CopulaSpec:
    try:
        return CopulaSpec(obj["family"], tuple(obj.get("params", ())), int(obj.get("dim", 2)))
    except KeyError as exc:
        raise ParameterDomainError(f"copula spec missing field {exc}") from exc
