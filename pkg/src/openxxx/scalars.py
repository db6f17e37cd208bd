"""Scalar functions of the spectral problem.

Vacuum eigenvalues, the dressed alpha/delta coefficients, the transfer-matrix
eigenvalue Lambda(u) parametrized by Bethe roots, the Bethe-equation residuals
BE_k, the off-shell factor F, and the twelve exchange-relation structure
functions.  All are rational; every evaluation is guarded against its poles
with an absolute epsilon of ``model.POLE_EPS`` on the offending linear factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError, PoleError
from .model import POLE_EPS, ModelParams

# Probe points at which Lambda is evaluated to fingerprint a root set for
# deduplication, plus fallbacks used when a probe collides with a pole.
SIGNATURE_PROBES = (0.3 + 0.0j, 1.1 + 0.7j, -2.4 + 0.0j)
FALLBACK_PROBES = (
    0.77 + 0.23j,
    -1.9 + 1.3j,
    2.6 - 0.41j,
    0.15 - 1.2j,
    3.3 + 0.9j,
    -0.85 + 2.1j,
    1.9 + 1.9j,
    -3.1 - 0.7j,
)

# Separation below which two roots (or a root and a reflection partner) are
# considered degenerate and the set is rejected.
ROOT_SEPARATION = 1e-8


def _guard(factor: complex, description: str) -> complex:
    if abs(factor) < POLE_EPS:
        raise PoleError(f"pole guard: |{description}| = {abs(factor):.2e} < {POLE_EPS}")
    return factor


def lambda1(u, params: ModelParams) -> complex:
    """Vacuum eigenvalue of the A entry: (u+p) prod_j ((u+1)^2 - theta_j^2)."""
    u = complex(u)
    out = u + params.p
    for t in params.theta:
        out *= (u + 1) ** 2 - t ** 2
    return out


def lambda2(u, params: ModelParams) -> complex:
    """Vacuum eigenvalue of the D entry: (2u/(2u+1))(p-u-1) prod_j (u^2 - theta_j^2)."""
    u = complex(u)
    _guard(2 * u + 1, "2u+1")
    out = (2 * u / (2 * u + 1)) * (params.p - u - 1)
    for t in params.theta:
        out *= u ** 2 - t ** 2
    return out


def alpha_bar(u, params: ModelParams) -> complex:
    u = complex(u)
    _guard(2 * u + 1, "2u+1")
    return (2 * (u + 1) / (2 * u + 1)) * ((1 - params.rho) * u + params.q)


def delta_bar(u, params: ModelParams) -> complex:
    u = complex(u)
    return params.q - (u + 1) * (1 - params.rho)


def alpha_bar_diag(u, params: ModelParams) -> complex:
    """rho -> 0 limit of alpha_bar."""
    u = complex(u)
    _guard(2 * u + 1, "2u+1")
    return 2 * (u + 1) * (u + params.q) / (2 * u + 1)


def delta_bar_diag(u, params: ModelParams) -> complex:
    u = complex(u)
    return params.q - u - 1


def F_factor(u, lam) -> complex:
    """Off-shell coefficient F(u, lambda) = (u+1)/((u+lambda+1)(lambda-u)(lambda+1))."""
    u, lam = complex(u), complex(lam)
    _guard(u + lam + 1, "u+lambda+1")
    _guard(lam - u, "lambda-u")
    _guard(lam + 1, "lambda+1")
    return (u + 1) / ((u + lam + 1) * (lam - u) * (lam + 1))


# --- Appendix structure functions -------------------------------------------
# The last two are named q_f, p_f to avoid colliding with the boundary
# strengths p and q.

def _f(u, v):
    _guard(u - v, "u-v")
    _guard(u + v + 1, "u+v+1")
    return (u - v - 1) * (u + v) / ((u - v) * (u + v + 1))


def _h(u, v):
    _guard(u - v, "u-v")
    _guard(u + v + 1, "u+v+1")
    return (u - v + 1) * (u + v + 2) / ((u - v) * (u + v + 1))


def _w(u, v):
    _guard(u + v + 1, "u+v+1")
    return -1 / (u + v + 1)


def _g(u, v):
    _guard(2 * v + 1, "2v+1")
    _guard(u - v, "u-v")
    return 2 * v / ((2 * v + 1) * (u - v))


def _k(u, v):
    _guard(u - v, "u-v")
    _guard(2 * u + 1, "2u+1")
    return -2 * (u + 1) / ((u - v) * (2 * u + 1))


def _n(u, v):
    _guard(u + v + 1, "u+v+1")
    _guard(2 * v + 1, "2v+1")
    _guard(2 * u + 1, "2u+1")
    return 4 * v * (u + 1) / ((u + v + 1) * (2 * v + 1) * (2 * u + 1))


def _m(u, v):
    _guard(2 * u + 1, "2u+1")
    _guard(u + v + 1, "u+v+1")
    _guard(u - v, "u-v")
    return 2 * u * (u - v + 1) / ((2 * u + 1) * (u + v + 1) * (u - v))


def _l(u, v):
    _guard(2 * u + 1, "2u+1")
    _guard(2 * v + 1, "2v+1")
    _guard(u - v, "u-v")
    return -2 * u / ((2 * u + 1) * (2 * v + 1) * (u - v))


def _q_f(u, v):
    _guard(u + v + 1, "u+v+1")
    _guard(u - v, "u-v")
    return (u + v) / ((u + v + 1) * (u - v))


def _p_f(u, v):
    _guard(2 * u + 1, "2u+1")
    _guard(u - v, "u-v")
    return -2 * u / ((2 * u + 1) * (u - v))


def _y(u, v):
    _guard(u + v + 1, "u+v+1")
    _guard(2 * v + 1, "2v+1")
    return -1 / ((u + v + 1) * (2 * v + 1))


def _z(u, v):
    _guard(u + v + 1, "u+v+1")
    return -1 / (u + v + 1)


STRUCTURE_FUNCTIONS = {
    "f": _f, "g": _g, "w": _w, "h": _h, "k": _k, "n": _n,
    "m": _m, "l": _l, "q_f": _q_f, "p_f": _p_f, "y": _y, "z": _z,
}

_ALIASES = {"q": "q_f", "p": "p_f"}


def structure_fn(name: str, u, v) -> complex:
    """Evaluate an exchange-relation structure function by name."""
    key = _ALIASES.get(name, name)
    try:
        fn = STRUCTURE_FUNCTIONS[key]
    except KeyError:
        raise ParameterError(f"unknown structure function {name!r}") from None
    return fn(complex(u), complex(v))


# --- eigenvalue and Bethe residuals ------------------------------------------

def _root_values(roots) -> tuple:
    values = getattr(roots, "roots", roots)
    return tuple(complex(v) for v in values)


def _guard_eigenvalue_point(u, lams, params) -> complex:
    u = complex(u)
    _guard(2 * u + 1, "2u+1")
    _guard(u + params.p, "u+p")
    _guard(params.p - u - 1, "p-u-1")
    for lam in lams:
        _guard(u - lam, "u-lambda_j")
        _guard(u + lam + 1, "u+lambda_j+1")
    return u


def eigenvalue_Lambda(u, roots, params: ModelParams) -> complex:
    """Transfer-matrix eigenvalue at ``u`` for the given Bethe roots.

    Three-term form: dressed alpha/delta terms plus the rho-proportional
    inhomogeneous term.  Valid off shell (arbitrary roots).
    """
    lams = _root_values(roots)
    u = _guard_eigenvalue_point(u, lams, params)
    t1 = alpha_bar(u, params) * lambda1(u, params)
    t2 = delta_bar(u, params) * lambda2(u, params)
    t3 = (
        params.rho
        * (u + 1) * (2 * u + 1) / ((u + params.p) * (params.p - u - 1))
        * lambda1(u, params) * lambda2(u, params)
    )
    for lam in lams:
        t1 *= _f(u, lam)
        t2 *= _h(u, lam)
        t3 /= (u - lam) * (u + lam + 1)
    return t1 + t2 + t3


def eigenvalue_Lambda_diag(u, roots, params: ModelParams) -> complex:
    """Diagonal-boundary part of the eigenvalue (rho set to 0, same roots)."""
    lams = _root_values(roots)
    u = _guard_eigenvalue_point(u, lams, params)
    t1 = alpha_bar_diag(u, params) * lambda1(u, params)
    t2 = delta_bar_diag(u, params) * lambda2(u, params)
    for lam in lams:
        t1 *= _f(u, lam)
        t2 *= _h(u, lam)
    return t1 + t2


def eigenvalue_Lambda_gen(u, roots, params: ModelParams) -> complex:
    """Coefficient of rho in the eigenvalue split Lambda = Lambda_diag + rho * Lambda_gen."""
    lams = _root_values(roots)
    u = _guard_eigenvalue_point(u, lams, params)
    t1 = -(2 * u * (u + 1) / (2 * u + 1)) * lambda1(u, params)
    t2 = (u + 1) * lambda2(u, params)
    t3 = (
        (u + 1) * (2 * u + 1) / ((u + params.p) * (params.p - u - 1))
        * lambda1(u, params) * lambda2(u, params)
    )
    for lam in lams:
        t1 *= _f(u, lam)
        t2 *= _h(u, lam)
        t3 /= (u - lam) * (u + lam + 1)
    return t1 + t2 + t3


def _be_terms(k: int, lams, params: ModelParams, diag_coeffs: bool):
    lk = lams[k]
    _guard(2 * lk + 1, "2lambda_k+1")
    _guard(lk + params.p, "lambda_k+p")
    _guard(params.p - lk - 1, "p-lambda_k-1")
    others = [lam for j, lam in enumerate(lams) if j != k]
    if diag_coeffs:
        a, d = alpha_bar_diag(lk, params), delta_bar_diag(lk, params)
    else:
        a, d = alpha_bar(lk, params), delta_bar(lk, params)
    t1 = -2 * lk * a * lambda1(lk, params)
    t2 = 2 * (lk + 1) * d * lambda2(lk, params)
    t3 = (
        (lk + 1) * (2 * lk + 1) / ((lk + params.p) * (params.p - lk - 1))
        * lambda1(lk, params) * lambda2(lk, params)
    )
    for lam in others:
        t1 *= _f(lk, lam)
        t2 *= _h(lk, lam)
        t3 /= (lk - lam) * (lk + lam + 1)
    return t1, t2, t3


def bethe_terms(k: int, roots, params: ModelParams) -> tuple[complex, complex, complex]:
    """The three addends of BE_k; their magnitudes set the natural residual scale."""
    lams = _root_values(roots)
    t1, t2, t3 = _be_terms(k, lams, params, diag_coeffs=False)
    return t1, t2, params.rho * t3


def bethe_residual(k: int, roots, params: ModelParams) -> complex:
    """BE_k in the printed normalization; zero on shell."""
    t1, t2, t3 = bethe_terms(k, roots, params)
    return t1 + t2 + t3


def bethe_residual_diag(k: int, roots, params: ModelParams) -> complex:
    lams = _root_values(roots)
    t1, t2, _ = _be_terms(k, lams, params, diag_coeffs=True)
    return t1 + t2


def bethe_residual_gen(k: int, roots, params: ModelParams) -> complex:
    """Coefficient of rho in BE_k = BE_k_diag + rho * BE_k_gen."""
    lams = _root_values(roots)
    lk = lams[k]
    _guard(2 * lk + 1, "2lambda_k+1")
    _guard(lk + params.p, "lambda_k+p")
    _guard(params.p - lk - 1, "p-lambda_k-1")
    others = [lam for j, lam in enumerate(lams) if j != k]
    t1 = (4 * lk ** 2 * (lk + 1) / (2 * lk + 1)) * lambda1(lk, params)
    t2 = 2 * (lk + 1) ** 2 * lambda2(lk, params)
    t3 = (
        (lk + 1) * (2 * lk + 1) / ((lk + params.p) * (params.p - lk - 1))
        * lambda1(lk, params) * lambda2(lk, params)
    )
    for lam in others:
        t1 *= _f(lk, lam)
        t2 *= _h(lk, lam)
        t3 /= (lk - lam) * (lk + lam + 1)
    return t1 + t2 + t3


def normalized_be_residual(roots, params: ModelParams) -> float:
    """max_k |BE_k| scaled by the largest of its three addends (floored at 1)."""
    lams = _root_values(roots)
    worst = 0.0
    for k in range(len(lams)):
        t1, t2, t3 = bethe_terms(k, lams, params)
        scale = max(abs(t1), abs(t2), abs(t3), 1.0)
        worst = max(worst, abs(t1 + t2 + t3) / scale)
    return worst


# --- root sets ----------------------------------------------------------------

def root_guard_centers(params: ModelParams) -> tuple:
    """Points no admissible Bethe root may approach.

    0 and -1 are identically-vanishing points of BE_k (spurious attractors);
    -1/2, -p, p-1 are poles of the residual; +-theta_j degenerate the vacuum
    factors.
    """
    centers = [0.0 + 0.0j, -1.0 + 0.0j, -0.5 + 0.0j, -params.p, params.p - 1]
    for t in params.theta:
        centers.extend((t, -t))
    return tuple(centers)


def roots_admissible(roots, params: ModelParams) -> bool:
    lams = _root_values(roots)
    centers = root_guard_centers(params)
    for lam in lams:
        if any(abs(lam - c) < POLE_EPS for c in centers):
            return False
    for i in range(len(lams)):
        for j in range(i + 1, len(lams)):
            if abs(lams[i] - lams[j]) < ROOT_SEPARATION:
                return False
            if abs(lams[i] + lams[j] + 1) < ROOT_SEPARATION:
                return False
    return True


def select_signature_probes(root_sets, params: ModelParams, count: int = 3) -> tuple:
    """First ``count`` documented probes clear of every set's poles."""
    pool = SIGNATURE_PROBES + FALLBACK_PROBES
    margin = 1e-4  # wider than the pole guard so Lambda stays well conditioned
    chosen = []
    for probe in pool:
        ok = abs(2 * probe + 1) > margin and abs(probe + params.p) > margin and abs(
            params.p - probe - 1
        ) > margin
        for rs in root_sets:
            if not ok:
                break
            for lam in _root_values(rs):
                if abs(probe - lam) < margin or abs(probe + lam + 1) < margin:
                    ok = False
                    break
        if ok:
            chosen.append(probe)
            if len(chosen) == count:
                return tuple(chosen)
    raise ParameterError("could not find pole-free signature probes")


def make_signature(roots, params: ModelParams, probes=SIGNATURE_PROBES) -> tuple:
    return tuple(eigenvalue_Lambda(pt, roots, params) for pt in probes)


def signatures_match(a, b, tol: float = 1e-6) -> bool:
    return all(
        abs(x - y) <= tol * max(1.0, abs(x), abs(y)) for x, y in zip(a, b)
    )


@dataclass(frozen=True)
class BetheRootSet:
    """A solution candidate for the Bethe equations.

    ``signature`` is Lambda evaluated at fixed probe points: permutation- and
    reflection-invariant, so it identifies the physical solution class.
    """

    roots: tuple
    residual_norm: float
    source: str
    signature: tuple

    def __post_init__(self):
        if self.source not in ("newton", "manual"):
            raise ParameterError(f"unknown root source {self.source!r}")
        object.__setattr__(self, "roots", tuple(complex(r) for r in self.roots))
        object.__setattr__(self, "signature", tuple(complex(s) for s in self.signature))
        if not _finite(self.roots) or not math.isfinite(self.residual_norm):
            raise ParameterError("root set contains non-finite values")

    @property
    def n_roots(self) -> int:
        return len(self.roots)

    def sort_key(self):
        return tuple((z.real, z.imag) for z in self.signature)

    def validate(self, params: ModelParams) -> None:
        if not roots_admissible(self.roots, params):
            raise ParameterError("root set violates separation or pole guards")


def _finite(values) -> bool:
    return all(math.isfinite(v.real) and math.isfinite(v.imag) for v in values)
