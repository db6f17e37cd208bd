"""Lattice objects of the open XXX chain with boundary couplings.

Builds the rational R-matrix, the scalar boundary matrices, bulk and dressed
monodromies, the A/B/C/D operator entries, the transfer matrix in both its
trace and entry forms, and the Hamiltonian.  Conventions:

  * auxiliary space = tensor factor 0 (leftmost), chain sites 1..N follow;
  * spin up = basis index 0, so the pseudo-vacuum is the first basis vector;
  * the boundary with couplings (q, xi+, xi-) sits at site 1, the boundary
    with (p, eta+, eta-) at site N.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import linalg
from .errors import ParameterError, PoleError

# Spectral-parameter pole guard: evaluations this close to a pole are rejected.
POLE_EPS = 1e-6

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

# Permutation of the two factors of C^2 x C^2.
PERMUTATION = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def principal_sqrt(z: complex) -> complex:
    """Square root with Re >= 0, ties broken toward Im >= 0."""
    w = complex(np.sqrt(complex(z)))
    if w.real < 0 or (w.real == 0 and w.imag < 0):
        w = -w
    return w


def _finite(*values) -> bool:
    return all(np.isfinite(np.asarray(v, dtype=complex)).all() for v in values)


@dataclass(frozen=True)
class ModelParams:
    """Chain length, inhomogeneities and boundary couplings, plus derived data.

    ``rho = 1 - sqrt(1 + xi_plus*xi_minus)`` (sign of the root set by
    ``branch``) and ``c_ratio = rho/xi_minus``, stored explicitly so the
    triangular limit xi_minus -> 0 is the exact value -xi_plus/2 rather
    than a fragile division.
    """

    n_sites: int
    theta: tuple
    p: complex
    q: complex
    xi_plus: complex
    xi_minus: complex
    eta_plus: complex
    eta_minus: complex
    rho: complex
    c_ratio: complex
    branch: str

    @classmethod
    def create(
        cls,
        theta,
        p,
        q,
        xi_plus=0.0,
        xi_minus=0.0,
        eta_plus=0.0,
        eta_minus=0.0,
        branch: str = "principal",
        n_sites: int | None = None,
    ) -> "ModelParams":
        theta = tuple(complex(t) for t in theta)
        if n_sites is None:
            n_sites = len(theta)
        if n_sites < 1 or len(theta) != n_sites:
            raise ParameterError(
                f"need n_sites >= 1 inhomogeneities, got {len(theta)} for N={n_sites}"
            )
        if branch not in ("principal", "conjugate"):
            raise ParameterError(f"unknown branch {branch!r}")
        p, q = complex(p), complex(q)
        xi_plus, xi_minus = complex(xi_plus), complex(xi_minus)
        eta_plus, eta_minus = complex(eta_plus), complex(eta_minus)
        if not _finite(theta, p, q, xi_plus, xi_minus, eta_plus, eta_minus):
            raise ParameterError("model parameters must be finite")
        root = principal_sqrt(1 + xi_plus * xi_minus)
        if branch == "conjugate":
            root = -root
        rho = 1 - root
        if xi_minus != 0:
            c_ratio = rho / xi_minus
        elif branch == "principal":
            c_ratio = -xi_plus / 2
        else:
            raise ParameterError(
                "c_ratio = rho/xi_minus diverges on the conjugate branch at xi_minus = 0"
            )
        params = cls(
            n_sites=n_sites,
            theta=theta,
            p=p,
            q=q,
            xi_plus=xi_plus,
            xi_minus=xi_minus,
            eta_plus=eta_plus,
            eta_minus=eta_minus,
            rho=complex(rho),
            c_ratio=complex(c_ratio),
            branch=branch,
        )
        params.validate()
        return params

    def validate(self) -> None:
        scale = max(1.0, abs(self.xi_plus * self.xi_minus))
        if abs(self.rho * (2 - self.rho) + self.xi_plus * self.xi_minus) > 1e-12 * scale:
            raise ParameterError("rho does not satisfy rho(2 - rho) + xi+ xi- = 0")
        if self.xi_minus != 0:
            if abs(self.c_ratio * self.xi_minus - self.rho) > 1e-12 * max(1.0, abs(self.rho)):
                raise ParameterError("c_ratio * xi_minus != rho")
        elif self.branch == "principal" and self.c_ratio != -self.xi_plus / 2:
            raise ParameterError("triangular limit requires c_ratio = -xi_plus/2")
        if len(self.theta) != self.n_sites:
            raise ParameterError("len(theta) != n_sites")

    @property
    def dim(self) -> int:
        return 2 ** self.n_sites

    def with_sites(self, n_sites: int) -> "ModelParams":
        """Same boundary couplings on a chain of ``n_sites`` (theta sliced/zero-padded)."""
        theta = (self.theta + (0.0,) * n_sites)[:n_sites]
        return ModelParams.create(
            theta,
            self.p,
            self.q,
            self.xi_plus,
            self.xi_minus,
            self.eta_plus,
            self.eta_minus,
            branch=self.branch,
            n_sites=n_sites,
        )

    def replace_couplings(self, xi_plus=None, xi_minus=None) -> "ModelParams":
        xp = self.xi_plus if xi_plus is None else xi_plus
        xm = self.xi_minus if xi_minus is None else xi_minus
        return ModelParams.create(
            self.theta, self.p, self.q, xp, xm, self.eta_plus, self.eta_minus,
            branch=self.branch,
        )


@dataclass(frozen=True)
class SpectralOperator:
    """A dense operator tagged with the spectral point it was built at."""

    u: complex | None
    matrix: np.ndarray
    label: str

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        if not np.isfinite(m).all():
            raise ParameterError(f"non-finite entries in operator {self.label!r}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def pseudo_vacuum(n_sites: int) -> np.ndarray:
    """All spins up."""
    v = np.zeros(2 ** n_sites, dtype=complex)
    v[0] = 1.0
    return v


def lowest_vector(n_sites: int) -> np.ndarray:
    """All spins down."""
    v = np.zeros(2 ** n_sites, dtype=complex)
    v[-1] = 1.0
    return v


def r_matrix(u) -> np.ndarray:
    return complex(u) * np.eye(4, dtype=complex) + PERMUTATION


def build_R(u) -> SpectralOperator:
    """Rational R-matrix u + P on C^2 x C^2."""
    return SpectralOperator(complex(u), r_matrix(u), "R")


def k_minus_matrix(u, params: ModelParams) -> np.ndarray:
    u = complex(u)
    return np.array([[params.p + u, 0], [0, params.p - u]], dtype=complex)


def build_K_minus(u, params: ModelParams) -> SpectralOperator:
    """Diagonal scalar reflection matrix diag(p+u, p-u)."""
    return SpectralOperator(complex(u), k_minus_matrix(u, params), "K-")


def k_plus_matrix(u, params: ModelParams) -> np.ndarray:
    u = complex(u)
    return np.array(
        [
            [params.q + u + 1, params.xi_plus * (u + 1)],
            [params.xi_minus * (u + 1), params.q - u - 1],
        ],
        dtype=complex,
    )


def build_K_plus(u, params: ModelParams) -> SpectralOperator:
    """Left boundary matrix with off-diagonal couplings xi+- (dual reflection solution)."""
    return SpectralOperator(complex(u), k_plus_matrix(u, params), "K+")


def _r_aux_site(u, site: int, n_sites: int) -> np.ndarray:
    """R acting on (aux, site) inside the aux x chain space."""
    return linalg.embed_factors(r_matrix(u), (0, site), n_sites + 1)


@lru_cache(maxsize=None)
def _aux_swap_columns(site: int, n_sites: int) -> np.ndarray:
    """Index map sigma with M[:, sigma] = M P_(0,site): swap aux and site bits."""
    n = n_sites + 1
    idx = np.arange(2 ** n)
    aux_bit = n - 1  # aux is the most significant bit
    site_bit = n - 1 - site
    a = (idx >> aux_bit) & 1
    s = (idx >> site_bit) & 1
    swapped = (idx & ~(1 << aux_bit) & ~(1 << site_bit)) | (s << aux_bit) | (a << site_bit)
    swapped.flags.writeable = False
    return swapped


def monodromy_matrices(u, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    # Right-multiplying by R_0j(x) = x + P_0j is a scaled add of permuted
    # columns; no dense kron products are ever formed.
    u = complex(u)
    n = params.n_sites
    dim = 2 ** (n + 1)
    T = np.eye(dim, dtype=complex)
    for j in range(1, n + 1):
        T = (u - params.theta[j - 1]) * T + T[:, _aux_swap_columns(j, n)]
    That = np.eye(dim, dtype=complex)
    for j in range(n, 0, -1):
        That = (u + params.theta[j - 1]) * That + That[:, _aux_swap_columns(j, n)]
    return T, That


def build_monodromies(u, params: ModelParams) -> tuple[SpectralOperator, SpectralOperator]:
    """Bulk monodromies: T = R_01(u-th_1)...R_0N(u-th_N), That in reversed order at u+th_j."""
    T, That = monodromy_matrices(u, params)
    return SpectralOperator(complex(u), T, "T"), SpectralOperator(complex(u), That, "That")


def open_k_matrix(u, params: ModelParams) -> np.ndarray:
    u = complex(u)
    T, That = monodromy_matrices(u, params)
    # K- x I is diagonal: scale the aux-up / aux-down column blocks of T.
    d = params.dim
    T[:, :d] *= params.p + u
    T[:, d:] *= params.p - u
    return T @ That


def build_open_K(u, params: ModelParams) -> SpectralOperator:
    """Dressed (open) monodromy T K- That on aux x chain."""
    return SpectralOperator(complex(u), open_k_matrix(u, params), "K")


def guard_half(u) -> complex:
    u = complex(u)
    if abs(u + 0.5) < POLE_EPS:
        raise PoleError(f"spectral parameter {u} within {POLE_EPS} of the pole at -1/2")
    return u


def entry_matrices(u, params: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Raw A, B, C, D blocks of the open monodromy (D with its A/(2u+1) part removed)."""
    u = guard_half(u)
    d = params.dim
    K = open_k_matrix(u, params)
    a = K[:d, :d]
    b = K[:d, d:]
    c = K[d:, :d]
    dd = K[d:, d:] - a / (2 * u + 1)
    return a, b, c, dd


def extract_entries(u, params: ModelParams):
    """Operator entries of the open monodromy as tagged operators (A, B, C, D)."""
    a, b, c, d = entry_matrices(u, params)
    u = complex(u)
    return (
        SpectralOperator(u, a, "A"),
        SpectralOperator(u, b, "B"),
        SpectralOperator(u, c, "C"),
        SpectralOperator(u, d, "D"),
    )


def transfer_matrix(u, params: ModelParams) -> np.ndarray:
    """Transfer matrix Tr_aux(K+ K); polynomial in u, defined everywhere."""
    kp = k_plus_matrix(u, params)
    k = open_k_matrix(u, params)
    d = params.dim
    return (
        kp[0, 0] * k[:d, :d] + kp[0, 1] * k[d:, :d]
        + kp[1, 0] * k[:d, d:] + kp[1, 1] * k[d:, d:]
    )


def build_transfer_trace(u, params: ModelParams) -> SpectralOperator:
    return SpectralOperator(complex(u), transfer_matrix(u, params), "t")


def build_transfer_entries(u, params: ModelParams) -> SpectralOperator:
    """Transfer matrix recombined from the A/B/C/D entries.

    Equals the trace form away from u = -1/2, where the entry split has a
    removable pole.
    """
    u = guard_half(u)
    a, b, c, d = entry_matrices(u, params)
    t = (
        (2 * (u + params.q) * (u + 1) / (2 * u + 1)) * a
        + (u + 1) * (params.xi_minus * b + params.xi_plus * c)
        + (params.q - u - 1) * d
    )
    return SpectralOperator(u, t, "t")


def build_hamiltonian(params: ModelParams) -> SpectralOperator:
    """Boundary XXX Hamiltonian.

    (1/q)(sz_1 + xi+ s+_1 + xi- s-_1) + sum_n vec(s)_n . vec(s)_{n+1}
    + (1/p)(sz_N + eta+ s+_N + eta- s-_N); the bulk sum is empty at N=1.
    """
    if params.p == 0 or params.q == 0:
        raise ParameterError("boundary strengths p, q must be nonzero for the Hamiltonian")
    n = params.n_sites
    h = (
        linalg.embed_site(SIGMA_Z, 1, n)
        + params.xi_plus * linalg.embed_site(SIGMA_PLUS, 1, n)
        + params.xi_minus * linalg.embed_site(SIGMA_MINUS, 1, n)
    ) / params.q
    for site in range(1, n):
        for pauli in (SIGMA_X, SIGMA_Y, SIGMA_Z):
            h = h + linalg.embed_site(pauli, site, n) @ linalg.embed_site(pauli, site + 1, n)
    h = h + (
        linalg.embed_site(SIGMA_Z, n, n)
        + params.eta_plus * linalg.embed_site(SIGMA_PLUS, n, n)
        + params.eta_minus * linalg.embed_site(SIGMA_MINUS, n, n)
    ) / params.p
    return SpectralOperator(None, h, "H")
