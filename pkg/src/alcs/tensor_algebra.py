"""Pointwise algebra on symmetric traceless d x d tensors.

A nematic order tensor is stored by its independent components only
(2 in 2D, 5 in 3D); the full matrix is reconstructed on demand with the
last diagonal entry computed as minus the sum of the others, so symmetry
and tracelessness hold by construction.  Component arrays may carry any
leading batch shape, which makes the randomized sweeps cheap.

All operations are pure; values are freely copyable between threads.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QTensor",
    "ModelParams",
    "full_matrix",
    "from_matrix",
    "trace_powers",
    "molecular_field",
    "bulk_energy_density",
    "trace_cubic_bound_check",
    "coercivity_shift",
]

_NCOMP = {2: 2, 3: 5}


@dataclass
class QTensor:
    """Symmetric traceless tensor(s): d=2 stores (q11, q12), d=3 stores
    (q11, q12, q13, q22, q23).  ``comps`` has shape (..., ncomp)."""

    d: int
    comps: np.ndarray

    def __post_init__(self):
        if self.d not in _NCOMP:
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        self.comps = np.asarray(self.comps, dtype=float)
        if self.comps.shape[-1] != _NCOMP[self.d]:
            raise ValueError(
                f"d={self.d} needs {_NCOMP[self.d]} components, "
                f"got {self.comps.shape[-1]}"
            )

    @classmethod
    def zero(cls, d, batch=()):
        return cls(d, np.zeros(tuple(batch) + (_NCOMP[d],)))


@dataclass
class ModelParams:
    """Coefficients of the coupled tensor/velocity system plus the
    regularization knobs.

    a, b, c : bulk potential coefficients (c > 0)
    Gamma   : rotational mobility (> 0)
    lam     : alignment parameter
    mu      : viscosity (> 0)
    kappa   : activity
    eps     : mollifier scale (>= 0)
    n_trunc : spectral truncation index (>= 1)
    mode    : "direct" | "mollified" | "friedrichs"
    """

    a: float = -0.5
    b: float = 0.0
    c: float = 1.0
    Gamma: float = 1.0
    lam: float = 0.1
    mu: float = 1.0
    kappa: float = 0.5
    eps: float = 0.0
    n_trunc: int = 4
    mode: str = "direct"

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.Gamma <= 0:
            raise ValueError("Gamma must be > 0")
        if self.c <= 0:
            raise ValueError("c must be > 0")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.n_trunc < 1:
            raise ValueError("n_trunc must be >= 1")
        if self.mode not in ("direct", "mollified", "friedrichs"):
            raise ValueError(f"unknown mode {self.mode!r}")


def full_matrix(q):
    """Reconstruct the full (..., d, d) matrix; trace is exactly zero."""
    c = q.comps
    if q.d == 2:
        q11, q12 = c[..., 0], c[..., 1]
        m = np.empty(c.shape[:-1] + (2, 2))
        m[..., 0, 0] = q11
        m[..., 0, 1] = q12
        m[..., 1, 0] = q12
        m[..., 1, 1] = -q11
        return m
    q11, q12, q13, q22, q23 = (c[..., i] for i in range(5))
    m = np.empty(c.shape[:-1] + (3, 3))
    m[..., 0, 0] = q11
    m[..., 0, 1] = q12
    m[..., 0, 2] = q13
    m[..., 1, 0] = q12
    m[..., 1, 1] = q22
    m[..., 1, 2] = q23
    m[..., 2, 0] = q13
    m[..., 2, 1] = q23
    m[..., 2, 2] = -q11 - q22
    return m


def from_matrix(m, d=None):
    """Extract independent components of a symmetric traceless matrix.

    The input is symmetrized; the diagonal is used as-is except for the
    last entry, which the representation recomputes.
    """
    m = np.asarray(m, dtype=float)
    if d is None:
        d = m.shape[-1]
    sym = 0.5 * (m + np.swapaxes(m, -1, -2))
    if d == 2:
        comps = np.stack([sym[..., 0, 0], sym[..., 0, 1]], axis=-1)
    else:
        comps = np.stack(
            [sym[..., 0, 0], sym[..., 0, 1], sym[..., 0, 2],
             sym[..., 1, 1], sym[..., 1, 2]],
            axis=-1,
        )
    return QTensor(d, comps)


def trace_powers(q):
    """Return (tr(Q^2), tr(Q^3), |Q|^4) with |Q|^4 = tr(Q^2)^2."""
    c = q.comps
    if q.d == 2:
        tr2 = 2.0 * (c[..., 0] ** 2 + c[..., 1] ** 2)
        # eigenvalues are +/-x, so the cubic trace vanishes; computing it
        # through the matrix product keeps this a measurement, not an axiom
        m = full_matrix(q)
        tr3 = np.einsum("...ab,...bc,...ca->...", m, m, m)
    else:
        q11, q12, q13, q22, q23 = (c[..., i] for i in range(5))
        q33 = -q11 - q22
        tr2 = q11**2 + q22**2 + q33**2 + 2.0 * (q12**2 + q13**2 + q23**2)
        m = full_matrix(q)
        tr3 = np.einsum("...ab,...bc,...ca->...", m, m, m)
    return tr2, tr3, tr2 * tr2


def molecular_field(q, lap_q, p):
    """Variational descent direction of the Landau-de Gennes energy:

        H = lap Q - a Q + b (Q^2 - tr(Q^2)/d I) - c Q tr(Q^2)

    ``lap_q`` is supplied by the caller (spectral Laplacian for fields).
    In 2D the b-term is identically zero: Q^2 = (tr(Q^2)/2) I for any
    traceless symmetric 2x2 matrix, and the component formula below
    cancels it exactly.
    """
    if q.d != lap_q.d:
        raise ValueError("dimension mismatch between q and lap_q")
    if q.comps.shape != lap_q.comps.shape:
        raise ValueError("shape mismatch between q and lap_q")
    c = q.comps
    if q.d == 2:
        tr2 = 2.0 * (c[..., 0] ** 2 + c[..., 1] ** 2)
        h = lap_q.comps - p.a * c - p.c * c * tr2[..., None]
        return QTensor(2, h)
    tr2, _, _ = trace_powers(q)
    m = full_matrix(q)
    m2 = np.einsum("...ab,...bc->...ac", m, m)
    eye = np.eye(3)
    bterm = p.b * (m2 - (tr2[..., None, None] / 3.0) * eye)
    hmat = (
        full_matrix(lap_q)
        - p.a * m
        + bterm
        - p.c * m * tr2[..., None, None]
    )
    return from_matrix(hmat, 3)


def bulk_energy_density(q, p):
    """(a/2)|Q|^2 - (b/3) tr(Q^3) + (c/4)|Q|^4, pointwise."""
    tr2, tr3, tr2sq = trace_powers(q)
    return 0.5 * p.a * tr2 - (p.b / 3.0) * tr3 + 0.25 * p.c * tr2sq


def trace_cubic_bound_check(q, eps):
    """Check tr(Q^3) <= (eps/4)|tr(Q^2)|^2 + (1/eps) tr(Q^2).

    The bound holds for every symmetric matrix; a False result flags an
    implementation bug, so this doubles as an oracle for the sweeps.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    tr2, tr3, tr2sq = trace_powers(q)
    lhs = tr3
    rhs = 0.25 * eps * tr2sq + tr2 / eps
    holds = bool(np.all(lhs <= rhs + 1e-12 * (1.0 + np.abs(rhs))))
    return lhs, rhs, holds


def coercivity_shift(p):
    """Smallest shift M >= 0 (from the cubic-trace bound alone) with

        (M + a/2)|Q|^2 - (b/3) tr(Q^3) + (c/4)|Q|^4
            >= (M/2)|Q|^2 + (c/8)|Q|^4  >= 0   for every Q.

    Writing r^2 = |Q|^2 and bounding |tr(Q^3)| <= (e/4) r^4 + r^2/e for
    any e > 0, the requirement becomes a 1D condition in r; choosing
    e = 3c/(2|b|) kills the quartic deficit and leaves M >= -a + 4b^2/(9c).
    """
    if p.c <= 0:
        raise ValueError("c must be > 0")
    if p.b == 0.0:
        return max(0.0, -p.a)
    return max(0.0, -p.a + 4.0 * p.b * p.b / (9.0 * p.c))
