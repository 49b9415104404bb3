"""Dyadic decomposition machinery: smooth partition of unity on frequency
shells, block operators, Sobolev norms, the paraproduct split, and
empirical checks of the Bernstein / commutator / power-product estimates.

The radial profiles are the classical exp(-1/x)-glued bumps: chi equals 1
up to radius 3/4 and vanishes beyond 4/3, and phi(r) = chi(r/2) - chi(r)
is supported in the annulus [3/4, 8/3].  Block j (j >= 1) carries the
multiplier phi(2^-j |xi|); the low-pass S_0 carries chi(|xi| / 2), one
octave wider than chi itself so that the telescoping sum

    S_0 + sum_{j >= 1} Delta_j = Id

is exact on every grid frequency (the annuli for j >= 1 start at 3/2 and
must tile everything chi's own ball would leave uncovered).

Partitions are immutable once built and shareable read-only.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import fwd, inv, lp_norm

__all__ = [
    "DyadicPartition",
    "DyadicBlocks",
    "build_partition",
    "chi_profile",
    "phi_profile",
    "dyadic_block",
    "low_pass",
    "decompose",
    "sobolev_norm",
    "sobolev_norm2_spec",
    "sobolev_weight",
    "bony_decompose",
    "bernstein_check",
    "commutator_check",
    "product_estimate_check",
    "split_low_high",
]


def _smooth_step(x):
    """C-infinity step: 1 for x <= 0, 0 for x >= 1, exp(-1/x) glue between."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    lo = x <= 0.0
    hi = x >= 1.0
    mid = ~(lo | hi)
    out[lo] = 1.0
    out[hi] = 0.0
    xm = x[mid]
    f_up = np.exp(-1.0 / (1.0 - xm))
    f_dn = np.exp(-1.0 / xm)
    out[mid] = f_up / (f_up + f_dn)
    return out


def chi_profile(r):
    """Radial low-pass profile: 1 on [0, 3/4], 0 beyond 4/3."""
    return _smooth_step((np.asarray(r, dtype=float) - 0.75) / (4.0 / 3.0 - 0.75))


def phi_profile(r):
    """Radial shell profile chi(r/2) - chi(r), supported in [3/4, 8/3]."""
    r = np.asarray(r, dtype=float)
    return chi_profile(r / 2.0) - chi_profile(r)


@dataclass
class DyadicPartition:
    """Partition multipliers sampled on a grid's |xi| values."""

    grid: object
    j_max: int
    low_mult: np.ndarray        # S_0 multiplier
    block_mults: list           # block j multiplier at index j-1

    def sum_of_multipliers(self):
        total = self.low_mult.copy()
        for m in self.block_mults:
            total = total + m
        return total


@dataclass
class DyadicBlocks:
    """A field split into its low part and shell parts (physical space)."""

    s0: np.ndarray
    blocks: list

    def reconstruct(self):
        out = self.s0.copy()
        for b in self.blocks:
            out = out + b
        return out


def build_partition(grid):
    kmax = float(grid.kmag.max())
    j_max = int(np.floor(np.log2(kmax * 4.0 / 3.0)))
    low = chi_profile(grid.kmag / 2.0)
    blocks = [phi_profile(grid.kmag / 2.0**j) for j in range(1, j_max + 1)]
    return DyadicPartition(grid, j_max, low, blocks)


def dyadic_block(part, f, j):
    if not 1 <= j <= part.j_max:
        raise ValueError(f"block index {j} outside 1..{part.j_max}")
    return inv(part.block_mults[j - 1] * fwd(f))


def low_pass(part, f, j=0):
    """S_j f: everything at scales up to 2^j."""
    if j < 0:
        raise ValueError("low-pass index must be >= 0")
    return inv(chi_profile(part.grid.kmag / 2.0 ** (j + 1)) * fwd(f))


def decompose(part, f):
    fh = fwd(f)
    s0 = inv(part.low_mult * fh)
    blocks = [inv(m * fh) for m in part.block_mults]
    return DyadicBlocks(s0, blocks)


def sobolev_weight(part, s):
    """Spectral weight whose |f^|^2-sum gives the squared H^s norm."""
    w = part.low_mult**2
    for j, m in enumerate(part.block_mults, start=1):
        w = w + 4.0 ** (j * s) * m**2
    return w


def sobolev_norm2_spec(part, fh, s, weight=None):
    g = part.grid
    if weight is None:
        weight = sobolev_weight(part, s)
    return float(np.sum(weight * np.abs(fh) ** 2)) * g.length**2 / g.n**4


def sobolev_norm(part, f, s):
    """(||S_0 f||^2 + sum_j 2^{2js} ||Delta_j f||^2)^(1/2)."""
    return np.sqrt(sobolev_norm2_spec(part, fwd(f), s))


def bony_decompose(part, u, v):
    """Split uv into (T_u v, T_v u, R) with the low part folded in, so the
    three pieces sum to the pointwise product exactly."""
    if u.shape != v.shape:
        raise ValueError("fields must share a grid")
    bu = decompose(part, u)
    bv = decompose(part, v)
    ublocks = [bu.s0] + bu.blocks
    vblocks = [bv.s0] + bv.blocks
    nb = len(ublocks)
    # cumulative low-passes P_m = sum_{j <= m} blocks
    pu = np.cumsum(np.stack(ublocks), axis=0)
    pv = np.cumsum(np.stack(vblocks), axis=0)
    t_uv = np.zeros_like(u)
    t_vu = np.zeros_like(u)
    for jp in range(2, nb):
        t_uv += pu[jp - 2] * vblocks[jp]
        t_vu += pv[jp - 2] * ublocks[jp]
    rem = np.zeros_like(u)
    for j in range(nb):
        for jp in range(max(0, j - 1), min(nb, j + 2)):
            rem += ublocks[j] * vblocks[jp]
    return t_uv, t_vu, rem


def bernstein_check(part, f, j, p=2, q=2):
    """Observed constants for the shell inequalities

        C^-1 2^j ||D_j f||_p <= ||grad D_j f||_p <= C 2^j ||D_j f||_p
        ||D_j f||_q <= C 2^{d(1/p - 1/q) j} ||D_j f||_p    (p <= q)

    Returns a dict of the measured ratios; raises on an empty block.
    """
    g = part.grid
    bj = dyadic_block(part, f, j)
    norm_p = lp_norm(g, bj, p)
    if norm_p <= 1e-13 * lp_norm(g, f, p):
        raise ValueError(f"block {j} of the supplied field is empty")
    bh = fwd(bj)
    gx = inv(g.ikx * bh)
    gy = inv(g.iky * bh)
    grad_mag = np.hypot(gx, gy)
    deriv_ratio = lp_norm(g, grad_mag, p) / (2.0**j * norm_p)
    pq_exp = 2.0 * (1.0 / p - 1.0 / q) if q != np.inf else 2.0 / p
    embed_ratio = lp_norm(g, bj, q) / (2.0 ** (pq_exp * j) * norm_p)
    return {
        "j": j,
        "deriv_ratio": deriv_ratio,
        "deriv_constant": max(deriv_ratio, 1.0 / deriv_ratio),
        "embed_ratio": embed_ratio,
    }


def commutator_check(part, u, v, j):
    """Observed constant in ||[D_j, u] v||_2 <= C 2^-j ||grad u||_inf ||v||_2."""
    g = part.grid
    comm = dyadic_block(part, u * v, j) - u * dyadic_block(part, v, j)
    obs = np.sqrt(g.cell_area * float(np.sum(comm**2)))
    ux, uy = inv(g.ikx * fwd(u)), inv(g.iky * fwd(u))
    grad_inf = float(np.hypot(ux, uy).max())
    v_l2 = np.sqrt(g.cell_area * float(np.sum(v**2)))
    bound = 2.0 ** (-j) * grad_inf * v_l2
    constant = obs / bound if bound > 0 else (0.0 if obs == 0.0 else np.inf)
    return {"j": j, "observed": obs, "bound_factor": bound,
            "constant": constant}


def product_estimate_check(part, u, k, p=2, s=0.5):
    """Shell decay of a pointwise power u^k against

        ||D_q u^k||_p <= C 2^{-qs} a_q ||u||_{p(k-1)}^{k-1} ||grad u||_{H^s}

    with {a_q} normalized to unit l^2; reports the minimal C and the
    fraction of l^2 mass beyond shell j_max - 2.
    """
    if k < 2:
        raise ValueError("power must be >= 2")
    g = part.grid
    uk = u**k
    gx, gy = inv(g.ikx * fwd(u)), inv(g.iky * fwd(u))
    w = sobolev_weight(part, s)
    grad_hs = np.sqrt(sobolev_norm2_spec(part, fwd(gx), s, w)
                      + sobolev_norm2_spec(part, fwd(gy), s, w))
    u_lp = lp_norm(g, u, p * (k - 1))
    denom = u_lp ** (k - 1) * grad_hs
    if denom == 0.0:
        return {"C": 0.0, "a": np.zeros(part.j_max), "tail_frac": 0.0}
    amps = np.array([
        lp_norm(g, dyadic_block(part, uk, q), p) * 2.0 ** (q * s) / denom
        for q in range(1, part.j_max + 1)
    ])
    c_min = float(np.sqrt(np.sum(amps**2)))
    a = amps / c_min if c_min > 0 else amps
    total = float(np.sum(amps**2))
    tail = float(np.sum(amps[part.j_max - 2:] ** 2)) if part.j_max >= 2 else 0.0
    return {"C": c_min, "a": a, "tail_frac": tail / total if total else 0.0}


def split_low_high(part, qfield, ufield, s):
    """(phi1, phi2, phi): low/high split of the regularity functional

        phi = ||grad Q||_{H^s}^2 + ||u||_{H^s}^2

    with phi1 the S_0 (low-frequency) L^2 part and phi2 the shell part.
    """
    g = part.grid
    if qfield.grid is not ufield.grid and qfield.grid.n != ufield.grid.n:
        raise ValueError("fields must share a grid")
    # components of grad Q carry Frobenius multiplicity 2
    specs = []
    for comp in (qfield.q11, qfield.q12):
        ch = fwd(comp)
        specs.append((2.0, g.ikx * ch))
        specs.append((2.0, g.iky * ch))
    specs.append((1.0, fwd(ufield.ux)))
    specs.append((1.0, fwd(ufield.uy)))
    norm = g.length**2 / g.n**4
    low_w = part.low_mult**2
    phi1 = 0.0
    phi2 = 0.0
    for mult, fh in specs:
        p2 = np.abs(fh) ** 2
        phi1 += mult * norm * float(np.sum(low_w * p2))
        for j, m in enumerate(part.block_mults, start=1):
            phi2 += mult * norm * 4.0 ** (j * s) * float(np.sum(m**2 * p2))
    return phi1, phi2, phi1 + phi2
