"""Numerical screening of kernels for membership in the dimension-free class.

A kernel that is positive definite on Euclidean space of every dimension and
depends on its arguments only through their distance must have a radial
profile that is a Gaussian scale mixture, i.e. completely monotone in the
squared distance. ``certify_membership`` checks the three necessary
conditions that can be falsified numerically:

1. radiality (equal distances give equal values),
2. positive semidefinite Gram matrices across a ladder of dimensions,
3. complete monotonicity of the recovered profile.

Passing all three corroborates membership; it does not prove it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import ortho_group

from .errors import EvaluationError
from .kernels import RadialKernel, gram
from .numerics import MonotonicityReport, ScalarFn, check_complete_monotone

DEFAULT_DIMS = (1, 2, 5, 10, 50)
PSD_RATIO_TOL = -1e-8
RADIAL_RTOL = 1e-8

VERDICTS = ("Member", "NotRadial", "NotPSD", "ProfileFails", "Inconclusive")


@dataclass(frozen=True)
class KernelCandidate:
    """A bivariate kernel to be screened.

    ``profile`` (a function of squared distance) is optional; when absent it
    is recovered by one-dimensional probing if the kernel proves radial.
    ``matrix`` optionally assembles a Gram matrix in one shot.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], float]
    name: str = "kernel"
    profile: Optional[Callable[[float], float]] = None
    matrix: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, z, zt) -> float:
        return float(self.evaluator(np.asarray(z, dtype=float), np.asarray(zt, dtype=float)))

    def gram(self, X: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return np.asarray(self.matrix(X), dtype=float)
        n = X.shape[0]
        G = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                G[i, j] = G[j, i] = self(X[i], X[j])
        return G


def candidate_from_radial(k: RadialKernel) -> KernelCandidate:
    return KernelCandidate(
        evaluator=k,
        name=k.name,
        profile=lambda s: float(k.profile(s)),
        matrix=lambda X: gram(k, X).values,
    )


def polynomial_kernel() -> KernelCandidate:
    """Inhomogeneous polynomial kernel of order one, ``<x, x'> + 1``."""
    return KernelCandidate(
        evaluator=lambda z, zt: float(np.dot(z, zt)) + 1.0,
        name="poly1",
        matrix=lambda X: X @ X.T + 1.0,
    )


def cosine_profile_kernel() -> KernelCandidate:
    """``cos(||z - z'||^2)``: radial, but not positive definite in high dimensions."""

    def ev(z, zt):
        d = z - zt
        return math.cos(float(d @ d))

    return KernelCandidate(evaluator=ev, name="cos", profile=math.cos)


def signed_identity_kernel() -> KernelCandidate:
    """``+1`` on the diagonal, ``-1`` elsewhere; indefinite for n >= 3."""
    return KernelCandidate(
        evaluator=lambda z, zt: 1.0 if np.array_equal(z, zt) else -1.0,
        name="signed_identity",
    )


# ---------------------------------------------------------------------------
# radiality
# ---------------------------------------------------------------------------


@dataclass
class RadialityWitness:
    dim: int
    pair_a: tuple
    pair_b: tuple
    value_a: float
    value_b: float

    def describe(self) -> str:
        fmt = lambda v: "(" + ",".join(f"{x:.6g}" for x in np.ravel(v)) + ")"
        return (
            f"p={self.dim}: K{fmt(self.pair_a[0])},{fmt(self.pair_a[1])} = {self.value_a:.10g} but "
            f"K{fmt(self.pair_b[0])},{fmt(self.pair_b[1])} = {self.value_b:.10g} at equal distance"
        )


def _axis_probe(p: int):
    """A base pair at unit distance and a translated/rotated copy of it."""
    if p == 1:
        return (np.array([0.0]), np.array([1.0])), (np.array([1.0]), np.array([2.0]))
    e = np.eye(p)
    return (np.zeros(p), e[0]), (e[0], e[0] + e[1])


def _random_orthogonal(p: int, rng: np.random.Generator) -> np.ndarray:
    if p == 1:
        return np.array([[rng.choice([-1.0, 1.0])]])
    return ortho_group.rvs(p, random_state=rng)


def radiality_probe(
    k: KernelCandidate,
    dims: Sequence[int] = DEFAULT_DIMS,
    pairs_per_dim: int = 20,
    rng: Optional[np.random.Generator] = None,
):
    """Look for two point pairs at equal distance with different kernel values.

    Returns
    -------
    (bool, RadialityWitness or None)
        ``True`` when no discrepancy above ``1e-8 * max(1, |value|)`` was found.
    """
    if pairs_per_dim < 10:
        raise ValueError("pairs_per_dim must be >= 10")
    rng = np.random.default_rng(0) if rng is None else rng
    for p in dims:
        probes = [_axis_probe(p)]
        for _ in range(pairs_per_dim):
            z = rng.standard_normal(p)
            zt = z + rng.standard_normal(p) * rng.uniform(0.1, 2.0)
            Q = _random_orthogonal(p, rng)
            b = rng.standard_normal(p) * 2.0
            probes.append(((z, zt), (Q @ z + b, Q @ zt + b)))
        for pair_a, pair_b in probes:
            va, vb = k(*pair_a), k(*pair_b)
            if abs(va - vb) > RADIAL_RTOL * max(1.0, abs(va)):
                return False, RadialityWitness(p, pair_a, pair_b, va, vb)
    return True, None


# ---------------------------------------------------------------------------
# positive semidefiniteness
# ---------------------------------------------------------------------------


def min_eig_ratio(G: np.ndarray) -> float:
    w = np.linalg.eigvalsh(0.5 * (G + G.T))
    return float(w[0] / max(abs(w[-1]), 1e-300))


def psd_sweep(
    k: KernelCandidate,
    dims: Sequence[int] = DEFAULT_DIMS,
    n: int = 40,
    draws: int = 5,
    rng: Optional[np.random.Generator] = None,
) -> dict:
    """Worst ``lambda_min / lambda_max`` over ``draws`` Gaussian point sets per dimension."""
    if n < 2 or draws < 1:
        raise ValueError("need n >= 2 and draws >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    out = {}
    for p in dims:
        worst = math.inf
        for _ in range(draws):
            X = rng.standard_normal((n, p))
            worst = min(worst, min_eig_ratio(k.gram(X)))
        out[int(p)] = worst
    return out


def nesting_check(
    k: RadialKernel,
    p_low: int,
    p_high: int,
    n: int = 20,
    rng: Optional[np.random.Generator] = None,
) -> bool:
    """Gram on R^p_low points equals the Gram of their zero-padded copies in R^p_high."""
    if not isinstance(k, RadialKernel):
        raise TypeError("nesting_check requires a RadialKernel")
    if not p_low < p_high:
        raise ValueError("need p_low < p_high")
    rng = np.random.default_rng(0) if rng is None else rng
    X = rng.standard_normal((n, p_low))
    Xp = np.hstack([X, np.zeros((n, p_high - p_low))])
    G_low, G_high = gram(k, X).values, gram(k, Xp).values
    same = bool(np.max(np.abs(G_low - G_high)) <= 1e-12)
    psd = min_eig_ratio(G_low) >= PSD_RATIO_TOL and min_eig_ratio(G_high) >= PSD_RATIO_TOL
    return same and psd


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------


@dataclass
class CertifyConfig:
    dims: tuple = DEFAULT_DIMS
    n: int = 40
    draws: int = 5
    pairs_per_dim: int = 20
    cm_order: int = 6
    cm_grid: tuple = tuple(np.round(np.linspace(0.1, 10.0, 100), 10))
    seed: int = 20240611


@dataclass
class MembershipReport:
    kernel: str
    radial: bool
    witness: Optional[RadialityWitness]
    psd_by_dimension: dict
    profile_cm: Optional[MonotonicityReport]
    verdict: str
    notes: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"kernel: {self.kernel}", f"verdict: {self.verdict}", f"radial: {self.radial}"]
        if self.witness is not None:
            lines.append(f"  witness: {self.witness.describe()}")
        lines.append("psd (min/max eigenvalue by dimension):")
        for p, r in self.psd_by_dimension.items():
            flag = "ok" if r >= PSD_RATIO_TOL else "FAIL"
            lines.append(f"  p={p:<3d} {r: .3e}  {flag}")
        if self.profile_cm is None:
            lines.append("profile complete monotonicity: not checked")
        else:
            cm = self.profile_cm
            lines.append(
                f"profile complete monotonicity (order <= {cm.max_order_checked}, "
                f"{len(cm.grid)} points): {'passed' if cm.passed else 'failed'}"
            )
            for r, x, v in cm.violations[:5]:
                lines.append(f"  order {r} at x={x:.4g}: {v:.3e}")
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        kv = [("kernel", self.kernel), ("verdict", self.verdict), ("radial", str(self.radial).lower())]
        if self.witness is not None:
            w = self.witness
            kv += [
                ("witness.dim", str(w.dim)),
                ("witness.value_a", repr(w.value_a)),
                ("witness.value_b", repr(w.value_b)),
            ]
        for p, r in self.psd_by_dimension.items():
            kv.append((f"psd.p{p}", repr(r)))
        if self.profile_cm is not None:
            kv += [
                ("cm.passed", str(self.profile_cm.passed).lower()),
                ("cm.max_order", str(self.profile_cm.max_order_checked)),
                ("cm.violations", str(len(self.profile_cm.violations))),
            ]
        return "".join(f"{k}={v}\n" for k, v in kv)


def _probe_profile(k: KernelCandidate) -> Callable[[float], float]:
    def phi(s: float) -> float:
        return k(np.zeros(1), np.array([math.sqrt(s)]))

    return phi


def certify_membership(k, config: Optional[CertifyConfig] = None) -> MembershipReport:
    """Radiality, PSD ladder and profile screen, composed into one verdict."""
    if isinstance(k, RadialKernel):
        k = candidate_from_radial(k)
    config = config or CertifyConfig()
    rng = np.random.default_rng(config.seed)
    radial, witness = radiality_probe(k, config.dims, config.pairs_per_dim, rng)
    psd = psd_sweep(k, config.dims, config.n, config.draws, rng)
    psd_ok = all(r >= PSD_RATIO_TOL for r in psd.values())

    cm = None
    notes = []
    if radial:
        phi = k.profile if k.profile is not None else _probe_profile(k)
        try:
            cm = check_complete_monotone(ScalarFn(phi), config.cm_grid, max_order=config.cm_order)
        except EvaluationError as exc:
            notes.append(f"profile evaluation failed at s={exc.point}")

    if not radial:
        verdict = "NotRadial"
    elif not psd_ok:
        verdict = "NotPSD"
    elif cm is None:
        verdict = "Inconclusive"
    elif not cm.passed:
        verdict = "ProfileFails"
    else:
        verdict = "Member"
    return MembershipReport(k.name, radial, witness, psd, cm, verdict, notes)
