"""Radial kernel families, Gaussian scale mixtures and Gram matrices.

Every radial kernel here is described by a profile ``phi`` acting on the
*squared* distance ``s = ||z - z'||**2``, so ``K(z, z') = phi(s)`` and
``phi(0) = 1``. A single-atom scale mixture at scale ``r`` then coincides with
the Gaussian kernel of width ``rho = 1 / r**2``.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import DegenerateDataError, DomainError, ParameterError, ShapeError
from .numerics import bessel_j, bessel_k, gamma_fn

FAMILIES = ("gaussian", "matern", "generalized_cauchy", "powered_exponential", "mixture")

_PARAM_NAMES = {
    "gaussian": ("rho",),
    "matern": ("c", "nu"),
    "generalized_cauchy": ("c", "tau", "alpha"),
    "powered_exponential": ("c", "alpha"),
    "mixture": (),
}


@dataclass(frozen=True)
class ScaleMixture:
    """Discrete mixing law ``F`` given by atoms ``(scale r_i, weight w_i)``."""

    scales: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.scales) == 0:
            raise ParameterError("a scale mixture needs at least one atom")
        if len(self.scales) != len(self.weights):
            raise ShapeError("scales and weights differ in length")
        if any((not math.isfinite(r)) or r < 0 for r in self.scales):
            raise ParameterError("scales must be finite and >= 0")
        if any((not math.isfinite(w)) or w <= 0 for w in self.weights):
            raise ParameterError("weights must be finite and > 0")
        if len(set(self.scales)) != len(self.scales):
            raise ParameterError("scales must be distinct")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ParameterError(f"weights sum to {math.fsum(self.weights)!r}, not 1")

    @classmethod
    def from_atoms(cls, atoms, normalize: bool = False) -> "ScaleMixture":
        atoms = [(float(r), float(w)) for r, w in atoms]
        scales = tuple(r for r, _ in atoms)
        weights = [w for _, w in atoms]
        if normalize:
            total = math.fsum(weights)
            weights = [w / total for w in weights]
        return cls(scales, tuple(weights))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.scales, self.weights))


def psi_from_mixture(m: ScaleMixture, t):
    """Laplace transform of the mixing law: ``sum_i w_i exp(-r_i**2 t)``."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("psi_from_mixture requires t >= 0")
    r2 = np.square(np.asarray(m.scales))
    w = np.asarray(m.weights)
    out = np.exp(-np.multiply.outer(arr, r2)) @ w
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RadialKernel:
    """A Table-1 style radial kernel ``K(z, z') = phi(||z - z'||**2)``.

    Parameters
    ----------
    family : str
        One of ``FAMILIES``.
    params : mapping
        Family parameters (``rho``; ``c, nu``; ``c, tau, alpha``; ``c, alpha``).
    mixture : ScaleMixture, optional
        Mixing law, only for the ``mixture`` family.
    """

    family: str
    params: Mapping[str, float] = field(default_factory=dict)
    mixture: Optional[ScaleMixture] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})
        expected = set(_PARAM_NAMES[self.family])
        if set(self.params) != expected:
            raise ParameterError(
                f"{self.family} expects parameters {sorted(expected)}, got {sorted(self.params)}"
            )
        p = self.params
        for name, v in p.items():
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{self.family}: {name} must be > 0, got {v}")
        if "alpha" in p and p["alpha"] > 2:
            raise ParameterError(f"{self.family}: alpha must lie in (0, 2], got {p['alpha']}")
        if self.family == "mixture" and self.mixture is None:
            raise ParameterError("mixture kernel requires a ScaleMixture")

    @property
    def name(self) -> str:
        if self.family == "mixture":
            atoms = ",".join(f"{r!r}:{w!r}" for r, w in self.mixture.atoms)
            return f"mixture[{atoms}]"
        args = ",".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.family}({args})"

    def profile(self, s):
        """Evaluate ``phi`` at squared distance(s) ``s >= 0``."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise DomainError("squared distances must be >= 0")
        p = self.params
        fam = self.family
        if fam == "gaussian":
            out = np.exp(-s / p["rho"])
        elif fam == "powered_exponential":
            out = np.exp(-np.power(np.sqrt(s) / p["c"], p["alpha"]))
        elif fam == "generalized_cauchy":
            a = p["alpha"]
            out = np.power(1.0 + np.power(np.sqrt(s) / p["c"], a), -p["tau"] / a)
        elif fam == "matern":
            out = _matern_profile(s, p["c"], p["nu"])
        else:
            out = np.asarray(psi_from_mixture(self.mixture, s))
        return float(out) if out.ndim == 0 else out

    def __call__(self, z, zt) -> float:
        return eval_kernel(self, z, zt)


def _matern_profile(s: np.ndarray, c: float, nu: float) -> np.ndarray:
    h = np.sqrt(s) / c
    out = np.ones_like(h)
    pos = h > 0
    if np.any(pos):
        hp = h[pos]
        # K_nu underflows to 0 near h ~ 700, where the product is 0 anyway
        with np.errstate(over="ignore", invalid="ignore"):
            vals = 2.0 ** (1.0 - nu) / gamma_fn(nu) * hp**nu * bessel_k(nu, hp)
        out[pos] = np.where(np.isfinite(vals), vals, 0.0)
    return out


def gaussian(rho: float) -> RadialKernel:
    return RadialKernel("gaussian", {"rho": rho})


def matern(c: float, nu: float) -> RadialKernel:
    return RadialKernel("matern", {"c": c, "nu": nu})


def generalized_cauchy(c: float, tau: float, alpha: float) -> RadialKernel:
    return RadialKernel("generalized_cauchy", {"c": c, "tau": tau, "alpha": alpha})


def powered_exponential(c: float, alpha: float) -> RadialKernel:
    return RadialKernel("powered_exponential", {"c": c, "alpha": alpha})


def kernel_from_mixture(m: ScaleMixture) -> RadialKernel:
    """Radial kernel whose profile is the Laplace transform of ``m``."""
    return RadialKernel("mixture", {}, mixture=m)


def eval_kernel(k: RadialKernel, z, zt) -> float:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    zt = np.atleast_1d(np.asarray(zt, dtype=float))
    if z.shape != zt.shape or z.ndim != 1:
        raise ShapeError(f"points have mismatched shapes {z.shape} and {zt.shape}")
    d = z - zt
    return float(k.profile(float(d @ d)))


# ---------------------------------------------------------------------------
# elliptic characteristic functions
# ---------------------------------------------------------------------------


def omega_p(p: int, t: float) -> float:
    """Characteristic function of the uniform law on the unit sphere of R^p.

    ``omega_p(t) = Gamma(p/2) (2/t)**((p-2)/2) J_{(p-2)/2}(t)``, with value 1
    at ``t = 0``.
    """
    if int(p) != p or p < 1:
        raise DomainError(f"omega_p requires an integer p >= 1, got {p}")
    t = float(t)
    if t < 0:
        raise DomainError("omega_p requires t >= 0")
    if t == 0.0:
        return 1.0
    alpha = (p - 2) / 2.0
    # (2/t)^alpha * J_alpha(t) overflows nowhere for t > 0 at moderate p
    return gamma_fn(p / 2.0) * (2.0 / t) ** alpha * bessel_j(alpha, t)


def elliptic_cf(m: ScaleMixture, p: int, w) -> float:
    """Characteristic function at ``w`` of a scale mixture of uniform spheres.

    The law is ``R * U`` with ``U`` uniform on the unit sphere of R^p and
    ``R ~ m``; its characteristic function is ``sum_i w_i omega_p(r_i ||w||)``.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.shape != (p,):
        raise ShapeError(f"w must have shape ({p},), got {w.shape}")
    norm = float(np.linalg.norm(w))
    return math.fsum(wt * omega_p(p, r * norm) for r, wt in m.atoms)


# ---------------------------------------------------------------------------
# Gram matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    centered: bool = False
    source: str = ""

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _as_2d(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError(f"expected a non-empty n x p array, got shape {X.shape}")
    return X


def gram(k: RadialKernel, X) -> GramMatrix:
    """Gram matrix ``G[i, j] = K(X_i, X_j)``; symmetric with unit diagonal."""
    X = _as_2d(X)
    if X.shape[0] == 1:
        s = np.zeros((1, 1))
    else:
        s = squareform(pdist(X, "sqeuclidean"))
    return GramMatrix(np.asarray(k.profile(s)), centered=False, source=k.name)


def cross_gram(k: RadialKernel, X_new, X_train) -> np.ndarray:
    """Kernel evaluations between rows of ``X_new`` and rows of ``X_train``."""
    X_new, X_train = _as_2d(X_new), _as_2d(X_train)
    if X_new.shape[1] != X_train.shape[1]:
        raise ShapeError(f"dimension mismatch: {X_new.shape[1]} vs {X_train.shape[1]}")
    s = np.maximum(cdist(X_new, X_train, "sqeuclidean"), 0.0)
    return np.asarray(k.profile(s))


def center_gram(G: GramMatrix) -> GramMatrix:
    """Double-centre ``Q G Q`` with ``Q = I - 11'/n``."""
    if G.centered:
        warnings.warn("Gram matrix is already centred; returned unchanged", stacklevel=2)
        return G
    A = G.values
    row = A.mean(axis=1, keepdims=True)
    col = A.mean(axis=0, keepdims=True)
    C = A - row - col + A.mean()
    C = 0.5 * (C + C.T)
    return GramMatrix(C, centered=True, source=G.source)


def bandwidth_heuristic(D) -> tuple[float, float]:
    """Mean squared inter-point distance and the matching Gaussian rate.

    Returns ``(gamma, sigma2)`` where ``sigma2`` is the average of
    ``||D_i - D_j||**2`` over unordered pairs and ``gamma = 1 / (2 sigma2)``.
    The kernel is then ``exp(-gamma s)``, i.e. ``gaussian(rho=1/gamma)``.
    """
    D = _as_2d(D)
    if D.shape[0] < 2:
        raise ShapeError("bandwidth_heuristic needs at least two rows")
    sigma2 = float(np.mean(pdist(D, "sqeuclidean")))
    if not sigma2 > 0:
        raise DegenerateDataError("all rows are identical; squared-distance mean is 0")
    return 1.0 / (2.0 * sigma2), sigma2


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------


def read_mixture(path) -> ScaleMixture:
    """Parse a mixture file: one ``r w`` pair per line, ``#`` starts a comment."""
    atoms = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParameterError(f"{path}:{lineno}: expected 'r w', got {raw!r}")
        try:
            atoms.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ParameterError(f"{path}:{lineno}: {exc}") from exc
    if not atoms:
        raise ParameterError(f"{path}: no atoms")
    total = math.fsum(w for _, w in atoms)
    if abs(total - 1.0) > 1e-9:
        warnings.warn(f"{path}: weights sum to {total}; renormalising", stacklevel=2)
    return ScaleMixture.from_atoms(atoms, normalize=True)


def write_mixture(m: ScaleMixture, path) -> None:
    lines = ["# r w"] + [f"{r!r} {w!r}" for r, w in m.atoms]
    Path(path).write_text("\n".join(lines) + "\n")


_ALIASES = {
    "gaussian": "gaussian",
    "gauss": "gaussian",
    "matern": "matern",
    "cauchy": "generalized_cauchy",
    "generalized_cauchy": "generalized_cauchy",
    "gencauchy": "generalized_cauchy",
    "powered_exponential": "powered_exponential",
    "powexp": "powered_exponential",
}
_SPEC_RE = re.compile(r"^\s*([A-Za-z_]+)\s*\((.*)\)\s*$")


def parse_kernel_spec(spec: str) -> RadialKernel:
    """Parse ``family(name=value, ...)`` or ``mixture:path`` into a kernel."""
    spec = spec.strip()
    if spec.startswith("mixture:"):
        return kernel_from_mixture(read_mixture(spec[len("mixture:"):]))
    match = _SPEC_RE.match(spec)
    if not match:
        raise ParameterError(f"cannot parse kernel spec {spec!r}")
    family = _ALIASES.get(match.group(1).lower())
    if family is None:
        raise ParameterError(f"unknown kernel family {match.group(1)!r}")
    params = {}
    body = match.group(2).strip()
    if body:
        for item in body.split(","):
            if "=" not in item:
                raise ParameterError(f"bad parameter {item!r} in {spec!r}")
            key, value = (x.strip() for x in item.split("=", 1))
            try:
                params[key] = float(value)
            except ValueError as exc:
                raise ParameterError(f"bad value for {key} in {spec!r}") from exc
    return RadialKernel(family, params)
