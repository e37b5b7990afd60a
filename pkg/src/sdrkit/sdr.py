"""Linear and kernel sufficient dimension reduction estimators.

Four fitters share one model type:

* ``fit_sir``  -- sliced inverse regression on standardized predictors.
* ``fit_ksir`` -- SIR applied to kernel principal component scores.
* ``fit_kcca`` -- regularized kernel canonical correlation.
* ``fit_gsir`` -- generalized SIR: ridge-regularized kernel regression of
  predictor functions onto a kernel smoother in the response.

Kernel models are stored in dual form: a new point ``x`` is mapped to its
centred kernel row ``k~(x)`` against the training sample and the sufficient
predictor is ``k~(x) @ dual - offset``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateSmootherError,
    NumericalError,
    ParameterError,
    RankDeficiencyError,
    ShapeError,
    SlicingError,
)
from .kernels import (
    GramMatrix,
    RadialKernel,
    ScaleMixture,
    center_gram,
    cross_gram,
    gram,
    kernel_from_mixture,
    parse_kernel_spec,
)

EIG_FLOOR = 1e-10
PSD_TOL = 1e-8
MODEL_FORMAT_VERSION = 1
KINDS = ("SIR", "KSIR", "KCCA", "GSIR")


@dataclass
class TuningParams:
    zeta_x: float = 0.2
    zeta_y: float = 0.2
    eta_x: Optional[float] = None
    eta_y: Optional[float] = None
    gamma_x: Optional[float] = None
    gamma_y: Optional[float] = None
    n_slices: int = 10


@dataclass
class SdrModel:
    """A fitted reduction.

    ``basis``/``mean`` are set for SIR; ``dual``, ``X_train``, ``kernel``,
    ``col_means`` and ``grand_mean`` for the kernel methods.
    """

    kind: str
    eigenvalues: np.ndarray
    basis: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    X_train: Optional[np.ndarray] = None
    kernel: Optional[RadialKernel] = None
    col_means: Optional[np.ndarray] = None
    grand_mean: float = 0.0
    offset: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.eigenvalues)

    @property
    def p(self) -> int:
        return len(self.mean) if self.kind == "SIR" else self.X_train.shape[1]

    @property
    def is_dual(self) -> bool:
        return self.kind != "SIR"


# ---------------------------------------------------------------------------
# small linear-algebra helpers
# ---------------------------------------------------------------------------


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def _eigh_desc(A: np.ndarray):
    w, V = np.linalg.eigh(_sym(A))
    return w[::-1], V[:, ::-1]


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # deterministic orientation: largest-magnitude entry of each column positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _check_xy(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError(f"X must be a non-empty n x p array, got {X.shape}")
    if X.shape[0] != Y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    return X, Y


def _gram_values(G) -> np.ndarray:
    return G.values if isinstance(G, GramMatrix) else np.asarray(G, dtype=float)


def _psd_eig(K: np.ndarray, what: str):
    """Descending eigenpairs of a centred Gram, tiny/negative values zeroed."""
    lam, U = _eigh_desc(K)
    top = lam[0] if lam[0] > 0 else 1.0
    if lam[-1] < -PSD_TOL * top:
        raise NumericalError(f"{what} Gram is not PSD: min/max eigenvalue {lam[-1] / top:.3e}")
    lam = np.where(lam > EIG_FLOOR * top, lam, 0.0)
    return lam, U


# ---------------------------------------------------------------------------
# slicing / SIR core
# ---------------------------------------------------------------------------


def make_slices(Y, n_slices: int) -> list[np.ndarray]:
    """Indices of ``n_slices`` near-equal-count slices ordered by ``Y``."""
    Y = np.asarray(Y, dtype=float).ravel()
    if n_slices < 2:
        raise SlicingError("need at least 2 slices")
    n_distinct = np.unique(Y).size
    if n_distinct < n_slices:
        raise SlicingError(f"{n_slices} slices requested but Y has {n_distinct} distinct values")
    order = np.argsort(Y, kind="stable")
    return np.array_split(order, n_slices)


def _whitener(Xc: np.ndarray) -> np.ndarray:
    n = Xc.shape[0]
    cov = _sym(Xc.T @ Xc / n)
    w, V = np.linalg.eigh(cov)
    if w[-1] <= 0 or w[0] < EIG_FLOOR * w[-1]:
        raise RankDeficiencyError(
            f"predictor covariance is singular (eigenvalue ratio {w[0] / max(w[-1], 1e-300):.3e})"
        )
    return (V / np.sqrt(w)) @ V.T


def _sir_core(X: np.ndarray, Y: np.ndarray, n_slices: int, d: int):
    """Return (mean, basis with unit columns, eigenvalues, kernel matrix M)."""
    n, p = X.shape
    if n <= p:
        raise RankDeficiencyError(f"SIR needs n > p, got n={n}, p={p}")
    if not 1 <= d <= min(p, n_slices - 1):
        raise ParameterError(f"d must lie in [1, min(p, H-1)] = [1, {min(p, n_slices - 1)}]")
    slices = make_slices(Y, n_slices)
    mean = X.mean(axis=0)
    Xc = X - mean
    W = _whitener(Xc)
    Z = Xc @ W
    M = np.zeros((p, p))
    for idx in slices:
        m = Z[idx].mean(axis=0)
        M += (len(idx) / n) * np.outer(m, m)
    evals, evecs = _eigh_desc(M)
    B = W @ evecs[:, :d]
    B /= np.linalg.norm(B, axis=0)
    return mean, _fix_signs(B), evals[:d].copy(), M


def fit_sir(X, Y, n_slices: int = 10, d: int = 1) -> SdrModel:
    """Sliced inverse regression.

    Parameters
    ----------
    X : array, shape (n, p)
    Y : array, shape (n,)
    n_slices : int
        Number of equal-count slices of ``Y``.
    d : int
        Number of directions kept.

    Returns
    -------
    SdrModel
        ``basis`` holds unit-norm directions in the original coordinates.
    """
    X, Y = _check_xy(X, Y)
    mean, B, evals, M = _sir_core(X, Y, n_slices, d)
    return SdrModel("SIR", evals, basis=B, mean=mean, info={"n_slices": n_slices, "M": M})


# ---------------------------------------------------------------------------
# kernel methods
# ---------------------------------------------------------------------------


def _dual_model(kind, K_raw, X, kernel, dual, evals, offset=None, info=None) -> SdrModel:
    col_means = K_raw.mean(axis=0)
    if offset is None:
        offset = np.zeros(dual.shape[1])
    return SdrModel(
        kind,
        np.asarray(evals, dtype=float),
        dual=dual,
        X_train=X.copy(),
        kernel=kernel,
        col_means=col_means,
        grand_mean=float(K_raw.mean()),
        offset=np.asarray(offset, dtype=float),
        info=info or {},
    )


def fit_ksir(
    X,
    Y,
    kernel: RadialKernel,
    n_slices: int = 10,
    d: int = 1,
    var_threshold: float = 0.8,
) -> SdrModel:
    """Kernel SIR: SIR on the leading kernel principal component scores.

    The number of components ``r`` is the smallest whose eigenvalue mass
    reaches ``var_threshold``, capped at ``n // 4`` (and at least ``d``).
    """
    X, Y = _check_xy(X, Y)
    n = X.shape[0]
    if not 0 < var_threshold <= 1:
        raise ParameterError("var_threshold must lie in (0, 1]")
    if d > n_slices - 1:
        raise ParameterError("d must be <= n_slices - 1")
    make_slices(Y, n_slices)
    G = gram(kernel, X)
    K = center_gram(G).values
    lam, U = _psd_eig(K, "KSIR")
    pos = lam > 0
    mass = np.cumsum(lam[pos]) / lam[pos].sum()
    r = int(np.searchsorted(mass, var_threshold - 1e-12) + 1)
    r = max(d, min(r, n // 4, int(pos.sum())))
    proj = U[:, :r] / np.sqrt(lam[:r])
    scores = K @ proj
    mean, B, evals, _ = _sir_core(scores, Y, n_slices, d)
    dual = proj @ B
    info = {"n_slices": n_slices, "n_components": r, "var_threshold": var_threshold}
    return _dual_model("KSIR", G.values, X, kernel, dual, evals, offset=mean @ B, info=info)


def _centered_pair(X, Y, kx, ky):
    Gx = gram(kx, X)
    Gy = gram(ky, Y)
    return Gx, center_gram(Gx).values, center_gram(Gy).values


def _check_etas(eta_x, eta_y):
    for name, v in (("eta_x", eta_x), ("eta_y", eta_y)):
        if not (v is not None and math.isfinite(v) and v > 0):
            raise ParameterError(f"{name} must be > 0, got {v}")


def fit_kcca(X, Y, kx: RadialKernel, ky: RadialKernel, eta_x: float, eta_y: float, d: int = 1) -> SdrModel:
    """Regularized kernel canonical correlation analysis.

    With centred Grams ``K_X, K_Y`` and ridge smoothers
    ``R = K (K + eta I)^{-1}``, the canonical directions are the top
    eigenvectors ``v`` of ``R_X^{1/2} R_Y R_X^{1/2}``; eigenvalues are squared
    canonical correlations and the training predictor is ``R_X^{1/2} v``.
    """
    X, Y = _check_xy(X, Y)
    _check_etas(eta_x, eta_y)
    n = X.shape[0]
    if not 1 <= d <= n - 1:
        raise ParameterError("d must lie in [1, n-1]")
    Gx, Kx, Ky = _centered_pair(X, Y, kx, ky)
    lx, Ux = _psd_eig(Kx, "X")
    ly, Uy = _psd_eig(Ky, "Y")
    rx_half = np.sqrt(lx / (lx + eta_x))
    Rx_half = (Ux * rx_half) @ Ux.T
    Ry = (Uy * (ly / (ly + eta_y))) @ Uy.T
    evals, V = _eigh_desc(Rx_half @ Ry @ Rx_half)
    V = _fix_signs(V[:, :d])
    # alpha = (K + eta I)^{-1/2} K^{-1/2} v on the range of K_X
    with np.errstate(divide="ignore"):
        inv = np.where(lx > 0, 1.0 / np.sqrt(lx * (lx + eta_x)), 0.0)
    dual = (Ux * inv) @ (Ux.T @ V)
    info = {"eta_x": eta_x, "eta_y": eta_y}
    return _dual_model("KCCA", Gx.values, X, kx, dual, evals[:d], info=info)


def fit_gsir(X, Y, kx: RadialKernel, ky: RadialKernel, eta_x: float, eta_y: float, d: int = 1) -> SdrModel:
    """Generalized sliced inverse regression.

    Maximizes ``a' K_X S_Y K_X a`` subject to ``a' (K_X + eta_X I)^2 a = 1``,
    where ``S_Y = K_Y (K_Y + eta_Y I)^{-1}`` smooths over the response. With
    ``u = (K_X + eta_X I) a`` this is the symmetric eigenproblem for
    ``M = (K_X + eta_X I)^{-1} K_X S_Y K_X (K_X + eta_X I)^{-1}``.
    """
    X, Y = _check_xy(X, Y)
    _check_etas(eta_x, eta_y)
    n = X.shape[0]
    if not 1 <= d <= n - 1:
        raise ParameterError("d must lie in [1, n-1]")
    Gx, Kx, Ky = _centered_pair(X, Y, kx, ky)
    lx, Ux = _psd_eig(Kx, "X")
    ly, Uy = _psd_eig(Ky, "Y")
    Rx = (Ux * (lx / (lx + eta_x))) @ Ux.T
    Sy = (Uy * (ly / (ly + eta_y))) @ Uy.T
    evals, V = _eigh_desc(Rx @ Sy @ Rx)
    V = _fix_signs(V[:, :d])
    dual = (Ux / (lx + eta_x)) @ (Ux.T @ V)
    info = {"eta_x": eta_x, "eta_y": eta_y}
    return _dual_model("GSIR", Gx.values, X, kx, dual, evals[:d], info=info)


# ---------------------------------------------------------------------------
# prediction
# ---------------------------------------------------------------------------


def centered_cross_kernel(m: SdrModel, X_new) -> np.ndarray:
    """Cross-kernel rows centred consistently with the training Gram."""
    Kn = cross_gram(m.kernel, X_new, m.X_train)
    return Kn - m.col_means[None, :] - Kn.mean(axis=1, keepdims=True) + m.grand_mean


def predict(m: SdrModel, X_new) -> np.ndarray:
    """Sufficient predictor values, shape ``(m, d)``."""
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim == 1:
        X_new = X_new[None, :] if m.p > 1 else X_new[:, None]
    if X_new.ndim != 2 or X_new.shape[1] != m.p:
        raise ShapeError(f"X_new must have {m.p} columns, got shape {X_new.shape}")
    # einsum keeps the map strictly row-wise (BLAS blocking can perturb the last bit)
    if m.kind == "SIR":
        return np.einsum("ij,jk->ik", X_new - m.mean, m.basis)
    return np.einsum("ij,jk->ik", centered_cross_kernel(m, X_new), m.dual) - m.offset


# ---------------------------------------------------------------------------
# tuning
# ---------------------------------------------------------------------------


def ridge_param(G, zeta: float) -> float:
    """Ridge parameter ``zeta * lambda_max(G)``."""
    if not (0 < zeta <= 1):
        raise ParameterError(f"zeta must lie in (0, 1], got {zeta}")
    A = _gram_values(G)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError("G must be square")
    return float(zeta * np.linalg.eigvalsh(_sym(A))[-1])


def gcv_scores(G_a, G_b, grid: Sequence[float]) -> np.ndarray:
    """GCV criterion for smoothing ``G_b`` with ridge smoothers built on ``G_a``.

    ``GCV(z) = ||G_b - S G_b||_F^2 / tr(I - S)^2`` with
    ``S = G_a (G_a + z lambda_max(G_a) I)^{-1}``. Grid points whose trace
    denominator falls below 1e-12 are returned as NaN.
    """
    A = _sym(_gram_values(G_a))
    B = _gram_values(G_b)
    lam, U = np.linalg.eigh(A)
    lam_max = lam[-1]
    UtB = U.T @ B
    out = np.empty(len(grid))
    for i, z in enumerate(grid):
        shrink = (z * lam_max) / (lam + z * lam_max)  # eigenvalues of I - S
        denom = float(np.sum(shrink)) ** 2
        if denom < 1e-12:
            out[i] = np.nan
            continue
        out[i] = float(np.sum((shrink[:, None] * UtB) ** 2)) / denom
    return out


def argmin_prefer_larger(values: Sequence[float], grid: Sequence[float], rtol: float = 1e-12) -> float:
    """Grid value minimizing ``values``; near-ties go to the larger grid value."""
    best_val = math.inf
    best_z = None
    for z, v in sorted(zip(grid, values), key=lambda t: t[0]):
        if not np.isfinite(v):
            continue
        if best_z is None or v <= best_val + rtol * abs(best_val):
            best_z = z
            best_val = min(best_val, v)
    if best_z is None:
        raise DegenerateSmootherError("every grid point has a degenerate GCV denominator")
    return float(best_z)


def gcv_select(G_X, G_Y, grid: Sequence[float]) -> tuple[float, float]:
    """Pick ``(zeta_X, zeta_Y)`` minimizing the two GCV criteria over ``grid``."""
    grid = [float(z) for z in grid]
    if not grid or any(not (0 < z <= 1) for z in grid):
        raise ParameterError("GCV grid must be a non-empty subset of (0, 1]")
    if _gram_values(G_X).shape != _gram_values(G_Y).shape:
        raise ShapeError("G_X and G_Y must have the same size")
    zx = argmin_prefer_larger(gcv_scores(G_X, G_Y, grid), grid)
    zy = argmin_prefer_larger(gcv_scores(G_Y, G_X, grid), grid)
    return zx, zy


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------


def _kernel_to_text(k: RadialKernel) -> str:
    if k.family == "mixture":
        return "mixture " + " ".join(f"{r!r} {w!r}" for r, w in k.mixture.atoms)
    return "spec " + k.name


def _kernel_from_text(text: str) -> RadialKernel:
    tag, _, body = text.partition(" ")
    if tag == "mixture":
        nums = [float(t) for t in body.split()]
        return kernel_from_mixture(ScaleMixture.from_atoms(zip(nums[::2], nums[1::2])))
    return parse_kernel_spec(body)


def _write_matrix(lines: list[str], name: str, A: np.ndarray) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lines.append(f"matrix {name} {A.shape[0]} {A.shape[1]}")
    for row in A:
        lines.append(" ".join(repr(float(v)) for v in row))


def save_model(m: SdrModel, path) -> None:
    """Write ``m`` as versioned plain text (row-major, full float precision)."""
    lines = [f"sdrkit-model {MODEL_FORMAT_VERSION}", f"kind {m.kind}", f"d {m.d}"]
    _write_matrix(lines, "eigenvalues", m.eigenvalues[None, :])
    if m.kind == "SIR":
        _write_matrix(lines, "mean", m.mean[None, :])
        _write_matrix(lines, "basis", m.basis)
    else:
        lines.append("kernel " + _kernel_to_text(m.kernel))
        lines.append(f"grand_mean {m.grand_mean!r}")
        _write_matrix(lines, "offset", m.offset[None, :])
        _write_matrix(lines, "col_means", m.col_means[None, :])
        _write_matrix(lines, "dual", m.dual)
        _write_matrix(lines, "X_train", m.X_train)
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> SdrModel:
    lines = Path(path).read_text().splitlines()
    it = iter(enumerate(lines, start=1))
    header = next(it)[1].split()
    if header[:1] != ["sdrkit-model"] or len(header) != 2:
        raise ShapeError(f"{path}: not an sdrkit model file")
    if int(header[1]) != MODEL_FORMAT_VERSION:
        raise ShapeError(f"{path}: unsupported model format version {header[1]}")
    fields: dict = {}
    mats: dict = {}
    for lineno, line in it:
        key, _, rest = line.partition(" ")
        if key == "end":
            break
        if key == "matrix":
            name, r, c = rest.split()
            rows = [next(it)[1].split() for _ in range(int(r))]
            A = np.array(rows, dtype=float).reshape(int(r), int(c))
            mats[name] = A
        else:
            fields[key] = rest
    kind = fields["kind"]
    if kind == "SIR":
        return SdrModel(
            kind, mats["eigenvalues"][0], basis=mats["basis"], mean=mats["mean"][0]
        )
    return SdrModel(
        kind,
        mats["eigenvalues"][0],
        dual=mats["dual"],
        X_train=mats["X_train"],
        kernel=_kernel_from_text(fields["kernel"]),
        col_means=mats["col_means"][0],
        grand_mean=float(fields["grand_mean"]),
        offset=mats["offset"][0],
    )
