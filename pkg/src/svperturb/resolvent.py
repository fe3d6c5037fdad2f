"""Resolvent probes of the symmetrized noise linearization.

The linearization of an N x n noise matrix is the (N+n) square symmetric
block matrix with the noise and its transpose off-diagonal. All probes go
through its eigen-structure (noise SVD), never through a dense inverse, so
the cost per probe is O(min(N,n) * max(N,n)). Dense oracles are provided
for small-size cross-checks only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EvaluationDomainError,
    InvalidInputError,
    NumericalFailureError,
)
from .matcore import as_matrix, check_orthonormal, svd

_ZJ_MAX_ITER = 200
_ZJ_REL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LinearizationSpectrum:
    """Noise SVD packaged for resolvent evaluation.

    eta holds the min(N, n) singular values descending; left_vecs (N x m)
    and right_vecs (n x m) the corresponding vectors. Eigenvalues of the
    linearization are +-eta_i plus |N - n| zeros.
    """

    eta: np.ndarray
    left_vecs: np.ndarray
    right_vecs: np.ndarray
    n_rows: int
    n_cols: int

    @classmethod
    def from_noise(cls, e) -> "LinearizationSpectrum":
        e = as_matrix(e)
        f = svd(e)
        return cls(
            eta=f.singulars,
            left_vecs=f.left,
            right_vecs=f.right,
            n_rows=e.shape[0],
            n_cols=e.shape[1],
        )

    def __post_init__(self):
        m = min(self.n_rows, self.n_cols)
        if self.eta.shape != (m,):
            raise InvalidInputError(f"eta must have length min(N, n) = {m}")
        if self.left_vecs.shape != (self.n_rows, m) or self.right_vecs.shape != (
            self.n_cols,
            m,
        ):
            raise InvalidInputError("singular vector blocks have wrong shapes")

    @property
    def spectral_norm(self) -> float:
        return float(self.eta[0]) if self.eta.size else 0.0


@dataclass(frozen=True)
class ResolventProbe:
    """Scalar functions of the resolvent at one point z (|z| > ||noise||).

    phi1 scales the row block, phi2 the column block; varphi = phi1 * phi2.
    alpha and beta are the half sum/difference of their reciprocals, the
    exact diagonal and off-diagonal entries of the projected resolvent
    surrogate on a linearized signal basis.
    """

    z: complex
    phi1: complex
    phi2: complex
    varphi: complex
    alpha: complex
    beta: complex


def min_abs_z(n_rows: int, n_cols: int, margin: float) -> float:
    """Base radius 2 * margin * (sqrt(N) + sqrt(n)) of the probe domain."""
    return 2.0 * margin * (np.sqrt(n_rows) + np.sqrt(n_cols))


def phi_from_eta(eta, n_rows: int, n_cols: int, z) -> ResolventProbe:
    """phi_values from the bare noise singular values (vectors not needed)."""
    z = complex(z)
    eta = np.asarray(eta, dtype=float).ravel()
    top = float(eta[0]) if eta.size else 0.0
    if abs(z) <= top:
        raise EvaluationDomainError(
            f"|z| = {abs(z):.6g} inside the spectrum (norm {top:.6g})"
        )
    pair_sum = 0.5 * np.sum(1.0 / (z - eta) + 1.0 / (z + eta))
    phi1 = z - pair_sum - max(n_cols - n_rows, 0) / z
    phi2 = z - pair_sum - max(n_rows - n_cols, 0) / z
    alpha = 0.5 * (1.0 / phi1 + 1.0 / phi2)
    beta = 0.5 * (1.0 / phi1 - 1.0 / phi2)
    return ResolventProbe(z=z, phi1=phi1, phi2=phi2, varphi=phi1 * phi2, alpha=alpha, beta=beta)


def phi_values(spec: LinearizationSpectrum, z) -> ResolventProbe:
    """Evaluate the two block traces of the resolvent at z.

    Requires |z| > ||noise||. With zero noise phi1 = z - n/z and
    phi2 = z - N/z.
    """
    return phi_from_eta(spec.eta, spec.n_rows, spec.n_cols, z)


def _split(spec: LinearizationSpectrum, x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != spec.n_rows + spec.n_cols:
        raise InvalidInputError(
            f"vector length {x.shape[0]} != N + n = {spec.n_rows + spec.n_cols}"
        )
    return x[: spec.n_rows], x[spec.n_rows :]


def resolvent_bilinear(spec: LinearizationSpectrum, z, x, y) -> complex:
    """x^T (zI - linearization)^{-1} y via the eigen-expansion.

    With zero noise this reduces to (x . y) / z.
    """
    z = complex(z)
    if abs(z) <= spec.spectral_norm:
        raise EvaluationDomainError(f"|z| = {abs(z):.6g} inside the spectrum")
    x1, x2 = _split(spec, x)
    y1, y2 = _split(spec, y)
    a = spec.left_vecs.T @ x1
    b = spec.right_vecs.T @ x2
    c = spec.left_vecs.T @ y1
    d = spec.right_vecs.T @ y2
    eta = spec.eta
    total = np.sum(
        (a + b) * (c + d) / (2.0 * (z - eta)) + (a - b) * (c - d) / (2.0 * (z + eta))
    )
    if spec.n_rows > spec.n_cols:
        total += (x1 @ y1 - a @ c) / z
    elif spec.n_cols > spec.n_rows:
        total += (x2 @ y2 - b @ d) / z
    return complex(total)


def local_law_gap(spec: LinearizationSpectrum, z, x, y) -> float:
    """|x^T (G(z) - Phi(z)) y| where Phi applies 1/phi1 and 1/phi2 blockwise."""
    probe = phi_values(spec, z)
    x1, x2 = _split(spec, x)
    y1, y2 = _split(spec, y)
    surrogate = (x1 @ y1) / probe.phi1 + (x2 @ y2) / probe.phi2
    return float(abs(resolvent_bilinear(spec, z, x, y) - surrogate))


def local_law_bound(n_rows: int, n_cols: int, margin: float, tail: float, z) -> float:
    """Deviation threshold 5 margin^2/(margin-1)^2 sqrt((tail+1) log(N+n)) / |z|^2."""
    c = 5.0 * margin**2 / (margin - 1.0) ** 2
    return float(c * np.sqrt((tail + 1.0) * np.log(n_rows + n_cols)) / abs(z) ** 2)


def linearized_basis(u, v) -> np.ndarray:
    """Stack signal factors into the 2r eigenvector columns of the linearized
    signal: ((u_j; v_j) and (u_j; -v_j)) / sqrt(2)."""
    u = check_orthonormal(u, what="left factor")
    v = check_orthonormal(v, what="right factor")
    if u.shape[1] != v.shape[1]:
        raise InvalidInputError("factor column counts differ")
    top = np.hstack([u, u])
    bot = np.hstack([v, -v])
    return np.vstack([top, bot]) / np.sqrt(2.0)


def uphiu_deviation(spec: LinearizationSpectrum, u_lin, z) -> float:
    """Max abs entry deviation of U_lin^T Phi U_lin from its closed form.

    The closed form is alpha on the 2r diagonal and beta on the two
    off-diagonal r x r identity blocks.
    """
    u_lin = check_orthonormal(u_lin, what="linearized basis")
    total = spec.n_rows + spec.n_cols
    if u_lin.shape[0] != total or u_lin.shape[1] % 2 != 0:
        raise InvalidInputError(
            f"linearized basis must be ({total}) x 2r, got {u_lin.shape}"
        )
    probe = phi_values(spec, z)
    w = u_lin.astype(complex).copy()
    w[: spec.n_rows] /= probe.phi1
    w[spec.n_rows :] /= probe.phi2
    t = u_lin.T @ w
    r = u_lin.shape[1] // 2
    target = np.zeros((2 * r, 2 * r), dtype=complex)
    idx = np.arange(r)
    target[idx, idx] = probe.alpha
    target[r + idx, r + idx] = probe.alpha
    target[idx, r + idx] = probe.beta
    target[r + idx, idx] = probe.beta
    return float(np.max(np.abs(t - target)))


def solve_zj(spec: LinearizationSpectrum, sigma_j: float, margin: float) -> float:
    """Root of varphi(z) = sigma_j^2 on the real axis right of the spectrum.

    Bisection on [base radius, expanding upper bracket]; stops when the
    residual drops below 1e-8 relative to sigma_j^2. Raises on a missing
    bracket or non-convergence.
    """
    if sigma_j <= 0 or margin < 2.0:
        raise InvalidInputError("need sigma_j > 0 and margin >= 2")
    lo = min_abs_z(spec.n_rows, spec.n_cols, margin)
    if spec.spectral_norm >= lo:
        raise NumericalFailureError(
            "noise norm reaches the probe domain, no valid bracket"
        )
    target = sigma_j * sigma_j
    tol = _ZJ_REL_TOL * target

    def f(zz: float) -> float:
        return phi_values(spec, zz).varphi.real - target

    flo = f(lo)
    if abs(flo) <= tol:
        return lo
    if flo > 0:
        raise NumericalFailureError("varphi already exceeds the target at the base radius")
    # chi(margin) = 1 + 1/(4 margin (margin-1)) caps the root; double for slack
    hi = 2.0 * (1.0 + 1.0 / (4.0 * margin * (margin - 1.0))) * sigma_j
    hi = max(hi, 2.0 * lo)
    expansions = 0
    while f(hi) < 0:
        hi *= 2.0
        expansions += 1
        if expansions > 64:
            raise NumericalFailureError("failed to bracket the root from above")
    for _ in range(_ZJ_MAX_ITER):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol:
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid
    raise NumericalFailureError("bisection did not reach the residual tolerance")


def linearized_noise(e) -> np.ndarray:
    """Dense (N+n) square linearization; test oracle, O((N+n)^2) memory."""
    e = as_matrix(e)
    n_rows, n_cols = e.shape
    top = np.hstack([np.zeros((n_rows, n_rows)), e])
    bot = np.hstack([e.T, np.zeros((n_cols, n_cols))])
    return np.vstack([top, bot])


def dense_resolvent_bilinear(e, z, x, y) -> complex:
    """Direct-solve oracle for resolvent_bilinear; small sizes only."""
    lin = linearized_noise(e)
    dim = lin.shape[0]
    rhs = np.asarray(y, dtype=complex).ravel()
    if rhs.shape[0] != dim:
        raise InvalidInputError(f"vector length {rhs.shape[0]} != N + n = {dim}")
    sol = np.linalg.solve(complex(z) * np.eye(dim) - lin, rhs)
    return complex(np.asarray(x, dtype=float).ravel() @ sol)
