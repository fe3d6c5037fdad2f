"""Dense SVD with a fixed sign convention, plus unitarily invariant norms.

Matrices are plain 2-d float64 numpy arrays; the shape carries the row and
column counts. Invariant norms are evaluated through a symmetric gauge
function of the singular values, so the same code path serves matrices and
precomputed spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, NumericalFailureError

ORTHO_TOL = 1e-8

_INVARIANT_KINDS = ("operator", "frobenius", "nuclear", "schatten", "kyfan")
_ALL_KINDS = _INVARIANT_KINDS + ("two_inf", "max")


def as_matrix(a) -> np.ndarray:
    """Validate and return `a` as a 2-d float64 array with finite entries."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError(f"expected a nonempty 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix entries must be finite")
    return a


def check_orthonormal(b, tol: float = ORTHO_TOL, what: str = "basis") -> np.ndarray:
    """Validate that the columns of `b` are orthonormal to within `tol`."""
    b = as_matrix(b)
    if b.shape[1] > b.shape[0]:
        raise InvalidInputError(f"{what}: more columns than rows, cannot be orthonormal")
    gram = b.T @ b
    dev = float(np.max(np.abs(gram - np.eye(b.shape[1]))))
    if dev > tol:
        raise InvalidInputError(f"{what}: columns not orthonormal (deviation {dev:.3e})")
    return b


@dataclass(frozen=True)
class NormSpec:
    """A matrix norm selector.

    kind is one of operator, frobenius, nuclear, schatten, kyfan, two_inf,
    max. schatten carries an exponent p >= 1, kyfan an order k >= 1. The
    first five are unitarily invariant; two_inf (largest row length) and max
    (largest absolute entry) are not.
    """

    kind: str
    p: float | None = None
    k: int | None = None

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise InvalidParameterError(f"unknown norm kind {self.kind!r}")
        if self.kind == "schatten":
            if self.p is None or not np.isfinite(self.p) or self.p < 1:
                raise InvalidParameterError("schatten norm needs exponent p >= 1")
        elif self.p is not None:
            raise InvalidParameterError(f"{self.kind} norm takes no exponent")
        if self.kind == "kyfan":
            if self.k is None or int(self.k) != self.k or self.k < 1:
                raise InvalidParameterError("kyfan norm needs integer order k >= 1")
        elif self.k is not None:
            raise InvalidParameterError(f"{self.kind} norm takes no order")

    @property
    def invariant(self) -> bool:
        return self.kind in _INVARIANT_KINDS

    @property
    def label(self) -> str:
        if self.kind == "schatten":
            return f"schatten{self.p:g}"
        if self.kind == "kyfan":
            return f"kyfan{self.k}"
        return self.kind


OPERATOR = NormSpec("operator")
FROBENIUS = NormSpec("frobenius")
NUCLEAR = NormSpec("nuclear")
TWO_INF = NormSpec("two_inf")
MAX_ABS = NormSpec("max")


def schatten(p: float) -> NormSpec:
    return NormSpec("schatten", p=float(p))


def kyfan(k: int) -> NormSpec:
    return NormSpec("kyfan", k=int(k))


def norm_spec_from_token(token: str) -> NormSpec:
    """Parse a norm token such as 'operator', 'kyfan3' or 'schatten2.5'."""
    token = token.strip().lower()
    if token in ("operator", "frobenius", "nuclear", "two_inf", "max"):
        return NormSpec(token)
    if token.startswith("kyfan"):
        try:
            return kyfan(int(token[5:]))
        except ValueError:
            raise InvalidParameterError(f"bad kyfan token {token!r}") from None
    if token.startswith("schatten"):
        try:
            return schatten(float(token[8:]))
        except ValueError:
            raise InvalidParameterError(f"bad schatten token {token!r}") from None
    raise InvalidParameterError(f"unknown norm token {token!r}")


def gauge(values, spec: NormSpec) -> float:
    """Symmetric gauge function of a value vector.

    Permutation and sign invariant; zero padding never changes the result.
    Applied to the singular value vector this evaluates the corresponding
    unitarily invariant matrix norm. Non-invariant specs are rejected.
    """
    if not spec.invariant:
        raise InvalidParameterError(f"{spec.kind} is not a gauge norm")
    v = np.sort(np.abs(np.asarray(values, dtype=float).ravel()))[::-1]
    if v.size == 0 or v[0] == 0.0:
        return 0.0
    if spec.kind == "operator":
        return float(v[0])
    if spec.kind == "frobenius":
        return float(np.sqrt(np.sum(v * v)))
    if spec.kind == "nuclear":
        return float(np.sum(v))
    if spec.kind == "kyfan":
        return float(np.sum(v[: spec.k]))
    # schatten: scale by the top value to avoid overflow for large p
    w = v / v[0]
    return float(v[0] * np.sum(w**spec.p) ** (1.0 / spec.p))


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``a = left @ diag(singulars) @ right.T``.

    left is N x m and right is n x m with orthonormal columns, singulars is
    nonnegative and descending. ``svd`` produces m = min(N, n); generators
    may produce the rank-r thin form instead.
    """

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        m = self.singulars.shape[0]
        if self.left.ndim != 2 or self.right.ndim != 2 or self.singulars.ndim != 1:
            raise InvalidInputError("SvdFactors fields have wrong dimensionality")
        if self.left.shape[1] != m or self.right.shape[1] != m:
            raise InvalidInputError("factor column counts disagree with singular count")
        if m and (np.any(self.singulars < 0) or np.any(np.diff(self.singulars) > 0)):
            raise InvalidInputError("singular values must be nonnegative and descending")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.left.shape[0], self.right.shape[0])

    def validate(self, a=None, tol: float = 1e-10, recon_tol: float = 1e-8) -> None:
        """Assert orthonormality (tol) and, given `a`, reconstruction (recon_tol)."""
        check_orthonormal(self.left, tol, "left factor")
        check_orthonormal(self.right, tol, "right factor")
        if a is not None:
            a = as_matrix(a)
            resid = a - (self.left * self.singulars) @ self.right.T
            scale = max(1.0, float(np.linalg.norm(a)))
            err = float(np.linalg.norm(resid))
            if err > recon_tol * scale:
                raise InvalidInputError(f"reconstruction error {err:.3e} exceeds tolerance")


def _fix_signs(u: np.ndarray, v: np.ndarray) -> None:
    """Flip (left, right) column pairs so each left column's first entry that
    clears 1e-12 of the column max is nonnegative. In place."""
    absu = np.abs(u)
    colmax = absu.max(axis=0)
    mask = absu > 1e-12 * np.maximum(colmax, np.finfo(float).tiny)
    first = mask.argmax(axis=0)
    lead = u[first, np.arange(u.shape[1])]
    flip = lead < 0
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0


def svd(a) -> SvdFactors:
    """Thin SVD of `a` with m = min(N, n) columns and deterministic signs."""
    a = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"SVD did not converge: {exc}") from None
    v = np.ascontiguousarray(vt.T)
    _fix_signs(u, v)
    return SvdFactors(left=u, singulars=s, right=v)


def singular_values(a) -> np.ndarray:
    """Singular values of `a`, descending."""
    a = as_matrix(a)
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"SVD did not converge: {exc}") from None


def apply_norm(a, spec: NormSpec) -> float:
    """Evaluate the selected norm of the matrix `a`."""
    a = as_matrix(a)
    if spec.kind == "two_inf":
        return float(np.sqrt(np.max(np.sum(a * a, axis=1))))
    if spec.kind == "max":
        return float(np.max(np.abs(a)))
    if spec.kind == "kyfan" and spec.k > min(a.shape):
        raise InvalidParameterError(
            f"kyfan order {spec.k} exceeds min(N, n) = {min(a.shape)}"
        )
    return gauge(singular_values(a), spec)


def effective_rank(factors: SvdFactors, tol: float) -> int:
    """Number of singular values above tol * (largest); 0 for the zero matrix."""
    if tol < 0:
        raise InvalidParameterError("tol must be nonnegative")
    s = factors.singulars
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def orth_projector(b) -> np.ndarray:
    """Orthogonal projector b @ b.T onto the column span of an orthonormal b."""
    b = check_orthonormal(b)
    return b @ b.T
