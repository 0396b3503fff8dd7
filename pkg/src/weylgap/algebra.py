"""Dense algebra for symmetric bilinear forms and (0,4) curvature tensors.

Everything here works on small dense arrays (n <= 12 in practice), with no
symmetry compression.  The Frobenius norm convention is the raw sum of
squares over all n^4 basis entries of a (0,4) tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SymForm",
    "VectorValuedForm",
    "CurvTensor",
    "Spectrum",
    "CartanVerdict",
    "CurvatureDecomposition",
    "kn_product",
    "kn_product_valued",
    "is_flat",
    "nullity_space",
    "curvature_of_form",
    "decompose",
    "weyl_map",
    "cartan_check",
    "cartan_lorentzian_form",
]

_SYM_TOL = 1e-12
DEFAULT_CLUSTER_TOL = 1e-8


def _check_square_symmetric(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a - a.T).max(initial=0.0) > _SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return a


@dataclass(frozen=True)
class SymForm:
    """Symmetric bilinear form on an n-dimensional inner-product space."""

    entries: np.ndarray

    def __post_init__(self):
        a = _check_square_symmetric(self.entries)
        if a.shape[0] < 2:
            raise ValueError("SymForm needs dimension >= 2")
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "SymForm":
        return cls(np.eye(n))

    @classmethod
    def diagonal(cls, values) -> "SymForm":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def spectrum(self) -> "Spectrum":
        """Eigenvalues of the associated self-adjoint endomorphism, descending."""
        vals = np.linalg.eigvalsh(self.entries)
        return Spectrum(values=vals[::-1].copy())

    def norm_sq(self) -> float:
        return float(np.sum(self.entries ** 2))

    def to_json(self) -> dict:
        return {"n": self.n, "entries": self.entries.ravel().tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "SymForm":
        n = int(obj["n"])
        return cls(np.asarray(obj["entries"], dtype=float).reshape(n, n))


@dataclass(frozen=True)
class VectorValuedForm:
    """Bilinear form with values in a k-dimensional space of signature +-1.

    ``entries[i, j, a]`` is the a-th component of beta(e_i, e_j); symmetry in
    the first two arguments is required.  The codomain inner product is
    diagonal with the stored signature.
    """

    entries: np.ndarray
    signature: tuple

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 3 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected (n, n, k) entries, got shape {a.shape}")
        scale = max(1.0, float(np.abs(a).max(initial=0.0)))
        if np.abs(a - a.transpose(1, 0, 2)).max(initial=0.0) > _SYM_TOL * scale:
            raise ValueError("form is not symmetric in its first two arguments")
        sig = tuple(int(s) for s in self.signature)
        if len(sig) != a.shape[2] or any(s not in (1, -1) for s in sig):
            raise ValueError("signature must list exactly k entries of +-1")
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "signature", sig)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def k(self) -> int:
        return self.entries.shape[2]

    @classmethod
    def from_sym(cls, form: SymForm) -> "VectorValuedForm":
        return cls(form.entries[:, :, None], (1,))

    def max_abs(self) -> float:
        return float(np.abs(self.entries).max(initial=0.0))


@dataclass(frozen=True)
class CurvTensor:
    """(0,4) tensor stored as a dense n^4 array.

    Construction checks the two antisymmetries T(1,2,3,4) = -T(2,1,3,4) =
    -T(1,2,4,3), which every Kulkarni-Nomizu product satisfies.  Pair
    symmetry T(1,2,3,4) = T(3,4,1,2) is only checked where an operation
    needs it (see ``has_curvature_symmetries``).
    """

    entries: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.entries, dtype=float)
        if t.ndim != 4 or len(set(t.shape)) != 1:
            raise ValueError(f"expected an n^4 array, got shape {t.shape}")
        tol = _SYM_TOL * max(1.0, float(np.abs(t).max(initial=0.0)))
        if np.abs(t + t.transpose(1, 0, 2, 3)).max(initial=0.0) > tol:
            raise ValueError("tensor is not antisymmetric in arguments (1,2)")
        if np.abs(t + t.transpose(0, 1, 3, 2)).max(initial=0.0) > tol:
            raise ValueError("tensor is not antisymmetric in arguments (3,4)")
        object.__setattr__(self, "entries", t)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def has_curvature_symmetries(self, tol: float = _SYM_TOL) -> bool:
        t = self.entries
        scale = max(1.0, float(np.abs(t).max(initial=0.0)))
        return bool(np.abs(t - t.transpose(2, 3, 0, 1)).max(initial=0.0) <= tol * scale)

    def norm_sq(self) -> float:
        return float(np.sum(self.entries ** 2))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def inner(self, other: "CurvTensor") -> float:
        return float(np.sum(self.entries * other.entries))

    def __add__(self, other: "CurvTensor") -> "CurvTensor":
        return CurvTensor(self.entries + other.entries)

    def __sub__(self, other: "CurvTensor") -> "CurvTensor":
        return CurvTensor(self.entries - other.entries)

    def __mul__(self, c: float) -> "CurvTensor":
        return CurvTensor(self.entries * float(c))

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {"n": self.n, "entries": self.entries.ravel().tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "CurvTensor":
        n = int(obj["n"])
        return cls(np.asarray(obj["entries"], dtype=float).reshape(n, n, n, n))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of a symmetric endomorphism, sorted descending."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("spectrum must be a nonempty vector")
        if np.any(np.diff(v) > 0):
            raise ValueError("spectrum must be sorted descending")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CartanVerdict:
    degenerate: bool
    repeated_value: float | None
    multiplicity: int
    residual_weyl_norm: float


@dataclass(frozen=True)
class CurvatureDecomposition:
    weyl: CurvTensor
    ricci: SymForm
    scal: float
    schouten: SymForm
    scalar_part: CurvTensor
    traceless_ricci_part: CurvTensor


def kn_product(phi: SymForm, psi: SymForm) -> CurvTensor:
    """Kulkarni-Nomizu product of two symmetric bilinear forms.

    Returns the raw four-term formula without extra symmetrization; for
    phi != psi the pair symmetry T(1,2,3,4) = T(3,4,1,2) may fail.
    """
    if phi.n != psi.n:
        raise ValueError(f"dimension mismatch: {phi.n} vs {psi.n}")
    a, b = phi.entries, psi.entries
    t = (
        np.einsum("ik,jl->ijkl", a, b)
        + np.einsum("jl,ik->ijkl", a, b)
        - np.einsum("il,jk->ijkl", a, b)
        - np.einsum("jk,il->ijkl", a, b)
    )
    return CurvTensor(t)


def kn_product_valued(beta: VectorValuedForm, gamma: VectorValuedForm) -> CurvTensor:
    """Kulkarni-Nomizu product of two vector-valued forms.

    Inner products in the codomain use the stored diagonal signature.
    """
    if beta.n != gamma.n or beta.k != gamma.k:
        raise ValueError("dimension mismatch between the two forms")
    if beta.signature != gamma.signature:
        raise ValueError("signature mismatch between the two forms")
    s = np.asarray(beta.signature, dtype=float)
    a = beta.entries * s  # absorb the signature into one factor
    b = gamma.entries
    t = (
        np.einsum("ikc,jlc->ijkl", a, b)
        - np.einsum("ilc,jkc->ijkl", a, b)
        + np.einsum("jlc,ikc->ijkl", a, b)
        - np.einsum("jkc,ilc->ijkl", a, b)
    )
    return CurvTensor(t)


def is_flat(beta: VectorValuedForm, tol: float = 1e-10) -> bool:
    """True iff beta KN beta vanishes relative to the size of beta."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    prod = kn_product_valued(beta, beta)
    bound = tol * (1.0 + beta.max_abs() ** 2)
    return bool(np.abs(prod.entries).max(initial=0.0) <= bound)


def nullity_space(beta: VectorValuedForm, tol: float = 1e-10):
    """Orthonormal basis of the nullity space {x : beta(x, .) = 0}.

    Computed as the numerical kernel of the stacked contraction map; returns
    an (n, d) array whose columns span the kernel.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = beta.n
    # rows index (second argument, component); columns the first argument
    m = beta.entries.transpose(1, 2, 0).reshape(-1, n)
    _, svals, vt = np.linalg.svd(m)
    svals = np.concatenate([svals, np.zeros(max(0, n - svals.size))])
    keep = svals <= tol * max(1.0, svals.max(initial=0.0))
    basis = vt[keep].T
    return basis


def curvature_of_form(beta: SymForm, ambient_c: float = 0.0) -> CurvTensor:
    """Curvature tensor of a hypersurface with second fundamental form beta
    inside a space form of constant curvature ``ambient_c``."""
    g = SymForm.identity(beta.n)
    t = 0.5 * float(ambient_c) * kn_product(g, g).entries
    t = t + 0.5 * kn_product(beta, beta).entries
    return CurvTensor(t)


def _ricci_entries(t: np.ndarray) -> np.ndarray:
    return np.einsum("iaib->ab", t)


def decompose(tensor: CurvTensor, tol: float = 1e-10) -> CurvatureDecomposition:
    """Orthogonal decomposition of a curvature tensor into scalar,
    traceless-Ricci, and Weyl parts.

    Raises if the input lacks pair symmetry, if the three parts fail to be
    pairwise Frobenius-orthogonal to ``tol`` relative, or if they do not
    reassemble the input.
    """
    if not tensor.has_curvature_symmetries():
        raise ValueError("input tensor does not satisfy curvature symmetries")
    n = tensor.n
    if n < 3:
        raise ValueError("decomposition needs dimension >= 3")
    g = SymForm.identity(n)
    ric = _ricci_entries(tensor.entries)
    ric = 0.5 * (ric + ric.T)
    scal = float(np.trace(ric))
    ricci = SymForm(ric)
    schouten = SymForm((ric - scal * np.eye(n) / (2.0 * (n - 1))) / (n - 2))
    scalar_part = (scal / (2.0 * n * (n - 1))) * kn_product(g, g)
    traceless = SymForm((ric - (scal / n) * np.eye(n)))
    traceless_part = (1.0 / (n - 2)) * kn_product(traceless, g)
    weyl = tensor - scalar_part - traceless_part

    parts = (weyl, scalar_part, traceless_part)
    scale = max(tensor.norm_sq(), 1e-300)
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(parts[i].inner(parts[j])) > tol * scale:
                raise ValueError("decomposition parts are not orthogonal")
    resid = (weyl + scalar_part + traceless_part) - tensor
    if resid.norm_sq() > tol * scale:
        raise ValueError("decomposition does not reassemble the input")
    return CurvatureDecomposition(
        weyl=weyl,
        ricci=ricci,
        scal=scal,
        schouten=schouten,
        scalar_part=scalar_part,
        traceless_ricci_part=traceless_part,
    )


def weyl_map(beta: SymForm) -> CurvTensor:
    """Weyl part of the curvature tensor 1/2 beta KN beta, built directly
    from its Ricci contraction and scalar trace.  Requires n >= 4."""
    n = beta.n
    if n < 4:
        raise ValueError("the Weyl map is only defined here for n >= 4")
    r = 0.5 * kn_product(beta, beta).entries
    ric = _ricci_entries(r)
    scal = float(np.trace(ric))
    l_form = SymForm((ric - scal * np.eye(n) / (2.0 * (n - 1))) / (n - 2))
    w = r - kn_product(l_form, SymForm.identity(n)).entries
    return CurvTensor(w)


def cartan_lorentzian_form(beta: SymForm) -> VectorValuedForm:
    """The rank-3 Lorentzian form (beta, <.,.>, -L(beta)) used to test
    umbilicity through flatness.

    The natural codomain pairing <(a1,a2,a3),(b1,b2,b3)> = a1 b1 + a2 b3 +
    a3 b2 is not diagonal; components two and three are rotated so the
    stored signature is (+1, +1, -1).
    """
    n = beta.n
    g = np.eye(n)
    r = 0.5 * kn_product(beta, beta).entries
    ric = _ricci_entries(r)
    scal = float(np.trace(ric))
    l_entries = (ric - scal * g / (2.0 * (n - 1))) / (n - 2)
    c2 = (g - l_entries) / np.sqrt(2.0)
    c3 = (g + l_entries) / np.sqrt(2.0)
    entries = np.stack([beta.entries, c2, c3], axis=2)
    return VectorValuedForm(entries, (1, 1, -1))


def cartan_check(beta: SymForm, tol: float = DEFAULT_CLUSTER_TOL) -> CartanVerdict:
    """Decide whether beta has an eigenvalue of multiplicity >= n-1 and
    cross-check the verdict against the residual Weyl norm."""
    if beta.n < 4:
        raise ValueError("cartan_check needs n >= 4")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = beta.n
    vals = np.sort(np.linalg.eigvalsh(beta.entries))
    radius = float(np.abs(vals).max(initial=0.0))
    gap_tol = tol * (1.0 + radius)

    clusters = []
    start = 0
    for i in range(1, n):
        if vals[i] - vals[i - 1] > gap_tol:
            clusters.append((start, i))
            start = i
    clusters.append((start, n))
    best = max(clusters, key=lambda c: c[1] - c[0])
    multiplicity = best[1] - best[0]
    degenerate = multiplicity >= n - 1
    repeated = float(vals[best[0]:best[1]].mean()) if degenerate else None

    residual = weyl_map(beta).norm()
    # matched tolerance: a cluster of width gap_tol perturbs W by O(n^2 * gap * radius)
    matched = 100.0 * n * n * gap_tol * (1.0 + radius)
    if degenerate and residual > matched:
        raise ValueError(
            "spectral clustering says umbilic-type but the Weyl residual "
            f"{residual:.3e} exceeds the matched tolerance {matched:.3e}"
        )
    if not degenerate and residual <= 1e-12 * (1.0 + radius) ** 2:
        raise ValueError(
            "Weyl residual vanishes but no eigenvalue cluster of size "
            f"{n - 1} was found (gap tolerance {gap_tol:.3e})"
        )
    return CartanVerdict(
        degenerate=degenerate,
        repeated_value=repeated,
        multiplicity=multiplicity,
        residual_weyl_norm=residual,
    )
