"""Dense complex linear algebra and quantum-state primitives for small qubit registers.

Everything here works on plain numpy complex arrays of dimension 2^n, n <= 4,
with qubit 1 as the most significant bit of the computational-basis index.
"""

from __future__ import annotations

import json
import math

import numpy as np

MAX_QUBITS = 4
MAX_DIM = 2**MAX_QUBITS

# Single-qubit gate conventions. HS is the matrix product H @ S.
ID2 = np.eye(2, dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
PHASE_S = np.diag([1, 1j]).astype(complex)
HS = HADAMARD @ PHASE_S


class QcoreError(ValueError):
    pass


def dag(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def _check_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise QcoreError(f"{what} contains non-finite entries")


def num_qubits(mat: np.ndarray) -> int:
    d = mat.shape[0]
    n = d.bit_length() - 1
    if mat.shape != (d, d) or 2**n != d or not 1 <= n <= MAX_QUBITS:
        raise QcoreError(f"matrix dimension {mat.shape} is not 2^n x 2^n with n in 1..{MAX_QUBITS}")
    return n


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with qubit-1-most-significant ordering."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] * b.shape[0] > MAX_DIM:
        raise QcoreError(f"tensor product dimension {a.shape[0] * b.shape[0]} exceeds {MAX_DIM}")
    num_qubits(a), num_qubits(b)
    return np.kron(a, b)


def kron_all(*mats: np.ndarray) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    if out.shape[0] > MAX_DIM:
        raise QcoreError(f"tensor product dimension {out.shape[0]} exceeds {MAX_DIM}")
    return out


def unitarity_residual(u: np.ndarray) -> float:
    u = np.asarray(u, dtype=complex)
    return float(np.abs(dag(u) @ u - np.eye(u.shape[0])).max())


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    return unitarity_residual(u) <= tol


# ---------------------------------------------------------------------------
# Bitstrings. Qubit 1 is the most significant bit: index k = sum bits[j] 2^(n-1-j).

def index_to_bits(k: int, n: int) -> tuple[int, ...]:
    return tuple((k >> (n - 1 - j)) & 1 for j in range(n))


def bits_to_index(bits) -> int:
    k = 0
    for b in bits:
        k = (k << 1) | int(b)
    return k


# ---------------------------------------------------------------------------
# Hermitian eigensolver: cyclic Jacobi with complex rotations.

def jacobi_eigh(a: np.ndarray, tol: float = 1e-13, max_sweeps: int = 60):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Returns (eigenvalues ascending, eigenvector columns). Converges when the
    off-diagonal Frobenius norm drops below tol * max(1, ||a||_F).
    """
    a = np.array(a, dtype=complex)
    d = a.shape[0]
    if np.abs(a - dag(a)).max() > 1e-8 * max(1.0, np.abs(a).max()):
        raise QcoreError("jacobi_eigh requires a Hermitian matrix")
    a = (a + dag(a)) / 2
    v = np.eye(d, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                b = a[p, q]
                if abs(b) < 1e-300:
                    continue
                phi = math.atan2(b.imag, b.real)
                theta = 0.5 * math.atan2(2 * abs(b), a[p, p].real - a[q, q].real)
                c, s = math.cos(theta), math.sin(theta)
                e = complex(math.cos(phi), -math.sin(phi))
                # 2x2 unitary [[c, -s], [s e^{-i phi}, c e^{-i phi}]] zeroing a[p,q]
                u2 = np.array([[c, -s], [s * e, c * e]])
                a[:, [p, q]] = a[:, [p, q]] @ u2
                a[[p, q], :] = dag(u2) @ a[[p, q], :]
                v[:, [p, q]] = v[:, [p, q]] @ u2
    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigvalsh(a: np.ndarray) -> np.ndarray:
    return jacobi_eigh(a)[0]


def spectral_norm(a: np.ndarray) -> float:
    return float(np.abs(eigvalsh(a)).max())


def matrix_sqrt_psd(a: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix, clamping tiny negative eigenvalues."""
    w, v = jacobi_eigh(a)
    return v @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ dag(v)


# ---------------------------------------------------------------------------
# Density matrices.

class DensityMatrix:
    """Validated density operator: Hermitian, unit trace, PSD within tolerance.

    The relaxed tolerances exist for fixture matrices transcribed from printed
    4-decimal data, which can miss trace 1 / PSD at the 1e-3 level.
    """

    def __init__(self, mat, herm_tol: float = 1e-10, trace_tol: float = 1e-10,
                 eig_floor: float = -1e-9):
        mat = np.asarray(mat, dtype=complex)
        self.n = num_qubits(mat)
        _check_finite(mat, "density matrix")
        herm_resid = float(np.abs(mat - dag(mat)).max())
        if herm_resid > herm_tol:
            raise QcoreError(f"density matrix not Hermitian (residual {herm_resid:.2e})")
        trace_resid = abs(complex(np.trace(mat)) - 1.0)
        if trace_resid > trace_tol:
            raise QcoreError(f"density matrix trace differs from 1 by {trace_resid:.2e}")
        min_eig = float(eigvalsh((mat + dag(mat)) / 2).min())
        if min_eig < eig_floor:
            raise QcoreError(f"density matrix has eigenvalue {min_eig:.2e} below {eig_floor:.0e}")
        self.mat = mat
        self.validation_residuals = {
            "hermiticity": herm_resid, "trace": trace_resid, "min_eigenvalue": min_eig,
        }

    @classmethod
    def relaxed(cls, mat) -> "DensityMatrix":
        return cls(mat, herm_tol=1e-8, trace_tol=5e-3, eig_floor=-5e-3)

    @classmethod
    def from_statevector(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return 2**self.n


def conjugate_by_unitary(rho: DensityMatrix, u: np.ndarray, tol: float = 1e-10) -> DensityMatrix:
    """U rho U^dag, rejecting non-unitary u."""
    resid = unitarity_residual(u)
    if resid > tol:
        raise QcoreError(f"conjugation operator is not unitary (residual {resid:.2e})")
    out = u @ rho.mat @ dag(u)
    return DensityMatrix((out + dag(out)) / 2, herm_tol=1e-9, trace_tol=1e-9, eig_floor=-1e-8)


def born_probabilities(rho: DensityMatrix) -> np.ndarray:
    """Computational-basis outcome distribution <k|rho|k>, clamped and renormalized."""
    probs = np.diag(rho.mat).real.copy()
    probs[probs < 0] = 0.0
    return probs / probs.sum()


def sample_outcome(probs: np.ndarray, rng: np.random.Generator) -> tuple[int, ...]:
    """Draw a measurement outcome bitstring from a probability vector."""
    probs = np.asarray(probs, dtype=float)
    if probs.min() < -1e-9:
        raise QcoreError(f"negative probability {probs.min():.2e}")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise QcoreError(f"probabilities sum to {probs.sum()!r}, not 1")
    n = probs.size.bit_length() - 1
    k = sample_outcome_index(probs, rng)
    return index_to_bits(k, n)


def sample_outcome_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return int(rng.choice(probs.size, p=probs / probs.sum()))


# ---------------------------------------------------------------------------
# Metrics.

def purity(rho: DensityMatrix) -> float:
    return float(np.trace(rho.mat @ rho.mat).real)


def fidelity_with_clip(rho: DensityMatrix, sigma) -> tuple[float, float]:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 plus clipped mass.

    sigma may be any Hermitian matrix (finite-shot estimators can be
    non-physical); negative eigenvalues of sqrt(rho) sigma sqrt(rho) are
    clamped to zero and their total magnitude is returned alongside.
    """
    sig = sigma.mat if isinstance(sigma, DensityMatrix) else np.asarray(sigma, dtype=complex)
    if sig.shape != rho.mat.shape:
        raise QcoreError("fidelity arguments have mismatched dimensions")
    if np.abs(sig - dag(sig)).max() > 1e-8:
        raise QcoreError("fidelity second argument is not Hermitian")
    sqrt_rho = matrix_sqrt_psd(rho.mat)
    w = eigvalsh(sqrt_rho @ sig @ sqrt_rho)
    clipped = float(-w[w < 0].sum()) if np.any(w < 0) else 0.0
    f = float(np.sqrt(np.clip(w, 0.0, None)).sum() ** 2)
    return f, clipped


def fidelity(rho: DensityMatrix, sigma) -> float:
    return fidelity_with_clip(rho, sigma)[0]


def partial_trace(mat: np.ndarray, n: int, keep: tuple[int, ...]) -> np.ndarray:
    """Trace out all qubits not in `keep` (1-based qubit labels)."""
    keep = tuple(sorted(keep))
    axes = list(keep) + [q for q in range(1, n + 1) if q not in keep]
    t = np.asarray(mat, dtype=complex).reshape((2,) * (2 * n))
    # move kept row/col axes to the front
    perm = [q - 1 for q in axes] + [n + q - 1 for q in axes]
    t = np.transpose(t, perm)
    dk = 2 ** len(keep)
    dr = 2 ** (n - len(keep))
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("arbr->ab", t)


def partial_transpose(mat: np.ndarray, n: int, qubits: tuple[int, ...]) -> np.ndarray:
    """Transpose the listed qubits (1-based) of an n-qubit operator."""
    t = np.asarray(mat, dtype=complex).reshape((2,) * (2 * n))
    perm = list(range(2 * n))
    for q in qubits:
        perm[q - 1], perm[n + q - 1] = perm[n + q - 1], perm[q - 1]
    return np.transpose(t, perm).reshape(2**n, 2**n)


def entanglement_measure(rho: DensityMatrix, partition: tuple[int, ...] = (1,)) -> float:
    """Bipartite entanglement across `partition` | rest, base-2 logarithms.

    Entanglement entropy of the reduced state for pure inputs, logarithmic
    negativity via the partial transpose otherwise.
    """
    if not partition or not set(partition) < set(range(1, rho.n + 1)):
        raise QcoreError("partition must be a proper nonempty subset of the qubits")
    if purity(rho) > 1 - 1e-8:
        red = partial_trace(rho.mat, rho.n, tuple(partition))
        w = eigvalsh(red)
        w = w[w > 1e-12]
        return float(-(w * np.log2(w)).sum())
    pt = partial_transpose(rho.mat, rho.n, tuple(partition))
    trace_norm = float(np.abs(eigvalsh(pt)).sum())
    return float(np.log2(trace_norm))


# ---------------------------------------------------------------------------
# Random streams. Workers own derived streams keyed by trial indices so that
# results are independent of how trials are distributed.

def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


# ---------------------------------------------------------------------------
# Density matrix file format: {n_qubits, re, im} with row-major arrays.

def save_density_matrix(path, rho: DensityMatrix) -> None:
    doc = {
        "n_qubits": rho.n,
        "re": [float(x) for x in rho.mat.real.ravel()],
        "im": [float(x) for x in rho.mat.imag.ravel()],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_density_matrix(path, relaxed: bool = False) -> DensityMatrix:
    with open(path) as fh:
        doc = json.load(fh)
    try:
        n = int(doc["n_qubits"])
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise QcoreError(f"malformed density matrix file {path}: {exc}") from exc
    d = 2**n
    if re.size != d * d or im.size != d * d:
        raise QcoreError(f"density matrix file {path} has wrong entry count")
    mat = (re + 1j * im).reshape(d, d)
    return DensityMatrix.relaxed(mat) if relaxed else DensityMatrix(mat)
