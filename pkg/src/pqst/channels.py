"""Forward measurement channels and the inverse / pseudo-inverse maps."""

from __future__ import annotations

import numpy as np

from .qcore import DensityMatrix, dag
from .ensembles import UnitaryEnsemble, EnsembleError, _LOCAL


class ChannelError(ValueError):
    pass


def _as_matrix(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def forward_channel_exact(ensemble: UnitaryEnsemble, rho) -> np.ndarray:
    """(1/|zeta|) sum_U sum_k <k|U rho U^dag|k> U^dag|k><k|U, no sampling."""
    if not ensemble.is_explicit:
        raise ChannelError(f"ensemble {ensemble.name} has no explicit members; "
                           "use the sampled path")
    mat = _as_matrix(rho)
    d = mat.shape[0]
    out = np.zeros((d, d), dtype=complex)
    for u in ensemble.members:
        ud = dag(u)
        weights = np.einsum("ki,ij,jk->k", u, mat, ud).real
        out += (ud * weights) @ u
    return out / ensemble.size


def pseudo_inverse(p: float, a: np.ndarray) -> np.ndarray:
    """M_p^{-1}(A) = p A - 1."""
    if p <= 0:
        raise ChannelError("pseudo-inverse strength must be positive")
    a = np.asarray(a, dtype=complex)
    return p * a - np.eye(a.shape[0])


def depolarizing_inverse(n: int, a: np.ndarray) -> np.ndarray:
    """D^{-1}_{1/(2^n+1)}(A) = (2^n+1) A - Tr(A) 1."""
    a = np.asarray(a, dtype=complex)
    return (2**n + 1) * a - complex(np.trace(a)) * np.eye(a.shape[0])


def depolarizing_channel(n: int, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return (a + complex(np.trace(a)) * np.eye(a.shape[0])) / (2**n + 1)


def per_site_pauli_inverse(factors) -> np.ndarray:
    """Tensor product over sites of D_{1/3}^{-1} applied to each single-qubit factor."""
    out = np.eye(1, dtype=complex)
    for f in factors:
        f = np.asarray(f, dtype=complex)
        if f.shape != (2, 2):
            raise ChannelError("per-site inverse expects 2x2 factors")
        out = np.kron(out, 3.0 * f - complex(np.trace(f)) * np.eye(2))
    return out


def _local_snapshot(word, k_bits):
    """Per-site inverse snapshot for a {1,H,HS} word and an outcome bitstring."""
    factors = []
    for w, kj in zip(word, k_bits):
        u = _LOCAL[w]
        ket = dag(u)[:, kj]
        factors.append(np.outer(ket, ket.conj()))
    return per_site_pauli_inverse(factors)


def per_site_inverse_channel_exact(ensemble: UnitaryEnsemble, rho) -> np.ndarray:
    """Exact average of the per-site depolarizing inverse over an explicit local
    ensemble with Born weights. Recovers rho for the full Pauli set; applied to
    zeta_X it demonstrably fails to reproduce the trusted elements."""
    if ensemble.local_factors is None:
        raise ChannelError(f"ensemble {ensemble.name} has no per-site structure")
    mat = _as_matrix(rho)
    n = ensemble.n
    d = 2**n
    out = np.zeros((d, d), dtype=complex)
    for u, word in zip(ensemble.members, ensemble.local_factors):
        rot = u @ mat @ dag(u)
        for k in range(d):
            pk = rot[k, k].real
            if pk == 0.0:
                continue
            k_bits = [(k >> (n - 1 - j)) & 1 for j in range(n)]
            out += pk * _local_snapshot(word, k_bits)
    return out / ensemble.size
