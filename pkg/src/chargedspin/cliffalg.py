"""Exact Clifford algebra representations with a chirality operator.

The fiber algebra is built once per dimension: ``n`` anti-Hermitian complex
matrices ``gamma_a`` with ``gamma_a gamma_b + gamma_b gamma_a = -2 delta_ab``
and a Hermitian involution ``chi`` anticommuting with every ``gamma_a``.
For odd ``n`` no such ``chi`` exists on the irreducible fiber, so the fiber is
doubled: vectors act block-diagonally as ``(X, -X)`` and ``chi`` swaps the two
halves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionTooLargeError, InvalidDimensionError, ShapeError

DEFAULT_DIM_CAP = 1024

_SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SIGMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class CliffordRep:
    """Matrix representation of the Clifford action in dimension ``n``.

    Attributes
    ----------
    n : spatial dimension.
    N : spinor fiber dimension (``2^(n//2)``, doubled for odd ``n``).
    gammas : array of shape ``(n, N, N)``, anti-Hermitian generators.
    chi : Hermitian involution anticommuting with every generator.
    chirality_phase : the scalar prefactor chosen for ``chi`` (even ``n``),
        recorded so runs are comparable; ``"swap"`` for odd ``n``.
    """

    n: int
    N: int
    gammas: np.ndarray
    chi: np.ndarray
    chirality_phase: str = field(default="1")

    def __post_init__(self):
        self.gammas.setflags(write=False)
        self.chi.setflags(write=False)


def _hermitian_generators(n: int) -> list[np.ndarray]:
    """Hermitian matrices with ``{h_a, h_b} = 2 delta_ab`` (tensor-product tower)."""
    if n == 1:
        return [_SIGMA3.copy()]
    if n == 2:
        return [_SIGMA1.copy(), _SIGMA2.copy()]
    if n == 3:
        return [_SIGMA1.copy(), _SIGMA2.copy(), _SIGMA3.copy()]
    lower = _hermitian_generators(n - 2)
    eye = np.eye(lower[0].shape[0], dtype=complex)
    out = [np.kron(_SIGMA1, h) for h in lower]
    out.append(np.kron(_SIGMA2, eye))
    out.append(np.kron(_SIGMA3, eye))
    return out


def _chirality_even(gammas: np.ndarray) -> tuple[np.ndarray, str]:
    """Normalize the volume element into a Hermitian involution.

    The product ``g_1 ... g_n`` squares to a sign; two phases make it a
    Hermitian involution and we deterministically take the one whose first
    diagonal entry has nonnegative real part (ties broken toward +i).
    """
    vol = gammas[0].copy()
    for g in gammas[1:]:
        vol = vol @ g
    eye = np.eye(vol.shape[0])
    candidates = []
    for c in (1.0, -1.0, 1.0j, -1.0j):
        m = c * vol
        if (np.allclose(m @ m, eye, atol=1e-12)
                and np.allclose(m, m.conj().T, atol=1e-12)):
            candidates.append((c, m))
    if not candidates:
        raise AssertionError("no admissible chirality phase found")

    def _key(item):
        _, m = item
        d = m[0, 0]
        return (-np.real(d), -np.imag(d))

    c, chi = min(candidates, key=_key)
    phases = {1.0: "1", -1.0: "-1", 1.0j: "i", -1.0j: "-i"}
    return chi, phases[complex(c)]


def build_clifford_rep(n: int, dim_cap: int = DEFAULT_DIM_CAP) -> CliffordRep:
    """Construct the Clifford representation used throughout the library.

    Parameters
    ----------
    n : spatial dimension, ``n >= 2``.
    dim_cap : refuse fibers larger than this (dense fiber algebra only).
    """
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {n!r}")
    n = int(n)
    N = 2 ** (n // 2)
    if n % 2 == 1:
        N *= 2
    if N > dim_cap:
        raise DimensionTooLargeError(
            f"fiber dimension {N} for n={n} exceeds cap {dim_cap}")

    herm = _hermitian_generators(n)
    irr = np.array([1.0j * h for h in herm])

    if n % 2 == 0:
        chi, phase = _chirality_even(irr)
        return CliffordRep(n=n, N=N, gammas=irr, chi=chi, chirality_phase=phase)

    # Odd n: doubled fiber, block action (X, -X), chi swaps the halves.
    half = irr.shape[1]
    gammas = np.zeros((n, N, N), dtype=complex)
    gammas[:, :half, :half] = irr
    gammas[:, half:, half:] = -irr
    chi = np.zeros((N, N), dtype=complex)
    chi[:half, half:] = np.eye(half)
    chi[half:, :half] = np.eye(half)
    return CliffordRep(n=n, N=N, gammas=gammas, chi=chi, chirality_phase="swap")


def clifford_mul(rep: CliffordRep, X: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Clifford action ``X . phi`` of a tangent vector in frame components.

    Broadcasts over leading axes: ``X`` has shape ``(..., n)`` and ``phi``
    shape ``(..., N)``.
    """
    X = np.asarray(X)
    phi = np.asarray(phi)
    if X.shape[-1] != rep.n:
        raise ShapeError(f"vector has {X.shape[-1]} components, expected {rep.n}")
    if phi.shape[-1] != rep.N:
        raise ShapeError(f"spinor has {phi.shape[-1]} components, expected {rep.N}")
    return np.einsum("...a,aij,...j->...i", X, rep.gammas, phi)


def chirality_apply(rep: CliffordRep, phi: np.ndarray) -> np.ndarray:
    """Apply the chirality involution, broadcasting over leading axes."""
    phi = np.asarray(phi)
    if phi.shape[-1] != rep.N:
        raise ShapeError(f"spinor has {phi.shape[-1]} components, expected {rep.N}")
    return np.einsum("ij,...j->...i", rep.chi, phi)


def hermitian_inner(phi: np.ndarray, psi: np.ndarray) -> complex | np.ndarray:
    """Hermitian pairing ``<phi, psi>``, conjugate-linear in the first slot.

    Broadcasts over leading axes; scalars are returned for plain vectors.
    """
    phi = np.asarray(phi)
    psi = np.asarray(psi)
    if phi.shape[-1] != psi.shape[-1]:
        raise ShapeError("spinor lengths differ")
    out = np.einsum("...i,...i->...", phi.conj(), psi)
    return complex(out) if out.ndim == 0 else out


def momentum_charge_operator(rep: CliffordRep, P: np.ndarray, Q: float) -> np.ndarray:
    """The Hermitian fiber operator ``sum_a P_a gamma_a chi + Q chi``.

    Squares to ``(|P|^2 + Q^2) Id``, so its spectrum is ``+-sqrt(|P|^2+Q^2)``.
    """
    P = np.asarray(P, dtype=float)
    if P.shape != (rep.n,):
        raise ShapeError(f"momentum must have shape ({rep.n},)")
    M = np.einsum("a,aij->ij", P, rep.gammas) @ rep.chi + Q * rep.chi
    return M
