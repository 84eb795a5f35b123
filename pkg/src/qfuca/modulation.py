"""Nested IDFT (OAM) modulation.

Matrices are kept in their raw, unnormalised form (entries are unit-modulus
roots of unity); the ``1/sqrt(K_N ... K_1)`` factor is applied once, in
:func:`modulate` and on the receive side.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag


def idft_matrix(K: int, unitary: bool = False) -> np.ndarray:
    """``W[k, l] = exp(+2j*pi*l*k/K)``; divided by ``sqrt(K)`` when ``unitary``."""
    if int(K) != K or K < 1:
        raise ValueError(f"IDFT order must be a positive integer, got {K!r}")
    K = int(K)
    k = np.arange(K)
    W = np.exp(2j * np.pi * np.outer(k, k) / K)
    return W / np.sqrt(K) if unitary else W


def block_idft(counts: Sequence[int], n: int) -> np.ndarray:
    """Level-``n`` IDFT matrix: ``idft(K_n)`` with every entry scaling an identity of order ``K_1...K_{n-1}``."""
    if not 1 <= n <= len(counts):
        raise ValueError(f"level must lie in [1, {len(counts)}], got {n}")
    inner = int(np.prod(counts[: n - 1]))
    return np.kron(idft_matrix(counts[n - 1]), np.eye(inner))


def check_unitary(Q: np.ndarray, tol: float = 1e-9, name: str = "precoder") -> None:
    Q = np.asarray(Q)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"{name} must be square, got shape {Q.shape}")
    dev = np.max(np.abs(Q.conj().T @ Q - np.eye(len(Q))))
    if dev > tol:
        raise ValueError(f"{name} is not unitary (max deviation {dev:.3g})")


def nested_modulation(counts: Sequence[int], n: int, precoder=None) -> np.ndarray:
    """Raw nested IDFT matrix ``W_{k_n}`` of order ``K_1...K_n``.

    ``W_{k_1} = W_1`` and ``W_{k_n} = W_n Lambda_n`` with ``Lambda_n`` holding
    ``K_n`` diagonal copies of ``W_{k_{n-1}}``.  When ``N = len(counts) >= 2``
    the level ``N-1`` matrix carries the precoder,
    ``W_{k_{N-1}} = W_{N-1} Q Lambda_{N-1}``.  For ``n = N`` a sequence of
    ``K_N`` precoders may be given, one per top-level mode.
    """
    N = len(counts)
    if not 1 <= n <= N:
        raise ValueError(f"level must lie in [1, {N}], got {n}")
    if n == N and N >= 2:
        return block_idft(counts, N) @ scalar_block(counts, N, precoder)
    if n == N - 1 and precoder is not None:
        Q = np.asarray(precoder)
        check_unitary(Q)
        if Q.shape[0] != int(np.prod(counts[: N - 1])):
            raise ValueError(f"precoder order {Q.shape[0]} does not match K_1...K_{N - 1}")
        return block_idft(counts, n) @ Q @ scalar_block(counts, n)
    if n == 1:
        return idft_matrix(counts[0])
    return block_idft(counts, n) @ scalar_block(counts, n)


def scalar_block(counts: Sequence[int], n: int, precoder=None) -> np.ndarray:
    """``Lambda_n``: block diagonal with ``K_n`` copies of ``W_{k_{n-1}}`` (identity for ``n = 1``)."""
    if n == 1:
        return np.eye(counts[0])
    N = len(counts)
    K_n = counts[n - 1]
    if n == N and N >= 2 and precoder is not None and np.ndim(precoder) == 3:
        if len(precoder) != K_n:
            raise ValueError(f"expected {K_n} per-mode precoders, got {len(precoder)}")
        blocks = [nested_modulation(counts, n - 1, Q) for Q in precoder]
        return block_diag(*blocks)
    inner = nested_modulation(counts, n - 1, precoder if n == N else None)
    return np.kron(np.eye(K_n), inner)


@dataclass(frozen=True)
class ModulationSet:
    """Per-level IDFT, scalar-block and nested matrices for one array.

    All matrices are raw.  ``nested[n-1]`` is ``W_{k_n}`` without precoding for
    ``n < N``; the top entry ``nested[N-1]`` includes the precoders.
    ``precoders`` is either ``None`` (identity) or one unitary matrix per
    top-level mode ``l_N``, each of order ``K_1...K_{N-1}``.
    """

    counts: tuple[int, ...]
    W: tuple[np.ndarray, ...] = field(repr=False)
    Lam: tuple[np.ndarray, ...] = field(repr=False)
    nested: tuple[np.ndarray, ...] = field(repr=False)
    precoders: tuple[np.ndarray, ...] | None = field(default=None, repr=False)

    @property
    def levels(self) -> int:
        return len(self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.size)

    def precoded_block(self, mode: int) -> np.ndarray:
        """Raw ``W_{N-1} Q Lambda_{N-1}`` applied to the symbols of top-level mode ``l_N``."""
        if self.levels < 2:
            raise ValueError("a single-level array has no precoded level")
        if self.precoders is None:
            return self.nested[-2]
        n = self.levels - 1
        return self.W[n - 1] @ self.precoders[mode] @ self.Lam[n - 1]

    def transmit_matrix(self) -> np.ndarray:
        """Normalised map from symbols to logical element excitations."""
        return self.nested[-1] * self.scale


def build_modulation_set(counts: Sequence[int], precoders=None) -> ModulationSet:
    counts = tuple(int(k) for k in counts)
    N = len(counts)
    if precoders is not None:
        if N < 2:
            raise ValueError("precoding needs at least two levels")
        precoders = np.asarray(precoders, dtype=complex)
        if precoders.ndim == 2:
            precoders = np.repeat(precoders[None], counts[-1], axis=0)
        for Q in precoders:
            check_unitary(Q)
        precoders = tuple(precoders)
    W = tuple(block_idft(counts, n) for n in range(1, N + 1))
    Lam = tuple(scalar_block(counts, n, precoders if n == N else None) for n in range(1, N + 1))
    nested = [nested_modulation(counts, n) for n in range(1, N)]
    nested.append(W[-1] @ Lam[-1])
    return ModulationSet(counts=counts, W=W, Lam=Lam, nested=tuple(nested), precoders=precoders)


def modulate(mset: ModulationSet, S: np.ndarray) -> np.ndarray:
    """Excitation ``X = W_N Lambda_N S / sqrt(prod K)``; ``S`` may hold one frame per column."""
    S = np.asarray(S)
    if S.shape[0] != mset.size:
        raise ValueError(f"symbol vector has length {S.shape[0]}, expected {mset.size}")
    return mset.transmit_matrix() @ S


def write_matrix_csv(M: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "re", "im"])
        for (i, j), v in np.ndenumerate(np.asarray(M)):
            w.writerow([i, j, f"{v.real:.17g}", f"{v.imag:.17g}"])
