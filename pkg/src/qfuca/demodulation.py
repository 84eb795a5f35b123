"""Recursive DFT/SVD demodulation of nested-IDFT OAM signals.

Receive chain for an N-level array (all transforms unitary-normalised):

1. the level-N DFT turns a top-level block-circulant channel into
   ``K_N`` diagonal blocks ``A_l``;
2. for N >= 2 each block is taken to the level-(N-1) DFT domain,
   ``B_l = W^H A_l W``, row-phase-shifted (``P_l``) and factorised,
   ``P_l B_l = U_l diag(v_l) Q_l^H``.  ``Q_l`` is the transmit precoder of
   top-level mode ``l`` and ``U_l^H`` the decoder;
3. zero forcing divides by ``v_l`` (by the complex circulant eigenvalue when
   N = 1);
4. the remaining nested IDFT levels are undone one level at a time.

The whole chain is calibrated from the noiseless channel (perfect CSI).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import ChannelMatrix
from .geometry import index_digits
from .modulation import ModulationSet, block_idft, build_modulation_set, modulate

REGULARIZATION = 1e-12


def _dft(counts, n):
    """Normalised level-``n`` DFT (Hermitian of the block IDFT)."""
    return block_idft(counts, n).conj().T / np.sqrt(counts[n - 1])


def _as_array(H):
    return H.H if isinstance(H, ChannelMatrix) else np.asarray(H)


def top_demodulate(H, mset: ModulationSet, S: np.ndarray, noise: np.ndarray | None = None) -> np.ndarray:
    """Received signal after the level-N DFT."""
    H = _as_array(H)
    S = np.asarray(S)
    if H.shape[1] != mset.size or S.shape[0] != mset.size:
        raise ValueError(f"dimension mismatch: H {H.shape}, {mset.size} modes, S {S.shape}")
    R = H @ modulate(mset, S)
    if noise is not None:
        R = R + noise
    return _dft(mset.counts, mset.levels) @ R


def block_diagonalize(H, counts: Sequence[int]) -> tuple[list[np.ndarray], float]:
    """Diagonal blocks of ``W_N^H H W_N / K_N`` and the relative Frobenius norm of what is dropped."""
    H = _as_array(H)
    counts = tuple(counts)
    F = _dft(counts, len(counts))
    Hc = F @ H @ F.conj().T
    K = counts[-1]
    m = len(H) // K
    blocks = [Hc[l * m : (l + 1) * m, l * m : (l + 1) * m].copy() for l in range(K)]
    total = np.linalg.norm(Hc)
    if total == 0:
        return blocks, 0.0
    mask = np.kron(1 - np.eye(K), np.ones((m, m))).astype(bool)
    return blocks, float(np.linalg.norm(Hc[mask]) / total)


def _asymmetry(S):
    n = np.linalg.norm(S)
    return 0.0 if n == 0 else float(np.linalg.norm(S - S.T) / n)


def phase_shift_symmetrize(A: np.ndarray, sweeps: int = 100, tol: float = 1e-15):
    """Row phases ``p`` such that ``diag(p) @ A`` is as close to symmetric as possible.

    Starts from the half-angle of ``sum_j A[i, j] conj(A[j, i])`` per row and
    refines with exact coordinate descent on ``||S - S^T||_F``.  Returns
    ``(P, S_sym, residual)`` with ``P`` the diagonal matrix and ``residual``
    the relative asymmetry ``||S - S^T||_F / ||S||_F``.
    """
    A = np.asarray(A, dtype=complex)
    n = len(A)
    if not np.any(A):
        return np.eye(n, dtype=complex), A.copy(), 0.0
    cross = A * A.T.conj()  # cross[i, j] = A[i, j] conj(A[j, i])
    np.fill_diagonal(cross, 0)
    agg = cross.sum(axis=1)
    phase = np.where(np.abs(agg) > 0, np.exp(-0.5j * np.angle(agg)), 1.0)
    best = _asymmetry(phase[:, None] * A)
    for _ in range(sweeps):
        for i in range(n):
            c = np.sum(cross[i] * phase.conj())  # optimal e^{j p_i} aligns with conj of this sum
            if abs(c) > 0:
                phase[i] = np.exp(-1j * np.angle(c))
        res = _asymmetry(phase[:, None] * A)
        if best - res <= tol:
            best = min(best, res)
            break
        best = res
    phase = phase * np.conj(phase[0]) / abs(phase[0])  # fix the free global phase
    S = phase[:, None] * A
    return np.diag(phase), S, _asymmetry(S)


def factor_symmetric(S: np.ndarray):
    """``S = U diag(v) Q^H`` with ``v`` descending and the first significant entry of each column of ``U`` real positive."""
    S = np.asarray(S, dtype=complex)
    U, v, Qh = np.linalg.svd(S)
    Q = Qh.conj().T
    order = np.argsort(-v, kind="stable")
    U, v, Q = U[:, order], v[order], Q[:, order]
    for k in range(U.shape[1]):
        col = U[:, k]
        lead = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))[0]
        ph = col[lead] / abs(col[lead])
        U[:, k] = col / ph
        Q[:, k] = Q[:, k] / ph
    return U, v, Q


def _undo_nested(b, counts):
    """Invert the normalised ``W_{k_n}`` (no precoder) along axis 0; ``n = len(counts)``."""
    c = _dft(counts, len(counts)) @ b
    return _strip_scalar_block(c, counts)


def _strip_scalar_block(y, counts):
    """Invert the normalised ``Lambda_n``, ``n = len(counts)``: undo ``W_{k_{n-1}}`` on each of its ``K_n`` row blocks."""
    if len(counts) <= 1:
        return y
    K = counts[-1]
    m = len(y) // K
    return np.concatenate([_undo_nested(y[i * m : (i + 1) * m], counts[:-1]) for i in range(K)])


@dataclass(frozen=True)
class DemodPipeline:
    """Calibrated receiver plus the matching precoded modulation set.

    ``equalizer`` holds one zero-forcing gain per mode: the complex circulant
    eigenvalue when N = 1, otherwise the singular values ``v`` of each
    symmetrised block in block order.
    """

    counts: tuple[int, ...]
    mset: ModulationSet = field(repr=False)
    channel: np.ndarray = field(repr=False)
    blocks: tuple[np.ndarray, ...] = field(repr=False)
    block_residual: float
    phase_shifts: tuple[np.ndarray, ...] = field(repr=False)
    decoders: tuple[np.ndarray, ...] = field(repr=False)
    sym_residuals: tuple[float, ...]
    equalizer: np.ndarray = field(repr=False)
    regularization: float = REGULARIZATION

    @property
    def levels(self) -> int:
        return len(self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def singular_values(self) -> np.ndarray:
        return np.abs(self.equalizer)

    @property
    def recoverable(self) -> np.ndarray:
        v = self.singular_values
        return v > self.regularization * v.max() if v.max() > 0 else np.zeros(len(v), bool)

    @property
    def sym_residual(self) -> float:
        return max(self.sym_residuals, default=0.0)

    def demodulate(self, received: np.ndarray) -> np.ndarray:
        """Recovered symbols from received logical-element signals (one frame per column)."""
        received = np.asarray(received)
        single = received.ndim == 1
        counts, N = self.counts, self.levels
        top = _dft(counts, N) @ received.reshape(len(received), -1)
        K = counts[-1]
        m = self.size // K
        ok = self.recoverable
        gain = np.where(ok, self.equalizer, 1.0)
        out = []
        for l in range(K):
            sl = slice(l * m, (l + 1) * m)
            y = top[sl]  # l-th row block of the level-N output
            if N >= 2:
                y = _dft(counts, N - 1) @ y
                y = self.decoders[l].conj().T @ (self.phase_shifts[l][:, None] * y)
            y = np.where(ok[sl][:, None], y / gain[sl][:, None], 0)
            if N >= 2:
                y = _strip_scalar_block(y, counts[:-1])
            out.append(y)
        out = np.concatenate(out)
        return out[:, 0] if single else out

    def demod_matrix(self) -> np.ndarray:
        """Composite linear map from received signals to recovered symbols."""
        return self.demodulate(np.eye(self.channel.shape[0], dtype=complex))

    def end_to_end(self, H=None) -> np.ndarray:
        """``G H T``: recovered symbols per transmitted symbol."""
        H = self.channel if H is None else _as_array(H)
        return self.demod_matrix() @ H @ self.mset.transmit_matrix()


def calibrate(H, counts: Sequence[int] | None = None, regularization: float = REGULARIZATION) -> DemodPipeline:
    """Derive phase shifts, decoders, precoders and equalizer gains from the noiseless channel."""
    if isinstance(H, ChannelMatrix):
        if counts is None:
            counts = H.config.counts_tx
        if H.config.counts_tx != H.config.counts_rx:
            raise ValueError("the demodulation chain needs K_n = V_n at every level")
    H = _as_array(H)
    counts = tuple(int(k) for k in counts)
    if H.shape != (int(np.prod(counts)),) * 2:
        raise ValueError(f"channel shape {H.shape} does not match counts {counts}")
    N = len(counts)
    blocks, residual = block_diagonalize(H, counts)
    if N == 1:
        return DemodPipeline(
            counts=counts,
            mset=build_modulation_set(counts),
            channel=H,
            blocks=tuple(blocks),
            block_residual=residual,
            phase_shifts=(),
            decoders=(),
            sym_residuals=(),
            equalizer=np.array([b[0, 0] for b in blocks]),
            regularization=regularization,
        )
    F = _dft(counts, N - 1)
    phases, decoders, precoders, sym, gains = [], [], [], [], []
    for A in blocks:
        P, S, r = phase_shift_symmetrize(F @ A @ F.conj().T)
        U, v, Q = factor_symmetric(S)
        phases.append(np.diag(P).copy())
        decoders.append(U)
        precoders.append(Q)
        sym.append(r)
        gains.append(v)
    return DemodPipeline(
        counts=counts,
        mset=build_modulation_set(counts, precoders),
        channel=H,
        blocks=tuple(blocks),
        block_residual=residual,
        phase_shifts=tuple(phases),
        decoders=tuple(decoders),
        sym_residuals=tuple(sym),
        equalizer=np.concatenate(gains).astype(complex),
        regularization=regularization,
    )


def effective_mode_gains(pipeline: DemodPipeline) -> dict[tuple[int, ...], float]:
    """Singular value attached to each mode ``(l_N, ..., l_1)``."""
    digits = index_digits(pipeline.counts)
    return {tuple(int(x) for x in d): float(v) for d, v in zip(digits, pipeline.singular_values)}


def pseudo_inverse_oracle(pipeline: DemodPipeline, received: np.ndarray, H=None) -> np.ndarray:
    """Independent recovery: pseudo-inverse of the whole effective matrix ``H T``."""
    H = pipeline.channel if H is None else _as_array(H)
    Heff = H @ pipeline.mset.transmit_matrix()
    return np.linalg.pinv(Heff, rcond=pipeline.regularization) @ received


def complex_noise(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|n|^2 = variance``."""
    return np.sqrt(variance / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass
class DemodReport:
    counts: tuple[int, ...]
    recovered: np.ndarray = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    recoverable: np.ndarray = field(repr=False)
    leakage: np.ndarray = field(repr=False)
    block_residual: float
    sym_residual: float
    sigma2: np.ndarray | None = field(default=None, repr=False)
    recovered_error: np.ndarray | None = field(default=None, repr=False)
    oracle_error: np.ndarray | None = field(default=None, repr=False)

    @property
    def unrecoverable_modes(self) -> list[tuple[int, ...]]:
        digits = index_digits(self.counts)
        return [tuple(int(x) for x in d) for d in digits[~self.recoverable]]


def recursive_demodulate(
    pipeline: DemodPipeline,
    S: np.ndarray,
    H=None,
    noise_variance: float = 0.0,
    rng: np.random.Generator | None = None,
    oracle: bool = False,
) -> DemodReport:
    """Transmit ``S`` through ``H`` (default: the calibration channel) and run the full receive chain.

    ``S`` holds one frame per column or is a single vector.  AWGN of variance
    ``noise_variance`` is added per receive logical element when it is > 0.
    """
    H = pipeline.channel if H is None else _as_array(H)
    S = np.asarray(S, dtype=complex)
    R = H @ modulate(pipeline.mset, S)
    if noise_variance > 0:
        rng = np.random.default_rng() if rng is None else rng
        R = R + complex_noise(rng, R.shape, noise_variance)
    rec = pipeline.demodulate(R)

    G = pipeline.demod_matrix()
    E = G @ H @ pipeline.mset.transmit_matrix()
    power = np.abs(E) ** 2
    leakage = power.sum(axis=1) - np.diag(power)
    err = np.abs(rec - S) ** 2
    report = DemodReport(
        counts=pipeline.counts,
        recovered=rec,
        singular_values=pipeline.singular_values,
        recoverable=pipeline.recoverable,
        leakage=np.maximum(leakage, 0.0),
        block_residual=pipeline.block_residual,
        sym_residual=pipeline.sym_residual,
        sigma2=noise_variance * np.sum(np.abs(G) ** 2, axis=1),
        recovered_error=err.mean(axis=1) if err.ndim == 2 else err,
    )
    if oracle:
        ref = pseudo_inverse_oracle(pipeline, R, H)
        d = np.abs(rec - ref)
        report.oracle_error = d.max(axis=1) if d.ndim == 2 else d
    return report


def write_report_csv(report: DemodReport, path) -> None:
    n = len(report.counts)
    digits = index_digits(report.counts)
    sigma2 = report.sigma2 if report.sigma2 is not None else np.full(len(digits), np.nan)
    err = report.recovered_error if report.recovered_error is not None else np.full(len(digits), np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            [f"l{n - i}" for i in range(n)]
            + ["v_gain", "sigma2_w", "leakage_power", "recovered_error_w", "recoverable"]
        )
        for i, d in enumerate(digits):
            w.writerow(
                [*map(int, d)]
                + [f"{x:.17g}" for x in (report.singular_values[i], sigma2[i], report.leakage[i], err[i])]
                + [int(report.recoverable[i])]
            )
