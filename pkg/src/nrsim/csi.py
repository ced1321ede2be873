"""Channel state information: SVD reference, per-layer MMSE SINRs, the
effective-SINR link abstraction, CQI mapping, and RI/PMI/CQI selection.

Selection maximizes predicted throughput (rank times the spectral efficiency
of the mapped CQI). Type I is searched exhaustively; Type II uses a two-stage
projection-and-quantization construction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .codebook import (
    TYPE2_SB_AMPLITUDES,
    TYPE2_WB_AMPLITUDES,
    Codebook,
    Type2CodebookSpace,
    TypeIIPmi,
    TypeIPmi,
    realize_type2_precoder,
)
from .overhead import type1_overhead_bits, type2_overhead_bits

__all__ = [
    "SvdResult",
    "CqiTable",
    "CsiReport",
    "svd_precode",
    "mimo_capacity",
    "layer_sinr_mmse",
    "effective_sinr",
    "map_cqi",
    "quantize_phases",
    "select_csi",
]

# 4-bit CQI spectral efficiencies (bits/s/Hz), indices 1..15.
_CQI_EFFICIENCY = (
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770,
    1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
    3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)
_DEFAULT_GAP_DB = 2.0


@dataclass(frozen=True)
class SvdResult:
    """Full factorization H = U diag(sigma) V^H; v is num_tx x num_tx so its
    leading columns precode any rank up to min(num_rx, num_tx)."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class CqiTable:
    """CQI index -> (spectral efficiency, SINR threshold). Index 0 means
    out of range and is not a row. Thresholds are calibrated once for the
    recorded target_bler via an SNR-gap rule."""

    spectral_efficiency: tuple[float, ...]
    sinr_threshold_db: tuple[float, ...]
    target_bler: float = 0.1

    def __post_init__(self) -> None:
        se = np.asarray(self.spectral_efficiency, dtype=float)
        thr = np.asarray(self.sinr_threshold_db, dtype=float)
        if se.size == 0 or se.size != thr.size:
            raise ValueError("table must have matching, nonempty efficiency and threshold columns")
        if np.any(np.diff(se) <= 0):
            raise ValueError("spectral efficiencies must be strictly increasing")
        if np.any(np.diff(thr) <= 0):
            raise ValueError("SINR thresholds must be strictly increasing")

    @property
    def num_entries(self) -> int:
        return len(self.spectral_efficiency)

    def efficiency(self, cqi: int) -> float:
        if cqi == 0:
            return 0.0
        return self.spectral_efficiency[cqi - 1]

    def threshold_db(self, cqi: int) -> float:
        return self.sinr_threshold_db[cqi - 1]

    @classmethod
    def default(cls, target_bler: float = 0.1, gap_db: float = _DEFAULT_GAP_DB) -> "CqiTable":
        """Embedded 15-entry table; threshold = gap * (2^SE - 1) in linear."""
        gap = 10.0 ** (gap_db / 10.0)
        thr = tuple(10.0 * math.log10(gap * (2.0 ** se - 1.0)) for se in _CQI_EFFICIENCY)
        return cls(_CQI_EFFICIENCY, thr, target_bler)

    @classmethod
    def from_csv(cls, path, target_bler: float = 0.1) -> "CqiTable":
        """Load rows (cqi_index, efficiency, threshold_db); indices must be
        contiguous from 1."""
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"cqi_index", "efficiency", "threshold_db"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(f"{path}: expected columns {sorted(required)}")
            for row in reader:
                rows.append((int(row["cqi_index"]), float(row["efficiency"]),
                             float(row["threshold_db"])))
        rows.sort()
        if not rows or [r[0] for r in rows] != list(range(1, len(rows) + 1)):
            raise ValueError(f"{path}: cqi_index must run contiguously from 1")
        return cls(tuple(r[1] for r in rows), tuple(r[2] for r in rows), target_bler)


@dataclass(frozen=True)
class CsiReport:
    ri: int
    pmi: "TypeIPmi | TypeIIPmi"
    cqi: int
    predicted_throughput: float
    overhead_bits: int

    def __post_init__(self) -> None:
        if self.ri < 1:
            raise ValueError(f"ri must be >= 1, got {self.ri}")
        if isinstance(self.pmi, TypeIIPmi) and self.pmi.rank != self.ri:
            raise ValueError(f"ri={self.ri} inconsistent with a rank-{self.pmi.rank} PMI")
        if self.cqi < 0:
            raise ValueError(f"cqi must be >= 0, got {self.cqi}")


def svd_precode(h: np.ndarray) -> SvdResult:
    """Full SVD of one channel matrix; v's leading columns are the ideal
    per-layer precoders and u^H the matched detector."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.size == 0:
        raise ValueError(f"h must be a nonempty 2-D matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("h contains non-finite entries")
    u, sigma, vh = np.linalg.svd(h, full_matrices=True)
    return SvdResult(u=u, sigma=sigma, v=vh.conj().T)


def mimo_capacity(sigma, noise_var: float) -> float:
    """Shannon capacity of the diagonalized channel with unit-power symbols:
    sum_i log2(1 + sigma_i^2 / noise_var)."""
    if noise_var <= 0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise ValueError("singular values must be nonnegative")
    return float(np.sum(np.log2(1.0 + s * s / noise_var)))


def _layer_sinr_batch(g: np.ndarray, noise_var: float) -> np.ndarray:
    """Per-layer linear-MMSE SINR for effective channels g (..., rx, layers):
    SINR_i = 1/[(I + G^H G / nv)^-1]_ii - 1, clamped at 0 against roundoff."""
    r = g.shape[-1]
    gram = np.einsum("...ir,...is->...rs", g.conj(), g)
    a = np.eye(r) + gram / noise_var
    diag = np.einsum("...ii->...i", np.linalg.inv(a)).real
    return np.maximum(1.0 / diag - 1.0, 0.0)


def layer_sinr_mmse(h: np.ndarray, w: np.ndarray, noise_var: float) -> np.ndarray:
    """Per-layer SINR after linear-MMSE detection of G = h @ w."""
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    w = np.asarray(w, dtype=complex)
    if w.ndim == 0:
        w = w.reshape(1, 1)
    elif w.ndim == 1:
        w = w[:, None]
    if noise_var <= 0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    if h.shape[1] != w.shape[0]:
        raise ValueError(f"h has {h.shape[1]} columns but w has {w.shape[0]} rows")
    return _layer_sinr_batch(h @ w, noise_var)


def effective_sinr(per_layer_per_subband) -> float:
    """Capacity-domain average: eff = 2^(mean of log2(1+SINR)) - 1."""
    arr = np.asarray(per_layer_per_subband, dtype=float)
    if arr.size == 0:
        raise ValueError("effective_sinr needs at least one SINR value")
    if np.any(arr < 0):
        raise ValueError("SINR values must be nonnegative")
    return float(np.exp2(np.mean(np.log2(1.0 + arr))) - 1.0)


def _map_cqi_array(eff, thresholds_db: np.ndarray) -> np.ndarray:
    eff = np.asarray(eff, dtype=float)
    out = np.zeros(eff.shape, dtype=int)
    positive = eff > 0
    if np.any(positive):
        eff_db = 10.0 * np.log10(eff[positive])
        out[positive] = np.searchsorted(thresholds_db, eff_db, side="right")
    return out


def map_cqi(eff_sinr: float, table: CqiTable, target_bler: float = 0.1) -> int:
    """Largest CQI whose threshold is <= eff_sinr (boundary inclusive); 0 if
    below the lowest. target_bler is recorded context: the table's thresholds
    already encode the calibration."""
    thr = np.asarray(table.sinr_threshold_db, dtype=float)
    return int(_map_cqi_array(np.asarray([eff_sinr]), thr)[0])


def quantize_phases(target_coeffs, amplitudes, n_psk: int) -> np.ndarray:
    """PSK indices maximizing |sum_j a_j * exp(j*2*pi*idx_j/n_psk) * conj(c_j)|,
    the correlation between the realized coefficient vector and the target.

    Exact maximizer over the full index grid: the optimum aligns every term
    near one common direction, so it is a per-coefficient nearest-point
    assignment for some rotation psi; sweeping psi across one grid period
    visits every distinct assignment (at most 2 per coefficient).
    """
    z = np.asarray(target_coeffs, dtype=complex).ravel()
    a = np.asarray(amplitudes, dtype=float).ravel()
    if z.shape != a.shape:
        raise ValueError(f"coefficient/amplitude length mismatch: {z.shape} vs {a.shape}")
    if n_psk < 1:
        raise ValueError(f"n_psk must be >= 1, got {n_psk}")
    if np.any(a < 0):
        raise ValueError("amplitudes must be nonnegative")
    weight = a * np.abs(z)
    active = weight > 0
    if not np.any(active):
        return np.zeros(z.size, dtype=int)
    delta = 2.0 * np.pi / n_psk
    phi = -np.angle(z)  # term angle is idx*delta + phi
    breaks = np.sort(np.unique(np.mod(phi[active] + delta / 2.0, delta)))
    mids = (breaks + np.roll(breaks, -1)) / 2.0
    mids[-1] = np.mod((breaks[-1] + breaks[0] + delta) / 2.0, delta)
    best_idx, best_val = None, -1.0
    for psi in np.concatenate([breaks, mids]):
        idx = np.round((psi - phi) / delta).astype(int) % n_psk
        idx[~active] = 0
        val = abs(np.sum(weight[active] * np.exp(1j * (idx[active] * delta + phi[active]))))
        if val > best_val:
            best_val, best_idx = val, idx
    return best_idx


def _select_type1(h: np.ndarray, noise_var: float, codebooks: dict[int, Codebook],
                  table: CqiTable) -> CsiReport:
    num_sb, num_rx, _ = h.shape
    se = np.concatenate([[0.0], np.asarray(table.spectral_efficiency, dtype=float)])
    thr_db = np.asarray(table.sinr_threshold_db, dtype=float)
    best = None  # (throughput, rank, entry index, cqi, codebook)
    for rank in sorted(codebooks):
        cb = codebooks[rank]
        if len(cb) == 0:
            raise ValueError(f"rank-{rank} codebook is empty")
        if rank > min(num_rx, h.shape[2]):
            continue
        g = np.einsum("kij,ejr->ekir", h, cb.w_stack)
        sinr = _layer_sinr_batch(g, noise_var)  # (entries, subbands, rank)
        eff = np.exp2(np.mean(np.log2(1.0 + sinr), axis=(1, 2))) - 1.0
        cqi = _map_cqi_array(eff, thr_db)
        throughput = rank * se[cqi]
        # np.argmax returns the first maximizer; entries are enumerated in
        # lexicographic (i11, i12, i13, i2) order, so ties pick the lowest PMI,
        # and the strict > across ranks keeps the lowest rank on equal scores.
        e = int(np.argmax(throughput))
        if best is None or throughput[e] > best[0]:
            best = (float(throughput[e]), rank, e, int(cqi[e]), cb)
    if best is None:
        raise ValueError("no codebook rank is usable for this channel size")
    tp, rank, e, cqi_sel, cb = best
    pmi = cb[e].pmi
    report_pmi = TypeIPmi(pmi.i11, pmi.i12, pmi.i13, pmi.i2_per_subband * num_sb)
    bits = type1_overhead_bits(cb.cfg, cb.ov, rank, num_sb).total_bits
    return CsiReport(ri=rank, pmi=report_pmi, cqi=cqi_sel,
                     predicted_throughput=tp, overhead_bits=bits)


def _nearest_amplitude_index(rel: np.ndarray) -> np.ndarray:
    return np.argmin(np.abs(rel[:, None] - TYPE2_WB_AMPLITUDES[None, :]), axis=1)


def _quantize_type2_layer(c: np.ndarray, n_psk: int):
    """Quantize one layer's beam-basis target coefficients c (subbands x 2B).

    Wideband amplitude: per-coefficient mean magnitude over subbands, scaled
    by the strongest coefficient, rounded to the 8-level alphabet. Subband
    amplitude bit: above/below that mean. Phases: exact max-correlation PSK
    indices per subband, after rotating each subband so the strongest
    coefficient is real-positive.
    """
    num_sb, width = c.shape
    wb_mag = np.abs(c).mean(axis=0)
    peak = float(wb_mag.max())
    if peak > 0.0:
        ref = int(np.argmax(wb_mag))
        c = c * np.exp(-1j * np.angle(c[:, ref]))[:, None]
        wb_idx = _nearest_amplitude_index(wb_mag / peak)
    else:
        wb_idx = np.zeros(width, dtype=int)
        wb_idx[0] = len(TYPE2_WB_AMPLITUDES) - 1
    sb_bits = (np.abs(c) >= wb_mag[None, :]).astype(int)
    amp = TYPE2_WB_AMPLITUDES[wb_idx][None, :] * TYPE2_SB_AMPLITUDES[sb_bits]
    ph_idx = np.stack([quantize_phases(c[k], amp[k], n_psk) for k in range(num_sb)])
    return wb_idx, sb_bits, ph_idx


def _select_type2(h: np.ndarray, noise_var: float, space: Type2CodebookSpace,
                  table: CqiTable) -> CsiReport:
    num_sb, num_rx, num_tx = h.shape
    cfg, t2, ov = space.cfg, space.t2, space.ov
    if num_tx != cfg.num_ports:
        raise ValueError(f"channel has {num_tx} tx ports but the panel has {cfg.num_ports}")
    p_pol = num_tx // 2
    b_count = t2.num_beams
    h_pol = h.reshape(num_sb, num_rx, 2, p_pol)

    # Stage 1: rotation and beam subset maximizing the projection power of H
    # onto the beam span, summed over subbands and polarizations.
    best = None  # (score, rotation, subset)
    for q1 in range(ov.o1):
        for q2 in range(ov.o2):
            beams = space.orthogonal_beams(q1, q2)
            proj = np.einsum("krpe,be->krpb", h_pol, beams.conj()) / math.sqrt(p_pol)
            gains = np.sum(np.abs(proj) ** 2, axis=(0, 1, 2))
            order = np.argsort(gains, kind="stable")
            subset = tuple(sorted(int(b) for b in order[-b_count:]))
            score = float(np.sum(gains[list(subset)]))
            if best is None or score > best[0]:
                best = (score, (q1, q2), subset)
    _, rotation, subset = best
    i12 = space.combination_index(subset)
    beams = space.orthogonal_beams(*rotation)[list(subset)]

    # Stage 2: per layer, quantize the dominant right-singular vectors in the
    # selected beam basis, then keep the better of rank 1 and rank 2.
    vh = np.linalg.svd(h)[2]  # (subbands, num_tx, num_tx)
    se = np.concatenate([[0.0], np.asarray(table.spectral_efficiency, dtype=float)])
    thr_db = np.asarray(table.sinr_threshold_db, dtype=float)
    max_layers = min(t2.max_rank, num_rx, num_tx)

    layer_quant = []
    for layer in range(max_layers):
        target = vh[:, layer, :].conj().reshape(num_sb, 2, p_pol)
        c = np.einsum("kpe,be->kpb", target, beams.conj()).reshape(num_sb, 2 * b_count) / p_pol
        layer_quant.append(_quantize_type2_layer(c, t2.n_psk))

    chosen = None  # (throughput, layers, pmi, cqi)
    for layers in range(1, max_layers + 1):
        pmi = TypeIIPmi(
            i11=rotation,
            i12=i12,
            wideband_amplitudes=tuple(
                tuple(int(x) for x in layer_quant[l][0]) for l in range(layers)
            ),
            subband_cophase=tuple(
                tuple(tuple(int(x) for x in layer_quant[l][2][k]) for k in range(num_sb))
                for l in range(layers)
            ),
            subband_amplitude=tuple(
                tuple(tuple(int(x) for x in layer_quant[l][1][k]) for k in range(num_sb))
                for l in range(layers)
            ),
        )
        w = np.stack([realize_type2_precoder(space, pmi, k) for k in range(num_sb)])
        g = np.einsum("kij,kjr->kir", h, w)
        sinr = _layer_sinr_batch(g, noise_var)
        eff = float(np.exp2(np.mean(np.log2(1.0 + sinr))) - 1.0)
        cqi = int(_map_cqi_array(np.asarray([eff]), thr_db)[0])
        throughput = layers * se[cqi]
        if chosen is None or throughput > chosen[0]:
            chosen = (float(throughput), layers, pmi, cqi)
    tp, layers, pmi, cqi_sel = chosen
    bits = type2_overhead_bits(cfg, ov, t2, layers, num_sb).total_bits
    return CsiReport(ri=layers, pmi=pmi, cqi=cqi_sel,
                     predicted_throughput=tp, overhead_bits=bits)


def select_csi(h, noise_var: float, codebooks, table: CqiTable) -> CsiReport:
    """Pick (RI, PMI, CQI) maximizing predicted throughput for one slot.

    h is the slot view (num_subbands, num_rx, num_tx); a bare 2-D matrix is
    treated as a single subband. codebooks is either a mapping rank ->
    Codebook (Type I, exhaustive search; ranks above min(num_rx, num_tx) are
    skipped) or a Type2CodebookSpace (two-stage construction). Ties prefer
    the lower rank, then the lower lexicographic PMI.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim == 2:
        h = h[None]
    if h.ndim != 3 or h.size == 0:
        raise ValueError(f"slot view must be (subbands, rx, tx), got shape {h.shape}")
    if noise_var <= 0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    if isinstance(codebooks, Type2CodebookSpace):
        return _select_type2(h, noise_var, codebooks, table)
    if isinstance(codebooks, Codebook):
        codebooks = {codebooks.rank: codebooks}
    if not codebooks:
        raise ValueError("no codebooks supplied")
    return _select_type1(h, noise_var, dict(codebooks), table)
