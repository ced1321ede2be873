"""DFT beam grid and the Type I / Type II downlink precoding codebooks.

Type I enumerates single-beam (rank 1) and beam-pair (ranks 2-4) precoders
with per-polarization co-phasing; Type II is a linear combination of B
orthogonal beams with quantized per-coefficient amplitudes and phases.
Both families share the oversampled 2-D DFT grid built here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AntennaConfig",
    "Oversampling",
    "TypeIPmi",
    "TypeIIPmi",
    "PrecoderEntry",
    "Codebook",
    "Type2Config",
    "Type2CodebookSpace",
    "oversampling_factors",
    "dft_beam",
    "build_type1_codebook",
    "build_type2_structure",
    "realize_type2_precoder",
    "TYPE2_WB_AMPLITUDES",
    "TYPE2_SB_AMPLITUDES",
]

# Supported (n1, n2) port layouts -> (o1, o2) grid oversampling.
_OVERSAMPLING: dict[tuple[int, int], tuple[int, int]] = {
    (2, 1): (4, 1),
    (2, 2): (4, 4),
    (4, 1): (4, 1),
    (3, 2): (4, 4),
    (6, 1): (4, 1),
    (4, 2): (4, 4),
    (8, 1): (4, 1),
    (4, 3): (4, 4),
    (6, 2): (4, 4),
    (12, 1): (4, 1),
    (4, 4): (4, 4),
    (8, 2): (4, 4),
    (16, 1): (4, 1),
}

# Rank-1 co-phase alphabet (2 bits) and the rank>=2 alphabet (1 bit).
# Tabulated rather than computed so the values are exact complex literals.
_PHI4 = (1 + 0j, 1j, -1 + 0j, -1j)
_PHI2 = (1 + 0j, 1j)

# Wideband amplitude alphabet (3 bits per coefficient) and the 1-bit
# subband amplitude alphabet for Type II coefficients.
TYPE2_WB_AMPLITUDES = np.array(
    [0.0] + [math.sqrt(1.0 / (2 ** k)) for k in (6, 5, 4, 3, 2, 1)] + [1.0]
)
TYPE2_SB_AMPLITUDES = np.array([math.sqrt(0.5), 1.0])


@dataclass(frozen=True)
class AntennaConfig:
    """Cross-polarized panel geometry: n1 x n2 dual-polarized elements."""

    n1: int
    n2: int
    ng: int = 1
    cross_polarized: bool = True

    def __post_init__(self) -> None:
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"n1/n2 must be positive, got ({self.n1}, {self.n2})")
        if self.ng != 1:
            raise ValueError("only single-panel (ng=1) configurations are supported")
        if not self.cross_polarized:
            raise ValueError("only cross-polarized panels are supported")

    @property
    def num_ports(self) -> int:
        return 2 * self.n1 * self.n2 * self.ng


@dataclass(frozen=True)
class Oversampling:
    o1: int
    o2: int

    def __post_init__(self) -> None:
        if self.o1 < 1 or self.o2 < 1:
            raise ValueError(f"oversampling factors must be positive, got ({self.o1}, {self.o2})")


def oversampling_factors(cfg: AntennaConfig) -> Oversampling:
    """Look up (o1, o2) for a supported (n1, n2) port layout."""
    key = (cfg.n1, cfg.n2)
    if key not in _OVERSAMPLING:
        raise ValueError(f"unsupported (n1, n2) pair {key}; supported: {sorted(_OVERSAMPLING)}")
    return Oversampling(*_OVERSAMPLING[key])


def dft_beam(l: int, m: int, cfg: AntennaConfig, ov: Oversampling) -> np.ndarray:
    """Oversampled 2-D DFT beam v_{l,m} = kron(u_l, u_m), entries unit modulus.

    Beams whose indices differ by a nonzero multiple of (o1, o2) are mutually
    orthogonal (the "orthogonal subgrid").
    """
    if not 0 <= l < cfg.n1 * ov.o1:
        raise ValueError(f"beam index l={l} out of range [0, {cfg.n1 * ov.o1})")
    if not 0 <= m < cfg.n2 * ov.o2:
        raise ValueError(f"beam index m={m} out of range [0, {cfg.n2 * ov.o2})")
    u1 = np.exp(2j * np.pi * np.arange(cfg.n1) * l / (cfg.n1 * ov.o1))
    u2 = np.exp(2j * np.pi * np.arange(cfg.n2) * m / (cfg.n2 * ov.o2))
    return np.kron(u1, u2)


@dataclass(frozen=True)
class TypeIPmi:
    """Type I PMI tuple. i2_per_subband holds the co-phase index per subband
    (codebook entries are wideband and carry a single value)."""

    i11: int
    i12: int
    i13: int
    i2_per_subband: tuple[int, ...]


@dataclass(frozen=True)
class TypeIIPmi:
    """Type II PMI: rotation, beam combination, and per-layer coefficient
    indices. Coefficient position j = p*B + b (polarization-major)."""

    i11: tuple[int, int]
    i12: int
    wideband_amplitudes: tuple[tuple[int, ...], ...]
    subband_cophase: tuple[tuple[tuple[int, ...], ...], ...]
    subband_amplitude: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def rank(self) -> int:
        return len(self.wideband_amplitudes)

    @property
    def num_subbands(self) -> int:
        return len(self.subband_cophase[0])


@dataclass(frozen=True)
class PrecoderEntry:
    pmi: "TypeIPmi | TypeIIPmi"
    w_per_subband: tuple[np.ndarray, ...]


class Codebook:
    """Materialized Type I codebook for one rank.

    Entries are enumerated lexicographically in (i11, i12, i13, i2); the
    stacked matrix view is used by vectorized CSI selection.
    """

    def __init__(self, cfg: AntennaConfig, ov: Oversampling, rank: int,
                 pmis: list[TypeIPmi], matrices: np.ndarray):
        self.cfg = cfg
        self.ov = ov
        self.rank = rank
        self.w_stack = np.ascontiguousarray(matrices)  # (entries, ports, rank)
        self.entries = tuple(
            PrecoderEntry(pmi, (self.w_stack[i],)) for i, pmi in enumerate(pmis)
        )
        self._by_bytes = {self.w_stack[i].tobytes(): i for i in range(len(pmis))}
        # Lexicographic enumeration strides for index_of_pmi.
        self._n_i12 = cfg.n2 * ov.o2
        self._n_i13 = 1 if rank == 1 else 4
        self._n_i2 = 4 if rank == 1 else 2

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> PrecoderEntry:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def index_of(self, w: np.ndarray) -> int:
        """Exact-match lookup of a precoding matrix; inverse of entry -> W."""
        key = np.ascontiguousarray(w, dtype=self.w_stack.dtype).tobytes()
        try:
            return self._by_bytes[key]
        except KeyError:
            raise KeyError("matrix is not a codebook entry") from None

    def index_of_pmi(self, pmi: TypeIPmi) -> int:
        """Entry index for a reported PMI (the co-phase index is wideband, so
        the first i2 value identifies the entry)."""
        i2 = pmi.i2_per_subband[0]
        if not (0 <= pmi.i11 < self.cfg.n1 * self.ov.o1 and 0 <= pmi.i12 < self._n_i12
                and 0 <= pmi.i13 < self._n_i13 and 0 <= i2 < self._n_i2):
            raise ValueError(f"PMI {pmi} is outside this codebook's index ranges")
        return ((pmi.i11 * self._n_i12 + pmi.i12) * self._n_i13 + pmi.i13) * self._n_i2 + i2

    def matrix_for(self, pmi: TypeIPmi) -> np.ndarray:
        return self.w_stack[self.index_of_pmi(pmi)]


def _rank2_offsets(cfg: AntennaConfig, ov: Oversampling) -> list[tuple[int, int]]:
    n1, n2, o1, o2 = cfg.n1, cfg.n2, ov.o1, ov.o2
    if n2 == 1:
        if n1 == 2:
            return [(0, 0), (o1, 0)]
        return [(0, 0), (o1, 0), (2 * o1, 0), (3 * o1, 0)]
    if n1 == n2:
        return [(0, 0), (o1, 0), (0, o2), (o1, o2)]
    return [(0, 0), (o1, 0), (0, o2), (2 * o1, 0)]


def _rank34_offsets(cfg: AntennaConfig, ov: Oversampling) -> list[tuple[int, int]]:
    n1, n2, o1, o2 = cfg.n1, cfg.n2, ov.o1, ov.o2
    table = {
        (2, 1): [(o1, 0)],
        (4, 1): [(o1, 0), (2 * o1, 0), (3 * o1, 0)],
        (6, 1): [(o1, 0), (2 * o1, 0), (3 * o1, 0), (4 * o1, 0)],
        (2, 2): [(o1, 0), (0, o2), (o1, o2)],
        (3, 2): [(o1, 0), (0, o2), (o1, o2), (2 * o1, 0)],
    }
    if (n1, n2) in table:
        return table[(n1, n2)]
    # Fallback for layouts without a tabulated entry: the first nonzero
    # orthogonal-subgrid offsets ("adjacent orthogonal beams"), row-major.
    offs = [(x * o1, y * o2) for y in range(n2) for x in range(n1)]
    return offs[1:5]


# Column structure per rank: which of the two beams (v, v') each column uses
# and the sign multiplying phi on the second polarization block.
_BEAM_PATTERNS = {
    (2, "A"): ((0, 1), (1, -1)),
    (3, "A"): ((0, 1, 0), (1, 1, -1)),
    (3, "B"): ((0, 1, 1), (1, 1, -1)),
    (4, "A"): ((0, 1, 0, 1), (1, 1, -1, -1)),
    (4, "B"): ((0, 1, 1, 0), (1, 1, -1, -1)),
}


def _i13_variants(rank: int, cfg: AntennaConfig, ov: Oversampling):
    """Four (offset, pattern, negate) variants indexed by i13.

    The i13 index always spans four values so the index space is uniform
    across layouts. Layouts whose orthogonal subgrid offers fewer distinct
    offsets reuse the offset list with an alternate column pattern and/or a
    negated co-phase; every variant keeps columns mutually orthogonal and
    all four materialize to distinct matrices.
    """
    if rank == 2:
        base = _rank2_offsets(cfg, ov)
        variants = [(k, "A", False) for k in base] + [(k, "A", True) for k in base]
    else:
        base = _rank34_offsets(cfg, ov)
        variants = (
            [(k, "A", False) for k in base]
            + [(k, "B", False) for k in base]
            + [(k, "A", True) for k in base]
            + [(k, "B", True) for k in base]
        )
    return variants[:4]


def build_type1_codebook(cfg: AntennaConfig, rank: int, ov: Oversampling) -> Codebook:
    """Enumerate the Type I codebook for one rank.

    Rank 1: W = [v; phi*v]/sqrt(P) over the full oversampled grid and four
    co-phases. Ranks 2-4: beam pairs (v, v') on the orthogonal subgrid chosen
    by i13, columns carrying +/-phi polarization co-phasing, two co-phases.
    """
    if rank not in (1, 2, 3, 4):
        raise ValueError(f"rank must be in 1..4, got {rank}")
    if rank > cfg.num_ports:
        raise ValueError(f"rank {rank} exceeds {cfg.num_ports} ports")

    n_l, n_m = cfg.n1 * ov.o1, cfg.n2 * ov.o2
    pmis: list[TypeIPmi] = []
    mats: list[np.ndarray] = []

    if rank == 1:
        for i11 in range(n_l):
            for i12 in range(n_m):
                v = dft_beam(i11, i12, cfg, ov)
                for n in range(4):
                    w = np.concatenate([v, _PHI4[n] * v])[:, None]
                    mats.append(w / np.linalg.norm(w))
                    pmis.append(TypeIPmi(i11, i12, 0, (n,)))
    else:
        variants = _i13_variants(rank, cfg, ov)
        for i11 in range(n_l):
            for i12 in range(n_m):
                for i13, (offset, pattern, negate) in enumerate(variants):
                    l2 = (i11 + offset[0]) % n_l
                    m2 = (i12 + offset[1]) % n_m
                    beams = (dft_beam(i11, i12, cfg, ov), dft_beam(l2, m2, cfg, ov))
                    beam_sel, signs = _BEAM_PATTERNS[(rank, pattern)]
                    for n in range(2):
                        phi = -_PHI2[n] if negate else _PHI2[n]
                        cols = [
                            np.concatenate([beams[b], s * phi * beams[b]])
                            for b, s in zip(beam_sel, signs)
                        ]
                        w = np.stack(cols, axis=1)
                        mats.append(w / np.linalg.norm(w))
                        pmis.append(TypeIPmi(i11, i12, i13, (n,)))

    return Codebook(cfg, ov, rank, pmis, np.stack(mats))


@dataclass(frozen=True)
class Type2Config:
    """Type II structure parameters: B combined beams, N_PSK co-phase grid."""

    num_beams: int = 4
    n_psk: int = 8
    max_rank: int = 2

    def __post_init__(self) -> None:
        if self.num_beams not in (2, 3, 4):
            raise ValueError(f"num_beams must be in {{2,3,4}}, got {self.num_beams}")
        if self.n_psk not in (4, 8):
            raise ValueError(f"n_psk must be 4 or 8, got {self.n_psk}")
        if not 1 <= self.max_rank <= 2:
            raise ValueError(f"Type II rank limit is 2, got max_rank={self.max_rank}")


class Type2CodebookSpace:
    """Enumerable Type II structure (not materialized).

    Holds the rotation grid (q1 < o1, q2 < o2), the C(n1*n2, B) orthogonal
    beam combinations, and the coefficient alphabets. Precoders are realized
    on demand from a TypeIIPmi by realize_type2_precoder.
    """

    def __init__(self, cfg: AntennaConfig, t2: Type2Config, ov: Oversampling):
        if t2.num_beams > cfg.n1 * cfg.n2:
            raise ValueError(
                f"num_beams={t2.num_beams} exceeds the {cfg.n1 * cfg.n2} orthogonal beams"
            )
        self.cfg = cfg
        self.t2 = t2
        self.ov = ov
        self._combos = tuple(itertools.combinations(range(cfg.n1 * cfg.n2), t2.num_beams))
        self._combo_index = {c: i for i, c in enumerate(self._combos)}

    @property
    def num_rotations(self) -> tuple[int, int]:
        return (self.ov.o1, self.ov.o2)

    @property
    def num_beam_combinations(self) -> int:
        return len(self._combos)

    def beam_combination(self, i12: int) -> tuple[int, ...]:
        if not 0 <= i12 < len(self._combos):
            raise ValueError(f"i12={i12} out of range [0, {len(self._combos)})")
        return self._combos[i12]

    def combination_index(self, beams: tuple[int, ...]) -> int:
        try:
            return self._combo_index[tuple(sorted(beams))]
        except KeyError:
            raise ValueError(f"{beams} is not a valid beam combination") from None

    def orthogonal_beams(self, q1: int, q2: int) -> np.ndarray:
        """All n1*n2 orthogonal beams at rotation (q1, q2), one per row.

        Row index b = x1*n2 + x2 maps to grid point (q1 + o1*x1, q2 + o2*x2).
        """
        if not 0 <= q1 < self.ov.o1:
            raise ValueError(f"rotation q1={q1} out of range [0, {self.ov.o1})")
        if not 0 <= q2 < self.ov.o2:
            raise ValueError(f"rotation q2={q2} out of range [0, {self.ov.o2})")
        cfg, ov = self.cfg, self.ov
        rows = [
            dft_beam(q1 + ov.o1 * x1, q2 + ov.o2 * x2, cfg, ov)
            for x1 in range(cfg.n1)
            for x2 in range(cfg.n2)
        ]
        return np.stack(rows)

    def psk_phases(self, indices) -> np.ndarray:
        return np.exp(2j * np.pi * np.asarray(indices) / self.t2.n_psk)


def build_type2_structure(cfg: AntennaConfig, t2: Type2Config, ov: Oversampling) -> Type2CodebookSpace:
    return Type2CodebookSpace(cfg, t2, ov)


def realize_type2_precoder(space: Type2CodebookSpace, pmi: TypeIIPmi, subband: int) -> np.ndarray:
    """Build the ports x rank matrix for one subband from a Type II PMI.

    Per layer and polarization: w = sum_b a_wb * a_sb * exp(j*2*pi*c/N_PSK) * v_b,
    columns normalized to unit norm and the matrix scaled to unit Frobenius norm.
    """
    num_sb = pmi.num_subbands
    if not 0 <= subband < num_sb:
        raise ValueError(f"subband {subband} out of range [0, {num_sb})")
    rank = pmi.rank
    if rank > space.t2.max_rank:
        raise ValueError(f"rank {rank} exceeds the Type II limit {space.t2.max_rank}")
    b_count = space.t2.num_beams
    beams = space.orthogonal_beams(*pmi.i11)[list(space.beam_combination(pmi.i12))]

    cols = []
    for layer in range(rank):
        wb = TYPE2_WB_AMPLITUDES[list(pmi.wideband_amplitudes[layer])]
        sb = TYPE2_SB_AMPLITUDES[list(pmi.subband_amplitude[layer][subband])]
        ph = space.psk_phases(pmi.subband_cophase[layer][subband])
        coeff = wb * sb * ph  # (2B,), position j = p*B + b
        col = np.concatenate([coeff[:b_count] @ beams, coeff[b_count:] @ beams])
        norm = np.linalg.norm(col)
        if norm == 0.0:
            raise ValueError(f"layer {layer} has all-zero coefficients on subband {subband}")
        cols.append(col / norm)
    return np.stack(cols, axis=1) / math.sqrt(rank)
