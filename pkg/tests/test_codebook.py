"""Beam grid, Type I enumeration, and Type II structure invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nrsim import (
    AntennaConfig,
    Oversampling,
    Type2Config,
    TypeIIPmi,
    TypeIPmi,
    build_type1_codebook,
    build_type2_structure,
    dft_beam,
    oversampling_factors,
    realize_type2_precoder,
)
from nrsim.codebook import TYPE2_SB_AMPLITUDES, TYPE2_WB_AMPLITUDES

LAYOUTS = [(2, 1), (2, 2), (4, 1), (3, 2), (6, 1), (4, 2), (8, 1),
           (4, 3), (6, 2), (12, 1), (4, 4), (8, 2), (16, 1)]


def _panel(n1, n2):
    cfg = AntennaConfig(n1, n2)
    return cfg, oversampling_factors(cfg)


class TestAntennaConfig:
    def test_port_count(self):
        assert AntennaConfig(4, 1).num_ports == 8
        assert AntennaConfig(2, 2).num_ports == 8
        assert AntennaConfig(16, 1).num_ports == 32

    def test_rejects_multi_panel(self):
        with pytest.raises(ValueError):
            AntennaConfig(4, 1, ng=2)

    def test_rejects_co_polarized(self):
        with pytest.raises(ValueError):
            AntennaConfig(4, 1, cross_polarized=False)

    def test_rejects_empty_dimension(self):
        with pytest.raises(ValueError):
            AntennaConfig(0, 1)


class TestOversampling:
    def test_single_row_layouts(self):
        for n1 in (2, 4, 6, 8, 12, 16):
            assert oversampling_factors(AntennaConfig(n1, 1)) == Oversampling(4, 1)

    def test_planar_layouts(self):
        for n1, n2 in ((2, 2), (3, 2), (4, 2), (4, 3), (6, 2), (4, 4), (8, 2)):
            assert oversampling_factors(AntennaConfig(n1, n2)) == Oversampling(4, 4)

    def test_unsupported_layout_names_pair(self):
        with pytest.raises(ValueError, match=r"\(5, 1\)"):
            oversampling_factors(AntennaConfig(5, 1))


class TestDftBeam:
    def test_index_zero_is_all_ones(self):
        cfg, ov = _panel(4, 2)
        assert np.array_equal(dft_beam(0, 0, cfg, ov), np.ones(8, dtype=complex))

    def test_known_entry(self):
        cfg, ov = _panel(2, 1)
        beam = dft_beam(1, 0, cfg, ov)
        assert beam[0] == 1.0 + 0.0j
        assert beam[1] == 0.7071067811865476 + 0.7071067811865475j

    def test_unit_modulus(self):
        cfg, ov = _panel(4, 4)
        for l in range(cfg.n1 * ov.o1):
            beam = dft_beam(l, 5, cfg, ov)
            assert np.allclose(np.abs(beam), 1.0, atol=1e-12)

    def test_orthogonal_subgrid(self):
        cfg, ov = _panel(4, 2)
        ref = dft_beam(1, 2, cfg, ov)
        for x1 in range(cfg.n1):
            for x2 in range(cfg.n2):
                other = dft_beam(1 + ov.o1 * x1, 2 + ov.o2 * x2, cfg, ov)
                inner = np.vdot(ref, other)
                if (x1, x2) == (0, 0):
                    assert inner == pytest.approx(cfg.n1 * cfg.n2)
                else:
                    assert abs(inner) < 1e-9

    def test_adjacent_beams_not_orthogonal(self):
        cfg, ov = _panel(4, 1)
        assert abs(np.vdot(dft_beam(0, 0, cfg, ov), dft_beam(1, 0, cfg, ov))) > 1e-3

    def test_index_range(self):
        cfg, ov = _panel(4, 1)
        with pytest.raises(ValueError):
            dft_beam(16, 0, cfg, ov)
        with pytest.raises(ValueError):
            dft_beam(0, 1, cfg, ov)
        with pytest.raises(ValueError):
            dft_beam(-1, 0, cfg, ov)


class TestType1Codebook:
    @pytest.mark.parametrize("layout", LAYOUTS)
    def test_cardinality(self, layout):
        cfg, ov = _panel(*layout)
        grid = cfg.n1 * ov.o1 * cfg.n2 * ov.o2
        assert len(build_type1_codebook(cfg, 1, ov)) == grid * 4
        for rank in (2, 3, 4):
            assert len(build_type1_codebook(cfg, rank, ov)) == grid * 4 * 2

    @pytest.mark.parametrize("rank", [1, 2, 3, 4])
    def test_entries_unit_norm_orthogonal_columns(self, rank):
        cfg, ov = _panel(4, 1)
        cb = build_type1_codebook(cfg, rank, ov)
        assert cb.w_stack.shape == (len(cb), cfg.num_ports, rank)
        gram = np.einsum("epr,eps->ers", cb.w_stack.conj(), cb.w_stack)
        expect = np.eye(rank) / rank
        assert np.max(np.abs(gram - expect)) < 1e-9

    @pytest.mark.parametrize("layout", [(2, 1), (2, 2), (3, 2), (4, 4), (16, 1)])
    def test_entries_distinct_all_layouts(self, layout):
        cfg, ov = _panel(*layout)
        for rank in (1, 2, 3, 4):
            cb = build_type1_codebook(cfg, rank, ov)
            assert len({cb.w_stack[i].tobytes() for i in range(len(cb))}) == len(cb)
            gram = np.einsum("epr,eps->ers", cb.w_stack.conj(), cb.w_stack)
            assert np.max(np.abs(gram - np.eye(rank) / rank)) < 1e-9

    @pytest.mark.parametrize("rank", [1, 2, 3, 4])
    def test_index_round_trips(self, rank):
        cfg, ov = _panel(4, 1)
        cb = build_type1_codebook(cfg, rank, ov)
        for i, entry in enumerate(cb):
            assert cb.index_of(cb.w_stack[i]) == i
            assert cb.index_of_pmi(entry.pmi) == i
            assert np.array_equal(cb.matrix_for(entry.pmi), cb.w_stack[i])

    def test_lexicographic_enumeration(self):
        cfg, ov = _panel(4, 2)
        cb = build_type1_codebook(cfg, 2, ov)
        keys = [(e.pmi.i11, e.pmi.i12, e.pmi.i13, e.pmi.i2_per_subband[0]) for e in cb]
        assert keys == sorted(keys)

    def test_rank1_uses_four_cophases(self):
        cfg, ov = _panel(2, 1)
        cb = build_type1_codebook(cfg, 1, ov)
        ports = cfg.num_ports
        half = ports // 2
        # First four entries share beam (0, 0); second-polarization block
        # steps through the QPSK alphabet.
        for n, phi in enumerate((1, 1j, -1, -1j)):
            w = cb.w_stack[n][:, 0] * math.sqrt(ports)
            assert np.allclose(w[:half], np.ones(half), atol=1e-12)
            assert np.allclose(w[half:], phi * np.ones(half), atol=1e-12)

    def test_unknown_matrix_lookup(self):
        cfg, ov = _panel(2, 1)
        cb = build_type1_codebook(cfg, 1, ov)
        with pytest.raises(KeyError):
            cb.index_of(np.zeros((4, 1), dtype=complex))

    def test_pmi_out_of_range(self):
        cfg, ov = _panel(2, 1)
        cb = build_type1_codebook(cfg, 1, ov)
        with pytest.raises(ValueError):
            cb.index_of_pmi(TypeIPmi(8, 0, 0, (0,)))
        with pytest.raises(ValueError):
            cb.index_of_pmi(TypeIPmi(0, 0, 1, (0,)))

    @pytest.mark.parametrize("rank", [0, 5])
    def test_invalid_rank(self, rank):
        cfg, ov = _panel(4, 1)
        with pytest.raises(ValueError):
            build_type1_codebook(cfg, rank, ov)


class TestType2Structure:
    def test_amplitude_alphabets(self):
        assert TYPE2_WB_AMPLITUDES[0] == 0.0
        assert TYPE2_WB_AMPLITUDES[-1] == 1.0
        assert np.all(np.diff(TYPE2_WB_AMPLITUDES) > 0)
        # Consecutive nonzero levels differ by 3 dB (a factor sqrt(2)).
        ratios = TYPE2_WB_AMPLITUDES[2:] / TYPE2_WB_AMPLITUDES[1:-1]
        assert np.allclose(ratios, math.sqrt(2.0), atol=1e-12)
        assert np.allclose(TYPE2_SB_AMPLITUDES, [math.sqrt(0.5), 1.0], atol=1e-15)

    def test_combination_counts(self):
        cfg, ov = _panel(4, 1)
        assert build_type2_structure(cfg, Type2Config(num_beams=4), ov).num_beam_combinations == 1
        assert build_type2_structure(cfg, Type2Config(num_beams=2), ov).num_beam_combinations == 6
        assert build_type2_structure(cfg, Type2Config(num_beams=3), ov).num_beam_combinations == 4

    def test_combination_round_trip(self):
        cfg, ov = _panel(4, 2)
        space = build_type2_structure(cfg, Type2Config(num_beams=3), ov)
        for i12 in range(space.num_beam_combinations):
            combo = space.beam_combination(i12)
            assert space.combination_index(combo) == i12
        # Order-insensitive lookup.
        assert space.combination_index((2, 0, 1)) == space.combination_index((0, 1, 2))

    def test_too_many_beams_for_grid(self):
        cfg, ov = _panel(2, 1)
        with pytest.raises(ValueError):
            build_type2_structure(cfg, Type2Config(num_beams=4), ov)

    def test_rotated_basis_is_orthogonal(self):
        cfg, ov = _panel(4, 2)
        space = build_type2_structure(cfg, Type2Config(num_beams=4), ov)
        for q1, q2 in ((0, 0), (1, 3), (3, 1)):
            basis = space.orthogonal_beams(q1, q2)
            gram = basis.conj() @ basis.T
            assert np.allclose(gram, cfg.n1 * cfg.n2 * np.eye(cfg.n1 * cfg.n2), atol=1e-9)

    def test_rotation_range(self):
        cfg, ov = _panel(4, 1)
        space = build_type2_structure(cfg, Type2Config(num_beams=4), ov)
        with pytest.raises(ValueError):
            space.orthogonal_beams(4, 0)
        with pytest.raises(ValueError):
            space.orthogonal_beams(0, 1)

    def test_psk_grid_nesting(self):
        """Every QPSK co-phase is reachable on the 8PSK grid at doubled index."""
        cfg, ov = _panel(4, 1)
        coarse = build_type2_structure(cfg, Type2Config(n_psk=4), ov)
        fine = build_type2_structure(cfg, Type2Config(n_psk=8), ov)
        for idx in range(4):
            assert coarse.psk_phases(idx) == pytest.approx(fine.psk_phases(2 * idx))

    @pytest.mark.parametrize("bad", [{"num_beams": 5}, {"num_beams": 1},
                                     {"n_psk": 16}, {"max_rank": 3}])
    def test_config_validation(self, bad):
        with pytest.raises(ValueError):
            Type2Config(**bad)


def _single_beam_pmi(beam_pos, wb_idx=7, num_beams=4, num_subbands=1, rank=1):
    """PMI whose only nonzero coefficient sits at position beam_pos."""
    wb = tuple(wb_idx if j == beam_pos else 0 for j in range(2 * num_beams))
    zeros = tuple(0 for _ in range(2 * num_beams))
    per_layer_sb = tuple(zeros for _ in range(num_subbands))
    return TypeIIPmi(
        i11=(0, 0),
        i12=0,
        wideband_amplitudes=tuple(wb for _ in range(rank)),
        subband_cophase=tuple(per_layer_sb for _ in range(rank)),
        subband_amplitude=tuple(per_layer_sb for _ in range(rank)),
    )


class TestType2Realization:
    def test_single_coefficient_selects_one_beam(self):
        cfg, ov = _panel(4, 1)
        space = build_type2_structure(cfg, Type2Config(num_beams=4), ov)
        beams = space.orthogonal_beams(0, 0)
        for b in range(4):
            w = realize_type2_precoder(space, _single_beam_pmi(b), 0)
            assert w.shape == (8, 1)
            # First polarization carries beam b scaled to unit norm, second is silent.
            assert np.allclose(w[:4, 0], beams[b] / 2.0, atol=1e-12)
            assert np.allclose(w[4:, 0], 0.0, atol=1e-15)

    def test_equal_split_across_polarizations(self):
        cfg, ov = _panel(4, 1)
        space = build_type2_structure(cfg, Type2Config(num_beams=4), ov)
        wb = (7, 0, 0, 0, 7, 0, 0, 0)
        zeros = ((0,) * 8,)
        pmi = TypeIIPmi((0, 0), 0, (wb,), (zeros,), (zeros,))
        w = realize_type2_precoder(space, pmi, 0)
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(w[:4, 0], w[4:, 0], atol=1e-12)
        assert np.allclose(np.abs(w[:, 0]), 1.0 / math.sqrt(8.0), atol=1e-12)

    def test_subband_out_of_range(self):
        cfg, ov = _panel(4, 1)
        space = build_type2_structure(cfg, Type2Config(num_beams=4), ov)
        with pytest.raises(ValueError):
            realize_type2_precoder(space, _single_beam_pmi(0), 1)

    def test_rank_above_limit(self):
        cfg, ov = _panel(4, 1)
        space = build_type2_structure(cfg, Type2Config(num_beams=4, max_rank=1), ov)
        with pytest.raises(ValueError):
            realize_type2_precoder(space, _single_beam_pmi(0, rank=2), 0)

    def test_all_zero_layer_rejected(self):
        cfg, ov = _panel(4, 1)
        space = build_type2_structure(cfg, Type2Config(num_beams=4), ov)
        with pytest.raises(ValueError):
            realize_type2_precoder(space, _single_beam_pmi(0, wb_idx=0), 0)


@settings(deadline=None)
@given(
    num_beams=st.integers(min_value=2, max_value=4),
    n_psk=st.sampled_from([4, 8]),
    rank=st.integers(min_value=1, max_value=2),
    num_subbands=st.integers(min_value=1, max_value=4),
    data=st.data(),
)
def test_realized_precoder_normalization(num_beams, n_psk, rank, num_subbands, data):
    """Any valid PMI realizes to unit Frobenius norm with equal column power."""
    cfg, ov = _panel(4, 1)
    space = build_type2_structure(cfg, Type2Config(num_beams, n_psk), ov)
    two_b = 2 * num_beams

    def coeff_rows(values):
        return st.tuples(*[values] * two_b)

    wb_layer = coeff_rows(st.integers(min_value=0, max_value=7)).filter(
        lambda t: any(v > 0 for v in t)
    )
    per_sb = lambda values: st.tuples(*[coeff_rows(values)] * num_subbands)
    pmi = TypeIIPmi(
        i11=(data.draw(st.integers(0, ov.o1 - 1)), data.draw(st.integers(0, ov.o2 - 1))),
        i12=data.draw(st.integers(0, space.num_beam_combinations - 1)),
        wideband_amplitudes=tuple(data.draw(wb_layer) for _ in range(rank)),
        subband_cophase=tuple(
            data.draw(per_sb(st.integers(0, n_psk - 1))) for _ in range(rank)
        ),
        subband_amplitude=tuple(
            data.draw(per_sb(st.integers(0, 1))) for _ in range(rank)
        ),
    )
    assert pmi.rank == rank
    assert pmi.num_subbands == num_subbands
    for sb in range(num_subbands):
        w = realize_type2_precoder(space, pmi, sb)
        assert w.shape == (cfg.num_ports, rank)
        assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-9)
        col_power = np.sum(np.abs(w) ** 2, axis=0)
        assert np.allclose(col_power, 1.0 / rank, atol=1e-9)
