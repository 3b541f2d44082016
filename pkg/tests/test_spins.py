import numpy as np
import pytest

from apvsim.spins import (
    DimensionTooLarge,
    EffectiveField,
    FitDegenerate,
    NonDiagonalField,
    PureState,
    RamseyOutcome,
    analyzed_parity,
    branch_bits,
    branch_index,
    branch_phase,
    evolve,
    evolve_dense_oracle,
    extract_phase,
    prepare_alternating_ghz,
    ramsey_sequence,
    rate_convention_report,
    relative_phase_rate,
)

DELTA = 2.0 * np.pi * 0.4


def zfield(bz):
    return EffectiveField(b=(0.0, 0.0, bz))


def alternating_fields(n, delta=DELTA):
    return [zfield(((-1) ** i) * delta) for i in range(n)]


def random_fields(rng, n, scale=10.0):
    return [EffectiveField(b=rng.normal(size=3) * scale) for _ in range(n)]


class TestPrepare:
    def test_two_ions_matches_du_plus_ud(self):
        state = prepare_alternating_ghz(2)
        expected = np.zeros(4, dtype=complex)
        expected[branch_index("du")] = expected[branch_index("ud")] = 1 / np.sqrt(2)
        assert np.allclose(state.amplitudes, expected)

    def test_single_ion_equal_superposition(self):
        state = prepare_alternating_ghz(1)
        assert np.allclose(np.abs(state.amplitudes), 1 / np.sqrt(2))
        assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0, abs=1e-15)

    def test_four_ions_support(self):
        state = prepare_alternating_ghz(4)
        nonzero = np.flatnonzero(np.abs(state.amplitudes) > 0)
        assert sorted(nonzero) == sorted([branch_index("dudu"), branch_index("udud")])

    def test_norm_validation(self):
        with pytest.raises(ValueError):
            PureState(amplitudes=np.array([1.0, 1.0], dtype=complex), n_ions=1)


class TestEvolve:
    def test_zero_fields_identity(self, rng):
        state = prepare_alternating_ghz(3)
        out = evolve(state, [zfield(0.0)] * 3, 0.7)
        assert np.allclose(out.amplitudes, state.amplitudes, atol=1e-15)

    def test_two_ion_branch_phase_rate_is_2delta(self):
        state = prepare_alternating_ghz(2)
        t = 0.05
        out = evolve(state, alternating_fields(2), t)
        assert branch_phase(out) == pytest.approx(-2 * DELTA * t, abs=1e-12)

    def test_matches_dense_oracle(self, rng):
        for n in range(1, 7):
            for _ in range(10):
                fields = random_fields(rng, n)
                state = _random_state(rng, n)
                t = float(rng.uniform(0, 0.5))
                a = evolve(state, fields, t)
                b = evolve_dense_oracle(state, fields, t)
                assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-12

    def test_norm_preserved(self, rng):
        state = prepare_alternating_ghz(4)
        for _ in range(10):
            state = evolve(state, random_fields(rng, 4), float(rng.uniform(0, 1)))
            assert abs(np.linalg.norm(state.amplitudes) - 1.0) < 1e-12


def _random_state(rng, n):
    amps = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return PureState(amplitudes=amps / np.linalg.norm(amps), n_ions=n)


class TestDenseOracle:
    def test_identity_at_zero_time(self, rng):
        state = _random_state(rng, 3)
        out = evolve_dense_oracle(state, random_fields(rng, 3), 0.0)
        assert np.allclose(out.amplitudes, state.amplitudes, atol=1e-14)

    def test_semigroup(self, rng):
        state = _random_state(rng, 3)
        fields = random_fields(rng, 3)
        full = evolve_dense_oracle(state, fields, 0.8)
        halves = evolve_dense_oracle(evolve_dense_oracle(state, fields, 0.4), fields, 0.4)
        assert np.max(np.abs(full.amplitudes - halves.amplitudes)) < 1e-12

    def test_dimension_limit(self):
        state = prepare_alternating_ghz(11)
        with pytest.raises(DimensionTooLarge):
            evolve_dense_oracle(state, [zfield(1.0)] * 11, 0.1)


class TestRelativePhaseRate:
    def test_two_ion_anticorrelated(self):
        rate = relative_phase_rate(alternating_fields(2), "du", "ud")
        assert rate == pytest.approx(-2 * DELTA, rel=1e-15)

    def test_uniform_offset_cancels(self, rng):
        offset = float(rng.uniform(-1e3, 1e3))
        shifted = [zfield(f.b[2] + offset) for f in alternating_fields(2)]
        assert relative_phase_rate(shifted, "du", "ud") == pytest.approx(
            -2 * DELTA, rel=1e-12)

    def test_four_ion_alternating_gives_4delta(self):
        rate = relative_phase_rate(alternating_fields(4), "dudu", "udud")
        assert rate == pytest.approx(-4 * DELTA, rel=1e-15)

    def test_transverse_field_rejected(self):
        fields = [EffectiveField(b=(1.0, 0.0, 5.0)), zfield(-5.0)]
        with pytest.raises(NonDiagonalField):
            relative_phase_rate(fields, "du", "ud")

    def test_matches_dense_oracle_phase(self, rng):
        for n in (2, 3, 4):
            bz = rng.normal(size=n) * 5
            fields = [zfield(b) for b in bz]
            rate = relative_phase_rate(fields, branch_bits(n, "d"), branch_bits(n, "u"))
            t = 0.01
            out = evolve_dense_oracle(prepare_alternating_ghz(n), fields, t)
            assert branch_phase(out) == pytest.approx(rate * t, abs=1e-12)


class TestRamseySequence:
    def test_zero_wait_full_parity(self):
        out = ramsey_sequence(alternating_fields(2), 0.0, 0.0, shots=100, contrast=1.0, seed=1)
        assert out.parity_expectation == pytest.approx(1.0, abs=1e-12)
        assert out.shot_counts == (100, 0)

    def test_quarter_period_wait_zeroes_parity(self):
        # phi_acc = -2*Delta*t = -pi/2 at t = 0.3125 s for Delta = 2*pi*0.4
        out = ramsey_sequence(alternating_fields(2), 0.3125, 0.0, shots=10, seed=1)
        assert out.parity_expectation == pytest.approx(0.0, abs=1e-12)

    def test_closed_form_for_diagonal_fields(self, rng):
        for n in range(1, 6):
            bz = rng.normal(size=n) * 20
            fields = [zfield(b) for b in bz]
            t = float(rng.uniform(0, 0.2))
            state = evolve(prepare_alternating_ghz(n), fields, t)
            phi_acc = branch_phase(state)
            for phi_a in rng.uniform(0, 2 * np.pi, size=5):
                out = ramsey_sequence(fields, t, float(phi_a), shots=1, contrast=0.8, seed=2)
                assert out.parity_expectation == pytest.approx(
                    0.8 * np.cos(phi_acc + n * phi_a), abs=1e-12)

    def test_seed_determinism(self):
        a = ramsey_sequence(alternating_fields(2), 0.1, 0.3, shots=500, seed=42)
        b = ramsey_sequence(alternating_fields(2), 0.1, 0.3, shots=500, seed=42)
        assert a == b

    def test_empirical_parity_converges(self):
        fields = alternating_fields(2)
        errs = []
        for shots in (100, 10000):
            outs = [ramsey_sequence(fields, 0.1, 0.2, shots=shots, seed=s)
                    for s in range(40)]
            errs.append(np.std([o.empirical_parity - o.parity_expectation for o in outs]))
        assert errs[1] < errs[0] / 5  # 1/sqrt(shots): factor 10 expected

    def test_shot_counts_sum(self):
        out = ramsey_sequence(alternating_fields(2), 0.1, 0.2, shots=777, seed=3)
        assert sum(out.shot_counts) == 777


class TestGlobalPhaseRejection:
    def test_common_offset_leaves_parity_unchanged(self, rng):
        fields = alternating_fields(2)
        for delta in (1.0, 37.0, 1e3):
            shifted = [zfield(f.b[2] + delta) for f in fields]
            for phi_a in rng.uniform(0, 2 * np.pi, size=5):
                p0 = ramsey_sequence(fields, 0.2, float(phi_a), shots=1, seed=0)
                p1 = ramsey_sequence(shifted, 0.2, float(phi_a), shots=1, seed=0)
                assert abs(p1.parity_expectation - p0.parity_expectation) < 1e-12

    def test_common_offset_leaves_extracted_phase_unchanged(self):
        fields = alternating_fields(4)
        phases = np.linspace(0, 2 * np.pi / 4, 12, endpoint=False)

        def scan(fl):
            outs = [ramsey_sequence(fl, 0.2, p, shots=1, seed=0) for p in phases]
            return extract_phase(outs, 4, use_expectation=True)[0]

        shifted = [zfield(f.b[2] + 123.456) for f in fields]
        assert abs(scan(shifted) - scan(fields)) < 1e-12


class TestExtractPhase:
    def _fringe(self, n, phi, contrast=1.0, noise_seed=None, shots=1000):
        phases = np.linspace(0, 2 * np.pi / n, 16, endpoint=False)
        outcomes = []
        rng = np.random.default_rng(noise_seed)
        for pa in phases:
            p = contrast * np.cos(phi + n * pa)
            even = (rng.binomial(shots, (1 + p) / 2) if noise_seed is not None
                    else int(round(shots * (1 + p) / 2)))
            outcomes.append(RamseyOutcome(analysis_phase=float(pa), parity_expectation=p,
                                          shot_counts=(even, shots - even), wait_time=0.1))
        return outcomes

    def test_noiseless_round_trip(self):
        outcomes = self._fringe(2, 0.7)
        phi, sigma = extract_phase(outcomes, 2, use_expectation=True)
        assert phi == pytest.approx(0.7, abs=1e-9)
        assert sigma < 1e-9

    def test_zero_contrast_degenerate(self):
        outcomes = self._fringe(2, 0.7, contrast=0.0)
        with pytest.raises(FitDegenerate):
            extract_phase(outcomes, 2, use_expectation=True)

    def test_needs_three_distinct_phases(self):
        outcomes = self._fringe(2, 0.7)[:2]
        with pytest.raises(ValueError):
            extract_phase(outcomes, 2)

    def test_needs_span(self):
        outcomes = [o for o in self._fringe(2, 0.7) if o.analysis_phase < 0.3]
        with pytest.raises(ValueError):
            extract_phase(outcomes, 2)

    def test_sigma_scales_with_contrast_and_shots(self):
        def spread(contrast, shots):
            phis = [extract_phase(self._fringe(2, 0.4, contrast, seed, shots), 2)[0]
                    for seed in range(200)]
            return np.std(phis)

        s_base = spread(1.0, 400)
        assert spread(1.0, 6400) == pytest.approx(s_base / 4, rel=0.25)
        assert spread(0.5, 400) == pytest.approx(2 * s_base, rel=0.25)

    def test_reported_sigma_tracks_monte_carlo(self):
        results = [extract_phase(self._fringe(2, 0.4, 1.0, seed, 2000), 2)
                   for seed in range(300)]
        mc = np.std([r[0] for r in results])
        reported = np.mean([r[1] for r in results])
        assert reported == pytest.approx(mc, rel=0.3)


class TestSignalScaling:
    def test_two_ion_rate_doubles_single_ion(self):
        single = relative_phase_rate([zfield(DELTA)], "d", "u")
        double = relative_phase_rate(alternating_fields(2), "du", "ud")
        assert double == pytest.approx(2 * single, rel=1e-15)

    def test_heisenberg_fringe_frequency(self, rng):
        # fringe oscillates at N x the analysis-phase frequency
        for n in (2, 3, 4):
            state = evolve(prepare_alternating_ghz(n), alternating_fields(n), 0.1)
            grid = np.linspace(0, 2 * np.pi, 64, endpoint=False)
            parities = np.array([analyzed_parity(state, a) for a in grid])
            spectrum = np.abs(np.fft.rfft(parities)) / len(grid)
            assert np.argmax(spectrum) == n
            others = np.delete(spectrum, n)
            assert np.max(others) < 1e-10


class TestRateConventionReport:
    def test_four_ion_report(self):
        report = rate_convention_report(4, DELTA)
        assert report["computed_rate_factor"] == pytest.approx(4.0, rel=1e-12)
        assert report["per_level_convention_factor"] == 8.0
        assert report["dense_oracle_rate_rad_s"] == pytest.approx(
            report["computed_branch_rate_rad_s"], rel=1e-12)
        assert report["computed_rate_factor"] != report["per_level_convention_factor"]
        assert report["note"]
