import math
from itertools import product

import numpy as np
import pytest

from conftest import closed_grid, tcl_masses_oracle, tdl_masses_oracle
from trunclap import (
    GeoSamplerParams,
    MechanismParams,
    NoisePair,
    RandomTape,
    centered_clap_pmf,
    centered_dlap_pmf,
    noise_c,
    noise_d,
    perturb_c,
    perturb_d,
    sample_clap_centered,
    sample_dlap_centered,
    sample_geometric_bitwise,
    sample_tdl,
    sample_tdl_batch,
)
from trunclap.sampling import (
    branch_probability_c,
    branch_probability_d,
    centered_dlap_config,
    dlap_zero_mass,
    outer_count,
)


def tv(counts, masses):
    freq = counts / counts.sum()
    return 0.5 * float(np.sum(np.abs(freq - masses)))


class TestGeometricBitwise:
    def test_bit_marginals(self):
        gp = GeoSamplerParams(kappa=3, rho=math.exp(-0.25), t=4.0)
        n = 100_000
        tape = RandomTape(11)
        draws = np.array([sample_geometric_bitwise(gp, tape) for _ in range(n)])
        for i in range(3):
            p = gp.bit_probability(i)
            freq = np.mean((draws >> i) & 1)
            se = math.sqrt(p * (1 - p) / n)
            assert abs(freq - p) < 3 * se

    def test_pmf_against_direct_normalization(self):
        gp = GeoSamplerParams(kappa=3, rho=math.exp(-0.25), t=4.0)
        xs = np.arange(8)
        exact = gp.rho**xs
        exact /= exact.sum()
        n = 1_000_000
        tape = RandomTape(12)
        draws = np.array([sample_geometric_bitwise(gp, tape) for _ in range(n)])
        counts = np.bincount(draws, minlength=8)
        assert tv(counts, exact) < 0.003

    def test_tiny_rho_collapses_to_zero(self):
        gp = GeoSamplerParams(kappa=4, rho=1e-6, t=1.0)
        tape = RandomTape(13)
        draws = [sample_geometric_bitwise(gp, tape) for _ in range(20_000)]
        assert np.mean(np.asarray(draws) == 0) > 0.9999 - 3e-3


class TestCenteredDlap:
    def test_exhaustive_enumeration_matches_pmf(self):
        # all (zero flag, bits, sign) outcomes with their exact probabilities
        for L, sigma, p in [(2.0, 1.0, 0), (2.0, 1.0, 1), (8.0, 3.0, 2), (1.0, 0.7, 3)]:
            cfg = centered_dlap_config(L, sigma, p)
            assert cfg.method == "bitwise"
            kappa = cfg.kappa
            assert kappa <= 6
            c0 = dlap_zero_mass(L, sigma, p)
            t = 2.0**p * sigma
            rho = math.exp(-1.0 / t)
            bitp = [rho ** (2**i) / (1 + rho ** (2**i)) for i in range(kappa)]
            steps = int(round(L * 2**p))
            law = np.zeros(2 * steps + 1)
            law[steps] += c0
            for bits in product((0, 1), repeat=kappa):
                pb = 1.0
                mag = 0
                for i, b in enumerate(bits):
                    pb *= bitp[i] if b else 1 - bitp[i]
                    mag |= b << i
                for sgn in (1, -1):
                    law[steps + sgn * (mag + 1)] += (1 - c0) * pb * 0.5
            exact = centered_dlap_pmf(L, sigma, p).masses
            assert np.max(np.abs(law - exact)) < 1e-12

    def test_symmetry_and_tv(self):
        n = 1_000_000
        tape = RandomTape(21)
        draws = np.array([sample_dlap_centered(2.0, 1.0, 0, tape) for _ in range(n)])
        counts = np.bincount((draws + 2).astype(int), minlength=5)
        exact = centered_dlap_pmf(2.0, 1.0, 0).masses
        assert tv(counts, exact) < 0.003
        mirrored = counts[::-1]
        assert 0.5 * np.sum(np.abs(counts / n - mirrored / n)) < 0.003

    def test_zero_mass_frequency(self):
        n = 200_000
        c0 = dlap_zero_mass(2.0, 1.0, 0)
        tape = RandomTape(22)
        hits = sum(sample_dlap_centered(2.0, 1.0, 0, tape) == 0.0 for _ in range(n))
        se = math.sqrt(c0 * (1 - c0) / n)
        assert abs(hits / n - c0) < 3 * se

    def test_table_fallback_for_non_pow2(self):
        cfg = centered_dlap_config(3.0, 1.0, 0)
        assert cfg.method == "table"
        n = 200_000
        tape = RandomTape(23)
        draws = np.array([sample_dlap_centered(3.0, 1.0, 0, tape) for _ in range(n)])
        counts = np.bincount((draws + 3).astype(int), minlength=7)
        exact = centered_dlap_pmf(3.0, 1.0, 0).masses
        assert tv(counts, exact) < 0.006
        assert tape.words_consumed == n  # one word per table draw

    def test_word_budget(self):
        cfg = centered_dlap_config(2.0, 1.0, 0)
        tape = RandomTape(24)
        sample_dlap_centered(2.0, 1.0, 0, tape)
        assert tape.words_consumed == cfg.words_per_draw == cfg.kappa + 2

    def test_single_step_bound(self):
        # L of one grid step: no magnitude bits, support {-L, 0, L}
        cfg = centered_dlap_config(1.0, 0.7, 0)
        assert cfg.method == "bitwise" and cfg.kappa == 0
        tape = RandomTape(25)
        draws = np.array([sample_dlap_centered(1.0, 0.7, 0, tape) for _ in range(100_000)])
        assert set(draws.tolist()) == {-1.0, 0.0, 1.0}
        counts = np.bincount((draws + 1).astype(int), minlength=3)
        assert tv(counts, centered_dlap_pmf(1.0, 0.7, 0).masses) < 0.01


class TestCenteredClap:
    def test_floor_map(self):
        # fine points in [y, y + 2^-p) all land on y
        h = 0.25
        for y in (-2.0, -0.25, 0.0, 1.75):
            for frac in (0.0, 0.0625, 0.1875):
                assert math.floor((y + frac) / h) * h == y

    def test_tv_at_gamma6(self):
        n = 1_000_000
        tape = RandomTape(31)
        draws = np.array(
            [sample_clap_centered(2.0, 1.0, 0, 6, tape) for _ in range(n)]
        )
        counts = np.bincount((draws + 2).astype(int), minlength=4)
        exact = centered_clap_pmf(2.0, 1.0, 0).masses
        assert tv(counts, exact) < 0.01
        assert draws.max() < 2.0  # half-open support

    def test_exact_pushforward_tv_decreases_in_gamma(self):
        # no sampling: push the fine-lattice law through the floor map
        exact = centered_clap_pmf(2.0, 1.0, 0).masses
        tvs = []
        for gamma in (1, 3, 6, 10):
            fine = centered_dlap_pmf(2.0, 1.0, gamma)
            steps = fine.spec.bound_steps
            pm = fine.masses.copy()
            pm = pm[:-1] / pm[:-1].sum()  # top fine point +L rejected
            coarse_idx = (np.arange(-steps, steps) >> gamma) + 2
            law = np.zeros(4)
            np.add.at(law, coarse_idx, pm)
            tvs.append(0.5 * float(np.sum(np.abs(law - exact))))
        assert all(a > b for a, b in zip(tvs, tvs[1:]))


class TestNoise:
    def test_branch_probability_value(self, table_params_p0):
        # 1 - 128 e^-4 / lambda for the reference parameters
        assert branch_probability_d(table_params_p0) == pytest.approx(0.8704, abs=5e-5)

    def test_branch_probability_empirical(self, table_params_p0):
        n = 100_000
        tape = RandomTape(41)
        hits = sum(noise_d(table_params_p0, tape).branch for _ in range(n))
        pb = branch_probability_d(table_params_p0)
        se = math.sqrt(pb * (1 - pb) / n)
        assert abs(hits / n - pb) < 3 * se

    def test_branch_vanishes_for_huge_L(self):
        params = MechanismParams(E=4.0, L=1024.0, sigma=1.0, p=0)
        assert branch_probability_d(params) == pytest.approx(1.0, abs=1e-12)
        assert branch_probability_c(params) == pytest.approx(1.0, abs=1e-12)

    def test_branch0_payload_uniform(self, small_params):
        from scipy.stats import chisquare

        n = 1_000_000
        tape = RandomTape(42)
        m = outer_count(small_params)
        draws = np.array(
            [noise_d(small_params, tape, branch_prob=0.0).payload for _ in range(n)]
        ).astype(int)
        counts = np.bincount(draws, minlength=m)
        _, pvalue = chisquare(counts)
        assert pvalue > 0.01

    def test_payload_ranges(self, small_params):
        tape = RandomTape(43)
        for _ in range(2000):
            pair = noise_d(small_params, tape)
            if pair.branch:
                assert -2.0 <= pair.payload <= 2.0
            else:
                assert pair.payload in range(8)
        for _ in range(500):
            pair = noise_c(small_params, tape, gamma=4)
            if pair.branch:
                assert -2.0 <= pair.payload < 2.0


class TestPerturb:
    def test_branch0_boundaries(self, small_params):
        params = small_params
        # lowest index lands on the bottom of the support
        assert perturb_d(0.0, NoisePair(0, 0), params) == -6.0
        # first high index lands just above x + L
        x = 1.0
        y = int(2**params.p * (params.E + x))
        assert perturb_d(x, NoisePair(0, y), params) == x + params.L + params.step
        # cumulative variant: upper tail starts at x + L inclusive
        assert perturb_c(x, NoisePair(0, y), params) == x + params.L

    def test_top_of_low_tail(self, small_params):
        x = 1.0
        y = int(2**small_params.p * (small_params.E + x)) - 1
        assert perturb_d(x, NoisePair(0, y), small_params) == x - small_params.L - small_params.step

    def test_branch1_adds(self, small_params):
        assert perturb_d(1.0, NoisePair(1, -2.0), small_params) == -1.0
        assert perturb_c(-3.0, NoisePair(1, 1.0), small_params) == -2.0

    def test_composite_law_exact_d(self, small_params):
        # enumerate (branch, payload) with exact probabilities and push
        # through the deterministic perturb map
        params = small_params
        pb = branch_probability_d(params)
        m = outer_count(params)
        inner = centered_dlap_pmf(params.L, params.sigma, params.p)
        for x in params.input_grid().values():
            x = float(x)
            law = {}
            for y in range(m):
                z = perturb_d(x, NoisePair(0, y), params)
                law[z] = law.get(z, 0.0) + (1 - pb) / m
            for v, mass in zip(inner.support(), inner.masses):
                z = perturb_d(x, NoisePair(1, float(v)), params)
                law[z] = law.get(z, 0.0) + pb * float(mass)
            oracle = tdl_masses_oracle(x, 4, 2, 1, 0)
            ys = closed_grid(6, 0)
            assert set(law) == set(ys.tolist())
            for y, mref in zip(ys, oracle):
                assert abs(law[float(y)] - mref) < 1e-12

    def test_composite_law_exact_c(self, small_params):
        # same enumeration with the exact inner table standing in for the
        # gamma-approximate sampler
        params = small_params
        pb = branch_probability_c(params)
        m = outer_count(params)
        inner = centered_clap_pmf(params.L, params.sigma, params.p)
        for x in params.input_grid().values():
            x = float(x)
            law = {}
            for y in range(m):
                z = perturb_c(x, NoisePair(0, y), params)
                law[z] = law.get(z, 0.0) + (1 - pb) / m
            for v, mass in zip(inner.support(), inner.masses):
                z = perturb_c(x, NoisePair(1, float(v)), params)
                law[z] = law.get(z, 0.0) + pb * float(mass)
            oracle = tcl_masses_oracle(x, 4, 2, 1, 0)
            ys = closed_grid(6, 0)[:-1]
            assert set(law) == set(ys.tolist())
            for y, mref in zip(ys, oracle):
                assert abs(law[float(y)] - mref) < 1e-12

    def test_end_to_end_tv_all_centers(self, small_params):
        params = small_params
        for i, x in enumerate(params.input_grid().values()):
            x = float(x)
            vals = sample_tdl_batch(x, params, 1_000_000, 100 + i)
            counts = np.bincount((vals + 6).astype(int), minlength=13)
            assert tv(counts, tdl_masses_oracle(x, 4, 2, 1, 0)) < 0.003

    def test_errors(self, small_params):
        with pytest.raises(ValueError):
            perturb_d(5.0, NoisePair(0, 0), small_params)
        with pytest.raises(ValueError):
            perturb_d(0.0, NoisePair(0, 99), small_params)
        with pytest.raises(ValueError):
            NoisePair(2, 0)


class TestDeterminism:
    def test_same_seed_same_stream(self, small_params):
        a = RandomTape(77, record=True)
        b = RandomTape(77, record=True)
        va = [sample_tdl(0.0, small_params, a) for _ in range(500)]
        vb = [sample_tdl(0.0, small_params, b) for _ in range(500)]
        assert va == vb
        assert a.draw_log == b.draw_log

    def test_batch_equals_sequential(self, small_params):
        tape = RandomTape(78)
        seq = np.array([sample_tdl(1.0, small_params, tape) for _ in range(3000)])
        batch = sample_tdl_batch(1.0, small_params, 3000, 78)
        assert np.array_equal(seq, batch)

    def test_batch_equals_sequential_p2(self):
        params = MechanismParams(E=64.0, L=32.0, sigma=8.0, p=2)
        tape = RandomTape(79)
        seq = np.array([sample_tdl(-32.0, params, tape) for _ in range(1000)])
        batch = sample_tdl_batch(-32.0, params, 1000, 79)
        assert np.array_equal(seq, batch)

    def test_injected_words(self):
        # an injected stream replays exactly
        base = RandomTape(80, record=True)
        v1 = sample_dlap_centered(2.0, 1.0, 0, base)
        replay = RandomTape(words=base.draw_log)
        assert sample_dlap_centered(2.0, 1.0, 0, replay) == v1
