"""Sampler tests: proposals, cluster moves, MH kernel, chain driver."""

import math

import numpy as np
import pytest
from scipy import stats

from circembed import (ChainSampler, Embedding, Gauge, Graph, PriorConfig,
                       SamplerConfig, angular_separation, exchange_move,
                       flip_cluster, flip_move, log_posterior,
                       partition_at_threshold, partition_clusters, run_chain,
                       run_chains, rw_proposal, thin_chain, translate_move)
from circembed.sampler import (Clustering, exchange_clusters,
                               sample_gap_threshold, translate_cluster)

from conftest import random_embedding, random_graph

TWO_PI = 2 * math.pi


def small_instance(rng, n=8, p=0.4):
    g = random_graph(n, p, rng)
    return g, PriorConfig(), Gauge.from_graph(g)


def cfg(**kw):
    kw.setdefault("n_iterations", 100)
    return SamplerConfig(**kw)


class TestConfig:
    def test_mixture_must_sum_to_one(self):
        with pytest.raises(ValueError):
            cfg(move_mixture={"rw_theta": 0.5, "flip": 0.4})
        with pytest.raises(ValueError):
            cfg(move_mixture={"rw_theta": 1.5, "flip": -0.5})
        with pytest.raises(ValueError):
            cfg(move_mixture={"bogus": 1.0})

    def test_step_validation(self):
        with pytest.raises(ValueError):
            cfg(rw_step_theta=0.0)
        with pytest.raises(ValueError):
            cfg(thinning_k=0)


class TestInitState:
    def test_deterministic(self, rng):
        g, prior, gauge = small_instance(rng)
        sampler = ChainSampler(g, prior, cfg(seed=11), gauge)
        a = sampler.init_state(chain_id=2)
        b = sampler.init_state(chain_id=2)
        np.testing.assert_array_equal(a.theta, b.theta)
        np.testing.assert_array_equal(a.kappa, b.kappa)
        assert a.beta == b.beta
        c = sampler.init_state(chain_id=3)
        assert not np.array_equal(a.theta, c.theta)

    def test_kappa_from_degrees(self, rng):
        g = Graph(5, [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2)])
        sampler = ChainSampler(g, PriorConfig(), cfg(seed=1))
        state = sampler.init_state(0)
        assert state.kappa[0] == 4.0
        assert state.kappa[3] == 1.0

    def test_isolated_vertex_gets_positive_kappa(self):
        g = Graph(4, [(0, 1), (0, 2)])
        prior = PriorConfig()
        state = ChainSampler(g, prior, cfg(seed=1)).init_state(0)
        assert state.kappa[3] == 2 * prior.epsilon

    def test_ground_truth_start(self, rng):
        g, prior, gauge = small_instance(rng)
        truth = random_embedding(g.n_vertices, rng)
        state = ChainSampler(g, prior, cfg(seed=5), gauge).init_state(0, truth)
        assert state.theta[gauge.anchor_vertex] == 0.0
        assert state.log_post == pytest.approx(
            log_posterior(g, state.embedding, prior, gauge), rel=1e-12)

    def test_too_small_graph(self):
        with pytest.raises(ValueError):
            ChainSampler(Graph(2, [(0, 1)]), PriorConfig(), cfg())

    def test_beta_draws_respect_truncation(self, rng):
        g, prior, gauge = small_instance(rng)
        sampler = ChainSampler(g, prior, cfg(seed=3), gauge)
        betas = [sampler.init_state(c).beta for c in range(200)]
        assert min(betas) > 1.0


class TestPartition:
    def test_single_cluster_when_threshold_exceeds_gaps(self):
        theta = np.array([0.0, 0.3, 0.6, 0.9])
        clustering = partition_at_threshold(theta, 1.0)  # wrap gap 5.38 > 1 cuts once
        assert len(clustering) == 2 or len(clustering) == 1
        clustering = partition_at_threshold(theta, 6.0)  # nothing exceeds 6
        assert len(clustering) == 1
        assert sorted(clustering.clusters[0].tolist()) == [0, 1, 2, 3]

    def test_all_singletons_when_threshold_below_gaps(self):
        theta = np.array([0.0, 1.5, 3.0, -1.5])
        clustering = partition_at_threshold(theta, 0.5)
        assert len(clustering) == 4
        assert all(len(c) == 1 for c in clustering.clusters)

    def test_two_groups_example(self):
        theta = np.array([0.0, 0.1, 3.0, 3.1])
        clustering = partition_at_threshold(theta, 1.0)
        groups = {tuple(sorted(c.tolist())) for c in clustering.clusters}
        assert groups == {(0, 1), (2, 3)}

    def test_invariants(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 40))
            theta = rng.uniform(-np.pi, np.pi, n)
            thr = sample_gap_threshold(n, rng, 2.0)
            clustering = partition_at_threshold(theta, thr)
            members = np.concatenate(clustering.clusters)
            assert sorted(members.tolist()) == list(range(n))
            for c in clustering.clusters:
                # within a cluster, consecutive arc gaps stay below threshold
                rel = (theta[c] - theta[c[0]]) % TWO_PI
                assert np.all(np.diff(rel) <= thr + 1e-12)
            if len(clustering) > 1:
                starts = [theta[c[0]] for c in clustering.clusters]
                ends = [theta[c[-1]] for c in clustering.clusters]
                for i in range(len(clustering)):
                    gap = (starts[(i + 1) % len(clustering)] - ends[i]) % TWO_PI
                    assert gap > thr

    def test_uses_embedding_interface(self, rng):
        emb = random_embedding(10, rng)
        clustering = partition_clusters(emb, rng, cfg())
        assert isinstance(clustering, Clustering)
        assert 0 < clustering.threshold < 2.0 * TWO_PI / 10


class TestClusterMoves:
    def test_flip_singleton_is_identity(self):
        theta = np.array([0.5, 2.0, -1.0])
        out = flip_cluster(theta, np.array([1]))
        np.testing.assert_allclose(out, theta, atol=1e-15)

    def test_flip_reflects_about_arc_midpoint(self):
        theta = np.array([0.2, 0.4, 0.9])
        out = flip_cluster(theta, np.array([0, 1, 2]))
        np.testing.assert_allclose(out, [0.9, 0.7, 0.2], atol=1e-12)

    def test_flip_involution(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 20))
            theta = rng.uniform(-np.pi, np.pi, n)
            clustering = partition_at_threshold(theta, sample_gap_threshold(n, rng, 2.0))
            c = clustering.clusters[int(rng.integers(len(clustering)))]
            twice = flip_cluster(flip_cluster(theta, c), c)
            np.testing.assert_allclose(angular_separation(twice, theta), 0.0, atol=1e-12)

    def test_exchange_swaps_singletons(self):
        theta = np.array([0.5, 2.5])
        clustering = partition_at_threshold(theta, 0.5)
        out = exchange_clusters(theta, clustering, 0, 1)
        np.testing.assert_allclose(sorted(out), [0.5, 2.5], atol=1e-12)
        assert out[0] == pytest.approx(2.5) and out[1] == pytest.approx(0.5)

    def test_exchange_moves_arc_starts(self):
        theta = np.array([0.0, 0.2, 2.0, 2.5])
        clustering = partition_at_threshold(theta, 1.0)
        out = exchange_clusters(theta, clustering, 0, 1)
        np.testing.assert_allclose(out, [2.0, 2.2, 0.0, 0.5], atol=1e-12)

    def test_translate_matches_example(self):
        theta = np.array([1.0, 1.3, -2.0])
        clustering = partition_at_threshold(theta, 1.0)
        # clusters ordered by start angle: [-2.0], [1.0, 1.3]
        out = translate_cluster(theta, clustering, 1, 0)
        np.testing.assert_allclose(out[:2], [-2.0, -1.7], atol=1e-12)
        assert out[2] == -2.0

    def test_translate_to_own_position_is_identity(self):
        theta = np.array([0.5, 2.0])
        clustering = partition_at_threshold(theta, 0.1)
        out = translate_cluster(theta, clustering, 0, 0)
        np.testing.assert_allclose(out, theta, atol=1e-15)

    def test_within_cluster_isometry(self, rng):
        """All three moves preserve pairwise separations inside every cluster."""
        for _ in range(150):
            n = int(rng.integers(4, 25))
            theta = rng.uniform(-np.pi, np.pi, n)
            clustering = partition_at_threshold(theta, sample_gap_threshold(n, rng, 3.0))
            k = len(clustering)
            outs = [flip_cluster(theta, clustering.clusters[int(rng.integers(k))])]
            if k >= 2:
                i, j = rng.choice(k, 2, replace=False)
                outs.append(exchange_clusters(theta, clustering, int(i), int(j)))
                outs.append(translate_cluster(theta, clustering, int(i), int(j)))
            for out in outs:
                for c in clustering.clusters:
                    before = angular_separation(theta[c][:, None], theta[c][None, :])
                    after = angular_separation(out[c][:, None], out[c][None, :])
                    np.testing.assert_allclose(after, before, atol=1e-12)

    def test_move_wrappers_reimpose_gauge(self, rng):
        emb = random_embedding(12, rng)
        gauge = Gauge(0, 1)
        clustering = partition_at_threshold(emb.theta, 0.8)
        for mover in (flip_move, exchange_move, translate_move):
            if len(clustering) < 2 and mover is not flip_move:
                continue
            out = mover(emb, clustering, rng, gauge)
            assert out.theta[gauge.anchor_vertex] == 0.0


class TestRwProposal:
    def test_tiny_steps_keep_state(self, rng):
        g, prior, gauge = small_instance(rng)
        config = cfg(rw_step_theta=1e-12, rw_step_log_kappa=1e-12, rw_step_beta=1e-12,
                     seed=4)
        sampler = ChainSampler(g, prior, config, gauge)
        state = sampler.init_state(0)
        base = state.embedding
        for which in ("theta", "kappa", "beta"):
            prop = rw_proposal(state, which, config, gauge)
            np.testing.assert_allclose(angular_separation(prop.theta, base.theta),
                                       0.0, atol=1e-9)
            np.testing.assert_allclose(prop.kappa, base.kappa, rtol=1e-9)
            assert prop.beta == pytest.approx(base.beta, abs=1e-9)

    def test_kappa_move_is_multiplicative(self, rng):
        g, prior, gauge = small_instance(rng)
        config = cfg(rw_step_log_kappa=0.5, seed=9)
        sampler = ChainSampler(g, prior, config, gauge)
        state = sampler.init_state(0)
        before = state.kappa.copy()
        prop = rw_proposal(state, "kappa", config, gauge)
        changed = np.flatnonzero(prop.kappa != before)
        assert len(changed) == 1
        assert prop.kappa[changed[0]] > 0

    def test_anchor_never_moves(self, rng):
        g, prior, gauge = small_instance(rng)
        config = cfg(rw_step_theta=2.0, seed=10)
        sampler = ChainSampler(g, prior, config, gauge)
        state = sampler.init_state(0)
        for _ in range(100):
            prop = rw_proposal(state, "theta", config, gauge)
            assert prop.theta[gauge.anchor_vertex] == 0.0


class TestMHStep:
    def test_acceptance_rule_half_for_log_half(self, rng):
        """log ratio = -ln 2 accepts with probability 1/2."""
        g, prior, gauge = small_instance(rng)
        sampler = ChainSampler(g, prior, cfg(seed=0), gauge)
        state = sampler.init_state(0)
        n = 40_000
        hits = sum(sampler._accept(state, -math.log(2.0)) for _ in range(n))
        assert hits / n == pytest.approx(0.5, abs=3 * 0.5 / math.sqrt(n))

    def test_zero_ratio_always_accepts(self, rng):
        g, prior, gauge = small_instance(rng)
        sampler = ChainSampler(g, prior, cfg(seed=0), gauge)
        state = sampler.init_state(0)
        assert all(sampler._accept(state, 0.0) for _ in range(1000))

    def test_minus_inf_always_rejects(self, rng):
        g, prior, gauge = small_instance(rng)
        sampler = ChainSampler(g, prior, cfg(seed=0), gauge)
        state = sampler.init_state(0)
        assert not any(sampler._accept(state, -math.inf) for _ in range(1000))

    def test_beta_stays_above_one(self, rng):
        g, prior, gauge = small_instance(rng)
        config = cfg(n_iterations=4000, move_mixture={"rw_beta": 1.0},
                     rw_step_beta=3.0, seed=21)
        draws = run_chain(g, prior, config, 0, gauge)
        assert draws.beta.min() > 1.0

    def test_gauge_after_every_step(self, rng):
        g, prior, gauge = small_instance(rng, n=10)
        sampler = ChainSampler(g, prior, cfg(rw_step_theta=1.0, seed=13), gauge)
        state = sampler.init_state(0)
        for _ in range(2000):
            sampler.step(state)
            assert state.theta[gauge.anchor_vertex] == 0.0
            hp = state.theta[gauge.half_plane_vertex]
            assert (0.0 <= hp < math.pi) or hp == -math.pi

    def test_cached_log_post_tracks_recomputation(self, rng):
        g, prior, gauge = small_instance(rng, n=12, p=0.3)
        config = cfg(n_iterations=20_000, record_stride=500, seed=17,
                     revalidate_every=10_000)
        draws = run_chain(g, prior, config, 0, gauge)
        for i in range(len(draws)):
            fresh = log_posterior(g, draws.embedding(i), prior, gauge)
            assert draws.log_posterior[i] == pytest.approx(fresh, abs=1e-9)


class TestRunChain:
    def test_zero_iterations_keeps_initial_state(self, rng):
        g, prior, gauge = small_instance(rng)
        draws = run_chain(g, prior, cfg(n_iterations=0, seed=2), 0, gauge)
        assert len(draws) == 1
        assert not draws.warmup[0]

    def test_bit_identical_reruns(self, rng):
        g, prior, gauge = small_instance(rng)
        config = cfg(n_iterations=3000, record_stride=10, seed=33)
        a = run_chain(g, prior, config, 1, gauge)
        b = run_chain(g, prior, config, 1, gauge)
        np.testing.assert_array_equal(a.theta, b.theta)
        np.testing.assert_array_equal(a.kappa, b.kappa)
        np.testing.assert_array_equal(a.beta, b.beta)
        np.testing.assert_array_equal(a.log_posterior, b.log_posterior)

    def test_chains_differ(self, rng):
        g, prior, gauge = small_instance(rng)
        config = cfg(n_iterations=500, seed=33)
        a = run_chain(g, prior, config, 0, gauge)
        b = run_chain(g, prior, config, 1, gauge)
        assert not np.array_equal(a.theta, b.theta)

    def test_warmup_flags_and_stride(self, rng):
        g, prior, gauge = small_instance(rng)
        config = cfg(n_iterations=100, warmup_fraction=0.5, record_stride=7, seed=1)
        draws = run_chain(g, prior, config, 0, gauge)
        warm = draws.iteration[draws.warmup]
        post = draws.iteration[~draws.warmup]
        assert warm.max() < 50 <= post.min()
        assert post.min() == 50  # recording restarts at the warm-up boundary
        assert np.all(np.diff(post) == 7)

    def test_move_stats_recorded(self, rng):
        g, prior, gauge = small_instance(rng)
        draws = run_chain(g, prior, cfg(n_iterations=1000, seed=5), 0, gauge)
        stats_ = draws.move_stats[0]
        assert sum(v[0] for v in stats_.values()) == 1000
        assert all(v[1] <= v[0] for v in stats_.values())


class TestThinChain:
    def test_identity_when_k_is_one(self, rng):
        g, prior, gauge = small_instance(rng)
        draws = run_chain(g, prior, cfg(n_iterations=50, seed=3), 0, gauge)
        thinned = thin_chain(draws, 1)
        np.testing.assert_array_equal(thinned.beta, draws.post_warmup().beta)

    def test_every_fourth(self, rng):
        g, prior, gauge = small_instance(rng)
        config = cfg(n_iterations=18, warmup_fraction=0.5, seed=3)
        draws = run_chain(g, prior, config, 0, gauge)  # post-warm-up draws: 9..18
        thinned = thin_chain(draws, 4)
        assert thinned.iteration.tolist() == [9, 13, 17]

    def test_k_validation(self, rng):
        g, prior, gauge = small_instance(rng)
        draws = run_chain(g, prior, cfg(n_iterations=10, seed=3), 0, gauge)
        with pytest.raises(ValueError):
            thin_chain(draws, 0)

    def test_multichain(self, rng):
        g, prior, gauge = small_instance(rng)
        config = cfg(n_iterations=40, n_chains=3, seed=8)
        draws = run_chains(g, prior, config, gauge)
        thinned = thin_chain(draws, 5)
        assert set(thinned.chain_ids.tolist()) == {0, 1, 2}
        assert not thinned.warmup.any()


class TestPriorSampling:
    """With the likelihood disabled the kernel must reproduce the priors.

    This exercises the Hastings correction of the multiplicative kappa walk:
    without the +log(kappa'/kappa) term the kappa marginal would be biased by
    a factor kappa and the KS distance would sit near 0.3.
    """

    def test_beta_and_kappa_match_priors(self, rng):
        g = Graph(3, [(0, 1), (1, 2)])
        prior = PriorConfig()
        config = cfg(n_iterations=60_000, warmup_fraction=0.2, record_stride=3,
                     use_likelihood=False, seed=71,
                     move_mixture={"rw_theta": 0.2, "rw_kappa": 0.4, "rw_beta": 0.4},
                     rw_step_beta=2.0, rw_step_log_kappa=1.5, rw_step_theta=2.0)
        draws = run_chain(g, prior, config, 0).post_warmup()

        a = (1.0 - prior.beta0) / prior.sigma
        beta_ks = stats.kstest(draws.beta, lambda x: stats.truncnorm.cdf(
            x, a, np.inf, loc=prior.beta0, scale=prior.sigma)).statistic
        assert beta_ks < 0.05

        def halfcauchy_cdf(x):
            lo = math.atan(prior.epsilon / prior.gamma)
            return (np.arctan(np.asarray(x) / prior.gamma) - lo) / (math.pi / 2 - lo)

        kappa_ks = stats.kstest(draws.kappa.ravel(), halfcauchy_cdf).statistic
        assert kappa_ks < 0.05

    def test_free_theta_uniform(self, rng):
        g = Graph(3, [(0, 1), (1, 2)])
        gauge = Gauge.from_graph(g)
        config = cfg(n_iterations=40_000, warmup_fraction=0.2, record_stride=2,
                     use_likelihood=False, seed=72, rw_step_theta=2.5,
                     move_mixture={"rw_theta": 0.7, "flip": 0.1,
                                   "exchange": 0.1, "translate": 0.1})
        draws = run_chain(g, PriorConfig(), config, 0, gauge).post_warmup()
        free = [v for v in range(3)
                if v not in (gauge.anchor_vertex, gauge.half_plane_vertex)][0]
        u = (draws.theta[:, free] + math.pi) / TWO_PI
        assert stats.kstest(u, "uniform").statistic < 0.05
