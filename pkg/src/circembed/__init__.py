"""Bayesian sampling and analysis of circular (S1) hyperbolic graph embeddings.

The package samples the posterior over vertex angles, hidden-degree
parameters, and the inverse temperature of the S1 latent-space model with a
Metropolis-Hastings kernel that mixes coordinate random walks with rigid
cluster transformations (flip / exchange / translate), then analyzes draw
ensembles: convergence diagnostics, posterior-predictive graph properties,
greedy routing, hierarchy, and link prediction.
"""

from ._kernels import BACKEND
from .analysis import (HyperbolicCoords, LinkPredictionResult, PredictiveSummary,
                       avg_shortest_path, density, global_hierarchy_level,
                       greedy_routing_success, highest_density_interval,
                       hyperbolic_distance, link_prediction_experiment,
                       posterior_predictive_summary, sample_graph, to_hyperbolic,
                       transitivity)
from .diagnostics import (DiagnosticsReport, ParameterTrace, center_trace,
                          circular_mean, diagnostics_report, effective_sample_size,
                          henze_zirkler_test, normalized_autocovariance, split_rhat)
from .draws import DrawSet
from .errors import (CircembedError, DataFormatError, DegenerateTraceError,
                     GenerationError, UndefinedMeanError)
from .gauge import (AutomorphismSet, Gauge, align_embedding, canonical_gauge,
                    enumerate_automorphisms, is_automorphism)
from .io import (read_draws, read_edge_list, read_embedding, write_draws,
                 write_edge_list, write_embedding)
from .model import (Embedding, Graph, PriorConfig, angular_separation, arc_distance,
                    edge_probability, log_likelihood, log_posterior, log_prior,
                    mu_constant, wrap_angle)
from .sampler import (ChainSampler, ChainState, Clustering, SamplerConfig,
                      exchange_move, flip_cluster, flip_move, partition_at_threshold,
                      partition_clusters, run_chain, run_chains, rw_proposal,
                      thin_chain, translate_move)
from .synthetic import (GroundTruthInstance, KappaLaw, generate_instance,
                        make_bimodal_instance, sample_prior_embedding)

__version__ = "0.1.0"
