"""Estimating label distributions of content replicated over graphs from vertex samples."""
from .content import (Content, ContentStore, ParetoConfig, generate, generate_cds1,
                      generate_cds2, generate_cds3, generate_cds4, pareto_pmf)
from .estimators import (DistributionEstimate, MleConfig, estimate, estimate_dce,
                         estimate_mle_copycount, estimate_mle_label, estimate_sce,
                         estimate_vertex_wce, estimate_wce, mle_pij)
from .graph import Graph, largest_connected_component, load_edge_list, reachable_count
from .harness import ExperimentConfig, NmseReport, compare_estimators, run_experiment
from .samplers import (SampleTrace, SamplerConfig, sample, sample_fs, sample_mhrw, sample_rw,
                       sample_uni)

__version__ = "0.1.0"
