"""Sparsest-cut toolkit: relaxations, certified rounding, spectral s-t cuts,
gap-amplification mixing, and desk-scale exhaustive oracles."""

from .errors import (InstanceFormatError, PropertyViolationError, SolverError,
                     SparseCutError, ValidationError)
from .graphs import (Cut, InstancePair, Rank1Measure, SparsityReport, WeightedGraph,
                     brute_force_opt, cheeger_constant, conductance, cut_weight,
                     format_instance, laplacian, parse_instance, rank1_decompose,
                     sparsity)
from .instances import (GeneratorSpec, MixParams, gen_expander_clique, gen_lollipop,
                        gen_random, mix_instance, sdp_gap_mix, unmix_cut_check)
from .relaxations import (RelaxationValue, SemiMetric, VectorEmbedding,
                          solve_goemans_linial, solve_leighton_rao, solve_spectral,
                          verify_solution)
from .rounding import (DichotomyOutcome, L1Embedding, RoundingCertificate,
                       cauchy_schwarz_round, dichotomy_case, frechet_round, l1_round,
                       l2_to_l1_embed, round_rank1, round_rank1_via_approx, sweep_cut)
from .stcut import (Flow, Potentials, STCertificate, electrical_potentials,
                    extract_flow, st_certificate, st_sweep)

__version__ = "0.1.0"
