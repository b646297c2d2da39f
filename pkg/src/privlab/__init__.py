"""Numerical workbench for private states and key distillation.

The package builds and certifies (approximate) private states, samples
universal CSS codes over prime fields, runs one-shot and coherent key
distillation protocols, evaluates the associated rate formulas, and audits
the entropic uncertainty relations behind them.
"""

__version__ = "0.1.0"

from .tensor_core import (DensityOperator, HilbertSpace, InvariantViolation,
                          LinearOperator, StateVector, apply_to_vector,
                          embed_operator, fidelity, partial_trace,
                          permute_vector, pure_state_trace_distance, purify,
                          sqrt_psd, tensor_product, trace_distance, trace_norm,
                          vector_marginal)
from .sampling import (haar_unitary, haar_vector, random_density_operator,
                       random_pure_state, substream)
from .qudit_ops import (ConjugateBasis, MeasurementResult, Povm,
                        TwistingOperator, build_private_state,
                        coherent_measure, generalized_paulis,
                        maximally_entangled, measure, twisting_unitary)
from .info_measures import (AuditRecord, CqEnsemble, coherent_information,
                            conditional_entropy, holevo_information,
                            mutual_information, shannon_entropy,
                            uncertainty_audit, von_neumann_entropy)
from .css_codes import (CodeSamplingError, CssCode, GfMatrix, all_strings,
                        class_members, class_projector, logical_operators,
                        sample_universal_css, string_index, syndrome,
                        universality_estimate)
from .discrimination import (HswConfig, HswDecoderResult, helstrom_pair,
                             hsw_class_decoder, pgm, pgm_error)
from .privacy import (PrivacyReport, UhlmannRecord, ccq_blocks,
                      ccq_fidelity_to_key, certify_private,
                      epsilon_secret_direct, key_error_rates,
                      star_projective_povm, twisting_conjugate_measurement,
                      uhlmann_conjugate_measurement)
from .distillation import (CssDecoders, DistillationOutcome,
                           HashingSimResult, RateBreakdown, TwoCopyResult,
                           build_css_decoders, coherent_hashing_sim,
                           distillable_rate, extend_with_copy,
                           one_shot_distill, shielded_bit_state,
                           tensor_power_grouped, two_copy_scenario)

__all__ = [name for name in dir() if not name.startswith("_")]
