//! Nondeterministically testable parameters.
//!
//! A witness parameter assigns a value to every refinement of a 2-colored
//! graph into `2 k_sub` colors; the induced graph parameter is the maximum
//! of the witness value over all refinements. This module evaluates such
//! maxima exactly or by local search, estimates them from samples, splits
//! colored step kernels so that refined kernels stay close whenever the
//! coarse ones are ([`coloring_lemma`]), transports a good coloring of a
//! sampled subgraph back onto the host graph ([`coloring_transfer`]), and
//! supplies the supporting machinery: linear pattern density vectors, edit
//! distance to a property, and existential-universal first-order checks.

mod editdist;
mod eval;
mod fo;
mod lemma;
mod linear;
mod transfer;
mod witness;

pub use editdist::{edit_distance_to_property, triangle_free, EditMode, EditResult, EditTesterReport};
pub use eval::{nd_eval, tester, EvalMode, NDEvaluation, TesterReport};
pub use fo::{fo_property_check, table_bits, FOCheckMode, FOFormula, FOMatrix, FOReport, PredicateTable};
pub use lemma::{coloring_lemma, step_p_distance, ColoringLemmaOutcome};
pub use linear::{
    canonical_pattern, enumerate_linear_patterns, linear_count_check, linear_density_vector,
    LinearCountReport, LinearDensityVector,
};
pub use transfer::{
    coloring_transfer, CertKind, StageCert, TransferOptions, TransferReport,
};
pub use witness::{
    witness_by_name, BichromaticDensityWitness, MaxCutWitness, NDParameter, TensorProximityWitness,
    Witness,
};
