//! Test problems with known solutions, and their JSON documents.

mod document;
mod lasso;
mod planted;
mod scalar;
mod tv;

pub use document::{FormulationDoc, LinearDoc, ProblemDocument, SetValuedDoc, SingleValuedDoc, ViewDoc};
pub use lasso::{make_lasso, LassoProblem};
pub use planted::{make_skew_lipschitz, planted_composite, planted_primal_dual, skew_matrix, PlantedPdOptions};
pub use scalar::{make_scalar_inclusion, scalar_zero, ScalarSpec, GRID_STEP};
pub use tv::{make_tv, phantom, tv_reference, TvProblem};

use crate::error::{Error, Result};

/// Names accepted by [`generate`].
pub const GENERATORS: [&str; 6] = [
    "scalar",
    "lasso",
    "tv",
    "planted_composite",
    "planted_primal_dual",
    "planted_douglas_rachford",
];

/// Builds a named problem with default sizes from `seed`.
pub fn generate(name: &str, seed: u64) -> Result<ProblemDocument> {
    match name {
        "scalar" => make_scalar_inclusion(&ScalarSpec::example()),
        "lasso" => Ok(make_lasso(seed, 20, 50, 0.1)?.document()),
        "tv" => Ok(make_tv(32, 32, 0.1, seed)?.document()),
        "planted_composite" => planted_composite(seed, 8, 0.5, 1.0),
        "planted_primal_dual" => planted_primal_dual(seed, &PlantedPdOptions::default()),
        "planted_douglas_rachford" => planted_primal_dual(
            seed,
            &PlantedPdOptions {
                primal_dim: 6,
                dual_dim: 6,
                identity_coupling: true,
                ..PlantedPdOptions::default()
            },
        ),
        other => Err(Error::Document(format!(
            "unknown generator `{other}` (available: {})",
            GENERATORS.join(", ")
        ))),
    }
}
