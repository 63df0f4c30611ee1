//! Compressing `2^n` threshold units into `n` rectifier units.

mod audit;
mod encoding;
mod factor;
mod infnorm;
pub mod simplex;

pub use audit::{hidden_layer_predict, margin_audit, AuditOptions, MarginAudit, MarginRecord, Prediction};
pub use encoding::{encoding_matrix, EncodingMatrix, MAX_ENCODING_BITS};
pub use factor::{exact_factorize, expand, expand_compressed, log2_exact, UMatrix, VMatrix, EXACT_FACTOR_TOLERANCE};
pub use infnorm::{
    induced_inf_norm_transposed, min_infnorm_factor, min_infnorm_factor_on, residual_norm, InfNormFit, LP_GAP_TOLERANCE,
    MAX_LP_BITS,
};
