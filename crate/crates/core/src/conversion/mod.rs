//! Constructive transformations between rectifier and threshold networks.

mod approximate;
mod boolean;
mod normal_form;
mod witness;

pub use approximate::{
    sign_surrogate, sign_unit_to_relu_pair, three_sign_factors, three_sign_to_two_relu, threshold2_to_relu,
    ThreeSignFactors, THREE_SIGN_TOLERANCE,
};
pub use boolean::{boolean_unit, check_condition2, check_condition3, BooleanUnitIndex, MAX_ENUMERATION_UNITS};
pub use normal_form::{
    dedup_units, pure_conjunction, pure_disjunction, relu_to_threshold, relu_to_threshold_cnf, relu_to_threshold_dnf,
    ConversionOptions, ConversionReport, NormalForm, DEFAULT_MAX_FIRST_LAYER_UNITS, HARD_MAX_EXPONENT,
};
pub use witness::{
    make_lemma4_network, make_theorem2_disjunction, make_theorem2_network, make_theorem2_witness, theorem2_subset_unit,
};
