//! Differential testing of the Solidity compiler across optimizer
//! configurations, with reverse-optimization rewrites of the inputs.

pub mod campaign;
pub mod compile;
pub mod corpus;
pub mod execute;
pub mod mutate;
pub mod oracle;
pub mod syntax;

/// Serializes through `serde_json::Value`, whose maps keep keys sorted,
/// with two-space indentation and a trailing newline.
pub fn canonical_json<T: serde::Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value prints");
    s.push('\n');
    s
}
