//! Built-in IEEE test cases in MATPOWER format.

use crate::network::{parse_case, NetworkCase, NetworkError};

pub const IEEE14: &str = include_str!("../data/ieee14.m");
pub const IEEE30: &str = include_str!("../data/ieee30.m");
pub const IEEE118: &str = include_str!("../data/ieee118.m");

pub const NAMES: [&str; 3] = ["ieee14", "ieee30", "ieee118"];

pub fn source(name: &str) -> Option<&'static str> {
    match name.to_ascii_lowercase().as_str() {
        "ieee14" | "case14" => Some(IEEE14),
        "ieee30" | "case30" | "case_ieee30" => Some(IEEE30),
        "ieee118" | "case118" => Some(IEEE118),
        _ => None,
    }
}

pub fn load(name: &str) -> Option<Result<NetworkCase, NetworkError>> {
    source(name).map(parse_case)
}

pub fn ieee14() -> NetworkCase {
    parse_case(IEEE14).expect("bundled case parses")
}

pub fn ieee30() -> NetworkCase {
    parse_case(IEEE30).expect("bundled case parses")
}

pub fn ieee118() -> NetworkCase {
    parse_case(IEEE118).expect("bundled case parses")
}
