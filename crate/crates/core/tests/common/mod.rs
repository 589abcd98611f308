#[allow(dead_code)]
pub mod numeric_checks;
