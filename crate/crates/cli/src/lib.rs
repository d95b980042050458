//! Scenario registry and report types behind the `mwqc` binary.

pub mod report;
pub mod scenarios;

use mwqc_core::Complex64;

/// Parse a complex literal through the expression grammar; accepts forms
/// like `0.5`, `-0.25i`, `1+2i`, `(0.1-0.3i)`.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let expr = mwqc_core::parse(text).map_err(|e| format!("bad complex literal {text:?}: {e}"))?;
    let zero = Complex64::new(0.0, 0.0);
    match expr.terms() {
        [] => Ok(zero),
        [t] if t.pow_sum() == 0 && t.freq_z == zero && t.freq_zbar == zero => Ok(t.coeff),
        _ => Err(format!("{text:?} is not a constant")),
    }
}

/// Parse a comma-separated list of complex literals.
pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>, String> {
    text.split(',')
        .map(|piece| parse_complex(piece.trim()))
        .collect()
}
