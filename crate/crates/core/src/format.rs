/// Nine significant digits in scientific notation.
pub(crate) fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}
