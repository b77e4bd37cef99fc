//! Output formatting shared by the command line front end and the examples.

use std::fmt::Write as _;

/// A double with 17 significant digits, so that it parses back to itself.
///
/// Magnitudes in `[1e-5, 1e15)` are written positionally, others in
/// scientific notation.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-5..1e15).contains(&a) {
        let exponent = a.log10().floor() as i32;
        let decimals = (16 - exponent).max(1) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}

/// Minimal CSV writer: a header row and rows of preformatted fields.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Self::default();
        csv.row(header.iter().map(|s| s.to_string()));
        csv
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            if f.contains([',', '"', '\n']) {
                let _ = write!(self.text, "\"{}\"", f.replace('"', "\"\""));
            } else {
                self.text.push_str(&f);
            }
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Formats a slice of numbers as CSV fields.
pub fn fields(values: &[f64]) -> impl Iterator<Item = String> + '_ {
    values.iter().map(|&v| format_f64(v))
}
