//! Deterministic text output: float formatting and tiny CSV helpers.
//!
//! Every CSV the binary writes uses 17-significant-digit scientific notation
//! so that identical configs give byte-identical files and all floats
//! round-trip losslessly.

/// Format with 17 significant digits; round-trips any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{:.16e}", x)
    }
}

/// One CSV row from already-formatted fields.
pub fn csv_row(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

/// A growing CSV document with a fixed header.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        Csv { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&csv_row(fields));
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Shorthand for building a field list out of mixed display values.
#[macro_export]
macro_rules! csv_fields {
    ($($v:expr),* $(,)?) => {
        vec![$($v.to_string()),*]
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_round_trips() {
        for x in [
            0.0,
            -0.0,
            1.0,
            std::f64::consts::PI,
            1e-308,
            -2.2250738585072014e-308,
            6.02214076e23,
            f64::MAX,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_shape() {
        let mut csv = Csv::new("a,b");
        csv.row(&["1".into(), fmt_f64(0.5)]);
        let text = csv.finish();
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n'));
    }
}
