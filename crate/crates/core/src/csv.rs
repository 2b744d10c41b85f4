// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Minimal CSV field formatting shared by the exporters.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! that every value round-trips exactly; non-finite values are written as
//! `nan`, `inf` or `-inf`.

/// 17-significant-digit scientific notation.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_owned() } else { "-inf".to_owned() }
    } else {
        format!("{x:.16e}")
    }
}

/// Joins already formatted fields into one record line (no trailing newline).
pub fn record<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut line = String::new();
    for (i, f) in fields.into_iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        let f = f.as_ref();
        if f.contains([',', '"', '\n']) {
            line.push('"');
            line.push_str(&f.replace('"', "\"\""));
            line.push('"');
        } else {
            line.push_str(f);
        }
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(1.0), "1.0000000000000000e0");
        assert_eq!(float(f64::NAN), "nan");
    }

    #[test]
    fn quoting() {
        assert_eq!(record(["a", "b,c", "d\"e"]), "a,\"b,c\",\"d\"\"e\"");
    }
}
