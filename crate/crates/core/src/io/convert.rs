//! Converter for count files in the common GST text layout.
//!
//! The expected native format, as exported by GST toolkits for the
//! trapped-ion single-qubit experiments, is
//!
//! ```text
//! ## Columns = 0 count, 1 count
//! {}            998   2
//! Gx            512 488
//! GxGyGi        471 529
//! Gx(Gi)^4Gy    500 500
//! (Gx)^8192     503 497
//! ```
//!
//! Sequences are concatenated `G`-prefixed labels, `{}` is empty and
//! `(...)^n` repeats a group. The `0` column is the success count. Only
//! this two-outcome layout is handled; anything else is a parse error.

use super::dataset::DataSet;
use crate::error::{Error, Result};
use crate::gateset::Sequence;
use crate::smc::Datum;

fn err(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line,
        message: message.into(),
    }
}

/// Parses one GST sequence string such as `Gx(GiGy)^3`.
pub fn parse_gst_sequence(s: &str) -> std::result::Result<Sequence, String> {
    if s == "{}" {
        return Ok(Sequence::empty());
    }
    let s = s.strip_prefix("{}").unwrap_or(s);
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let seq = parse_group(&chars, &mut pos)?;
    if pos != chars.len() {
        return Err(format!("unexpected `{}` at column {}", chars[pos], pos + 1));
    }
    Ok(seq)
}

fn parse_group(c: &[char], pos: &mut usize) -> std::result::Result<Sequence, String> {
    let mut out = Sequence::empty();
    while *pos < c.len() {
        match c[*pos] {
            'G' => {
                let start = *pos;
                *pos += 1;
                while *pos < c.len() && (c[*pos].is_ascii_lowercase() || c[*pos].is_ascii_digit()) {
                    *pos += 1;
                }
                out.push(c[start..*pos].iter().collect::<String>());
            }
            '(' => {
                *pos += 1;
                let inner = parse_group(c, pos)?;
                if c.get(*pos) != Some(&')') {
                    return Err("unbalanced parenthesis".into());
                }
                *pos += 1;
                let mut reps = 1;
                if c.get(*pos) == Some(&'^') {
                    *pos += 1;
                    let start = *pos;
                    while *pos < c.len() && c[*pos].is_ascii_digit() {
                        *pos += 1;
                    }
                    reps = c[start..*pos]
                        .iter()
                        .collect::<String>()
                        .parse()
                        .map_err(|_| "missing exponent after `^`".to_string())?;
                }
                out = out.concat(&inner.power(reps));
            }
            ')' => return Ok(out),
            other => return Err(format!("unexpected `{other}` at column {}", *pos + 1)),
        }
    }
    Ok(out)
}

/// Converts GST-layout count text into a [`DataSet`].
pub fn convert_gst_counts(text: &str, origin: &str) -> Result<DataSet> {
    let mut zero_first = true;
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if let Some(cols) = line.strip_prefix("## Columns =") {
            let names: Vec<&str> = cols.split(',').map(str::trim).collect();
            zero_first = match names.as_slice() {
                ["0 count", "1 count"] => true,
                ["1 count", "0 count"] => false,
                _ => return Err(err(origin, line_no, format!("unsupported columns `{}`", cols.trim()))),
            };
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(origin, line_no, "expected `<sequence> <count> <count>`"));
        }
        let seq = parse_gst_sequence(fields[0]).map_err(|m| err(origin, line_no, m))?;
        let count = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| *x >= 0.0 && x.fract() == 0.0)
                .map(|x| x as u64)
                .ok_or_else(|| err(origin, line_no, format!("bad count `{s}`")))
        };
        let (a, b) = (count(fields[1])?, count(fields[2])?);
        let (zeros, ones) = if zero_first { (a, b) } else { (b, a) };
        let d = Datum::new(seq, zeros + ones, zeros).map_err(|e| err(origin, line_no, e.to_string()))?;
        records.push(d);
    }
    Ok(DataSet::from_records(records, format!("converted from {origin}")))
}

/// GST spelling of a sequence; a whole-sequence repetition is folded as `(g)^n`.
pub fn format_gst_sequence(s: &Sequence) -> String {
    let labels = s.labels();
    let n = labels.len();
    if n == 0 {
        return "{}".into();
    }
    let period = (1..n)
        .filter(|p| n % p == 0)
        .find(|&p| labels.chunks(p).all(|c| c == &labels[..p]));
    match period {
        Some(p) => format!("({})^{}", labels[..p].concat(), n / p),
        None => labels.concat(),
    }
}

/// Inverse of [`convert_gst_counts`], for writing fixtures.
pub fn format_gst_counts(data: &DataSet) -> String {
    let mut out = String::from("## Columns = 0 count, 1 count\n");
    for d in &data.records {
        out.push_str(&format!(
            "{} {} {}\n",
            format_gst_sequence(&d.sequence),
            d.successes,
            d.trials - d.successes
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_grammar() {
        assert_eq!(parse_gst_sequence("{}").unwrap(), Sequence::empty());
        assert_eq!(parse_gst_sequence("GxGyGi").unwrap(), Sequence::new(["Gx", "Gy", "Gi"]));
        assert_eq!(
            parse_gst_sequence("Gx(GiGy)^2Gx").unwrap(),
            Sequence::new(["Gx", "Gi", "Gy", "Gi", "Gy", "Gx"])
        );
        assert_eq!(parse_gst_sequence("(Gx)^8192").unwrap().len(), 8192);
        assert_eq!(parse_gst_sequence("{}Gx").unwrap(), Sequence::new(["Gx"]));
        assert!(parse_gst_sequence("Gx(Gy").is_err());
        assert!(parse_gst_sequence("Gx)^").is_err());
        assert!(parse_gst_sequence("Hx").is_err());
    }

    #[test]
    fn formatting_folds_repetitions() {
        let cases = [
            (Sequence::empty(), "{}"),
            (Sequence::new(["Gx"]), "Gx"),
            (Sequence::new(["Gx"]).power(8), "(Gx)^8"),
            (Sequence::new(["Gx", "Gy"]).power(3), "(GxGy)^3"),
            (Sequence::new(["Gx", "Gy", "Gx"]), "GxGyGx"),
        ];
        for (s, text) in cases {
            assert_eq!(format_gst_sequence(&s), text);
            assert_eq!(parse_gst_sequence(text).unwrap(), s);
        }
    }

    #[test]
    fn column_order_and_errors() {
        let d = convert_gst_counts("## Columns = 1 count, 0 count\n{} 3 7\n", "f").unwrap();
        assert_eq!(d.records[0], Datum::new(Sequence::empty(), 10, 7).unwrap());
        let e = convert_gst_counts("Gx 1 2\nGx 1\n", "f").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = convert_gst_counts("## Columns = 0 count, 1 count, 2 count\n", "f").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }
}
