//! Plain-text count files.
//!
//! One record per line: `<labels> <trials> <successes>`, where `<labels>` is
//! a comma-separated button list or `()` for the empty sequence. Everything
//! after `#` is a comment, except the two header directives
//!
//! ```text
//! # buttons: Rx,dt
//! # source: simulated
//! ```
//!
//! When no `buttons` directive is present the declared buttons are the
//! labels that occur in the records.

use crate::error::{Error, Result};
use crate::gateset::{valid_label, Sequence};
use crate::smc::Datum;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataSet {
    pub records: Vec<Datum>,
    pub buttons: Vec<String>,
    pub source: String,
}

impl DataSet {
    /// Builds a dataset declaring exactly the buttons its records use.
    pub fn from_records(records: Vec<Datum>, source: impl Into<String>) -> Self {
        let buttons: BTreeSet<String> = records.iter().flat_map(|d| d.sequence.labels().iter().cloned()).collect();
        Self {
            records,
            buttons: buttons.into_iter().collect(),
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let declared: BTreeSet<&str> = self.buttons.iter().map(String::as_str).collect();
        if let Some(bad) = self.buttons.iter().find(|b| !valid_label(b)) {
            return Err(Error::Config(format!("bad button declaration `{bad}`")));
        }
        for d in &self.records {
            d.validate()?;
            if let Some(l) = d.sequence.labels().iter().find(|l| !declared.contains(l.as_str())) {
                return Err(Error::UnknownButton(l.clone()));
            }
        }
        Ok(())
    }
}

fn parse_error(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Parses dataset text; `origin` names the source in errors.
pub fn parse_dataset(text: &str, origin: &str) -> Result<DataSet> {
    let mut records = Vec::new();
    let mut buttons: Option<Vec<String>> = None;
    let mut source = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b, Some(c.trim())),
            None => (raw, None),
        };
        if let Some(c) = comment.filter(|_| body.trim().is_empty()) {
            if let Some(list) = c.strip_prefix("buttons:") {
                let list: Vec<String> = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                if let Some(bad) = list.iter().find(|l| !valid_label(l)) {
                    return Err(parse_error(origin, line_no, format!("bad button declaration `{bad}`")));
                }
                buttons = Some(list);
            } else if let Some(tag) = c.strip_prefix("source:") {
                source = tag.trim().to_string();
            }
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(parse_error(
                origin,
                line_no,
                format!("expected `<sequence> <trials> <successes>`, found {} fields", fields.len()),
            ));
        }
        let sequence: Sequence = fields[0]
            .parse()
            .map_err(|e: Error| parse_error(origin, line_no, e.to_string()))?;
        let count = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|_| parse_error(origin, line_no, format!("{what} `{s}` is not a nonnegative integer")))
        };
        let trials = count(fields[1], "trials")?;
        let successes = count(fields[2], "successes")?;
        let datum = Datum::new(sequence, trials, successes).map_err(|e| parse_error(origin, line_no, e.to_string()))?;
        if let Some(b) = &buttons {
            if let Some(l) = datum.sequence.labels().iter().find(|l| !b.contains(l)) {
                return Err(parse_error(origin, line_no, format!("undeclared button `{l}`")));
            }
        }
        records.push(datum);
    }
    Ok(match buttons {
        Some(buttons) => DataSet {
            records,
            buttons,
            source,
        },
        None => DataSet::from_records(records, source),
    })
}

pub fn ingest_dataset(path: &Path) -> Result<DataSet> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text, &path.display().to_string())
}

/// Text form accepted back by [`parse_dataset`].
pub fn format_dataset(data: &DataSet) -> String {
    let mut out = String::new();
    writeln!(out, "# buttons: {}", data.buttons.join(",")).unwrap();
    if !data.source.is_empty() {
        writeln!(out, "# source: {}", data.source).unwrap();
    }
    for d in &data.records {
        writeln!(out, "{} {} {}", d.sequence, d.trials, d.successes).unwrap();
    }
    out
}

pub fn write_dataset(path: &Path, data: &DataSet) -> Result<()> {
    data.validate()?;
    std::fs::write(path, format_dataset(data))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_input_is_an_empty_dataset() {
        let d = parse_dataset("", "x").unwrap();
        assert!(d.is_empty() && d.buttons.is_empty());
        assert!(parse_dataset("# only a comment\n\n   \n", "x").unwrap().is_empty());
    }

    #[test]
    fn parses_records_and_directives() {
        let text = "# buttons: Rx,dt\n# source: lab A\n() 100 97\nRx,dt,dt,Rx 500 12  # trailing note\n";
        let d = parse_dataset(text, "x").unwrap();
        assert_eq!(d.buttons, vec!["Rx", "dt"]);
        assert_eq!(d.source, "lab A");
        assert_eq!(d.records[0], Datum::new(Sequence::empty(), 100, 97).unwrap());
        assert_eq!(d.records[1].sequence, Sequence::new(["Rx", "dt", "dt", "Rx"]));
        d.validate().unwrap();
    }

    #[test]
    fn errors_cite_the_line() {
        let cases = [
            ("() 10 3\nRx 10\n", 2, "fields"),
            ("() 10 3\n\n# c\nRx 10 11\n", 4, "successes"),
            ("Rx 10 -1\n", 1, "successes"),
            ("Rx 0 0\n", 1, "zero trials"),
            ("# buttons: Rx\nRx 10 1\ndt 10 1\n", 3, "undeclared"),
            ("Rx,,dt 10 1\n", 1, "label"),
        ];
        for (text, line, needle) in cases {
            match parse_dataset(text, "data.txt") {
                Err(Error::Parse { path, line: l, message }) => {
                    assert_eq!((path.as_str(), l), ("data.txt", line), "{text:?}");
                    assert!(message.contains(needle), "{message}");
                }
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.txt");
        let d = DataSet::from_records(
            vec![
                Datum::new(Sequence::empty(), 5, 5).unwrap(),
                Datum::new(Sequence::new(["Gx", "Gy"]), 7, 0).unwrap(),
            ],
            "unit",
        );
        write_dataset(&path, &d).unwrap();
        assert_eq!(ingest_dataset(&path).unwrap(), d);
    }

    fn arb_dataset() -> impl Strategy<Value = DataSet> {
        let label = prop::sample::select(vec!["Gx", "Gy", "Gi", "dt", "Rx"]);
        let datum = (prop::collection::vec(label, 0..6), 1u64..10_000, 0.0f64..=1.0).prop_map(|(ls, n, f)| {
            Datum::new(Sequence::new(ls), n, (f * n as f64).floor() as u64).unwrap()
        });
        (prop::collection::vec(datum, 0..30), "[a-z ]{0,12}")
            .prop_map(|(r, s)| DataSet::from_records(r, s.trim().to_string()))
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(d in arb_dataset()) {
            prop_assert_eq!(parse_dataset(&format_dataset(&d), "p").unwrap(), d);
        }
    }
}
