use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHECK_HEADER: &str = "name,parameters,statistic,pass";

/// One line of `checks.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    /// `key=value` pairs joined by `;`.
    pub parameters: String,
    pub statistic: f64,
    pub pass: bool,
}

impl CheckSummary {
    pub fn new(name: &str, parameters: &[(&str, String)], statistic: f64, pass: bool) -> Self {
        let parameters = parameters.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
        Self { name: name.to_owned(), parameters, statistic, pass }
    }

    /// Single CSV line, no header, no trailing newline.
    pub fn to_csv_line(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.serialize(self).expect("in-memory write");
        let bytes = w.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("utf8").trim_end().to_owned()
    }
}

pub fn write_checks_csv<W: Write>(checks: &[CheckSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in checks {
        w.serialize(c).map_err(|e| Error::Input(e.to_string()))?;
    }
    if checks.is_empty() {
        w.write_record(CHECK_HEADER.split(',')).map_err(|e| Error::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))
}

pub fn read_checks_csv<R: Read>(input: R) -> Result<Vec<CheckSummary>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| Error::Input(e.to_string()))?.iter().collect::<Vec<_>>().join(",");
    if header != CHECK_HEADER {
        return Err(Error::Input(format!("unexpected header '{header}'")));
    }
    r.deserialize().map(|row| row.map_err(|e| Error::Input(e.to_string()))).collect()
}
