//! Parsing of journal impact-factor tables.
//!
//! Input format: UTF-8 delimited text with a header row. The first column
//! holds the journal name; every following column must be named
//! `<prefix><year>` (default prefix `IF_`). The delimiter is one of `;`,
//! tab or `,`. Numeric cells match `-?[0-9]+([.,][0-9]+)?`; a blank cell is
//! a missing year. Decimal commas are accepted only with semicolon or tab
//! delimiters, since a comma cannot both delimit and mark decimals.
//!
//! Canonical output is the same layout with `;` delimiters and `.`
//! decimals.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// One journal with its per-year impact factors (possibly partial).
#[derive(Debug, Clone, PartialEq)]
pub struct JournalRecord {
    pub name: String,
    pub impact_factors: BTreeMap<i32, f64>,
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Malformed {
    /// Physical line number in the input (the header is line 1).
    pub line: usize,
    pub reason: String,
}

/// Bookkeeping for a parse or exclusion pass. For parses,
/// `rows_parsed + malformed.len() == rows_read` always holds (header and
/// blank lines excluded from the counts).
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_parsed: usize,
    pub excluded: Vec<String>,
    pub malformed: Vec<Malformed>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    /// Pick the first of `;`, tab, `,` present in the header.
    Auto,
    Semicolon,
    Tab,
    Comma,
}

impl Delimiter {
    fn as_char(self) -> Option<char> {
        match self {
            Delimiter::Auto => None,
            Delimiter::Semicolon => Some(';'),
            Delimiter::Tab => Some('\t'),
            Delimiter::Comma => Some(','),
        }
    }
}

/// Decimal-comma policy. `Auto` allows commas exactly when the resolved
/// delimiter is not a comma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecimalComma {
    Allowed,
    Forbidden,
    Auto,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub delimiter: Delimiter,
    pub decimal_comma: DecimalComma,
    /// Header-name pattern for year columns: `<prefix><year>`.
    pub year_prefix: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            delimiter: Delimiter::Auto,
            decimal_comma: DecimalComma::Auto,
            year_prefix: "IF_".to_string(),
        }
    }
}

/// Validates the cell grammar `-?[0-9]+([.,][0-9]+)?` and parses it.
/// Returns the reason on rejection.
fn parse_numeric_cell(cell: &str, allow_comma: bool) -> std::result::Result<f64, String> {
    let bytes = cell.as_bytes();
    let mut i = 0;
    if i < bytes.len() && bytes[i] == b'-' {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == int_start {
        return Err(format!("cell '{cell}' is not numeric"));
    }
    let mut has_comma = false;
    if i < bytes.len() {
        let sep = bytes[i];
        if sep != b'.' && sep != b',' {
            return Err(format!("cell '{cell}' is not numeric"));
        }
        has_comma = sep == b',';
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == frac_start || i != bytes.len() {
            return Err(format!("cell '{cell}' is not numeric"));
        }
    } else if i != bytes.len() {
        return Err(format!("cell '{cell}' is not numeric"));
    }
    if has_comma && !allow_comma {
        return Err(format!(
            "cell '{cell}' uses a decimal comma, which is disabled for this delimiter"
        ));
    }
    let canonical = cell.replace(',', ".");
    canonical
        .parse::<f64>()
        .map_err(|e| format!("cell '{cell}' failed to parse: {e}"))
}

/// Parses a delimited impact-factor table. Malformed rows are recorded in
/// the report with line numbers and reasons, never silently dropped.
pub fn parse_table(
    mut input: impl Read,
    options: &ParseOptions,
) -> Result<(Vec<JournalRecord>, IngestReport)> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Data(format!("failed to read input: {e}")))?;
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::Data(format!("input is not valid UTF-8: {e}")))?;
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));

    let header = loop {
        match lines.next() {
            Some(l) if l.trim().is_empty() => continue,
            Some(l) => break l,
            None => return Err(Error::Data("empty input: no header row".into())),
        }
    };

    let delim = match options.delimiter.as_char() {
        Some(c) => c,
        None => {
            if header.contains(';') {
                ';'
            } else if header.contains('\t') {
                '\t'
            } else if header.contains(',') {
                ','
            } else {
                return Err(Error::Data(
                    "unreadable header: no recognized delimiter (';', tab or ',')".into(),
                ));
            }
        }
    };
    let allow_comma = match options.decimal_comma {
        DecimalComma::Allowed => {
            if delim == ',' {
                return Err(Error::Config(
                    "decimal commas cannot be combined with a comma delimiter".into(),
                ));
            }
            true
        }
        DecimalComma::Forbidden => false,
        DecimalComma::Auto => delim != ',',
    };

    let columns: Vec<&str> = header.split(delim).map(str::trim).collect();
    if columns.len() < 2 {
        return Err(Error::Data(
            "unreadable header: expected a name column plus year columns".into(),
        ));
    }
    let mut years = Vec::with_capacity(columns.len() - 1);
    for &col in &columns[1..] {
        let year = col
            .strip_prefix(options.year_prefix.as_str())
            .and_then(|rest| rest.parse::<i32>().ok())
            .ok_or_else(|| {
                Error::Data(format!(
                    "unreadable header: column '{col}' does not match '{}<year>'",
                    options.year_prefix
                ))
            })?;
        years.push(year);
    }

    let mut records = Vec::new();
    let mut report = IngestReport::default();
    let mut seen_names: std::collections::HashMap<String, usize> = std::collections::HashMap::new();

    // The header was line 1; resume numbering from there, skipping the
    // blank lines consumed above.
    let header_offset = text
        .lines()
        .position(|l| !l.trim().is_empty())
        .unwrap_or(0);
    for (i, line) in lines.enumerate() {
        let line_no = header_offset + i + 2;
        if line.trim().is_empty() {
            continue;
        }
        report.rows_read += 1;
        let cells: Vec<&str> = line.split(delim).map(str::trim).collect();
        if cells.len() > columns.len() {
            report.malformed.push(Malformed {
                line: line_no,
                reason: format!(
                    "row has {} fields but the header declares {}",
                    cells.len(),
                    columns.len()
                ),
            });
            continue;
        }
        let name = cells[0];
        if name.is_empty() {
            report.malformed.push(Malformed {
                line: line_no,
                reason: "empty journal name".into(),
            });
            continue;
        }
        let mut impact_factors = BTreeMap::new();
        let mut row_error: Option<String> = None;
        for (k, &year) in years.iter().enumerate() {
            let cell = cells.get(k + 1).copied().unwrap_or("");
            if cell.is_empty() {
                continue; // missing year
            }
            match parse_numeric_cell(cell, allow_comma) {
                Ok(v) if v < 0.0 => {
                    row_error = Some(format!("negative impact factor {cell} for year {year}"));
                    break;
                }
                Ok(v) => {
                    impact_factors.insert(year, v);
                }
                Err(reason) => {
                    row_error = Some(reason);
                    break;
                }
            }
        }
        if let Some(reason) = row_error {
            report.malformed.push(Malformed {
                line: line_no,
                reason,
            });
            continue;
        }
        let key = name.to_lowercase();
        if let Some(&first_line) = seen_names.get(&key) {
            report.warnings.push(format!(
                "duplicate journal name '{name}' (lines {first_line} and {line_no}); kept both"
            ));
        } else {
            seen_names.insert(key, line_no);
        }
        report.rows_parsed += 1;
        records.push(JournalRecord {
            name: name.to_string(),
            impact_factors,
        });
    }
    debug_assert_eq!(report.rows_parsed + report.malformed.len(), report.rows_read);
    Ok((records, report))
}

/// Removes records whose names match any entry of `names`
/// (case-insensitive, exact). Names that match nothing produce a warning,
/// not an error.
pub fn apply_exclusions(
    records: Vec<JournalRecord>,
    names: &[String],
) -> (Vec<JournalRecord>, IngestReport) {
    let mut report = IngestReport::default();
    let targets: Vec<String> = names.iter().map(|n| n.to_lowercase()).collect();
    let mut hit = vec![false; targets.len()];
    let mut kept = Vec::with_capacity(records.len());
    for record in records {
        let lower = record.name.to_lowercase();
        if let Some(pos) = targets.iter().position(|t| *t == lower) {
            hit[pos] = true;
            report.excluded.push(record.name);
        } else {
            kept.push(record);
        }
    }
    for (i, name) in names.iter().enumerate() {
        if !hit[i] {
            report
                .warnings
                .push(format!("exclusion '{name}' matched no record"));
        }
    }
    (kept, report)
}

/// Impact factors for one year, in record order; records lacking the year
/// are skipped. Errors if the year is present in no record.
pub fn column_values(records: &[JournalRecord], year: i32) -> Result<Vec<f64>> {
    let values: Vec<f64> = records
        .iter()
        .filter_map(|r| r.impact_factors.get(&year).copied())
        .collect();
    if values.is_empty() {
        let mut available: Vec<i32> = records
            .iter()
            .flat_map(|r| r.impact_factors.keys().copied())
            .collect();
        available.sort_unstable();
        available.dedup();
        let listing = if available.is_empty() {
            "none".to_string()
        } else {
            available
                .iter()
                .map(|y| y.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        return Err(Error::Data(format!(
            "no record carries year {year}; available years: {listing}"
        )));
    }
    Ok(values)
}

/// Writes records in the canonical format: `;` delimiter, `.` decimals,
/// year columns the sorted union of all years present.
pub fn write_canonical(records: &[JournalRecord], mut out: impl Write) -> std::io::Result<()> {
    let mut years: Vec<i32> = records
        .iter()
        .flat_map(|r| r.impact_factors.keys().copied())
        .collect();
    years.sort_unstable();
    years.dedup();
    write!(out, "JOURNAL")?;
    for y in &years {
        write!(out, ";IF_{y}")?;
    }
    writeln!(out)?;
    for record in records {
        write!(out, "{}", record.name)?;
        for y in &years {
            match record.impact_factors.get(y) {
                Some(v) => write!(out, ";{v}")?,
                None => write!(out, ";")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
