//! CSV ingestion and serialization of capture data.
//!
//! Two layouts are accepted, both with a header row:
//!
//! * aggregated: one 0/1 column per list plus a `count` column, one row per
//!   capture history;
//! * per-record: one 0/1 column per list, one row per observed case.
//!
//! A row with no list marked is rejected, since cases appearing on no list
//! cannot be observed.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::history::{CaptureHistory, MAX_LISTS};
use crate::table::CountTable;

/// A count table together with its list names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub list_names: Vec<String>,
    pub table: CountTable,
    /// Non-fatal issues found during ingestion (e.g. duplicate histories).
    pub warnings: Vec<String>,
}

fn parse_flag(field: &str, row: usize, col: &str) -> Result<bool> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Dataset(format!(
            "row {row}: column {col:?} must be 0 or 1, got {other:?}"
        ))),
    }
}

impl Dataset {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let count_col = headers.iter().position(|h| h.eq_ignore_ascii_case("count"));
        let list_cols: Vec<usize> = (0..headers.len()).filter(|i| Some(*i) != count_col).collect();
        let t = list_cols.len();
        if t < 2 {
            return Err(Error::Dataset(format!("need at least two list columns, found {t}")));
        }
        if t > MAX_LISTS {
            return Err(Error::Dataset(format!("at most {MAX_LISTS} lists are supported, found {t}")));
        }
        let list_names: Vec<String> = list_cols.iter().map(|&i| headers[i].clone()).collect();

        let mut counts: BTreeMap<CaptureHistory, u64> = BTreeMap::new();
        let mut warnings = Vec::new();
        for (idx, record) in rdr.records().enumerate() {
            let record = record?;
            let row = idx + 2;
            let mut mask = 0u16;
            for (bit, &col) in list_cols.iter().enumerate() {
                let field = record.get(col).unwrap_or("");
                if parse_flag(field, row, &headers[col])? {
                    mask |= 1 << bit;
                }
            }
            if mask == 0 {
                return Err(Error::UnobservedRow { row });
            }
            let h = CaptureHistory::from_mask(mask);
            let c = match count_col {
                Some(ci) => {
                    let field = record.get(ci).unwrap_or("").trim();
                    field.parse::<u64>().map_err(|_| {
                        Error::Dataset(format!(
                            "row {row}: count must be a non-negative integer, got {field:?}"
                        ))
                    })?
                }
                None => 1,
            };
            if count_col.is_some() && counts.contains_key(&h) {
                warnings.push(format!("row {row}: duplicate capture history {h}, counts summed"));
            }
            *counts.entry(h).or_insert(0) += c;
        }
        let table = CountTable::new(t, counts)?;
        if table.n_total() == 0 {
            return Err(Error::Dataset("the table contains no observed cases".into()));
        }
        Ok(Dataset { list_names, table, warnings })
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(f))
    }

    /// Write the aggregated layout, one row per positive cell in canonical order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.list_names.clone();
        header.push("count".into());
        w.write_record(&header)?;
        for (h, c) in self.table.iter() {
            let mut row: Vec<String> = (1..=self.table.t())
                .map(|l| if h.contains_list(l) { "1" } else { "0" }.to_string())
                .collect();
            row.push(c.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Keep only the named lists, in the given order.
    ///
    /// Cases that appear on none of the kept lists become unobservable and
    /// are dropped.
    pub fn select_lists(&self, names: &[&str]) -> Result<Dataset> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.list_names
                    .iter()
                    .position(|x| x == n)
                    .map(|i| i + 1)
                    .ok_or_else(|| Error::Dataset(format!("unknown list {n:?}")))
            })
            .collect::<Result<_>>()?;
        if idx.len() < 2 {
            return Err(Error::Dataset("at least two lists must be selected".into()));
        }
        let entries = self.table.iter().filter_map(|(h, c)| {
            let lists = idx
                .iter()
                .enumerate()
                .filter(|(_, &src)| h.contains_list(src))
                .map(|(dst, _)| dst + 1);
            let nh = CaptureHistory::from_lists(lists);
            (!nh.is_empty()).then_some((nh, c))
        });
        let table = CountTable::new(idx.len(), entries.collect::<Vec<_>>())?;
        if table.n_total() == 0 {
            return Err(Error::Dataset("no cases remain on the selected lists".into()));
        }
        Ok(Dataset {
            list_names: names.iter().map(|s| s.to_string()).collect(),
            table,
            warnings: self.warnings.clone(),
        })
    }
}
