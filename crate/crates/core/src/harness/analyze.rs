//! Analysis of a price series read from CSV.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bubble::{self, BubbleConfig, BubbleReport};
use crate::error::{Error, Result};
use crate::stylized::{StylizedConfig, StylizedReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub price: Vec<f64>,
    pub fundamental: Option<Vec<f64>>,
}

/// Reads prices from a CSV file with a header row. The `price` column is
/// used when present, otherwise the only column; a `fundamental` column is
/// picked up when present.
pub fn read_price_csv(path: impl AsRef<Path>) -> Result<PriceTable> {
    let path = path.as_ref();
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(format!("{other:?}")),
        })?;
    let headers = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    let price_col = match headers.iter().position(|h| h == "price") {
        Some(i) => i,
        None if headers.len() == 1 => 0,
        None => return Err(parse_err("no `price` column".into())),
    };
    let fund_col = headers.iter().position(|h| h == "fundamental");
    let mut table = PriceTable {
        price: Vec::new(),
        fundamental: fund_col.map(|_| Vec::new()),
    };
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let cell = |col: usize| -> Result<f64> {
            let text = rec.get(col).unwrap_or("");
            text.parse::<f64>()
                .map_err(|_| parse_err(format!("row {}: `{text}` is not a number", row + 2)))
        };
        table.price.push(cell(price_col)?);
        if let (Some(col), Some(f)) = (fund_col, table.fundamental.as_mut()) {
            f.push(cell(col)?);
        }
    }
    if table.price.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: table.price.len(),
            needed: 1,
        });
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesAnalysis {
    pub observations: usize,
    pub stylized: StylizedReport,
    pub bubble: Option<BubbleReport>,
    /// Why the bubble tests were skipped.
    pub bubble_skipped: Option<String>,
}

pub fn analyze_prices(table: &PriceTable, stylized: &StylizedConfig, bubble_cfg: &BubbleConfig) -> Result<SeriesAnalysis> {
    if let Some((i, &p)) = table.price.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
        return Err(Error::NonPositivePrice { index: i, value: p });
    }
    let report = StylizedReport::compute(&table.price, table.fundamental.as_deref(), stylized)?;
    let (bubble, bubble_skipped) = match bubble::detect(&table.price, bubble_cfg) {
        Ok(b) => (Some(b), None),
        Err(e @ Error::SampleBelowTable(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(SeriesAnalysis {
        observations: table.price.len(),
        stylized: report,
        bubble,
        bubble_skipped,
    })
}
