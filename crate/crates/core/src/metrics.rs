//! Confusion-matrix evaluation against ground-truth masks.
//!
//! Reports true-positive rate (sensitivity), true-negative rate
//! (specificity) and accuracy, all in percent. Dataset aggregation uses
//! unweighted per-image means — matching how per-image percentages are
//! usually quoted — and additionally emits pooled rates computed from the
//! summed counts, since the two disagree whenever image sizes or class
//! balances differ.

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

/// Pixel counts of the four confusion-matrix cells.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Default)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    fn add(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.true_neg += other.true_neg;
        self.false_neg += other.false_neg;
    }
}

/// Percentages derived from counts. A rate is `None` when its denominator
/// is empty (for example the true-positive rate of an all-background
/// truth); undefined rates are excluded from means.
#[derive(Copy, Clone, PartialEq, Debug)]
pub struct Rates {
    pub tp_rate: Option<f64>,
    pub tn_rate: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Counts the confusion cells of `pred` against `truth`, restricted to
/// `fov` when given (pixels outside the field of view are ignored
/// entirely).
pub fn confusion(
    pred: &BinaryMask,
    truth: &BinaryMask,
    fov: Option<&BinaryMask>,
) -> Result<ConfusionCounts> {
    if pred.dimensions() != truth.dimensions() {
        return Err(Error::DimensionMismatch {
            context: "prediction vs ground truth",
            expected: truth.dimensions(),
            got: pred.dimensions(),
        });
    }
    if let Some(f) = fov {
        if f.dimensions() != truth.dimensions() {
            return Err(Error::DimensionMismatch {
                context: "field-of-view mask vs ground truth",
                expected: truth.dimensions(),
                got: f.dimensions(),
            });
        }
    }
    let mut c = ConfusionCounts::default();
    for (i, (&p, &t)) in pred.pixels().iter().zip(truth.pixels()).enumerate() {
        if let Some(f) = fov {
            if f.pixels()[i] == 0 {
                continue;
            }
        }
        match (p != 0, t != 0) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, false) => c.true_neg += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    Ok(c)
}

/// Derives percentage rates from counts:
/// `tp_rate = 100·tp/(tp+fn)`, `tn_rate = 100·tn/(tn+fp)`,
/// `accuracy = 100·(tp+tn)/total`.
pub fn rates(c: &ConfusionCounts) -> Rates {
    let pct = |num: u64, den: u64| (den > 0).then(|| 100.0 * num as f64 / den as f64);
    Rates {
        tp_rate: pct(c.true_pos, c.true_pos + c.false_neg),
        tn_rate: pct(c.true_neg, c.true_neg + c.false_pos),
        accuracy: pct(c.true_pos + c.true_neg, c.total()),
    }
}

/// One evaluated image.
#[derive(Clone, PartialEq, Debug)]
pub struct EvalRow {
    pub id: String,
    pub counts: ConfusionCounts,
    pub rates: Rates,
}

impl EvalRow {
    pub fn new(id: impl Into<String>, counts: ConfusionCounts) -> Self {
        let rates = rates(&counts);
        Self { id: id.into(), counts, rates }
    }
}

/// Per-image rows plus the dataset summary.
#[derive(Clone, PartialEq, Debug)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// Unweighted arithmetic mean of the per-image rates; images whose
    /// rate is undefined are excluded from that column's mean.
    pub mean: Rates,
    /// Rates of the summed counts across all images.
    pub pooled: Rates,
}

/// Aggregates per-image rows into a report; errors on empty input.
pub fn aggregate(rows: Vec<EvalRow>) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::InvalidParams("cannot aggregate an empty evaluation".into()));
    }
    let mean_of = |pick: fn(&Rates) -> Option<f64>| {
        let defined: Vec<f64> = rows.iter().filter_map(|r| pick(&r.rates)).collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    };
    let mean = Rates {
        tp_rate: mean_of(|r| r.tp_rate),
        tn_rate: mean_of(|r| r.tn_rate),
        accuracy: mean_of(|r| r.accuracy),
    };
    let mut totals = ConfusionCounts::default();
    for row in &rows {
        totals.add(&row.counts);
    }
    let pooled = rates(&totals);
    Ok(EvalReport { rows, mean, pooled })
}

fn fmt_rate(r: Option<f64>, undefined: &str) -> String {
    match r {
        Some(v) => format!("{v:.2}"),
        None => undefined.to_string(),
    }
}

impl EvalReport {
    /// CSV with one row per image and trailing `mean` / `pooled` rows;
    /// undefined rates render as empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,tp_rate,tn_rate,accuracy\n");
        let mut push = |id: &str, r: &Rates| {
            out.push_str(&format!(
                "{id},{},{},{}\n",
                fmt_rate(r.tp_rate, ""),
                fmt_rate(r.tn_rate, ""),
                fmt_rate(r.accuracy, "")
            ));
        };
        for row in &self.rows {
            push(&row.id, &row.rates);
        }
        push("mean", &self.mean);
        push("pooled", &self.pooled);
        out
    }

    /// Plain-text table in TP / TN / ACC column order; undefined rates
    /// render as `-`.
    pub fn to_table(&self) -> String {
        let id_width = self
            .rows
            .iter()
            .map(|r| r.id.len())
            .chain(["image".len(), "pooled".len()])
            .max()
            .unwrap_or(5);
        let mut out = format!("{:<id_width$}  {:>7}  {:>7}  {:>7}\n", "image", "TP", "TN", "ACC");
        let mut push = |id: &str, r: &Rates| {
            out.push_str(&format!(
                "{id:<id_width$}  {:>7}  {:>7}  {:>7}\n",
                fmt_rate(r.tp_rate, "-"),
                fmt_rate(r.tn_rate, "-"),
                fmt_rate(r.accuracy, "-")
            ));
        };
        for row in &self.rows {
            push(&row.id, &row.rates);
        }
        push("mean", &self.mean);
        push("pooled", &self.pooled);
        out
    }
}
