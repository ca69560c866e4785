//! The normative tabular output format: a flat result table serialized as
//! CSV with a fixed schema and full-precision values.
//!
//! Schema (column order is part of the format):
//! `experiment,step,scheme,quantity,value,stderr,provenance`
//!
//! Quantity vocabulary: `bias`, `variance`, `excess`, `total` (bias+variance,
//! Monte Carlo full mode), `eff_bias`, `eff_var`, `feature_noise`,
//! `label_noise`, `k_star`, `k_dagger`, `b_i` (per-coordinate; the 1-based
//! coordinate goes in the `step` column), `min_form_variance`,
//! `feature_factor`, `feature_factor_min`, `displacement_norm`,
//! `displacement_norm_min`, `label_factor`, `label_factor_min`, the
//! mini-batch variants prefixed `mb_`, and `theta_term1`, `theta_term2`,
//! `critical_batch`. The `step` column holds a step index, a 1-based
//! coordinate index for per-coordinate quantities, or `final`.

use std::io::Write as _;
use std::path::Path;

/// Where a row's value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Closed-form or exact-recursion evaluation.
    Exact,
    /// Monte Carlo estimate (stderr column filled).
    Mc,
    /// An upper bound.
    BoundUpper,
    /// A lower bound.
    BoundLower,
}

impl Provenance {
    /// Stable lowercase token written to the CSV.
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::Mc => "mc",
            Provenance::BoundUpper => "bound_upper",
            Provenance::BoundLower => "bound_lower",
        }
    }
}

/// One emitted value.
#[derive(Clone, Debug)]
pub struct ResultRow {
    /// Experiment identifier (cell parameters appended as `;key=value` in
    /// sweeps — never contains commas).
    pub experiment: String,
    /// Step index, 1-based coordinate index, or `final`.
    pub step: String,
    /// Scheme spec token (`ema:0.995`, `none`, `ia`, `ta:333`, `custom`).
    pub scheme: String,
    /// Quantity name from the documented vocabulary.
    pub quantity: String,
    /// The value.
    pub value: f64,
    /// Standard error for Monte Carlo rows, empty otherwise.
    pub stderr: Option<f64>,
    /// Which evaluator family produced the value.
    pub provenance: Provenance,
}

/// An ordered collection of rows with CSV serialization.
#[derive(Clone, Debug, Default)]
pub struct ResultTable {
    rows: Vec<ResultRow>,
}

/// Render a value with 17 significant digits in scientific notation — enough
/// to round-trip any finite f64 exactly.
pub fn format_value(value: f64) -> String {
    format!("{value:.16e}")
}

impl ResultTable {
    /// Empty table.
    pub fn new() -> Self {
        ResultTable::default()
    }

    /// The rows in insertion order.
    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Whether the table has no rows.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Append a row. Fields must not contain commas or line breaks; the
    /// harness only produces tokens from the documented vocabularies, so this
    /// is a programming-error guard, not input validation.
    pub fn push(&mut self, row: ResultRow) {
        debug_assert!(
            !row.experiment.contains([',', '\n'])
                && !row.step.contains([',', '\n'])
                && !row.scheme.contains([',', '\n'])
                && !row.quantity.contains([',', '\n']),
            "table fields must be comma- and newline-free",
        );
        self.rows.push(row);
    }

    /// Convenience constructor-push for the common case.
    #[allow(clippy::too_many_arguments)]
    pub fn add(
        &mut self,
        experiment: &str,
        step: impl ToString,
        scheme: &str,
        quantity: &str,
        value: f64,
        stderr: Option<f64>,
        provenance: Provenance,
    ) {
        self.push(ResultRow {
            experiment: experiment.to_string(),
            step: step.to_string(),
            scheme: scheme.to_string(),
            quantity: quantity.to_string(),
            value,
            stderr,
            provenance,
        });
    }

    /// Serialize to CSV: header row, LF line endings, UTF-8, values with 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,step,scheme,quantity,value,stderr,provenance\n");
        for row in &self.rows {
            out.push_str(&row.experiment);
            out.push(',');
            out.push_str(&row.step);
            out.push(',');
            out.push_str(&row.scheme);
            out.push(',');
            out.push_str(&row.quantity);
            out.push(',');
            out.push_str(&format_value(row.value));
            out.push(',');
            if let Some(se) = row.stderr {
                out.push_str(&format_value(se));
            }
            out.push(',');
            out.push_str(row.provenance.as_str());
            out.push('\n');
        }
        out
    }

    /// Write the CSV to a file.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_through_text() {
        for &v in &[
            0.0,
            -0.0,
            0.1,
            3.0080028548590615e-01,
            1.0,
            -2.5e-3,
            1e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
        ] {
            let text = format_value(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {text}");
        }
    }

    #[test]
    fn csv_layout_is_fixed() {
        let mut table = ResultTable::new();
        table.add("run", 3, "ema:0.9", "bias", 0.25, None, Provenance::Exact);
        table.add(
            "run",
            "final",
            "none",
            "variance",
            0.5,
            Some(0.0625),
            Provenance::Mc,
        );
        let csv = table.to_csv();
        let expected = "experiment,step,scheme,quantity,value,stderr,provenance\n\
                        run,3,ema:0.9,bias,2.5000000000000000e-1,,exact\n\
                        run,final,none,variance,5.0000000000000000e-1,6.2500000000000000e-2,mc\n";
        assert_eq!(csv, expected);
        assert_eq!(table.len(), 2);
        assert!(!csv.contains('\r'));
    }
}
