//! Code-reduction accounting: lines of template input versus lines of
//! generated output.

use thiserror::Error;

use crate::template::{BodyItem, Template};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("generated line count is zero")]
    ZeroGenerated,
}

/// Non-blank code lines across a template set. Directive lines (connector,
/// link, param) do not count as input code.
pub fn count_template_lines<'a>(templates: impl IntoIterator<Item = &'a Template>) -> usize {
    templates
        .into_iter()
        .map(|t| {
            let header = t.header.iter().filter(|l| !l.trim().is_empty()).count();
            let body = t
                .sections
                .iter()
                .flat_map(|s| &s.body)
                .filter(|item| matches!(item, BodyItem::Code(line) if !line.trim().is_empty()))
                .count();
            header + body
        })
        .sum()
}

/// Non-blank lines of rendered output.
pub fn count_generated_lines(text: &str) -> usize {
    text.lines().filter(|l| !l.trim().is_empty()).count()
}

/// Percent reduction: 100 x (1 - input/generated).
pub fn reduction(input_lines: usize, generated_lines: usize) -> Result<f64, MetricsError> {
    if generated_lines == 0 {
        return Err(MetricsError::ZeroGenerated);
    }
    Ok(100.0 * (1.0 - input_lines as f64 / generated_lines as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub label: String,
    pub input_lines: usize,
    pub generated_lines: usize,
    pub percent: f64,
}

impl ReductionReport {
    pub fn new(label: &str, input_lines: usize, generated_lines: usize) -> Result<Self, MetricsError> {
        Ok(ReductionReport {
            label: label.to_string(),
            input_lines,
            generated_lines,
            percent: reduction(input_lines, generated_lines)?,
        })
    }
}

/// Aligned table: label, input, generated, reduction to one decimal.
pub fn format_table(rows: &[ReductionReport]) -> String {
    let label_width = rows
        .iter()
        .map(|r| r.label.len())
        .chain(std::iter::once("variant".len()))
        .max()
        .unwrap_or(0);
    let mut out = format!(
        "{:<label_width$}  {:>8}  {:>9}  {:>9}\n",
        "variant", "input", "generated", "reduction"
    );
    for row in rows {
        out.push_str(&format!(
            "{:<label_width$}  {:>8}  {:>9}  {:>8.1}%\n",
            row.label, row.input_lines, row.generated_lines, row.percent
        ));
    }
    out
}
