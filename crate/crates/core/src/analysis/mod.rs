//! Post-hoc analysis: edit sizes, the `d × b` dimension sweep, and run
//! reports.

mod diff;
mod report;
mod sweep;

pub use diff::{diff_stats, DiffStats};
pub use report::{edit_sizes, gallery_markdown, median, report, summary_markdown, summary_rows, SummaryRow};
pub use sweep::{factorizations, sweep_dimensions, write_sweep_csv, write_sweep_json, SweepRow, SweepTask};
