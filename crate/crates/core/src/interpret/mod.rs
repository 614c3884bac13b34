//! Gate smoothing, normalization and highlight export.

mod export;
mod gates;

pub use export::{highlight_records, render_html, to_jsonl, validate_highlight_json, HighlightRecord, DEFAULT_SMOOTHING_WINDOW};
pub use gates::{highlight_intensities, normalize_gates, smooth_gates};
