use serde::{Deserialize, Serialize};

use super::gates::highlight_intensities;
use crate::corpus::{EncodedDocument, Vocabulary};
use crate::encoder::Checkpoint;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_SMOOTHING_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighlightRecord {
    pub doc_id: String,
    pub aspect: String,
    pub tokens: Vec<String>,
    pub intensities: Vec<f64>,
}

impl HighlightRecord {
    pub fn validate(&self) -> Result<()> {
        if self.tokens.len() != self.intensities.len() {
            return Err(Error::Evaluation(format!(
                "highlight for {} has {} tokens but {} intensities",
                self.doc_id,
                self.tokens.len(),
                self.intensities.len()
            )));
        }
        if let Some(x) = self.intensities.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Evaluation(format!("highlight for {} has intensity {x} outside [0, 1]", self.doc_id)));
        }
        Ok(())
    }
}

/// Per document and aspect: gates, smoothed, then normalized over the unpadded tokens.
pub fn highlight_records<T: Scalar>(
    checkpoint: &Checkpoint<T>,
    docs: &[EncodedDocument],
    vocab: &Vocabulary,
    aspect_names: &[String],
    window: usize,
) -> Result<Vec<HighlightRecord>> {
    checkpoint.check_vocab(&vocab.content_hash())?;
    let model = checkpoint.model()?;
    if aspect_names.len() != model.n_aspects() {
        return Err(Error::config(format!(
            "{} aspect names for a model with {} aspects",
            aspect_names.len(),
            model.n_aspects()
        )));
    }
    let mut out = Vec::with_capacity(docs.len() * aspect_names.len());
    for doc in docs {
        let tokens: Vec<String> = doc.ids[..doc.true_len]
            .iter()
            .map(|&id| vocab.token(id).unwrap_or(crate::corpus::UNK_TOKEN).to_owned())
            .collect();
        for (a, name) in aspect_names.iter().enumerate() {
            let fwd = model.forward_aspect(doc, a)?;
            let gates: Vec<f64> = fwd.gates.iter().map(|g| g.as_f64()).collect();
            out.push(HighlightRecord {
                doc_id: doc.doc_id.clone(),
                aspect: name.clone(),
                tokens: tokens.clone(),
                intensities: highlight_intensities(&gates, doc.true_len, window)?,
            });
        }
    }
    Ok(out)
}

pub fn to_jsonl(records: &[HighlightRecord]) -> Result<String> {
    crate::io::to_jsonl(records)
}

/// Parse and check a JSONL highlight file.
pub fn validate_highlight_json(text: &str) -> Result<Vec<HighlightRecord>> {
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let rec: HighlightRecord = serde_json::from_str(line)?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn hue(aspect_index: usize) -> u32 {
    const HUES: [u32; 6] = [210, 0, 120, 40, 280, 170];
    HUES[aspect_index % HUES.len()]
}

/// Standalone page, one section per aspect, intensity drawn as background alpha.
pub fn render_html(records: &[HighlightRecord], aspect_names: &[String]) -> String {
    let mut html = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Aspect highlights</title>\n</head>\n\
         <body style=\"font-family: sans-serif; line-height: 1.8; max-width: 60em; margin: 2em auto;\">\n",
    );
    for (a, name) in aspect_names.iter().enumerate() {
        let h = hue(a);
        html.push_str(&format!("<section>\n<h2 style=\"color: hsl({h}, 70%, 35%);\">{}</h2>\n", escape(name)));
        for rec in records.iter().filter(|r| r.aspect == *name) {
            html.push_str(&format!("<p><strong>{}</strong><br>\n", escape(&rec.doc_id)));
            for (tok, x) in rec.tokens.iter().zip(&rec.intensities) {
                html.push_str(&format!(
                    "<span style=\"background-color: hsla({h}, 85%, 55%, {x:.3}); padding: 0 2px;\">{}</span> ",
                    escape(tok)
                ));
            }
            html.push_str("</p>\n");
        }
        html.push_str("</section>\n");
    }
    html.push_str("</body>\n</html>\n");
    html
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> HighlightRecord {
        HighlightRecord {
            doc_id: "d<1>".into(),
            aspect: "taste".into(),
            tokens: vec!["a".into(), "b&c".into()],
            intensities: vec![0.0, 1.0],
        }
    }

    #[test]
    fn jsonl_round_trips_through_validator() {
        let text = to_jsonl(&[record(), record()]).unwrap();
        assert_eq!(validate_highlight_json(&text).unwrap(), vec![record(), record()]);
        let bad = text.replace("1.0", "1.5");
        assert!(validate_highlight_json(&bad).is_err());
        assert!(validate_highlight_json(r#"{"doc_id":"x","aspect":"a","tokens":["a"],"intensities":[]}"#).is_err());
    }

    #[test]
    fn html_is_self_contained_and_escaped() {
        let html = render_html(&[record()], &["taste".into(), "smell".into()]);
        assert!(html.contains("d&lt;1&gt;"));
        assert!(html.contains("b&amp;c"));
        assert!(html.contains("hsla(210, 85%, 55%, 1.000)"));
        assert!(!html.contains("<link") && !html.contains("<script"));
        assert_eq!(html.matches("<section>").count(), 2);
    }
}
