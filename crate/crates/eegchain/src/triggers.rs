//! Two-column trigger list files:
//!
//! ```text
//! true_time_s,label
//! 0.5,sample:512
//! 1.5101010101010102,packet:37
//! ```
//!
//! Times are written in shortest round-trip form, so reading a list back
//! gives the same `f64`s.

use std::path::Path;

use eegchain_core::{TriggerEvent, TriggerLabel};

use crate::error::{Error, Result};

pub const HEADER: &str = "true_time_s,label";

pub fn format_label(label: TriggerLabel) -> String {
    match label {
        TriggerLabel::Sample(i) => format!("sample:{i}"),
        TriggerLabel::Packet(seq) => format!("packet:{seq}"),
    }
}

pub fn parse_label(s: &str) -> Option<TriggerLabel> {
    let (kind, n) = s.split_once(':')?;
    match kind {
        "sample" => n.parse().ok().map(TriggerLabel::Sample),
        "packet" => n.parse().ok().map(TriggerLabel::Packet),
        _ => None,
    }
}

/// `time,label` as used in both trigger lists and recording metadata.
pub fn format_event(e: &TriggerEvent) -> String {
    format!("{},{}", e.true_time_s, format_label(e.label))
}

pub fn parse_event(s: &str) -> Option<TriggerEvent> {
    let (t, label) = s.split_once(',')?;
    let true_time_s: f64 = t.trim().parse().ok()?;
    Some(TriggerEvent { true_time_s, label: parse_label(label.trim())? })
}

pub fn triggers_to_string(events: &[TriggerEvent]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for e in events {
        out.push_str(&format_event(e));
        out.push('\n');
    }
    out
}

pub fn triggers_from_str(text: &str) -> std::result::Result<Vec<TriggerEvent>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(format!("expected header `{HEADER}`")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_event(l).ok_or_else(|| format!("line {}: cannot parse `{l}`", i + 1)))
        .collect()
}

pub fn write_triggers(events: &[TriggerEvent], path: &Path) -> Result<()> {
    std::fs::write(path, triggers_to_string(events)).map_err(|e| Error::io(path, e))
}

pub fn read_triggers(path: &Path) -> Result<Vec<TriggerEvent>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    triggers_from_str(&text).map_err(|message| Error::Format { path: path.to_owned(), message })
}
