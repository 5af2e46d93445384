//! Analysis reports: a CSV table and a plain-text summary rendered from it.
//!
//! Summaries are always rendered from the parsed CSV, so the `report`
//! subcommand reproduces the summary printed at the end of a run.

use std::fmt::Write as _;

use eegchain_core::analysis::stats::{mean, std_dev, Metric};
use eegchain_core::PacketAnchor;

use crate::config::Preset;

pub const SINE_REPORT: &str = "sine_report.csv";
pub const SINE_SUMMARY: &str = "sine_summary.txt";
pub const VEP_REPORT: &str = "vep_report.csv";
pub const VEP_SUMMARY: &str = "vep_summary.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sweep {
    Frequency,
    Amplitude,
}

impl Sweep {
    pub fn as_str(self) -> &'static str {
        match self {
            Sweep::Frequency => "frequency",
            Sweep::Amplitude => "amplitude",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "frequency" => Some(Sweep::Frequency),
            "amplitude" => Some(Sweep::Amplitude),
            _ => None,
        }
    }
}

/// One sine condition on one preset.
#[derive(Debug, Clone, PartialEq)]
pub struct SineRow {
    pub preset: Preset,
    pub sweep: Sweep,
    pub condition: usize,
    pub amplitude_uv: f64,
    pub freq_hz: f64,
    /// Fitted epochs over all channels.
    pub epochs: usize,
    pub rejected: usize,
    pub rmse_mean_uv: f64,
    pub rmse_std_uv: f64,
    pub packets_expected: usize,
    pub packets_received: usize,
}

impl SineRow {
    pub fn fraction_received(&self) -> f64 {
        self.packets_received as f64 / self.packets_expected as f64
    }
}

const SINE_HEADER: &str = "preset,sweep,condition,amplitude_uv,freq_hz,epochs,rejected,rmse_mean_uv,rmse_std_uv,\
packets_expected,packets_received,fraction_received";

#[derive(Debug, Clone, PartialEq)]
pub struct SineReport {
    pub rows: Vec<SineRow>,
}

/// Pooled RMSE statistics and packet reception of one preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineOverall {
    pub epochs: usize,
    pub rmse_mean_uv: f64,
    pub rmse_std_uv: f64,
    pub received_mean: f64,
    pub received_std: f64,
}

impl SineReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SINE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{},{},{:.6},{:.6},{},{},{:.6}",
                r.preset,
                r.sweep.as_str(),
                r.condition,
                r.amplitude_uv,
                r.freq_hz,
                r.epochs,
                r.rejected,
                r.rmse_mean_uv,
                r.rmse_std_uv,
                r.packets_expected,
                r.packets_received,
                r.fraction_received()
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == SINE_HEADER => {}
            _ => return Err("not a sine report".into()),
        }
        let rows = lines
            .map(|(i, line)| {
                let row = i + 1;
                let c: Vec<&str> = line.split(',').collect();
                if c.len() != 12 {
                    return Err(format!("row {row}: expected 12 fields, found {}", c.len()));
                }
                let bad = |what: &str| format!("row {row}: bad {what}");
                let num = |i: usize, what: &str| c[i].parse::<f64>().map_err(|_| bad(what));
                let int = |i: usize, what: &str| c[i].parse::<usize>().map_err(|_| bad(what));
                Ok(SineRow {
                    preset: Preset::parse(c[0]).ok_or_else(|| bad("preset"))?,
                    sweep: Sweep::parse(c[1]).ok_or_else(|| bad("sweep"))?,
                    condition: int(2, "condition")?,
                    amplitude_uv: num(3, "amplitude")?,
                    freq_hz: num(4, "frequency")?,
                    epochs: int(5, "epoch count")?,
                    rejected: int(6, "rejected count")?,
                    rmse_mean_uv: num(7, "RMSE mean")?,
                    rmse_std_uv: num(8, "RMSE std")?,
                    packets_expected: int(9, "packet count")?,
                    packets_received: int(10, "packet count")?,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(Self { rows })
    }

    pub fn presets(&self) -> Vec<Preset> {
        let mut p: Vec<Preset> = self.rows.iter().map(|r| r.preset).collect();
        p.sort();
        p.dedup();
        p
    }

    /// Epoch-weighted RMSE over every condition of `preset`, and the spread
    /// of per-session packet reception.
    pub fn overall(&self, preset: Preset) -> Option<SineOverall> {
        let rows: Vec<&SineRow> = self.rows.iter().filter(|r| r.preset == preset).collect();
        let n: usize = rows.iter().map(|r| r.epochs).sum();
        if rows.is_empty() || n == 0 {
            return None;
        }
        let sum: f64 = rows.iter().map(|r| r.epochs as f64 * r.rmse_mean_uv).sum();
        let grand = sum / n as f64;
        let ss: f64 = rows
            .iter()
            .map(|r| {
                let k = r.epochs as f64;
                (k - 1.0).max(0.0) * r.rmse_std_uv * r.rmse_std_uv + k * (r.rmse_mean_uv - grand).powi(2)
            })
            .sum();
        let received: Vec<f64> = rows.iter().map(|r| r.fraction_received()).collect();
        Some(SineOverall {
            epochs: n,
            rmse_mean_uv: grand,
            rmse_std_uv: if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 },
            received_mean: mean(&received),
            received_std: std_dev(&received),
        })
    }

    pub fn summary(&self) -> String {
        let mut out = String::from("Sine-wave validation: phase-fit RMSE per condition\n\n");
        let _ = writeln!(
            out,
            "{:<10} {:<10} {:>8} {:>8} {:>7} {:>18} {:>9}",
            "preset", "sweep", "A (µV)", "f (Hz)", "epochs", "RMSE (µV)", "received"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:<10} {:>8.1} {:>8.1} {:>7} {:>18} {:>8.1}%",
                r.preset.as_str(),
                r.sweep.as_str(),
                r.amplitude_uv,
                r.freq_hz,
                r.epochs,
                format!("{:.3} ± {:.3}", r.rmse_mean_uv, r.rmse_std_uv),
                100.0 * r.fraction_received()
            );
        }
        out.push_str("\nOverall\n");
        let _ = writeln!(out, "{:<10} {:>8} {:>18} {:>18}", "preset", "epochs", "RMSE (µV)", "received (%)");
        for p in self.presets() {
            if let Some(o) = self.overall(p) {
                let _ = writeln!(
                    out,
                    "{:<10} {:>8} {:>18} {:>18}",
                    p.as_str(),
                    o.epochs,
                    format!("{:.2} ± {:.2}", o.rmse_mean_uv, o.rmse_std_uv),
                    format!("{:.1} ± {:.1}", 100.0 * o.received_mean, 100.0 * o.received_std)
                );
            }
        }
        out
    }
}

/// Trial and packet accounting of one VEP arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub preset: Preset,
    pub trials: usize,
    pub clean: usize,
    /// Triggers too close to the session edges for a full window.
    pub skipped: usize,
    pub packets_expected: usize,
    pub packets_received: usize,
}

/// One metric on one channel, or its across-channel mean or std.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: Metric,
    /// 1-based channel, or `mean` / `std`.
    pub channel: String,
    pub safe: Option<f64>,
    pub reference: Option<f64>,
    pub d_percent: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VepReport {
    pub packet_anchor: PacketAnchor,
    pub jitter_ms: f64,
    pub arms: Vec<ArmSummary>,
    pub rows: Vec<MetricRow>,
}

const VEP_TAG: &str = "# vep-report";
const VEP_HEADER: &str = "metric,channel,safe,reference,d_percent,t,p";

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn parse_metric(s: &str) -> Option<Metric> {
    Metric::ALL.into_iter().find(|m| m.as_str() == s)
}

fn metric_label(m: Metric) -> &'static str {
    match m {
        Metric::Amplitude => "amplitude (µV)",
        Metric::Snr => "SNR (dB)",
        Metric::PeakTime => "peak time (ms)",
    }
}

impl VepReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            format!("{VEP_TAG}\n# packet_anchor={}\n# jitter_ms={}\n", self.packet_anchor.as_str(), self.jitter_ms);
        for a in &self.arms {
            let _ = writeln!(
                out,
                "# arm={},trials={},clean={},skipped={},packets_expected={},packets_received={}",
                a.preset, a.trials, a.clean, a.skipped, a.packets_expected, a.packets_received
            );
        }
        out.push_str(VEP_HEADER);
        out.push('\n');
        for r in &self.rows {
            let p = r.p.map(|p| format!("{p:.6e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{p}",
                r.metric.as_str(),
                r.channel,
                cell(r.safe),
                cell(r.reference),
                cell(r.d_percent),
                cell(r.t)
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        if lines.next().map(|(_, l)| l) != Some(VEP_TAG) {
            return Err("not a VEP report".into());
        }
        let mut packet_anchor = None;
        let mut jitter_ms = None;
        let mut arms = Vec::new();
        let mut rows = Vec::new();
        let mut in_table = false;
        for (row, line) in lines {
            let bad = |what: &str| format!("line {row}: bad {what}");
            if !in_table {
                if line == VEP_HEADER {
                    in_table = true;
                    continue;
                }
                let body = line.strip_prefix("# ").ok_or_else(|| bad("header"))?;
                let (key, value) = body.split_once('=').ok_or_else(|| bad("metadata"))?;
                match key {
                    "packet_anchor" => packet_anchor = PacketAnchor::parse(value),
                    "jitter_ms" => jitter_ms = value.parse().ok(),
                    "arm" => arms.push(parse_arm(body).ok_or_else(|| bad("arm line"))?),
                    _ => return Err(bad("metadata key")),
                }
                continue;
            }
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 7 {
                return Err(format!("line {row}: expected 7 fields, found {}", c.len()));
            }
            let opt = |i: usize| -> Result<Option<f64>, String> {
                if c[i].is_empty() {
                    Ok(None)
                } else {
                    c[i].parse().map(Some).map_err(|_| bad("number"))
                }
            };
            rows.push(MetricRow {
                metric: parse_metric(c[0]).ok_or_else(|| bad("metric"))?,
                channel: c[1].to_owned(),
                safe: opt(2)?,
                reference: opt(3)?,
                d_percent: opt(4)?,
                t: opt(5)?,
                p: opt(6)?,
            });
        }
        Ok(Self {
            packet_anchor: packet_anchor.ok_or("missing packet_anchor")?,
            jitter_ms: jitter_ms.ok_or("missing jitter_ms")?,
            arms,
            rows,
        })
    }

    fn row(&self, metric: Metric, channel: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.metric == metric && r.channel == channel)
    }

    /// Per-channel values of `metric` for one arm.
    pub fn channel_values(&self, metric: Metric, preset: Preset) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric && r.channel.parse::<usize>().is_ok())
            .filter_map(|r| match preset {
                Preset::Safe => r.safe,
                Preset::Reference => r.reference,
            })
            .collect()
    }

    /// `(mean d, std d, p)` of `metric`, when both arms were run.
    pub fn comparison(&self, metric: Metric) -> Option<(f64, f64, Option<f64>)> {
        let m = self.row(metric, "mean")?;
        let s = self.row(metric, "std")?;
        Some((m.d_percent?, s.d_percent?, m.p))
    }

    pub fn summary(&self) -> String {
        let n = self
            .channel_values(Metric::Amplitude, Preset::Safe)
            .len()
            .max(self.channel_values(Metric::Amplitude, Preset::Reference).len());
        let mut out = format!("VEP comparison: SAFE vs reference, mean ± std over {n} channels\n\n");
        let _ = writeln!(out, "{:<16} {:>18} {:>18} {:>18} {:>12}", "", "SAFE", "reference", "d (%)", "p");
        let pm = |m: Option<&MetricRow>, s: Option<&MetricRow>, pick: fn(&MetricRow) -> Option<f64>| match (
            m.and_then(pick),
            s.and_then(pick),
        ) {
            (Some(a), Some(b)) => format!("{a:.2} ± {b:.2}"),
            (Some(a), None) => format!("{a:.2}"),
            _ => "-".into(),
        };
        for metric in Metric::ALL {
            let (m, s) = (self.row(metric, "mean"), self.row(metric, "std"));
            let p = match m.and_then(|r| r.p) {
                Some(p) if p < 0.001 => format!("{p:.1e} *"),
                Some(p) => format!("{p:.4}"),
                None => "-".into(),
            };
            let _ = writeln!(
                out,
                "{:<16} {:>18} {:>18} {:>18} {:>12}",
                metric_label(metric),
                pm(m, s, |r| r.safe),
                pm(m, s, |r| r.reference),
                pm(m, s, |r| r.d_percent),
                p
            );
        }
        out.push_str("* p < 0.001 (one-sample two-tailed t-test of d against 0)\n\n");
        for a in &self.arms {
            let triggers = match a.preset {
                Preset::Safe => match self.packet_anchor {
                    PacketAnchor::End => {
                        "packet-granular triggers anchored at the end of the packet (anchor 0-40 ms after the flash)"
                            .to_owned()
                    }
                    PacketAnchor::Start => {
                        "packet-granular triggers anchored at the start of the packet (anchor 0-40 ms before the flash)"
                            .to_owned()
                    }
                },
                Preset::Reference => {
                    format!("sample-accurate triggers delayed by U[0, {}) ms", self.jitter_ms)
                }
            };
            let _ = writeln!(
                out,
                "{}: {} trials, {} clean, {} skipped at the edges, {}/{} packets received; {triggers}",
                a.preset, a.trials, a.clean, a.skipped, a.packets_received, a.packets_expected
            );
        }
        out.push_str(
            "d = 100 (reference - SAFE) / mean for amplitude and SNR, 100 (SAFE - reference) / mean for peak \
             time; negative d favours SAFE\n",
        );
        out
    }
}

fn parse_arm(body: &str) -> Option<ArmSummary> {
    let mut kv = body.split(',').map(|f| f.split_once('='));
    let mut next = |key: &str| -> Option<String> {
        match kv.next()? {
            Some((k, v)) if k == key => Some(v.to_owned()),
            _ => None,
        }
    };
    Some(ArmSummary {
        preset: Preset::parse(&next("arm")?)?,
        trials: next("trials")?.parse().ok()?,
        clean: next("clean")?.parse().ok()?,
        skipped: next("skipped")?.parse().ok()?,
        packets_expected: next("packets_expected")?.parse().ok()?,
        packets_received: next("packets_received")?.parse().ok()?,
    })
}
