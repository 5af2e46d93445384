//! Stimulus trigger labels.
//!
//! The wired reference amplifier records triggers on a dedicated input and
//! knows the exact sample. The wireless device only learns which packet was
//! in flight when the trigger arrived, so its labels are packet-granular.
//! [`jitter_triggers`] delays sample-accurate triggers by a uniform random
//! amount to put both arms on the same footing.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::device::DeviceSpec;
use crate::rng;
use crate::transport::Packet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriggerError {
    #[error("trigger time {0} s is negative or not finite")]
    BadTime(f64),
    #[error("jitter range must be nonnegative, got {0} ms")]
    BadRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LabelMode {
    SampleAccurate,
    PacketGranular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerLabel {
    Sample(usize),
    Packet(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerEvent {
    /// When the trigger was registered (after any simulated jitter).
    pub true_time_s: f64,
    pub label: TriggerLabel,
}

/// Where a packet-granular trigger anchors its epoch.
///
/// `End` (the default) anchors at the first frame after the packet, so the
/// anchor trails the event by 0..=40 ms exactly like the uniform delay
/// applied by [`jitter_triggers`]. `Start` anchors at the packet's first
/// frame, 0..40 ms ahead of the event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PacketAnchor {
    Start,
    #[default]
    End,
}

impl PacketAnchor {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Start => "start",
            Self::End => "end",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "start" => Some(Self::Start),
            "end" => Some(Self::End),
            _ => None,
        }
    }
}

impl TriggerEvent {
    pub fn mode(&self) -> LabelMode {
        match self.label {
            TriggerLabel::Sample(_) => LabelMode::SampleAccurate,
            TriggerLabel::Packet(_) => LabelMode::PacketGranular,
        }
    }

    /// Epoch anchor frame for this trigger.
    pub fn anchor_frame(&self, spec: &DeviceSpec, anchor: PacketAnchor) -> usize {
        match (self.label, anchor) {
            (TriggerLabel::Sample(i), _) => i,
            (TriggerLabel::Packet(seq), PacketAnchor::Start) => seq as usize * spec.frames_per_packet,
            (TriggerLabel::Packet(seq), PacketAnchor::End) => (seq as usize + 1) * spec.frames_per_packet,
        }
    }
}

fn check_time(t: f64) -> Result<f64, TriggerError> {
    if t.is_finite() && t >= 0.0 {
        Ok(t)
    } else {
        Err(TriggerError::BadTime(t))
    }
}

/// Packet containing time `t` under the half-open span rule.
pub fn packet_of(t_s: f64, spec: &DeviceSpec) -> u32 {
    // exact frame arithmetic so boundary instants land in the later packet
    let frames = t_s * spec.sample_rate_hz;
    (libm::floor(frames / spec.frames_per_packet as f64)) as u32
}

/// Nearest-sample labels.
pub fn label_sample_accurate(times: &[f64], spec: &DeviceSpec) -> Result<Vec<TriggerEvent>, TriggerError> {
    times
        .iter()
        .map(|&t| {
            let t = check_time(t)?;
            let sample = libm::round(t * spec.sample_rate_hz) as usize;
            Ok(TriggerEvent { true_time_s: t, label: TriggerLabel::Sample(sample) })
        })
        .collect()
}

/// Labels each trigger with the packet in flight at that time.
pub fn label_packet_granular(times: &[f64], spec: &DeviceSpec) -> Result<Vec<TriggerEvent>, TriggerError> {
    times
        .iter()
        .map(|&t| {
            let t = check_time(t)?;
            Ok(TriggerEvent { true_time_s: t, label: TriggerLabel::Packet(packet_of(t, spec)) })
        })
        .collect()
}

/// Delays each time by an independent draw from `U[0, range_ms)`.
pub fn jitter_triggers(times: &[f64], range_ms: f64, seed: u64) -> Result<Vec<f64>, TriggerError> {
    if !(range_ms.is_finite() && range_ms >= 0.0) {
        return Err(TriggerError::BadRange(range_ms));
    }
    if range_ms == 0.0 {
        return Ok(times.to_vec());
    }
    let mut rng = rng::seeded(seed);
    let range_s = range_ms * 1e-3;
    Ok(times
        .iter()
        .map(|&t| {
            let u: f64 = rng.random();
            let shifted = t + u * range_s;
            // guard the open upper bound against rounding
            if shifted >= t + range_s {
                libm::nextafter(t + range_s, t)
            } else {
                shifted
            }
        })
        .collect())
}

/// Sets `trigger_flag` on every packet whose span contains a trigger time.
///
/// Packet `seq` spans `[seq, seq + 1) * frames_per_packet / fs`; the result
/// depends only on the timestamps, not on the order they are supplied in.
pub fn flag_trigger_packets(packets: &mut [Packet], times: &[f64], spec: &DeviceSpec) {
    let mut seqs: Vec<u32> =
        times.iter().filter(|t| t.is_finite() && **t >= 0.0).map(|&t| packet_of(t, spec)).collect();
    seqs.sort_unstable();
    seqs.dedup();
    for p in packets.iter_mut() {
        p.trigger_flag = seqs.binary_search(&p.seq).is_ok();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::SampleFrame;
    use crate::transport::packetize;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn sample_accurate_examples() {
        let spec = DeviceSpec::safe();
        let ev = label_sample_accurate(&[0.0, 1.0101], &spec).unwrap();
        assert_eq!(ev[0].label, TriggerLabel::Sample(0));
        assert_eq!(ev[1].label, TriggerLabel::Sample(1034));
        assert_eq!(ev[0].mode(), LabelMode::SampleAccurate);
        let flashes: Vec<f64> = (0..297).map(|k| k as f64 / 0.99).collect();
        let ev = label_sample_accurate(&flashes, &spec).unwrap();
        assert_eq!(ev.len(), 297);
        assert!(ev.windows(2).all(|w| match (w[0].label, w[1].label) {
            (TriggerLabel::Sample(a), TriggerLabel::Sample(b)) => a < b,
            _ => false,
        }));
        assert_eq!(label_sample_accurate(&[-0.1], &spec), Err(TriggerError::BadTime(-0.1)));
    }

    #[test]
    fn packet_granular_examples() {
        let spec = DeviceSpec::safe();
        let ev = label_packet_granular(&[0.100, 0.0, 0.3000, 0.3012], &spec).unwrap();
        assert_eq!(ev[0].label, TriggerLabel::Packet(2));
        assert_eq!(ev[1].label, TriggerLabel::Packet(0));
        assert_eq!(ev[2].label, ev[3].label);
        assert_eq!(ev[0].mode(), LabelMode::PacketGranular);
        assert!(label_packet_granular(&[f64::NAN], &spec).is_err());
    }

    #[test]
    fn boundary_goes_to_later_packet() {
        let spec = DeviceSpec::safe();
        let t = 41.0 / 1024.0;
        assert_eq!(packet_of(t, &spec), 1);
    }

    #[test]
    fn jitter_examples() {
        let times: Vec<f64> = (0..10_000).map(|k| k as f64 * 0.5).collect();
        assert_eq!(jitter_triggers(&times, 0.0, 1).unwrap(), times);
        let j = jitter_triggers(&times, 40.0, 1).unwrap();
        let mean_ms = times.iter().zip(&j).map(|(a, b)| (b - a) * 1e3).sum::<f64>() / times.len() as f64;
        assert!((mean_ms - 20.0).abs() <= 0.5, "{mean_ms}");
        assert!(times.iter().zip(&j).all(|(a, b)| b >= a && *b < a + 0.040));
        assert_eq!(j, jitter_triggers(&times, 40.0, 1).unwrap());
        assert!(jitter_triggers(&times, -1.0, 1).is_err());
    }

    #[test]
    fn flags_follow_timestamps() {
        let spec = DeviceSpec::safe();
        let frames: Vec<SampleFrame> =
            (0..410).map(|i| SampleFrame { frame_index: i, channel_values_uv: vec![0.0; 6] }).collect();
        let mut packets = packetize(&frames, &spec).unwrap();
        let times = [0.100, 41.0 / 1024.0, 0.101];
        flag_trigger_packets(&mut packets, &times, &spec);
        let flagged: Vec<u32> = packets.iter().filter(|p| p.trigger_flag).map(|p| p.seq).collect();
        assert_eq!(flagged, vec![1, 2]);
        let mut again = packets.clone();
        flag_trigger_packets(&mut again, &[0.101, 0.100, 41.0 / 1024.0], &spec);
        assert_eq!(again, packets);
    }

    proptest! {
        #[test]
        fn anchor_offsets(t in 0.0f64..600.0) {
            let spec = DeviceSpec::safe();
            let fpp = spec.frames_per_packet;
            let s = label_sample_accurate(&[t], &spec).unwrap()[0].anchor_frame(&spec, PacketAnchor::Start);
            let p = label_packet_granular(&[t], &spec).unwrap()[0];
            let start = p.anchor_frame(&spec, PacketAnchor::Start);
            let end = p.anchor_frame(&spec, PacketAnchor::End);
            // the sample anchor rounds, so it may reach the next packet's first frame
            prop_assert!(s >= start && s - start <= fpp);
            prop_assert!(end >= s && end - s <= fpp);
            let frame = t * spec.sample_rate_hz;
            prop_assert!(start as f64 <= frame && frame < end as f64);
        }
    }
}
