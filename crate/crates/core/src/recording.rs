//! A persisted session: device parameters, the reassembled record and its
//! trigger labels.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::device::{DeviceError, DeviceSpec};
use crate::transport::{packet_count, ContiguousRecord};
use crate::trigger::{PacketAnchor, TriggerEvent, TriggerLabel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordingError {
    #[error(transparent)]
    Spec(#[from] DeviceError),
    #[error("record has {found} channels, spec has {expected}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("trigger {index} refers to {what} outside the session")]
    TriggerOutOfSession { index: usize, what: &'static str },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionMeta {
    pub seed: u64,
    /// Free-form description of the stimulus, e.g. `sine amplitude_uv=50 freq_hz=20`.
    pub source: String,
    pub start_time: String,
    pub packet_anchor: PacketAnchor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub spec: DeviceSpec,
    pub record: ContiguousRecord,
    pub triggers: Vec<TriggerEvent>,
    pub meta: SessionMeta,
}

impl Recording {
    pub fn new(
        spec: DeviceSpec,
        record: ContiguousRecord,
        triggers: Vec<TriggerEvent>,
        meta: SessionMeta,
    ) -> Result<Self, RecordingError> {
        let rec = Self { spec, record, triggers, meta };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<(), RecordingError> {
        self.spec.validate()?;
        if self.record.channel_count() != self.spec.channel_count {
            return Err(RecordingError::ChannelMismatch {
                expected: self.spec.channel_count,
                found: self.record.channel_count(),
            });
        }
        let frames = self.record.total_frames();
        let packets = packet_count(frames, &self.spec);
        for (index, t) in self.triggers.iter().enumerate() {
            match t.label {
                TriggerLabel::Sample(i) if i >= frames => {
                    return Err(RecordingError::TriggerOutOfSession { index, what: "a sample" })
                }
                TriggerLabel::Packet(seq) if seq as usize >= packets => {
                    return Err(RecordingError::TriggerOutOfSession { index, what: "a packet" })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Epoch anchor frames of all triggers, in trigger order.
    pub fn anchor_frames(&self) -> Vec<usize> {
        self.triggers.iter().map(|t| t.anchor_frame(&self.spec, self.meta.packet_anchor)).collect()
    }
}
