use std::collections::HashMap;

use thiserror::Error;

use crate::model::{Candidate, FrameTrace};
use crate::router::{BackendError, CloudBackend, EdgeBackend};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate frame id `{0}`")]
pub struct DuplicateFrame(pub String);

/// Immutable in-memory trace serving both backend contracts by frame id.
#[derive(Debug, Clone, Default)]
pub struct TraceStore {
    frames: Vec<FrameTrace>,
    index: HashMap<String, usize>,
}

impl TraceStore {
    pub fn new(frames: Vec<FrameTrace>) -> Result<Self, DuplicateFrame> {
        let mut index = HashMap::with_capacity(frames.len());
        for (i, f) in frames.iter().enumerate() {
            if index.insert(f.frame_id.clone(), i).is_some() {
                return Err(DuplicateFrame(f.frame_id.clone()));
            }
        }
        Ok(Self { frames, index })
    }

    pub fn frames(&self) -> &[FrameTrace] {
        &self.frames
    }

    pub fn get(&self, frame_id: &str) -> Option<&FrameTrace> {
        self.index.get(frame_id).map(|&i| &self.frames[i])
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    fn lookup(&self, frame_id: &str) -> Result<&FrameTrace, BackendError> {
        self.get(frame_id)
            .ok_or_else(|| BackendError::UnknownFrame(frame_id.to_owned()))
    }
}

impl EdgeBackend for TraceStore {
    fn detect(&self, frame_id: &str) -> Result<Vec<Candidate>, BackendError> {
        Ok(self.lookup(frame_id)?.edge_candidates.clone())
    }
}

impl CloudBackend for TraceStore {
    fn describe(&self, frame_id: &str) -> Result<String, BackendError> {
        Ok(self.lookup(frame_id)?.cloud_text.clone())
    }
}
