//! Trace persistence: one record per robot per sampled tick.
//!
//! Line format is fixed for diffability: header first, then
//! `tick,id,x,y,heading,phase,gradient` with floats printed to six
//! fractional digits.

use crate::protocol::{Gradient, Phase, RobotId};
use thiserror::Error;

pub const TRACE_HEADER: &str = "tick,id,x,y,heading,phase,gradient";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {0}: {1}")]
    Malformed(usize, String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub tick: u64,
    pub id: RobotId,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub phase: Phase,
    pub gradient: Gradient,
}

impl TraceRecord {
    pub fn line(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{},{}",
            self.tick, self.id, self.x, self.y, self.heading, self.phase, self.gradient
        )
    }

    pub fn parse(line: &str, lineno: usize) -> Result<TraceRecord, TraceError> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(TraceError::Malformed(
                lineno,
                format!("expected 7 fields, found {}", fields.len()),
            ));
        }
        let bad = |what: &str| TraceError::Malformed(lineno, format!("bad {what}"));
        let gradient = match fields[6] {
            "INF" => Gradient::Infinity,
            h => Gradient::Hops(h.parse().map_err(|_| bad("gradient"))?),
        };
        Ok(TraceRecord {
            tick: fields[0].parse().map_err(|_| bad("tick"))?,
            id: fields[1].parse().map_err(|_| bad("id"))?,
            x: fields[2].parse().map_err(|_| bad("x"))?,
            y: fields[3].parse().map_err(|_| bad("y"))?,
            heading: fields[4].parse().map_err(|_| bad("heading"))?,
            phase: Phase::parse(fields[5]).ok_or_else(|| bad("phase"))?,
            gradient,
        })
    }
}

/// An in-memory trace: records grouped by sample tick, in emit order.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 48 + 64);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.line());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Trace, TraceError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header == TRACE_HEADER => {}
            Some((_, other)) => {
                return Err(TraceError::Malformed(1, format!("bad header '{other}'")))
            }
            None => return Err(TraceError::Malformed(1, "empty trace".into())),
        }
        let mut records = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            records.push(TraceRecord::parse(line, idx + 1)?);
        }
        Ok(Trace { records })
    }

    /// Distinct sample ticks, ascending.
    pub fn sample_ticks(&self) -> Vec<u64> {
        let mut ticks: Vec<u64> = self.records.iter().map(|r| r.tick).collect();
        ticks.dedup();
        ticks.sort_unstable();
        ticks.dedup();
        ticks
    }

    /// Records of one sample tick.
    pub fn at_tick(&self, tick: u64) -> Vec<&TraceRecord> {
        self.records.iter().filter(|r| r.tick == tick).collect()
    }

    pub fn robot_ids(&self) -> Vec<RobotId> {
        let mut ids: Vec<RobotId> = self.records.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}
