//! Run event log: `tick,kind,payload`, one event per line. The log is part
//! of the deterministic run output and carries everything metric
//! recomputation needs beyond the trace (interventions, the seed frame).

use crate::protocol::RobotId;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("event line {0}: {1}")]
    Malformed(usize, String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Harness placed the seed cluster (intervention in baseline mode).
    SeedsPlaced,
    /// Harness flagged leftover robots at completion (intervention).
    SurplusSwept { count: usize },
    /// Harness fell back to manual seeding after election stalled.
    SeedFallback,
    /// A robot departed the waiting cluster.
    Depart { id: RobotId },
    /// A robot joined the structure.
    Join { id: RobotId },
    /// A robot flagged itself surplus.
    SurplusFlagged { id: RobotId },
    /// The election decided; payload is the leader id.
    LeaderElected { id: RobotId },
    /// Seed cluster agreed on its frame; payload is the world-to-frame
    /// transform (cos, sin, tx, ty, reflect) and the shape origin.
    FrameAgreed {
        rotation: (f64, f64),
        translation: (f64, f64),
        reflected: bool,
        shape_origin: (f64, f64),
    },
    /// Completion detected (fill ratio crossed the threshold).
    Completed,
    /// A runtime error was recorded; the run continues or aborts per cause.
    Error { detail: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub tick: u64,
    pub kind: EventKind,
}

impl Event {
    pub fn line(&self) -> String {
        let (kind, payload) = match &self.kind {
            EventKind::SeedsPlaced => ("seeds-placed", String::new()),
            EventKind::SurplusSwept { count } => ("surplus-swept", count.to_string()),
            EventKind::SeedFallback => ("seed-fallback", String::new()),
            EventKind::Depart { id } => ("depart", id.to_string()),
            EventKind::Join { id } => ("join", id.to_string()),
            EventKind::SurplusFlagged { id } => ("surplus-flagged", id.to_string()),
            EventKind::LeaderElected { id } => ("leader-elected", id.to_string()),
            EventKind::FrameAgreed {
                rotation,
                translation,
                reflected,
                shape_origin,
            } => (
                "frame-agreed",
                format!(
                    "{:.9};{:.9};{:.9};{:.9};{};{:.9};{:.9}",
                    rotation.0,
                    rotation.1,
                    translation.0,
                    translation.1,
                    u8::from(*reflected),
                    shape_origin.0,
                    shape_origin.1
                ),
            ),
            EventKind::Completed => ("completed", String::new()),
            EventKind::Error { detail } => ("error", detail.clone()),
        };
        if payload.is_empty() {
            format!("{},{}", self.tick, kind)
        } else {
            format!("{},{},{}", self.tick, kind, payload)
        }
    }

    pub fn parse(line: &str, lineno: usize) -> Result<Event, EventError> {
        let mut parts = line.splitn(3, ',');
        let bad = |what: &str| EventError::Malformed(lineno, what.to_string());
        let tick: u64 = parts
            .next()
            .ok_or_else(|| bad("missing tick"))?
            .parse()
            .map_err(|_| bad("bad tick"))?;
        let kind_tag = parts.next().ok_or_else(|| bad("missing kind"))?;
        let payload = parts.next().unwrap_or("");
        let parse_id = |p: &str| -> Result<RobotId, EventError> {
            p.parse().map_err(|_| bad("bad robot id"))
        };
        let kind = match kind_tag {
            "seeds-placed" => EventKind::SeedsPlaced,
            "surplus-swept" => EventKind::SurplusSwept {
                count: payload.parse().map_err(|_| bad("bad count"))?,
            },
            "seed-fallback" => EventKind::SeedFallback,
            "depart" => EventKind::Depart {
                id: parse_id(payload)?,
            },
            "join" => EventKind::Join {
                id: parse_id(payload)?,
            },
            "surplus-flagged" => EventKind::SurplusFlagged {
                id: parse_id(payload)?,
            },
            "leader-elected" => EventKind::LeaderElected {
                id: parse_id(payload)?,
            },
            "frame-agreed" => {
                let fields: Vec<&str> = payload.split(';').collect();
                if fields.len() != 7 {
                    return Err(bad("bad frame payload"));
                }
                let f = |i: usize| -> Result<f64, EventError> {
                    fields[i].parse().map_err(|_| bad("bad frame field"))
                };
                EventKind::FrameAgreed {
                    rotation: (f(0)?, f(1)?),
                    translation: (f(2)?, f(3)?),
                    reflected: fields[4] == "1",
                    shape_origin: (f(5)?, f(6)?),
                }
            }
            "completed" => EventKind::Completed,
            "error" => EventKind::Error {
                detail: payload.to_string(),
            },
            other => return Err(EventError::Malformed(lineno, format!("unknown kind {other}"))),
        };
        Ok(Event { tick, kind })
    }
}

pub fn to_text(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.line());
        out.push('\n');
    }
    out
}

/// Parse an event log. The trailing `digest = <hex>` line written by the
/// runner is metadata, not an event, and is skipped.
pub fn from_text(text: &str) -> Result<Vec<Event>, EventError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with("digest"))
        .map(|(i, l)| Event::parse(l, i + 1))
        .collect()
}

/// Extract the digest line from a persisted event log.
pub fn digest_from_text(text: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix("digest = "))
        .map(str::to_string)
}
