//! Quantification of the seven critique axes from recorded traces: fill
//! ratio against capacity, assembly time, periphery-only activity, isolation
//! deadlock, motility in body lengths per second, human interventions, hole
//! count, and surplus accounting.

use crate::config::ScenarioConfig;
use crate::controller::Mode;
use crate::events::{Event, EventKind};
use crate::exec::{par_map, Parallelism};
use crate::geom::{point_to_ray_distance, Vec2};
use crate::protocol::{Gradient, Phase};
use crate::shape::GridShape;
use crate::trace::{Trace, TraceRecord};
use std::f64::consts::TAU;
use thiserror::Error;

/// Motility context: reported swimming rates of E. coli and M. jannaschii,
/// in body lengths per second.
pub const MOTILITY_REFERENCE_LOW: f64 = 20.0;
pub const MOTILITY_REFERENCE_HIGH: f64 = 500.0;

/// Rays used by the enclosure test: one per 5 degrees.
pub const DEFAULT_ENCLOSURE_RAYS: usize = 72;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("shape has zero capacity at pitch {0}")]
    ZeroCapacity(f64),
    #[error("trace records no edge-following motion")]
    NoMotionRecorded,
    #[error("trace is empty")]
    EmptyTrace,
}

/// Per-run quantification of the seven critique axes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub fill_ratio: f64,
    /// Sample tick of the last observed join, or -1 while incomplete.
    pub assembly_ticks: i64,
    pub active_fraction_series: Vec<f64>,
    pub periphery_violations: usize,
    pub deadlocked_robots: usize,
    pub body_lengths_per_second: f64,
    pub human_interventions: usize,
    pub hole_count: usize,
    pub surplus_flagged: usize,
    pub surplus_expected: usize,
}

impl MetricsReport {
    /// Flat key-value document, keys in declaration order; the motility
    /// reference constants ride along after the measured value.
    pub fn to_text(&self) -> String {
        let series = self
            .active_fraction_series
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "fill_ratio = {:.9}\n\
             assembly_ticks = {}\n\
             active_fraction_series = {}\n\
             periphery_violations = {}\n\
             deadlocked_robots = {}\n\
             body_lengths_per_second = {:.9}\n\
             motility_reference_low = {:.1}\n\
             motility_reference_high = {:.1}\n\
             human_interventions = {}\n\
             hole_count = {}\n\
             surplus_flagged = {}\n\
             surplus_expected = {}\n",
            self.fill_ratio,
            self.assembly_ticks,
            series,
            self.periphery_violations,
            self.deadlocked_robots,
            self.body_lengths_per_second,
            MOTILITY_REFERENCE_LOW,
            MOTILITY_REFERENCE_HIGH,
            self.human_interventions,
            self.hole_count,
            self.surplus_flagged,
            self.surplus_expected,
        )
    }
}

/// World-to-seed-frame mapping agreed by an extended-mode run. Identity for
/// baseline runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTransform {
    /// Direction cosine/sine of the frame's +x axis in world coordinates.
    pub rotation: (f64, f64),
    /// World position of the frame origin.
    pub translation: (f64, f64),
    /// Whether the frame is a reflection of world coordinates.
    pub reflected: bool,
}

impl FrameTransform {
    pub fn identity() -> Self {
        FrameTransform {
            rotation: (1.0, 0.0),
            translation: (0.0, 0.0),
            reflected: false,
        }
    }

    pub fn world_to_frame(&self, p: Vec2) -> Vec2 {
        let d = p - Vec2::new(self.translation.0, self.translation.1);
        let (c, s) = self.rotation;
        let x = c * d.x + s * d.y;
        let y = -s * d.x + c * d.y;
        Vec2::new(x, if self.reflected { -y } else { y })
    }

    pub fn frame_to_world(&self, p: Vec2) -> Vec2 {
        let y = if self.reflected { -p.y } else { p.y };
        let (c, s) = self.rotation;
        Vec2::new(
            self.translation.0 + c * p.x - s * y,
            self.translation.1 + s * p.x + c * y,
        )
    }
}

/// Extract the agreed frame (and the frame-space shape origin) from the
/// event log, if the run recorded one.
pub fn frame_from_events(events: &[Event]) -> Option<(FrameTransform, Vec2)> {
    events.iter().find_map(|e| match e.kind {
        EventKind::FrameAgreed {
            rotation,
            translation,
            reflected,
            shape_origin,
        } => Some((
            FrameTransform {
                rotation,
                translation,
                reflected,
            },
            Vec2::new(shape_origin.0, shape_origin.1),
        )),
        _ => None,
    })
}

/// Structure members (Seed or Joined) whose centers lie inside the shape,
/// divided by the shape's capacity at the packing pitch.
pub fn fill_ratio(
    final_sample: &[&TraceRecord],
    shape: &GridShape,
    frame: &FrameTransform,
    pitch: f64,
) -> Result<f64, MetricsError> {
    let capacity = shape.capacity(pitch);
    if capacity == 0 {
        return Err(MetricsError::ZeroCapacity(pitch));
    }
    let members = final_sample
        .iter()
        .filter(|r| r.phase.is_member())
        .filter(|r| shape.contains(frame.world_to_frame(Vec2::new(r.x, r.y))))
        .count();
    Ok(members as f64 / capacity as f64)
}

/// Mean mover speed normalized by body length: over every pair of
/// consecutive samples where a robot stayed in EdgeFollow, displacement per
/// second divided by the robot diameter.
pub fn motility_index(
    trace: &Trace,
    diameter: f64,
    tick_duration: f64,
) -> Result<f64, MetricsError> {
    let ticks = trace.sample_ticks();
    if ticks.is_empty() {
        return Err(MetricsError::EmptyTrace);
    }
    let mut total = 0.0;
    let mut intervals = 0usize;
    for window in ticks.windows(2) {
        let (t0, t1) = (window[0], window[1]);
        let dt = (t1 - t0) as f64 * tick_duration;
        let before = trace.at_tick(t0);
        let after = trace.at_tick(t1);
        for b in &before {
            if b.phase != Phase::EdgeFollow {
                continue;
            }
            let Some(a) = after.iter().find(|r| r.id == b.id) else {
                continue;
            };
            if a.phase != Phase::EdgeFollow {
                continue;
            }
            let displacement = Vec2::new(a.x - b.x, a.y - b.y).norm();
            total += displacement / diameter / dt;
            intervals += 1;
        }
    }
    if intervals == 0 {
        return Err(MetricsError::NoMotionRecorded);
    }
    Ok(total / intervals as f64)
}

/// Count (sampled tick, mover) pairs where the mover is fully enclosed:
/// every probe ray from its center crosses some stationary robot disc. The
/// baseline algorithm should never enclose a mover; each violation is a
/// counterexample to periphery-only activity.
pub fn periphery_violations(
    trace: &Trace,
    sample_stride: usize,
    diameter: f64,
    rays: usize,
) -> usize {
    let stride = sample_stride.max(1);
    let ticks: Vec<u64> = trace
        .sample_ticks()
        .into_iter()
        .step_by(stride)
        .collect();
    let per_tick = par_map(ticks, Parallelism::Parallel, |tick| {
        let records = trace.at_tick(tick);
        let stationary: Vec<Vec2> = records
            .iter()
            .filter(|r| r.phase.is_stationary())
            .map(|r| Vec2::new(r.x, r.y))
            .collect();
        records
            .iter()
            .filter(|r| r.phase == Phase::EdgeFollow)
            .filter(|r| is_enclosed(Vec2::new(r.x, r.y), &stationary, diameter, rays))
            .count()
    });
    per_tick.into_iter().sum()
}

/// True iff every probe ray from `center` is blocked by a stationary disc.
pub fn is_enclosed(center: Vec2, stationary: &[Vec2], diameter: f64, rays: usize) -> bool {
    let radius = diameter / 2.0;
    (0..rays).all(|k| {
        let theta = TAU * k as f64 / rays as f64;
        let dir = Vec2::from_angle(theta);
        stationary
            .iter()
            .any(|&disc| point_to_ray_distance(disc, center, dir) < radius)
    })
}

/// Count simulated human interventions recorded in the event log. Baseline
/// runs perform exactly two (seed placement, surplus sweep); extended runs
/// only what fallbacks forced.
pub fn intervention_count(mode: Mode, events: &[Event]) -> usize {
    let _ = mode;
    events
        .iter()
        .filter(|e| {
            matches!(
                e.kind,
                EventKind::SeedsPlaced | EventKind::SurplusSwept { .. } | EventKind::SeedFallback
            )
        })
        .count()
}

/// Robots that sat in WaitToMove with an infinite gradient for every sample
/// up to the harness sweep (if any): the neighbor-dependency deadlock.
pub fn deadlocked_robots(trace: &Trace, sweep_tick: Option<u64>) -> usize {
    let horizon = sweep_tick.unwrap_or(u64::MAX);
    trace
        .robot_ids()
        .into_iter()
        .filter(|&id| {
            let mut saw_any = false;
            let stuck = trace
                .records
                .iter()
                .filter(|r| r.id == id && r.tick < horizon)
                .all(|r| {
                    saw_any = true;
                    r.phase == Phase::WaitToMove && r.gradient == Gradient::Infinity
                });
            saw_any && stuck
        })
        .count()
}

/// Build the full report from a run's persisted outputs.
pub fn build_report(
    trace: &Trace,
    events: &[Event],
    shape: &GridShape,
    config: &ScenarioConfig,
) -> Result<MetricsReport, MetricsError> {
    let ticks = trace.sample_ticks();
    let last_tick = *ticks.last().ok_or(MetricsError::EmptyTrace)?;
    let final_sample = trace.at_tick(last_tick);
    let robot_count = trace.robot_ids().len();

    let (frame, shape) = match frame_from_events(events) {
        Some((frame, origin)) => (frame, shape.clone().with_origin(origin)),
        None => (FrameTransform::identity(), shape.clone()),
    };
    let pitch = config.packing_pitch();
    let fill = fill_ratio(&final_sample, &shape, &frame, pitch)?;

    let active_fraction_series: Vec<f64> = ticks
        .iter()
        .map(|&t| {
            let records = trace.at_tick(t);
            if records.is_empty() {
                0.0
            } else {
                let movers = records
                    .iter()
                    .filter(|r| r.phase == Phase::EdgeFollow)
                    .count();
                movers as f64 / records.len() as f64
            }
        })
        .collect();

    // Last join: first sample at which each eventually-joined robot shows
    // Joined, maximized over robots.
    let mut last_join: Option<u64> = None;
    for id in trace.robot_ids() {
        let first_joined = trace
            .records
            .iter()
            .filter(|r| r.id == id && r.phase == Phase::Joined)
            .map(|r| r.tick)
            .min();
        if let Some(t) = first_joined {
            last_join = Some(last_join.map_or(t, |cur| cur.max(t)));
        }
    }
    let all_terminal_pre_sweep = {
        let sweep_tick = events.iter().find_map(|e| match e.kind {
            EventKind::SurplusSwept { .. } => Some(e.tick),
            _ => None,
        });
        match sweep_tick {
            None => final_sample.iter().all(|r| r.phase.is_terminal()),
            Some(_) => false,
        }
    };
    let completed = fill >= config.completion_threshold || all_terminal_pre_sweep;
    let assembly_ticks = if completed {
        last_join.map(|t| t as i64).unwrap_or(0)
    } else {
        -1
    };

    let motility = match motility_index(trace, config.world.robot_diameter, config.world.tick_duration)
    {
        Ok(v) => v,
        Err(MetricsError::NoMotionRecorded) => 0.0,
        Err(e) => return Err(e),
    };

    let sweep_tick = events.iter().find_map(|e| match e.kind {
        EventKind::SurplusSwept { .. } => Some(e.tick),
        _ => None,
    });

    let surplus_flagged = final_sample
        .iter()
        .filter(|r| r.phase == Phase::Surplus)
        .count();
    let capacity = shape.capacity(pitch);
    let surplus_expected = robot_count.saturating_sub(capacity);

    Ok(MetricsReport {
        fill_ratio: fill,
        assembly_ticks,
        active_fraction_series,
        periphery_violations: periphery_violations(
            trace,
            1,
            config.world.robot_diameter,
            DEFAULT_ENCLOSURE_RAYS,
        ),
        deadlocked_robots: deadlocked_robots(trace, sweep_tick),
        body_lengths_per_second: motility,
        human_interventions: intervention_count(config.mode, events),
        hole_count: shape.count_holes(),
        surplus_flagged,
        surplus_expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::load_shape;

    fn record(
        tick: u64,
        id: u32,
        x: f64,
        y: f64,
        phase: Phase,
        gradient: Gradient,
    ) -> TraceRecord {
        TraceRecord {
            tick,
            id,
            x,
            y,
            heading: 0.0,
            phase,
            gradient,
        }
    }

    #[test]
    fn fill_ratio_empty_world() {
        let shape = load_shape("#####\n#####\n#####", 0.05).unwrap();
        let sample: Vec<&TraceRecord> = vec![];
        let fill = fill_ratio(&sample, &shape, &FrameTransform::identity(), 0.05).unwrap();
        assert_eq!(fill, 0.0);
    }

    #[test]
    fn fill_ratio_counts_members_inside() {
        let shape = load_shape("#####\n#####\n#####", 0.05).unwrap();
        let pitch = 0.05;
        let capacity = shape.capacity(pitch);
        assert!(capacity > 0);
        let inside = record(10, 0, 0.12, 0.07, Phase::Joined, Gradient::Hops(1));
        let seed = record(10, 1, 0.02, 0.02, Phase::Seed, Gradient::ZERO);
        let outside = record(10, 2, -0.5, 0.0, Phase::Joined, Gradient::Hops(2));
        let waiting = record(10, 3, 0.1, 0.1, Phase::WaitToMove, Gradient::Hops(3));
        let sample = vec![&inside, &seed, &outside, &waiting];
        let fill = fill_ratio(&sample, &shape, &FrameTransform::identity(), pitch).unwrap();
        assert!((fill - 2.0 / capacity as f64).abs() < 1e-12);
    }

    #[test]
    fn fill_ratio_seven_of_ten_sites() {
        // A 10x2 strip at unit cells holds exactly one lattice row of ten
        // sites at unit pitch.
        let shape = load_shape("##########\n##########", 1.0).unwrap();
        assert_eq!(shape.capacity(1.0), 10);
        let sites = shape.capacity_sites(1.0);
        let records: Vec<TraceRecord> = sites
            .iter()
            .take(7)
            .enumerate()
            .map(|(i, s)| record(50, i as u32, s.x, s.y, Phase::Joined, Gradient::Hops(1)))
            .collect();
        let sample: Vec<&TraceRecord> = records.iter().collect();
        let fill = fill_ratio(&sample, &shape, &FrameTransform::identity(), 1.0).unwrap();
        assert!((fill - 0.7).abs() < 1e-12);
    }

    #[test]
    fn fill_ratio_zero_capacity_errors() {
        let shape = load_shape("#", 0.01).unwrap();
        let sample: Vec<&TraceRecord> = vec![];
        assert_eq!(
            fill_ratio(&sample, &shape, &FrameTransform::identity(), 1.0),
            Err(MetricsError::ZeroCapacity(1.0))
        );
    }

    #[test]
    fn motility_constant_speed_synthetic() {
        // One robot moving 0.001 m/tick along x, diameter 0.033,
        // tick_duration 0.03125: index = 0.001/0.033/0.03125.
        let speed = 0.001;
        let mut records = Vec::new();
        for k in 0..20u64 {
            let tick = k * 10;
            records.push(record(
                tick,
                0,
                speed * tick as f64,
                0.0,
                Phase::EdgeFollow,
                Gradient::Hops(2),
            ));
        }
        let trace = Trace { records };
        let got = motility_index(&trace, 0.033, 0.03125).unwrap();
        let want = speed / 0.033 / 0.03125;
        assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
    }

    #[test]
    fn motility_requires_motion() {
        let trace = Trace {
            records: vec![record(0, 0, 0.0, 0.0, Phase::WaitToMove, Gradient::Infinity)],
        };
        assert_eq!(
            motility_index(&trace, 0.033, 0.03125),
            Err(MetricsError::NoMotionRecorded)
        );
    }

    #[test]
    fn enclosure_open_mover_not_enclosed() {
        // A mover orbiting a convex cluster always has an escape ray.
        let stationary = vec![Vec2::new(0.05, 0.0), Vec2::new(0.08, 0.0)];
        assert!(!is_enclosed(Vec2::ZERO, &stationary, 0.033, 72));
    }

    #[test]
    fn enclosure_ringed_mover_detected() {
        // Twelve discs on a tight ring around the mover block every ray.
        let mut ring = Vec::new();
        for k in 0..12 {
            let theta = TAU * k as f64 / 12.0;
            ring.push(Vec2::from_angle(theta) * 0.04);
        }
        assert!(is_enclosed(Vec2::ZERO, &ring, 0.033, 72));
    }

    #[test]
    fn periphery_violation_counting() {
        let mut ring: Vec<TraceRecord> = (0..12)
            .map(|k| {
                let theta = TAU * k as f64 / 12.0;
                let p = Vec2::from_angle(theta) * 0.04;
                record(0, k + 1, p.x, p.y, Phase::Joined, Gradient::Hops(1))
            })
            .collect();
        ring.push(record(0, 0, 0.0, 0.0, Phase::EdgeFollow, Gradient::Hops(2)));
        let trace = Trace { records: ring };
        assert_eq!(periphery_violations(&trace, 1, 0.033, 72), 1);
    }

    #[test]
    fn deadlock_counting() {
        let records = vec![
            record(0, 0, 0.0, 0.0, Phase::WaitToMove, Gradient::Infinity),
            record(100, 0, 0.0, 0.0, Phase::WaitToMove, Gradient::Infinity),
            record(0, 1, 0.1, 0.0, Phase::WaitToMove, Gradient::Hops(2)),
            record(100, 1, 0.1, 0.0, Phase::EdgeFollow, Gradient::Hops(2)),
        ];
        let trace = Trace { records };
        assert_eq!(deadlocked_robots(&trace, None), 1);
    }

    #[test]
    fn deadlock_ignores_post_sweep_phases() {
        let records = vec![
            record(0, 0, 0.0, 0.0, Phase::WaitToMove, Gradient::Infinity),
            record(100, 0, 0.0, 0.0, Phase::Surplus, Gradient::Infinity),
        ];
        let trace = Trace { records };
        assert_eq!(deadlocked_robots(&trace, Some(100)), 1);
        assert_eq!(deadlocked_robots(&trace, None), 0);
    }

    #[test]
    fn intervention_counting() {
        let baseline = vec![
            Event {
                tick: 0,
                kind: EventKind::SeedsPlaced,
            },
            Event {
                tick: 900,
                kind: EventKind::SurplusSwept { count: 3 },
            },
        ];
        assert_eq!(intervention_count(Mode::Baseline, &baseline), 2);
        assert_eq!(intervention_count(Mode::Extended, &[]), 0);
        let fallback = vec![Event {
            tick: 50,
            kind: EventKind::SeedFallback,
        }];
        assert_eq!(intervention_count(Mode::Extended, &fallback), 1);
    }

    #[test]
    fn frame_transform_roundtrip() {
        let frame = FrameTransform {
            rotation: (0.6, 0.8),
            translation: (0.3, -0.1),
            reflected: true,
        };
        let p = Vec2::new(0.17, 0.23);
        let roundtrip = frame.frame_to_world(frame.world_to_frame(p));
        assert!(roundtrip.distance(p) < 1e-12);
    }

    #[test]
    fn report_text_is_stable() {
        let report = MetricsReport {
            fill_ratio: 1.0,
            assembly_ticks: 420,
            active_fraction_series: vec![0.0, 0.25],
            periphery_violations: 0,
            deadlocked_robots: 0,
            body_lengths_per_second: 1.0,
            human_interventions: 2,
            hole_count: 0,
            surplus_flagged: 4,
            surplus_expected: 4,
        };
        let text = report.to_text();
        assert!(text.starts_with("fill_ratio = 1.000000000\n"));
        assert!(text.contains("active_fraction_series = 0.000000,0.250000\n"));
        assert!(text.contains("motility_reference_low = 20.0\n"));
        assert!(text.contains("motility_reference_high = 500.0\n"));
        assert!(text.ends_with("surplus_expected = 4\n"));
    }
}
