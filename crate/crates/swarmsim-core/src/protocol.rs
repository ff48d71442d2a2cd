//! Per-robot distributed algorithms: hop-count gradient formation,
//! trilateration localization, min-ID leader election, seed-cluster
//! selection, and quiescence-based completion/surplus detection.
//!
//! Every operation here is a pure state transition over (own state, inbox,
//! measurements); robots never share mutable state, so evaluation order
//! within a tick is irrelevant.

use crate::geom::Vec2;
use std::fmt;
use thiserror::Error;

pub type RobotId = u32;

/// Hop-count distance to the nearest seed, or unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gradient {
    Hops(u32),
    Infinity,
}

impl Gradient {
    pub const ZERO: Gradient = Gradient::Hops(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Gradient::Hops(_))
    }

    pub fn successor(self) -> Gradient {
        match self {
            Gradient::Hops(h) => Gradient::Hops(h.saturating_add(1)),
            Gradient::Infinity => Gradient::Infinity,
        }
    }
}

impl fmt::Display for Gradient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gradient::Hops(h) => write!(f, "{h}"),
            Gradient::Infinity => write!(f, "INF"),
        }
    }
}

/// Controller phase tag, carried in every message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Electing,
    Seed,
    WaitToMove,
    EdgeFollow,
    Joined,
    Surplus,
}

impl Phase {
    pub fn is_stationary(self) -> bool {
        !matches!(self, Phase::EdgeFollow)
    }

    /// Terminal phases never transition again.
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Seed | Phase::Joined | Phase::Surplus)
    }

    /// A structure member pins a position and sources the gradient layers.
    pub fn is_member(self) -> bool {
        matches!(self, Phase::Seed | Phase::Joined)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Electing => "Electing",
            Phase::Seed => "Seed",
            Phase::WaitToMove => "WaitToMove",
            Phase::EdgeFollow => "EdgeFollow",
            Phase::Joined => "Joined",
            Phase::Surplus => "Surplus",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        Some(match s {
            "Electing" => Phase::Electing,
            "Seed" => Phase::Seed,
            "WaitToMove" => Phase::WaitToMove,
            "EdgeFollow" => Phase::EdgeFollow,
            "Joined" => Phase::Joined,
            "Surplus" => Phase::Surplus,
            _ => return None,
        })
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Election fields piggybacked on the per-tick broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElectionFields {
    pub candidate_id: RobotId,
    pub election_round: u64,
    pub done_flag: bool,
}

/// Leader's announcement of the chosen seed cluster (extended mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedAssignment {
    pub leader: RobotId,
    pub members: [RobotId; 3],
}

impl SeedAssignment {
    pub fn contains(&self, id: RobotId) -> bool {
        self.leader == id || self.members.contains(&id)
    }

    pub fn all(&self) -> [RobotId; 4] {
        [
            self.leader,
            self.members[0],
            self.members[1],
            self.members[2],
        ]
    }
}

/// Pairwise distance gossip among the chosen seed cluster, used to agree on
/// a shared coordinate frame before anyone moves.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDistances {
    pub to: Vec<(RobotId, f64)>,
}

/// Per-tick local broadcast payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: RobotId,
    pub gradient: Gradient,
    pub position: Option<Vec2>,
    pub phase: Phase,
    pub election: Option<ElectionFields>,
    pub joined_recently: bool,
    pub seed_assignment: Option<SeedAssignment>,
    pub cluster_distances: Option<ClusterDistances>,
    /// Agreed shape anchor in the seed frame (extended mode), relayed so
    /// every robot evaluates the figure against the same origin.
    pub shape_origin: Option<Vec2>,
    /// The packing-lattice site this structure member occupies. Movers
    /// treat a site as taken once any audible member claims it.
    pub claimed_site: Option<Vec2>,
}

impl Message {
    /// Fixed-order dump line: sender, gradient|"INF", x|"", y|"", phase,
    /// candidate|"", round|"", joined_recently as 0/1.
    pub fn wire_line(&self) -> String {
        let (x, y) = match self.position {
            Some(p) => (format!("{:.6}", p.x), format!("{:.6}", p.y)),
            None => (String::new(), String::new()),
        };
        let (cand, round) = match self.election {
            Some(e) => (e.candidate_id.to_string(), e.election_round.to_string()),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.sender,
            self.gradient,
            x,
            y,
            self.phase,
            cand,
            round,
            u8::from(self.joined_recently)
        )
    }
}

/// Recompute the gradient from this tick's inbox.
///
/// Seeds pin 0 forever. A non-seed takes 1 + the minimum finite gradient it
/// heard, or infinity when the inbox holds none: no neighbors, no gradient.
/// Recomputing from scratch lets stale values decay when neighbors vanish.
pub fn gradient_update(is_seed: bool, inbox: &[Message]) -> Gradient {
    if is_seed {
        return Gradient::ZERO;
    }
    inbox
        .iter()
        .map(|m| m.gradient)
        .min()
        .unwrap_or(Gradient::Infinity)
        .successor()
}

/// One anchor observation: a localized, stationary neighbor's broadcast
/// position and the measured distance to it.
#[derive(Debug, Clone, Copy)]
pub struct RangeMeasurement {
    pub anchor: Vec2,
    pub distance: f64,
}

const LOCALIZE_MAX_ITERS: usize = 60;
const LOCALIZE_STEP_TOL: f64 = 1e-13;

/// Least-squares trilateration: minimize Σ(‖p − aᵢ‖ − dᵢ)², seeded by the
/// closed-form linearized solution and refined by damped Gauss-Newton. With
/// fewer than three anchors, or collinear anchors, the previous estimate is
/// returned unchanged; degeneracy is a non-update, not a fault. A refined
/// fix whose residuals stay grossly inconsistent with the measured ranges
/// (the mirror solution of an ill-conditioned geometry) is likewise
/// discarded in favor of the previous estimate.
pub fn localize(previous: Option<Vec2>, measurements: &[RangeMeasurement]) -> Option<Vec2> {
    if measurements.len() < 3 || anchors_collinear(measurements) {
        return previous;
    }

    let n = measurements.len() as f64;
    let centroid = measurements
        .iter()
        .fold(Vec2::ZERO, |acc, m| acc + m.anchor)
        * (1.0 / n);

    let mut p = linear_fix(measurements).unwrap_or(centroid);
    let mut cost = residual_cost(p, measurements);
    let mut damping = 1e-6;
    for _ in 0..LOCALIZE_MAX_ITERS {
        // Accumulate JᵀJ and Jᵀr for residuals rᵢ = ‖p − aᵢ‖ − dᵢ.
        let (mut jtj00, mut jtj01, mut jtj11) = (0.0, 0.0, 0.0);
        let (mut jtr0, mut jtr1) = (0.0, 0.0);
        for m in measurements {
            let diff = p - m.anchor;
            let dist = diff.norm().max(1e-12);
            let (jx, jy) = (diff.x / dist, diff.y / dist);
            let r = dist - m.distance;
            jtj00 += jx * jx;
            jtj01 += jx * jy;
            jtj11 += jy * jy;
            jtr0 += jx * r;
            jtr1 += jy * r;
        }
        let mut stepped = false;
        for _ in 0..8 {
            let (a, b, d) = (jtj00 + damping, jtj01, jtj11 + damping);
            let det = a * d - b * b;
            if det.abs() < 1e-18 {
                damping *= 10.0;
                continue;
            }
            let dx = -(d * jtr0 - b * jtr1) / det;
            let dy = -(-b * jtr0 + a * jtr1) / det;
            let candidate = p + Vec2::new(dx, dy);
            let candidate_cost = residual_cost(candidate, measurements);
            if candidate_cost <= cost {
                let step = Vec2::new(dx, dy).norm();
                p = candidate;
                cost = candidate_cost;
                damping = (damping / 3.0).max(1e-12);
                stepped = true;
                if step < LOCALIZE_STEP_TOL {
                    return Some(p);
                }
                break;
            }
            damping *= 10.0;
        }
        if !stepped {
            break;
        }
    }
    // Consistency gate: the root-mean-square range residual of a usable fix
    // sits at noise level, far below the ranges themselves.
    let rms = (residual_cost(p, measurements) / measurements.len() as f64).sqrt();
    let mean_range =
        measurements.iter().map(|m| m.distance).sum::<f64>() / measurements.len() as f64;
    if rms > 0.05 * mean_range + 1e-9 {
        return previous;
    }
    Some(p)
}

/// Closed-form linearized multilateration: subtracting the first range
/// equation from the rest leaves a linear system in p, solved by 2x2 normal
/// equations. Exact for exact ranges and a far better Gauss-Newton seed
/// than the centroid when anchors are nearly collinear.
fn linear_fix(measurements: &[RangeMeasurement]) -> Option<Vec2> {
    let first = &measurements[0];
    let k0 = first.anchor.dot(first.anchor) - first.distance * first.distance;
    let (mut a00, mut a01, mut a11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for m in &measurements[1..] {
        let rx = 2.0 * (m.anchor.x - first.anchor.x);
        let ry = 2.0 * (m.anchor.y - first.anchor.y);
        let rhs = (m.anchor.dot(m.anchor) - m.distance * m.distance) - k0;
        a00 += rx * rx;
        a01 += rx * ry;
        a11 += ry * ry;
        b0 += rx * rhs;
        b1 += ry * rhs;
    }
    let det = a00 * a11 - a01 * a01;
    if det.abs() < 1e-30 {
        return None;
    }
    Some(Vec2::new(
        (a11 * b0 - a01 * b1) / det,
        (-a01 * b0 + a00 * b1) / det,
    ))
}

fn residual_cost(p: Vec2, measurements: &[RangeMeasurement]) -> f64 {
    measurements
        .iter()
        .map(|m| {
            let r = p.distance(m.anchor) - m.distance;
            r * r
        })
        .sum()
}

fn anchors_collinear(measurements: &[RangeMeasurement]) -> bool {
    let span = measurements
        .iter()
        .flat_map(|a| measurements.iter().map(move |b| a.anchor.distance(b.anchor)))
        .fold(0.0f64, f64::max);
    if span <= 0.0 {
        return true;
    }
    let tol = 1e-7 * span * span;
    let first = measurements[0].anchor;
    for (i, a) in measurements.iter().enumerate() {
        for b in measurements.iter().skip(i + 1) {
            let area = (a.anchor - first).cross(b.anchor - first).abs();
            if area > tol {
                return false;
            }
        }
    }
    true
}

/// Min-ID flooding election with a stability-counter termination heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElectionState {
    pub best_candidate: RobotId,
    pub rounds_stable: u64,
    pub decided: bool,
    pub is_leader: bool,
}

impl ElectionState {
    pub fn new(own_id: RobotId) -> Self {
        ElectionState {
            best_candidate: own_id,
            rounds_stable: 0,
            decided: false,
            is_leader: false,
        }
    }
}

/// One election round: adopt the minimum candidate heard, bump the stability
/// counter when nothing changed, decide once it reaches the threshold.
/// Once decided the state is frozen; at most one robot sets `is_leader`.
pub fn election_step(
    state: ElectionState,
    own_id: RobotId,
    inbox: &[Message],
    stability_threshold: u64,
) -> ElectionState {
    if state.decided {
        return state;
    }
    let heard = inbox
        .iter()
        .filter_map(|m| m.election.map(|e| e.candidate_id))
        .min();
    let best = state
        .best_candidate
        .min(own_id)
        .min(heard.unwrap_or(RobotId::MAX));
    let rounds_stable = if best == state.best_candidate {
        state.rounds_stable + 1
    } else {
        0
    };
    let decided = rounds_stable >= stability_threshold;
    ElectionState {
        best_candidate: best,
        rounds_stable,
        decided,
        is_leader: decided && best == own_id,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SeedingError {
    #[error("leader has {0} neighbors, needs at least 3")]
    InsufficientNeighbors(usize),
}

/// The decided leader picks its 3 nearest neighbors (ties broken by lower
/// id); the four of them become the seed cluster.
pub fn select_seed_cluster(
    leader: RobotId,
    leader_neighbors: &[(RobotId, f64)],
) -> Result<SeedAssignment, SeedingError> {
    if leader_neighbors.len() < 3 {
        return Err(SeedingError::InsufficientNeighbors(leader_neighbors.len()));
    }
    let mut by_distance: Vec<(RobotId, f64)> = leader_neighbors.to_vec();
    by_distance.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(SeedAssignment {
        leader,
        members: [by_distance[0].0, by_distance[1].0, by_distance[2].0],
    })
}

/// Outcome of the quiescence check for completion/surplus detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionStatus {
    Incomplete,
    LocallyQuiescent,
    Surplus,
}

/// Advance the quiescence counter: it grows each tick without join evidence
/// (an inbox message flagged `joined_recently`, or the robot joining itself)
/// and resets on any evidence. At `window` the robot declares itself Surplus.
///
/// Only WaitToMove and EdgeFollow robots run this; members never do.
pub fn completion_update(
    phase: Phase,
    inbox: &[Message],
    window: u64,
    counter: u64,
) -> (u64, CompletionStatus) {
    debug_assert!(matches!(phase, Phase::WaitToMove | Phase::EdgeFollow));
    let join_evidence = inbox.iter().any(|m| m.joined_recently);
    if join_evidence {
        return (0, CompletionStatus::Incomplete);
    }
    let counter = counter + 1;
    if counter >= window {
        (counter, CompletionStatus::Surplus)
    } else {
        (counter, CompletionStatus::LocallyQuiescent)
    }
}

/// Canonical planar embedding of the seed cluster from its pairwise distance
/// matrix. The leader sits at the origin, its nearest member fixes the +x
/// axis, and the second member is placed in the +y half-plane; the fourth
/// position is trilaterated from the first three. All cluster members run
/// this on identical gossip, so they agree on the frame exactly.
///
/// `distances(a, b)` must return the measured distance for every unordered
/// cluster pair. Returns None when the geometry is too degenerate to fix an
/// orientation.
pub fn embed_cluster<F>(assignment: &SeedAssignment, distances: F) -> Option<[(RobotId, Vec2); 4]>
where
    F: Fn(RobotId, RobotId) -> Option<f64>,
{
    let leader = assignment.leader;
    // Canonical member order: by distance from the leader, ties by id.
    let mut members = assignment.members;
    let mut keyed: Vec<(f64, RobotId)> = Vec::with_capacity(3);
    for id in members {
        keyed.push((distances(leader, id)?, id));
    }
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    for (slot, (_, id)) in members.iter_mut().zip(&keyed) {
        *slot = *id;
    }
    let (a, b, c) = (members[0], members[1], members[2]);

    let d_la = distances(leader, a)?;
    let d_lb = distances(leader, b)?;
    let d_ab = distances(a, b)?;
    if d_la <= 0.0 {
        return None;
    }
    let p_leader = Vec2::ZERO;
    let p_a = Vec2::new(d_la, 0.0);
    // Circle intersection for b, +y half-plane by convention.
    let bx = (d_lb * d_lb - d_ab * d_ab + d_la * d_la) / (2.0 * d_la);
    let by_sq = d_lb * d_lb - bx * bx;
    if by_sq <= 1e-12 * d_la * d_la {
        return None; // collinear cluster cannot fix chirality
    }
    let p_b = Vec2::new(bx, by_sq.sqrt());

    let anchors = [
        RangeMeasurement {
            anchor: p_leader,
            distance: distances(leader, c)?,
        },
        RangeMeasurement {
            anchor: p_a,
            distance: distances(a, c)?,
        },
        RangeMeasurement {
            anchor: p_b,
            distance: distances(b, c)?,
        },
    ];
    let p_c = localize(None, &anchors)?;

    Some([(leader, p_leader), (a, p_a), (b, p_b), (c, p_c)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(sender: RobotId, gradient: Gradient) -> Message {
        Message {
            sender,
            gradient,
            position: None,
            phase: Phase::WaitToMove,
            election: None,
            joined_recently: false,
            seed_assignment: None,
            cluster_distances: None,
            shape_origin: None,
            claimed_site: None,
        }
    }

    fn election_msg(sender: RobotId, candidate: RobotId) -> Message {
        Message {
            election: Some(ElectionFields {
                candidate_id: candidate,
                election_round: 0,
                done_flag: false,
            }),
            phase: Phase::Electing,
            ..msg(sender, Gradient::Infinity)
        }
    }

    #[test]
    fn gradient_seed_pinned() {
        assert_eq!(
            gradient_update(true, &[msg(1, Gradient::Hops(7))]),
            Gradient::ZERO
        );
        assert_eq!(gradient_update(true, &[]), Gradient::ZERO);
    }

    #[test]
    fn gradient_one_plus_min() {
        let inbox = [
            msg(1, Gradient::Hops(0)),
            msg(2, Gradient::Hops(1)),
            msg(3, Gradient::Hops(4)),
        ];
        assert_eq!(gradient_update(false, &inbox), Gradient::Hops(1));
    }

    #[test]
    fn gradient_no_neighbors_is_infinite() {
        assert_eq!(gradient_update(false, &[]), Gradient::Infinity);
        let inbox = [msg(1, Gradient::Infinity)];
        assert_eq!(gradient_update(false, &inbox), Gradient::Infinity);
    }

    #[test]
    fn gradient_ordering() {
        assert!(Gradient::Hops(5) < Gradient::Infinity);
        assert!(Gradient::Hops(2) < Gradient::Hops(3));
        assert_eq!(Gradient::Infinity.successor(), Gradient::Infinity);
    }

    fn measurement(x: f64, y: f64, d: f64) -> RangeMeasurement {
        RangeMeasurement {
            anchor: Vec2::new(x, y),
            distance: d,
        }
    }

    #[test]
    fn localize_symmetric_triangle() {
        let r = 0.5f64.sqrt();
        let p = localize(
            None,
            &[
                measurement(0.0, 0.0, r),
                measurement(1.0, 0.0, r),
                measurement(0.0, 1.0, r),
            ],
        )
        .unwrap();
        assert!(p.distance(Vec2::new(0.5, 0.5)) < 1e-6);
    }

    #[test]
    fn localize_underdetermined_keeps_previous() {
        let prev = Some(Vec2::new(3.0, 4.0));
        let out = localize(prev, &[measurement(0.0, 0.0, 1.0), measurement(1.0, 0.0, 1.0)]);
        assert_eq!(out, prev);
        assert_eq!(localize(None, &[]), None);
    }

    #[test]
    fn localize_collinear_keeps_previous() {
        let prev = Some(Vec2::new(1.0, 2.0));
        let anchors = [
            measurement(0.0, 0.0, 1.0),
            measurement(1.0, 0.0, 1.0),
            measurement(2.0, 0.0, 1.0),
        ];
        assert_eq!(localize(prev, &anchors), prev);
    }

    #[test]
    fn localize_recovers_exact_point() {
        let truth = Vec2::new(0.31, -0.27);
        let anchors: Vec<RangeMeasurement> = [(0.0, 0.0), (1.1, 0.2), (0.3, 0.9), (-0.5, 0.4)]
            .iter()
            .map(|&(x, y)| measurement(x, y, truth.distance(Vec2::new(x, y))))
            .collect();
        let p = localize(None, &anchors).unwrap();
        assert!(p.distance(truth) < 1e-6, "error {}", p.distance(truth));
    }

    #[test]
    fn election_isolated_self_elects() {
        let mut st = ElectionState::new(9);
        for _ in 0..3 {
            assert!(!st.decided);
            st = election_step(st, 9, &[], 3);
        }
        assert!(st.decided);
        assert!(st.is_leader);
        assert_eq!(st.best_candidate, 9);
    }

    #[test]
    fn election_adopts_minimum() {
        let mut st = ElectionState::new(5);
        st = election_step(st, 5, &[election_msg(2, 2)], 3);
        assert_eq!(st.best_candidate, 2);
        assert_eq!(st.rounds_stable, 0);
        for _ in 0..3 {
            st = election_step(st, 5, &[election_msg(2, 2)], 3);
        }
        assert!(st.decided);
        assert!(!st.is_leader);
    }

    #[test]
    fn election_line_topology_converges_to_minimum() {
        // Line 5 - 2 - 9: ends only hear the middle robot.
        let mut states = [ElectionState::new(5), ElectionState::new(2), ElectionState::new(9)];
        let ids = [5u32, 2, 9];
        for _ in 0..6 {
            let msgs: Vec<Message> = (0..3)
                .map(|i| {
                    let mut m = msg(ids[i], Gradient::Infinity);
                    m.election = Some(ElectionFields {
                        candidate_id: states[i].best_candidate,
                        election_round: states[i].rounds_stable,
                        done_flag: states[i].decided,
                    });
                    m
                })
                .collect();
            let inbox_of = |i: usize| match i {
                0 => vec![msgs[1].clone()],
                1 => vec![msgs[0].clone(), msgs[2].clone()],
                _ => vec![msgs[1].clone()],
            };
            for i in 0..3 {
                states[i] = election_step(states[i], ids[i], &inbox_of(i), 3);
            }
        }
        assert!(states.iter().all(|s| s.decided));
        assert!(states.iter().all(|s| s.best_candidate == 2));
        let leaders: Vec<u32> = (0..3).filter(|&i| states[i].is_leader).map(|i| ids[i]).collect();
        assert_eq!(leaders, vec![2]);
    }

    #[test]
    fn election_frozen_after_decide() {
        let mut st = ElectionState::new(1);
        for _ in 0..4 {
            st = election_step(st, 1, &[], 3);
        }
        assert!(st.decided && st.is_leader);
        let frozen = election_step(st, 1, &[election_msg(0, 0)], 3);
        assert_eq!(frozen, st);
    }

    #[test]
    fn seed_cluster_nearest_three() {
        let neighbors = [(10, 0.05), (11, 0.02), (12, 0.04), (13, 0.03), (14, 0.01)];
        let a = select_seed_cluster(1, &neighbors).unwrap();
        assert_eq!(a.leader, 1);
        assert_eq!(a.members, [14, 11, 13]);
    }

    #[test]
    fn seed_cluster_tie_breaks_by_lower_id() {
        // distances {1,1,2,2} cm with ids {7,3,9,4} -> picks {3,7} then 4.
        let neighbors = [(7, 0.01), (3, 0.01), (9, 0.02), (4, 0.02)];
        let a = select_seed_cluster(1, &neighbors).unwrap();
        assert_eq!(a.members, [3, 7, 4]);
    }

    #[test]
    fn seed_cluster_exactly_three() {
        let neighbors = [(5, 0.02), (6, 0.01), (7, 0.03)];
        let a = select_seed_cluster(2, &neighbors).unwrap();
        assert_eq!(a.all(), [2, 6, 5, 7]);
    }

    #[test]
    fn seed_cluster_insufficient() {
        assert_eq!(
            select_seed_cluster(1, &[(2, 0.01), (3, 0.02)]),
            Err(SeedingError::InsufficientNeighbors(2))
        );
    }

    #[test]
    fn completion_counter_resets_on_evidence() {
        let mut joined = msg(4, Gradient::Hops(1));
        joined.joined_recently = true;
        let (counter, status) = completion_update(Phase::WaitToMove, &[joined], 5, 3);
        assert_eq!(counter, 0);
        assert_eq!(status, CompletionStatus::Incomplete);
    }

    #[test]
    fn completion_flags_at_window() {
        let mut counter = 0;
        let mut status = CompletionStatus::Incomplete;
        for _ in 0..5 {
            let out = completion_update(Phase::EdgeFollow, &[], 5, counter);
            counter = out.0;
            status = out.1;
        }
        assert_eq!(status, CompletionStatus::Surplus);
    }

    #[test]
    fn completion_never_fires_with_periodic_joins() {
        let mut counter = 0;
        for tick in 0..50u64 {
            let inbox = if tick % 4 == 3 {
                let mut m = msg(9, Gradient::Hops(2));
                m.joined_recently = true;
                vec![m]
            } else {
                vec![]
            };
            let (next, status) = completion_update(Phase::WaitToMove, &inbox, 5, counter);
            counter = next;
            assert_ne!(status, CompletionStatus::Surplus);
        }
    }

    #[test]
    fn embed_cluster_recovers_square() {
        // Leader at origin, members forming an L around it.
        let truth = [
            (1u32, Vec2::new(0.0, 0.0)),
            (2u32, Vec2::new(0.03, 0.0)),
            (3u32, Vec2::new(0.0, 0.04)),
            (4u32, Vec2::new(0.03, 0.04)),
        ];
        let dist = |a: RobotId, b: RobotId| {
            let pa = truth.iter().find(|(id, _)| *id == a)?.1;
            let pb = truth.iter().find(|(id, _)| *id == b)?.1;
            Some(pa.distance(pb))
        };
        let assignment = SeedAssignment {
            leader: 1,
            members: [2, 3, 4],
        };
        let embedded = embed_cluster(&assignment, dist).unwrap();
        // The embedding is the truth up to rotation/reflection; pairwise
        // distances must be preserved.
        for (ia, pa) in embedded {
            for (ib, pb) in embedded {
                let want = dist(ia, ib).unwrap();
                assert!((pa.distance(pb) - want).abs() < 1e-9);
            }
        }
        assert_eq!(embedded[0].1, Vec2::ZERO);
        assert!(embedded[1].1.y.abs() < 1e-12);
        assert!(embedded[2].1.y > 0.0);
    }

    #[test]
    fn embed_cluster_collinear_fails() {
        let pts = [
            (1u32, Vec2::new(0.0, 0.0)),
            (2u32, Vec2::new(0.01, 0.0)),
            (3u32, Vec2::new(0.02, 0.0)),
            (4u32, Vec2::new(0.03, 0.0)),
        ];
        let dist = |a: RobotId, b: RobotId| {
            let pa = pts.iter().find(|(id, _)| *id == a)?.1;
            let pb = pts.iter().find(|(id, _)| *id == b)?.1;
            Some(pa.distance(pb))
        };
        let assignment = SeedAssignment {
            leader: 1,
            members: [2, 3, 4],
        };
        assert!(embed_cluster(&assignment, dist).is_none());
    }

    #[test]
    fn wire_line_format() {
        let mut m = msg(7, Gradient::Hops(3));
        m.position = Some(Vec2::new(0.125, -0.5));
        m.phase = Phase::EdgeFollow;
        assert_eq!(m.wire_line(), "7,3,0.125000,-0.500000,EdgeFollow,,,0");
        let mut bare = msg(2, Gradient::Infinity);
        bare.election = Some(ElectionFields {
            candidate_id: 1,
            election_round: 4,
            done_flag: false,
        });
        bare.phase = Phase::Electing;
        bare.joined_recently = true;
        assert_eq!(bare.wire_line(), "2,INF,,,Electing,1,4,1");
    }
}
