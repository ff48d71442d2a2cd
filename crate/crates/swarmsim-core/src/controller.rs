//! The per-robot self-assembly state machine.
//!
//! Composition order inside a tick is fixed: gradient update, localization,
//! phase-specific logic (election, start rule, edge-following plus the join
//! rule, completion detection), then the outgoing message reflecting the
//! post-update state.

use crate::geom::Vec2;
use crate::protocol::{
    self, completion_update, election_step, embed_cluster, gradient_update, localize,
    ClusterDistances, CompletionStatus, ElectionFields, ElectionState, Gradient, Message, Phase,
    RangeMeasurement, RobotId, SeedAssignment,
};
use crate::shape::GridShape;
use crate::world::{Delivery, MotionCommand};
use std::sync::Arc;

/// Which algorithm variant a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Reproduction of the criticized system: harness-placed seeds, no
    /// election, no distributed surplus detection.
    Baseline,
    /// Leader-election seeding plus distributed completion/surplus teardown.
    Extended,
}

/// Controller tuning shared by the swarm.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Desired gap between disc edges while orbiting (meters).
    pub d_desired: f64,
    /// Dead-band half-width around the desired distance (meters).
    pub hysteresis: f64,
    /// Minimum ticks in WaitToMove (and since last mover sighting) before a
    /// departure is allowed.
    pub cooldown: u64,
    /// Quiescence window W for surplus detection (ticks).
    pub quiescence_window: u64,
    /// Election stability threshold (rounds).
    pub stability_threshold: u64,
    pub robot_diameter: f64,
    /// Deliveries measured beyond this range do not feed the gradient.
    pub gradient_range: f64,
    /// Mirror the orbit direction (aggregate kept on the left instead).
    pub orbit_mirrored: bool,
}

/// Claim geometry, in multiples of the packing pitch: a robot may claim a
/// free site within CLAIM_RADIUS of its position, and claims heard within
/// SITE_MATCH of a site mark that site taken. Contenders for one site are
/// always mutually audible (they sit within two claim radii), so the claim
/// goes to the closest contender, with CLAIM_MARGIN absorbing the staleness
/// of broadcast positions and ids breaking near-ties.
const CLAIM_RADIUS: f64 = 0.6;
const SITE_MATCH: f64 = 0.35;
const CLAIM_MARGIN: f64 = 0.08;
/// A mover may not build against the waiting crowd: a site is claimable
/// only when no stationary non-member stands within this many pitches of
/// it. Keeps a canyon from forming between the structure and the cluster.
const CROWD_CLEARANCE: f64 = 1.1;
/// A robot hearing this many stationary neighbors within 1.2 diameters is
/// encaged in the cluster interior and must not depart.
const CAGE_NEIGHBORS: usize = 5;

/// The packing lattice every robot derives from the shared figure: the
/// capacity sites, breadth-first layered from the root sites in the origin
/// corner. Growth that respects the layering can never seal a hole.
#[derive(Debug, Clone)]
pub struct SiteLattice {
    pub pitch: f64,
    pub sites: Vec<Vec2>,
    /// BFS depth of each site from the roots; unreachable sites hold MAX.
    pub depth: Vec<u32>,
}

impl SiteLattice {
    pub fn build(shape: &GridShape, pitch: f64) -> SiteLattice {
        let sites = shape.capacity_sites(pitch);
        let roots = shape.packing_roots(pitch);
        let n = sites.len();
        let adjacency_limit = 1.05 * pitch;
        let mut depth = vec![u32::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for (i, s) in sites.iter().enumerate() {
            if roots.iter().any(|r| r.distance(*s) < 1e-9) {
                depth[i] = 0;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if depth[j] == u32::MAX && sites[i].distance(sites[j]) <= adjacency_limit {
                    depth[j] = depth[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        SiteLattice {
            pitch,
            sites,
            depth,
        }
    }

    /// Inward lattice neighbors of site `i`: adjacent sites strictly closer
    /// to the roots.
    pub fn supports(&self, i: usize) -> Vec<usize> {
        (0..self.sites.len())
            .filter(|&j| {
                j != i
                    && self.depth[j] < self.depth[i]
                    && self.sites[i].distance(self.sites[j]) <= 1.05 * self.pitch
            })
            .collect()
    }
}

impl ControllerConfig {
    pub fn defaults_for(robot_diameter: f64) -> Self {
        let d_desired = robot_diameter;
        ControllerConfig {
            d_desired,
            hysteresis: 0.1 * d_desired,
            cooldown: 20,
            quiescence_window: 500,
            stability_threshold: 3,
            robot_diameter,
            gradient_range: 0.10,
            orbit_mirrored: false,
        }
    }

    /// Center-to-center orbit distance: body diameter plus the edge gap.
    pub fn orbit_distance(&self) -> f64 {
        self.robot_diameter + self.d_desired
    }
}

/// One robot's full controller state.
#[derive(Debug, Clone)]
pub struct Controller {
    pub id: RobotId,
    pub phase: Phase,
    pub gradient: Gradient,
    pub position: Option<Vec2>,
    pub previous_position: Option<Vec2>,
    pub election: ElectionState,
    pub start_timer: u64,
    pub completion_counter: u64,
    /// Tick at which this robot became part of the structure, if ever.
    pub join_tick: Option<u64>,
    /// Nearest steering distance seen on the previous EdgeFollow tick.
    prev_steering_distance: Option<f64>,
    /// The packing-lattice site this robot occupies as a member.
    pub claimed_site: Option<Vec2>,
    /// Cached packing lattice for the current shape anchor: sites plus
    /// their breadth-first depth from the root sites.
    lattice: Option<Arc<SiteLattice>>,
    mode: Mode,
    config: ControllerConfig,
    shape: Arc<GridShape>,
    /// Seed-frame shape, replaced after extended-mode frame agreement.
    seeded_shape: Option<Arc<GridShape>>,
    assignment: Option<SeedAssignment>,
    /// Measured distances to fellow cluster members (extended seeding).
    cluster_gossip: Vec<(RobotId, RobotId, f64)>,
    tick: u64,
}

/// What the controller handed back to the world for this tick.
#[derive(Debug, Clone)]
pub struct ControlOutput {
    pub command: MotionCommand,
    pub message: Message,
}

impl Controller {
    pub fn new(
        id: RobotId,
        mode: Mode,
        config: ControllerConfig,
        shape: Arc<GridShape>,
    ) -> Self {
        let initial_phase = match mode {
            Mode::Baseline => Phase::WaitToMove,
            Mode::Extended => Phase::Electing,
        };
        Controller {
            id,
            phase: initial_phase,
            gradient: Gradient::Infinity,
            position: None,
            previous_position: None,
            election: ElectionState::new(id),
            start_timer: 0,
            completion_counter: 0,
            join_tick: None,
            prev_steering_distance: None,
            claimed_site: None,
            lattice: None,
            mode,
            config,
            shape,
            seeded_shape: None,
            assignment: None,
            cluster_gossip: Vec::new(),
            tick: 0,
        }
    }

    /// Harness intervention: pin this robot as a seed at a known position,
    /// claiming the packing site it stands on.
    pub fn pin_seed(&mut self, position: Vec2, tick: u64) {
        self.pin_seed_claiming(position, position, tick);
    }

    /// Pin a seed whose body stands at `position` while it claims `site`.
    pub fn pin_seed_claiming(&mut self, position: Vec2, site: Vec2, tick: u64) {
        self.phase = Phase::Seed;
        self.gradient = Gradient::ZERO;
        self.position = Some(position);
        self.previous_position = Some(position);
        self.join_tick = Some(tick);
        self.claimed_site = Some(site);
    }

    /// Harness intervention: flag a leftover robot during the omniscient
    /// completion sweep.
    pub fn flag_surplus(&mut self) {
        self.phase = Phase::Surplus;
    }

    /// Harness fallback seeding (extended mode): install the assignment and
    /// frame directly when the distributed path stalled.
    pub fn harness_seed(
        &mut self,
        assignment: SeedAssignment,
        position: Vec2,
        shape_origin: Vec2,
        site: Vec2,
        tick: u64,
    ) {
        self.assignment = Some(assignment);
        self.seeded_shape = Some(Arc::new((*self.shape).clone().with_origin(shape_origin)));
        self.lattice = None;
        self.pin_seed_claiming(position, site, tick);
    }

    pub fn shape(&self) -> &GridShape {
        self.seeded_shape.as_deref().unwrap_or(&self.shape)
    }

    pub fn assignment(&self) -> Option<&SeedAssignment> {
        self.assignment.as_ref()
    }

    /// The message broadcast at the start of the next tick.
    pub fn outgoing(&self) -> Message {
        let election = match self.mode {
            Mode::Extended if !self.phase.is_terminal() || self.phase == Phase::Seed => {
                Some(ElectionFields {
                    candidate_id: self.election.best_candidate,
                    election_round: self.election.rounds_stable,
                    done_flag: self.election.decided,
                })
            }
            _ => None,
        };
        let joined_recently = self
            .join_tick
            .map(|t| self.tick.saturating_sub(t) <= self.config.quiescence_window)
            .unwrap_or(false);
        let cluster_distances = self.cluster_distance_payload();
        Message {
            sender: self.id,
            gradient: self.gradient,
            position: self.position,
            phase: self.phase,
            election,
            joined_recently,
            seed_assignment: self.assignment,
            cluster_distances,
            shape_origin: self.seeded_shape.as_ref().map(|s| s.origin()),
            claimed_site: self.claimed_site,
        }
    }

    fn cluster_distance_payload(&self) -> Option<ClusterDistances> {
        let assignment = self.assignment.as_ref()?;
        if !assignment.contains(self.id) || self.phase == Phase::Seed {
            return None;
        }
        let to: Vec<(RobotId, f64)> = self
            .cluster_gossip
            .iter()
            .filter(|(a, _, _)| *a == self.id)
            .map(|(_, b, d)| (*b, *d))
            .collect();
        if to.is_empty() {
            None
        } else {
            Some(ClusterDistances { to })
        }
    }

    /// One synchronous controller step. Returns the motion command and the
    /// message to broadcast next tick.
    pub fn step(&mut self, tick: u64, inbox: &[Delivery]) -> ControlOutput {
        self.tick = tick;
        let messages: Vec<Message> = inbox.iter().map(|d| d.message.clone()).collect();

        // Adopt the flooded shape anchor before any containment decision.
        if self.mode == Mode::Extended && self.seeded_shape.is_none() {
            if let Some(origin) = messages.iter().find_map(|m| m.shape_origin) {
                self.seeded_shape = Some(Arc::new((*self.shape).clone().with_origin(origin)));
                self.lattice = None;
            }
        }

        // Gradient first: seeds stay pinned, everyone else recomputes from
        // the neighbors inside the gradient range.
        let gradient_messages: Vec<Message> = inbox
            .iter()
            .filter(|d| d.distance <= self.config.gradient_range)
            .map(|d| d.message.clone())
            .collect();
        self.gradient = gradient_update(self.phase == Phase::Seed, &gradient_messages);

        // Localization from localized, stationary anchors.
        if self.phase != Phase::Seed && self.phase != Phase::Joined {
            let anchors: Vec<RangeMeasurement> = inbox
                .iter()
                .filter(|d| d.message.phase.is_stationary())
                .filter_map(|d| {
                    d.message.position.map(|anchor| RangeMeasurement {
                        anchor,
                        distance: d.distance,
                    })
                })
                .collect();
            let updated = localize(self.position, &anchors);
            if updated != self.position {
                self.previous_position = self.position;
                self.position = updated;
            }
        }

        let command = match self.phase {
            Phase::Electing => self.step_electing(inbox, &messages),
            Phase::WaitToMove => self.step_waiting(inbox, &messages),
            Phase::EdgeFollow => self.step_edge_follow(inbox, &messages),
            Phase::Seed | Phase::Joined | Phase::Surplus => MotionCommand::Stop,
        };

        ControlOutput {
            command,
            message: self.outgoing(),
        }
    }

    fn step_electing(&mut self, inbox: &[Delivery], messages: &[Message]) -> MotionCommand {
        // Adopt any announced assignment before voting further.
        if self.assignment.is_none() {
            if let Some(a) = messages.iter().find_map(|m| m.seed_assignment) {
                self.assignment = Some(a);
            }
        }

        if self.assignment.is_none() {
            self.election = election_step(
                self.election,
                self.id,
                messages,
                self.config.stability_threshold,
            );
            if self.election.is_leader {
                let neighbors: Vec<(RobotId, f64)> = inbox
                    .iter()
                    .map(|d| (d.message.sender, d.distance))
                    .collect();
                if let Ok(assignment) = protocol::select_seed_cluster(self.id, &neighbors) {
                    self.assignment = Some(assignment);
                    for (id, dist) in &neighbors {
                        if assignment.contains(*id) {
                            self.cluster_gossip.push((self.id, *id, *dist));
                        }
                    }
                }
                // Too few neighbors: keep broadcasting decided state; the
                // harness watches for the stall and seeds manually.
            }
        }

        if let Some(assignment) = self.assignment {
            if assignment.contains(self.id) {
                self.collect_cluster_gossip(&assignment, inbox, messages);
                if let Some(frame) = self.try_embed(&assignment) {
                    let own = frame
                        .iter()
                        .find(|(id, _)| *id == self.id)
                        .map(|(_, p)| *p)
                        .expect("cluster member present in its own frame");
                    // Anchor the shape so the leader stands exactly on an
                    // interior lattice site; the rest of the cluster then
                    // sits inside the origin corner.
                    let pitch = self.config.orbit_distance();
                    let origin = -Vec2::new(1.5 * pitch, pitch * 3f64.sqrt() / 2.0);
                    self.seeded_shape =
                        Some(Arc::new((*self.shape).clone().with_origin(origin)));
                    self.lattice = None;
                    // All four members claim the lattice roots via the same
                    // greedy assignment over identical data, so the claims
                    // agree.
                    let roots = self.shape().packing_roots(self.config.orbit_distance());
                    let mut taken: Vec<Vec2> = Vec::new();
                    let mut own_site = own;
                    for (id, pos) in frame {
                        let nearest = roots
                            .iter()
                            .filter(|s| !taken.iter().any(|t| t.distance(**s) < 1e-9))
                            .min_by(|a, b| {
                                a.distance(pos).partial_cmp(&b.distance(pos)).unwrap()
                            })
                            .copied();
                        if let Some(site) = nearest {
                            taken.push(site);
                            if id == self.id {
                                own_site = site;
                            }
                        }
                    }
                    self.pin_seed_claiming(own, own_site, self.tick);
                }
            } else {
                self.phase = Phase::WaitToMove;
                self.start_timer = 0;
            }
        }
        MotionCommand::Stop
    }

    /// Packing lattice of the current shape anchor, cached.
    fn lattice(&mut self) -> Arc<SiteLattice> {
        if self.lattice.is_none() {
            let pitch = self.config.orbit_distance();
            self.lattice = Some(Arc::new(SiteLattice::build(self.shape(), pitch)));
        }
        Arc::clone(self.lattice.as_ref().unwrap())
    }

    fn collect_cluster_gossip(
        &mut self,
        assignment: &SeedAssignment,
        inbox: &[Delivery],
        messages: &[Message],
    ) {
        // Own measurements to fellow members.
        for d in inbox {
            if assignment.contains(d.message.sender) {
                self.record_gossip(self.id, d.message.sender, d.distance);
            }
        }
        // Relayed measurements.
        for m in messages {
            if let Some(cd) = &m.cluster_distances {
                for (other, dist) in &cd.to {
                    self.record_gossip(m.sender, *other, *dist);
                }
            }
        }
    }

    fn record_gossip(&mut self, a: RobotId, b: RobotId, dist: f64) {
        if !self
            .cluster_gossip
            .iter()
            .any(|(ga, gb, _)| *ga == a && *gb == b)
        {
            self.cluster_gossip.push((a, b, dist));
        }
    }

    fn try_embed(&self, assignment: &SeedAssignment) -> Option<[(RobotId, Vec2); 4]> {
        let lookup = |a: RobotId, b: RobotId| {
            self.cluster_gossip
                .iter()
                .find(|(ga, gb, _)| (*ga == a && *gb == b) || (*ga == b && *gb == a))
                .map(|(_, _, d)| *d)
        };
        embed_cluster(assignment, lookup)
    }

    fn step_waiting(&mut self, inbox: &[Delivery], messages: &[Message]) -> MotionCommand {
        self.start_timer += 1;
        // A mover in earshot blocks departures and restarts the window.
        if messages.iter().any(|m| m.phase == Phase::EdgeFollow) {
            self.start_timer = 0;
        }
        if self.mode == Mode::Extended && self.check_surplus(messages) {
            return MotionCommand::Stop;
        }
        // In-place docking: when the figure overlaps the waiting cluster, a
        // robot already standing on a free site adjacent to the structure
        // is exactly where assembly would put it; it converts without
        // moving.
        let member_adjacent = inbox.iter().any(|d| {
            d.message.phase.is_member()
                && d.distance <= self.config.orbit_distance() + 2.0 * self.config.hysteresis
        });
        if let Some(position) = self.position {
            if member_adjacent && self.shape().contains(position) {
                if let Some(site) = self.claim_site(position, inbox, false) {
                    self.phase = Phase::Joined;
                    self.join_tick = Some(self.tick);
                    self.previous_position = Some(position);
                    self.claimed_site = Some(site);
                    return MotionCommand::Stop;
                }
            }
        }
        // Clearing rule: standing inside the figure, pressed against the
        // structure, without a site to convert onto, this robot blocks the
        // growth path. It departs to re-dock properly, ahead of any
        // gradient ordering.
        let inside = self
            .position
            .map(|p| self.shape().contains(p))
            .unwrap_or(false);
        if inside && member_adjacent && clear_to_depart(self, inbox) {
            self.phase = Phase::EdgeFollow;
            self.start_timer = 0;
            return MotionCommand::Stop;
        }
        if self.gradient.is_finite() && start_rule(self, inbox, self.config.cooldown) {
            self.phase = Phase::EdgeFollow;
            self.start_timer = 0;
        }
        MotionCommand::Stop
    }

    fn step_edge_follow(&mut self, inbox: &[Delivery], messages: &[Message]) -> MotionCommand {
        if self.mode == Mode::Extended && self.check_surplus(messages) {
            return MotionCommand::Stop;
        }

        let Some((nearest_msg, nearest_distance)) = nearest_stationary(inbox) else {
            // Lost the aggregate: stop and recover via WaitToMove.
            self.phase = Phase::WaitToMove;
            self.start_timer = 0;
            self.prev_steering_distance = None;
            return MotionCommand::Stop;
        };

        if let Some(position) = self.position {
            if let Some(site) = self.join_check(position, inbox, nearest_msg, nearest_distance) {
                self.phase = Phase::Joined;
                self.join_tick = Some(self.tick);
                self.previous_position = Some(position);
                self.prev_steering_distance = None;
                self.claimed_site = Some(site);
                return MotionCommand::Stop;
            }
        }

        let cmd = edge_follow_step(
            nearest_distance,
            self.prev_steering_distance,
            self.config.orbit_distance(),
            self.config.hysteresis,
            self.config.orbit_mirrored,
        );
        self.prev_steering_distance = Some(nearest_distance);
        cmd
    }

    /// Full joining decision for a mover: the packing-site docking
    /// discipline. A mover halts when it believes itself inside the figure,
    /// is hugging the structure (the robot it orbits is a member), and wins
    /// the claim for a free packing site. Returns the site to claim.
    ///
    /// Site docking subsumes the boundary-exit and layer-wrap stop rules:
    /// sites exist only inside the figure, so the structure saturates at
    /// exactly the lattice capacity and "full" is locally decidable.
    fn join_check(
        &mut self,
        position: Vec2,
        inbox: &[Delivery],
        nearest: &Message,
        nearest_distance: f64,
    ) -> Option<Vec2> {
        if !self.shape().contains(position) {
            return None;
        }
        // Adjacent to the structure, not just any stationary robot.
        if !nearest.phase.is_member()
            || nearest_distance > self.config.orbit_distance() + 2.0 * self.config.hysteresis
        {
            return None;
        }
        self.claim_site(position, inbox, true)
    }

    /// Nearest free packing site within claim range, if this robot wins the
    /// arbitration against every audible contender. Contenders compare
    /// distance to the site; a margin absorbs broadcast staleness and the
    /// lower id wins near-ties, so concurrent claimants decide identically.
    fn claim_site(
        &mut self,
        position: Vec2,
        inbox: &[Delivery],
        respect_crowd: bool,
    ) -> Option<Vec2> {
        let pitch = self.config.orbit_distance();
        let sites = self.lattice();
        let taken: Vec<Vec2> = inbox
            .iter()
            .filter_map(|d| d.message.claimed_site)
            .collect();
        let crowd: Vec<Vec2> = if respect_crowd {
            inbox
                .iter()
                .filter(|d| d.message.phase.is_stationary() && !d.message.phase.is_member())
                .filter_map(|d| d.message.position)
                .collect()
        } else {
            Vec::new()
        };
        let is_taken = |s: &Vec2| taken.iter().any(|t| t.distance(*s) < SITE_MATCH * pitch);
        let (site, my_distance) = sites
            .sites
            .iter()
            .enumerate()
            .filter(|(_, s)| !is_taken(s))
            .filter(|(_, s)| !crowd.iter().any(|c| c.distance(**s) < CROWD_CLEARANCE * pitch))
            // Support rule: every inward lattice neighbor must be claimed
            // before this site may be; the wavefront then grows outward
            // from the roots and can never seal a free pocket.
            .filter(|(i, _)| {
                sites.depth[*i] != u32::MAX
                    && sites
                        .supports(*i)
                        .iter()
                        .all(|&j| is_taken(&sites.sites[j]))
            })
            .map(|(_, s)| (*s, s.distance(position)))
            .filter(|(_, d)| *d <= CLAIM_RADIUS * pitch)
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())?;
        let margin = CLAIM_MARGIN * pitch;
        let beaten = inbox.iter().any(|d| {
            if d.message.phase.is_terminal() {
                return false;
            }
            let Some(p) = d.message.position else {
                return false;
            };
            let their_distance = p.distance(site);
            if their_distance > CLAIM_RADIUS * pitch + margin {
                return false;
            }
            their_distance < my_distance - margin
                || ((their_distance - my_distance).abs() <= margin
                    && d.message.sender < self.id)
        });
        if beaten {
            None
        } else {
            Some(site)
        }
    }

    fn check_surplus(&mut self, messages: &[Message]) -> bool {
        let (counter, status) = completion_update(
            self.phase,
            messages,
            self.config.quiescence_window,
            self.completion_counter,
        );
        self.completion_counter = counter;
        if status == CompletionStatus::Surplus {
            self.phase = Phase::Surplus;
            true
        } else {
            false
        }
    }
}

/// Departure check for a waiting robot.
///
/// All three gates must pass: (a) the robot's gradient strictly exceeds
/// every waiting neighbor's, or ties the maximum with the strictly highest
/// id among the tied; (b) no mover is audible; (c) the start timer reached
/// the cooldown. Isolated robots hold an infinite gradient and so never
/// start.
///
/// Only WaitToMove neighbors enter the comparison: they are the robots
/// competing to depart. Structure members sharing the maximum gradient
/// would otherwise block their waiting neighbors forever.
/// Common departure safety gates: the cooldown has elapsed, no mover is
/// audible, and the robot is not encaged in the cluster interior (a robot
/// boxed in by touching stationary neighbors cannot physically leave).
pub fn clear_to_depart(state: &Controller, inbox: &[Delivery]) -> bool {
    if state.start_timer < state.config.cooldown {
        return false;
    }
    if inbox
        .iter()
        .any(|d| d.message.phase == Phase::EdgeFollow)
    {
        return false;
    }
    let touching = inbox
        .iter()
        .filter(|d| {
            d.message.phase.is_stationary()
                && d.distance <= 1.2 * state.config.robot_diameter
        })
        .count();
    touching < CAGE_NEIGHBORS
}

pub fn start_rule(state: &Controller, inbox: &[Delivery], cooldown: u64) -> bool {
    debug_assert_eq!(state.phase, Phase::WaitToMove);
    if !state.gradient.is_finite() {
        return false;
    }
    if state.start_timer < cooldown {
        return false;
    }
    if !clear_to_depart(state, inbox) {
        return false;
    }
    // Competitors are waiting robots with a usable gradient. An infinite
    // gradient can never satisfy the start rule, so it cannot outrank
    // anyone either.
    let waiting: Vec<&Message> = inbox
        .iter()
        .map(|d| &d.message)
        .filter(|m| m.phase == Phase::WaitToMove && m.gradient.is_finite())
        .collect();
    let Some(max_gradient) = waiting.iter().map(|m| m.gradient).max() else {
        // No waiting competitors in earshot: trivially the local maximum.
        return true;
    };
    if state.gradient > max_gradient {
        return true;
    }
    state.gradient == max_gradient
        && waiting
            .iter()
            .filter(|m| m.gradient == max_gradient)
            .all(|m| state.id > m.sender)
}

/// Bang-bang orbit control keeping the aggregate on the robot's right:
/// steer away inside the dead band's inner edge, toward beyond its outer
/// edge, straight within it.
///
/// The previous distance reading tempers both turn cases: a robot already
/// separating (or closing) holds course instead of turning. Without that
/// term a robot stranded beyond the band pirouettes on its turning circle
/// forever, and a robot that acquired the orbit with the wrong chirality
/// never recovers.
pub fn edge_follow_step(
    nearest_distance: f64,
    previous_distance: Option<f64>,
    desired: f64,
    hysteresis: f64,
    mirrored: bool,
) -> MotionCommand {
    let trend = previous_distance.map(|prev| nearest_distance - prev);
    let cmd = if nearest_distance < desired - hysteresis {
        match trend {
            Some(delta) if delta > 0.0 => MotionCommand::Forward,
            _ => MotionCommand::TurnLeftForward,
        }
    } else if nearest_distance > desired + hysteresis {
        match trend {
            Some(delta) if delta < 0.0 => MotionCommand::Forward,
            _ => MotionCommand::TurnRightForward,
        }
    } else {
        MotionCommand::Forward
    };
    if mirrored {
        match cmd {
            MotionCommand::TurnLeftForward => MotionCommand::TurnRightForward,
            MotionCommand::TurnRightForward => MotionCommand::TurnLeftForward,
            other => other,
        }
    } else {
        cmd
    }
}

fn nearest_stationary(inbox: &[Delivery]) -> Option<(&Message, f64)> {
    inbox
        .iter()
        .filter(|d| d.message.phase.is_stationary())
        .min_by(|a, b| a.distance.partial_cmp(&b.distance).unwrap())
        .map(|d| (&d.message, d.distance))
}

/// Halting decision for a mover.
///
/// The robot must believe itself inside the shape, and either be about to
/// exit (the lookahead point one body length along its travel direction
/// falls outside) or have wrapped into its own gradient layer: the member
/// it is currently orbiting reports a gradient at least its own.
#[allow(clippy::too_many_arguments)]
pub fn join_rule(
    position: Vec2,
    previous_position: Option<Vec2>,
    motion_direction: Option<Vec2>,
    shape: &GridShape,
    nearest: &Message,
    nearest_distance: f64,
    own_gradient: Gradient,
    config: &ControllerConfig,
) -> bool {
    if !shape.contains(position) {
        return false;
    }
    // (a) boundary exit: previously inside, lookahead outside.
    if let (Some(prev), Some(dir)) = (previous_position, motion_direction) {
        if shape.contains(prev) {
            let lookahead = position + dir * config.robot_diameter;
            if !shape.contains(lookahead) {
                return true;
            }
        }
    }
    // (b) layer wrap: the orbited robot is a member of this robot's own
    // layer (or deeper cannot happen while orbiting outward).
    if nearest.phase.is_member()
        && nearest.gradient >= own_gradient
        && nearest_distance <= config.orbit_distance() + 2.0 * config.hysteresis
    {
        return true;
    }
    false
}
