//! Physical simulation: robot bodies, the range-limited lossy broadcast
//! channel, distance sensing, unicycle motion, and disc collision resolution.
//!
//! A tick advances in a fixed phase order: outgoing messages are exchanged
//! (with per-delivery loss and distance sensing), controllers decide, motion
//! applies, collisions resolve, the tick counter increments. A single run is
//! strictly sequential; determinism is a contract, not an accident.

use crate::geom::{wrap_angle, Vec2};
use crate::protocol::{Message, RobotId};
use crate::rng::{StreamKind, StreamSeed};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("unknown robot id {0}")]
    UnknownRobot(RobotId),
    #[error("robots {0} and {1} are not within communication range")]
    NotInRange(RobotId, RobotId),
}

/// Position and heading; heading stays normalized into [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            position: Vec2::new(x, y),
            heading: wrap_angle(heading),
        }
    }
}

/// One robot's physical body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotBody {
    pub id: RobotId,
    pub pose: Pose,
    pub diameter: f64,
}

/// Motion primitive for one tick. Anything but the turn/forward variants
/// halts the robot exactly: a stopped robot does not jitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MotionCommand {
    #[default]
    Stop,
    Forward,
    TurnLeftForward,
    TurnRightForward,
}

impl MotionCommand {
    pub fn is_moving(self) -> bool {
        !matches!(self, MotionCommand::Stop)
    }
}

/// World-level parameters. Distances in meters, angles in radians, one tick
/// per synchronous round.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub comm_radius: f64,
    /// Only messages measured within this range feed the hop-count
    /// gradient. Defaults to the full comm radius; tighter values resolve
    /// dense clusters shell by shell.
    pub gradient_range: f64,
    pub message_loss_prob: f64,
    pub speed: f64,
    pub turn_rate: f64,
    pub motion_noise_xy_std: f64,
    pub motion_noise_heading_std: f64,
    pub sensor_noise_std: f64,
    pub tick_duration: f64,
    pub robot_diameter: f64,
    pub rng_seed: u64,
    pub collision_tolerance: f64,
    pub collision_max_iters: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        // The diameter and speed are config defaults, not literature
        // constants: 33 mm bodies moving one body length per simulated
        // second at 32 ticks per second.
        WorldConfig {
            comm_radius: 0.10,
            gradient_range: 0.10,
            message_loss_prob: 0.0,
            speed: 0.033 * 0.03125,
            turn_rate: 0.10,
            motion_noise_xy_std: 0.0,
            motion_noise_heading_std: 0.0,
            sensor_noise_std: 0.0,
            tick_duration: 0.03125,
            robot_diameter: 0.033,
            rng_seed: 12345,
            collision_tolerance: 1e-5,
            collision_max_iters: 32,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.comm_radius <= 0.0 {
            return Err("comm_radius must be > 0".into());
        }
        if self.gradient_range <= 0.0 {
            return Err("gradient_range must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.message_loss_prob) {
            return Err("message_loss_prob must be in [0, 1]".into());
        }
        if self.tick_duration <= 0.0 {
            return Err("tick_duration must be > 0".into());
        }
        if self.robot_diameter <= 0.0 {
            return Err("robot_diameter must be > 0".into());
        }
        if self.motion_noise_xy_std < 0.0
            || self.motion_noise_heading_std < 0.0
            || self.sensor_noise_std < 0.0
        {
            return Err("noise std must be >= 0".into());
        }
        Ok(())
    }
}

/// A delivered message paired with the distance measured on reception.
/// Dropped messages carry no measurement; sensing rides on the channel.
#[derive(Debug, Clone)]
pub struct Delivery {
    pub message: Message,
    pub distance: f64,
}

/// Residual-overlap diagnostics from collision resolution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CollisionReport {
    pub iterations: usize,
    pub residual_overlap: f64,
}

/// All physical state at one tick.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub tick: u64,
    pub robots: Vec<RobotBody>,
    pub config: WorldConfig,
    rng: StreamSeed,
}

impl WorldState {
    pub fn new(robots: Vec<RobotBody>, config: WorldConfig) -> Self {
        let rng = StreamSeed(config.rng_seed);
        WorldState {
            tick: 0,
            robots,
            config,
            rng,
        }
    }

    pub fn rng(&self) -> StreamSeed {
        self.rng
    }

    pub fn robot(&self, id: RobotId) -> Result<&RobotBody, WorldError> {
        self.robots
            .iter()
            .find(|r| r.id == id)
            .ok_or(WorldError::UnknownRobot(id))
    }

    fn index_of(&self, id: RobotId) -> Result<usize, WorldError> {
        self.robots
            .iter()
            .position(|r| r.id == id)
            .ok_or(WorldError::UnknownRobot(id))
    }

    /// Ids of all robots within comm_radius of `id` (center distance,
    /// inclusive threshold), excluding `id` itself. Symmetric by definition.
    pub fn comm_neighbors(&self, id: RobotId) -> Result<Vec<RobotId>, WorldError> {
        let own = self.robot(id)?;
        let mut out: Vec<RobotId> = self
            .robots
            .iter()
            .filter(|r| {
                r.id != id
                    && r.pose.position.distance(own.pose.position) <= self.config.comm_radius
            })
            .map(|r| r.id)
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// True center distance plus zero-mean Gaussian sensor noise, clamped at
    /// zero. Only defined within communication range.
    pub fn measure_distance(&self, a: RobotId, b: RobotId) -> Result<f64, WorldError> {
        let pa = self.robot(a)?.pose.position;
        let pb = self.robot(b)?.pose.position;
        let true_distance = pa.distance(pb);
        if true_distance > self.config.comm_radius {
            return Err(WorldError::NotInRange(a, b));
        }
        let std = self.config.sensor_noise_std;
        if std == 0.0 {
            return Ok(true_distance);
        }
        let mut rng = self.rng.stream(
            StreamKind::SensorNoise,
            &[self.tick, u64::from(a), u64::from(b)],
        );
        let noise = Normal::new(0.0, std).unwrap().sample(&mut rng);
        Ok((true_distance + noise).max(0.0))
    }

    /// Exchange one message per robot: every neighbor delivery is dropped
    /// independently with `message_loss_prob`, surviving deliveries carry a
    /// distance measurement, and each inbox is ordered by ascending sender
    /// id. `outgoing[i]` is robot `i`'s broadcast (slice order must match
    /// `self.robots`).
    pub fn exchange(&self, outgoing: &[Message]) -> Vec<Vec<Delivery>> {
        assert_eq!(outgoing.len(), self.robots.len());
        let loss = self.config.message_loss_prob;
        let mut inboxes: Vec<Vec<Delivery>> = vec![Vec::new(); self.robots.len()];
        for (ri, receiver) in self.robots.iter().enumerate() {
            for (si, sender) in self.robots.iter().enumerate() {
                if si == ri {
                    continue;
                }
                let distance = sender.pose.position.distance(receiver.pose.position);
                if distance > self.config.comm_radius {
                    continue;
                }
                if loss > 0.0 {
                    let mut rng = self.rng.stream(
                        StreamKind::MessageLoss,
                        &[self.tick, u64::from(sender.id), u64::from(receiver.id)],
                    );
                    if rng.gen::<f64>() < loss {
                        continue;
                    }
                }
                let measured = if self.config.sensor_noise_std == 0.0 {
                    distance
                } else {
                    self.measure_distance(receiver.id, sender.id)
                        .expect("sender within comm radius")
                };
                inboxes[ri].push(Delivery {
                    message: outgoing[si].clone(),
                    distance: measured,
                });
            }
            inboxes[ri].sort_by_key(|d| d.message.sender);
        }
        inboxes
    }

    /// Apply one motion command to one body: optional turn, then a forward
    /// step along the new heading, plus per-axis Gaussian noise. Stop is the
    /// exact identity.
    pub fn apply_motion(&self, body: RobotBody, cmd: MotionCommand) -> RobotBody {
        apply_motion(body, cmd, &self.config, self.rng, self.tick)
    }

    /// Advance physics for the whole swarm: motion for every robot, then
    /// collision resolution, then the tick counter. `cmds` follows robot
    /// order. Robots with a Stop command are treated as immovable during
    /// collision resolution.
    pub fn advance(&mut self, cmds: &[MotionCommand]) -> CollisionReport {
        assert_eq!(cmds.len(), self.robots.len());
        for (body, &cmd) in self.robots.iter_mut().zip(cmds) {
            *body = apply_motion(*body, cmd, &self.config, self.rng, self.tick);
        }
        let moving: Vec<bool> = cmds.iter().map(|c| c.is_moving()).collect();
        let report = resolve_collisions(
            &mut self.robots,
            &moving,
            self.config.collision_tolerance,
            self.config.collision_max_iters,
        );
        self.tick += 1;
        report
    }

    /// Stable byte serialization: tick and exact f64 bits per robot.
    pub fn serialize(&self) -> String {
        let mut out = format!("tick={}\n", self.tick);
        for r in &self.robots {
            out.push_str(&format!(
                "{},{:016x},{:016x},{:016x}\n",
                r.id,
                r.pose.position.x.to_bits(),
                r.pose.position.y.to_bits(),
                r.pose.heading.to_bits()
            ));
        }
        out
    }

    /// SHA-256 digest of the serialized state, hex-encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.serialize().as_bytes());
        let bytes = hasher.finalize();
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Mutable access for harness interventions (seed placement, fixtures).
    pub fn robot_mut(&mut self, id: RobotId) -> Result<&mut RobotBody, WorldError> {
        let idx = self.index_of(id)?;
        Ok(&mut self.robots[idx])
    }
}

fn apply_motion(
    body: RobotBody,
    cmd: MotionCommand,
    config: &WorldConfig,
    rng: StreamSeed,
    tick: u64,
) -> RobotBody {
    if !cmd.is_moving() {
        return body;
    }
    let turn = match cmd {
        MotionCommand::TurnLeftForward => config.turn_rate,
        MotionCommand::TurnRightForward => -config.turn_rate,
        _ => 0.0,
    };
    let mut heading = body.pose.heading + turn;
    let mut position = body.pose.position + Vec2::from_angle(heading) * config.speed;
    if config.motion_noise_xy_std > 0.0 || config.motion_noise_heading_std > 0.0 {
        let mut stream = rng.stream(StreamKind::MotionNoise, &[tick, u64::from(body.id)]);
        if config.motion_noise_xy_std > 0.0 {
            let n = Normal::new(0.0, config.motion_noise_xy_std).unwrap();
            position = position + Vec2::new(n.sample(&mut stream), n.sample(&mut stream));
        }
        if config.motion_noise_heading_std > 0.0 {
            let n = Normal::new(0.0, config.motion_noise_heading_std).unwrap();
            heading += n.sample(&mut stream);
        }
    }
    RobotBody {
        pose: Pose {
            position,
            heading: wrap_angle(heading),
        },
        ..body
    }
}

/// Iteratively separate overlapping disc pairs along their center line.
/// Two movers split the correction equally; a mover takes the full
/// correction against a stationary robot; two stationary robots are left
/// in place and the overlap is reported as residual.
pub fn resolve_collisions(
    robots: &mut [RobotBody],
    moving: &[bool],
    tolerance: f64,
    max_iters: usize,
) -> CollisionReport {
    let n = robots.len();
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let min_dist = (robots[i].diameter + robots[j].diameter) / 2.0;
                let delta = robots[j].pose.position - robots[i].pose.position;
                let dist = delta.norm();
                let overlap = min_dist - dist;
                if overlap <= tolerance {
                    continue;
                }
                worst = worst.max(overlap);
                // Coincident centers get a fixed deterministic axis.
                let dir = delta.normalized(1e-12).unwrap_or(Vec2::new(1.0, 0.0));
                match (moving[i], moving[j]) {
                    (true, true) => {
                        robots[i].pose.position = robots[i].pose.position - dir * (overlap / 2.0);
                        robots[j].pose.position = robots[j].pose.position + dir * (overlap / 2.0);
                    }
                    (true, false) => {
                        robots[i].pose.position = robots[i].pose.position - dir * overlap;
                    }
                    (false, true) => {
                        robots[j].pose.position = robots[j].pose.position + dir * overlap;
                    }
                    (false, false) => {}
                }
            }
        }
        if worst <= tolerance {
            return CollisionReport {
                iterations,
                residual_overlap: 0.0,
            };
        }
    }
    // Max iterations reached: report the residual rather than failing.
    let mut residual = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let min_dist = (robots[i].diameter + robots[j].diameter) / 2.0;
            let overlap = min_dist
                - robots[j]
                    .pose
                    .position
                    .distance(robots[i].pose.position);
            if overlap > tolerance {
                residual = residual.max(overlap);
            }
        }
    }
    CollisionReport {
        iterations,
        residual_overlap: residual,
    }
}
