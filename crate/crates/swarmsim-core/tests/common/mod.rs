#![allow(dead_code)] // each suite uses its own subset of these fixtures

//! Shared fixtures for the integration suites: the pinned desk-scale
//! scenarios and the random placement generators the oracles run against.

use rand::Rng;
use swarmsim_core::controller::Mode;
use swarmsim_core::geom::Vec2;
use swarmsim_core::rng::{StreamKind, StreamSeed};
use swarmsim_core::world::{Pose, RobotBody, WorldConfig, WorldState};
use swarmsim_core::{RobotId, ScenarioConfig};

/// The 10x6-cell solid rectangle used by the end-to-end scenarios.
pub const RECT_SHAPE: &str = "##########\n##########\n##########\n##########\n##########\n##########\n";

/// Pinned parameters for the end-to-end rectangle assembly: 33 mm robots at
/// one body length per second, a short gradient range that resolves the
/// waiting cluster shell by shell, a 0.3-diameter orbit gap, and the
/// mirrored orbit direction so growth leads away from the cluster.
pub fn rect_scenario(dir: &std::path::Path, mode: Mode, robot_count: usize) -> ScenarioConfig {
    let shape_path = dir.join("rect.txt");
    std::fs::write(&shape_path, RECT_SHAPE).unwrap();
    let mut config = ScenarioConfig {
        shape_file: shape_path,
        robot_count,
        mode,
        ..ScenarioConfig::default()
    };
    config.cell_size = 0.033;
    config.world.robot_diameter = 0.033;
    config.world.comm_radius = 0.10;
    config.world.gradient_range = 0.056;
    config.world.message_loss_prob = 0.0;
    config.world.speed = 0.00103125;
    config.world.turn_rate = 0.10;
    config.world.tick_duration = 0.03125;
    config.world.rng_seed = 12345;
    config.d_desired = 0.0099;
    config.hysteresis = 0.003;
    config.cooldown = 30;
    config.orbit_mirrored = true;
    config.quiescence_window = 3000;
    config.stability_threshold = 8;
    config.max_ticks = 200_000;
    config.trace_stride = 100;
    config.completion_threshold = 0.95;
    config.output_dir = dir.join("out");
    config
}

/// A random connected static placement: each robot lands within 90% of the
/// comm radius of an already-placed one, so the communication graph is
/// connected by construction. Returns the world and the seed-robot count.
pub fn random_connected_world(trial: u64, max_robots: usize) -> (WorldState, usize) {
    let stream_seed = StreamSeed(0xac1_0000 + trial);
    let mut rng = stream_seed.stream(StreamKind::Placement, &[trial]);
    let n = 2 + (rng.gen::<usize>() % (max_robots - 1));
    let comm = 0.10;
    let mut positions: Vec<Vec2> = vec![Vec2::ZERO];
    for _ in 1..n {
        let anchor = positions[rng.gen::<usize>() % positions.len()];
        let radius = comm * (0.2 + 0.7 * rng.gen::<f64>());
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        positions.push(anchor + Vec2::from_angle(theta) * radius);
    }
    let seeds = 1 + rng.gen::<usize>() % 3.min(n - 1).max(1);
    let config = WorldConfig {
        comm_radius: comm,
        rng_seed: 7777 + trial,
        ..WorldConfig::default()
    };
    let robots: Vec<RobotBody> = positions
        .iter()
        .enumerate()
        .map(|(i, p)| RobotBody {
            id: i as RobotId,
            pose: Pose::new(p.x, p.y, 0.0),
            diameter: config.robot_diameter,
        })
        .collect();
    (WorldState::new(robots, config), seeds)
}

/// Brute-force adjacency of a static world: all pairs within comm radius.
pub fn adjacency_oracle(world: &WorldState) -> Vec<Vec<usize>> {
    let n = world.robots.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = world.robots[i]
                .pose
                .position
                .distance(world.robots[j].pose.position);
            if d <= world.config.comm_radius {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Multi-source BFS hop distances over an adjacency list.
pub fn bfs_oracle(adj: &[Vec<usize>], sources: &[usize]) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adj.len()];
    let mut queue = std::collections::VecDeque::new();
    for &s in sources {
        dist[s] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Exact graph diameter by BFS from every node.
pub fn graph_diameter(adj: &[Vec<usize>]) -> u32 {
    let mut diameter = 0;
    for s in 0..adj.len() {
        let dist = bfs_oracle(adj, &[s]);
        for &d in &dist {
            if d != u32::MAX {
                diameter = diameter.max(d);
            }
        }
    }
    diameter
}
