//! Heuristic-guided bidirectional RRT over food poses.
//!
//! One tree grows from the start pose and one from every goal. Each
//! iteration picks an unconnected goal tree (cheaper goals more often),
//! extends the smaller of the pair toward a random pose and then greedily
//! extends the other toward the new node. Expansion nodes are drawn from the
//! k nearest, weighted by how promising their predicted total cost is.

mod trajectory;

pub use trajectory::{
    interpolate_trajectory, path_comfort, select_trajectory, smooth_path, trajectory_csv, TimedPose, Trajectory,
};

use crate::costs::{edge_cost, pose_distance, ComfortRayConfig, CostWeights, GoalTerms};
use crate::error::{Error, Result};
use crate::geom::{slerp, Pose, Scene};
use crate::rng::{rng, Rng};
use nalgebra::{Unit, UnitQuaternion, Vector3};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub step_eps: f64,
    pub knn_k: usize,
    pub max_iters: usize,
    pub edge_check_resolution: f64,
    pub goal_connect_radius: f64,
    pub smoothing_iters: usize,
    pub m_floor: f64,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            step_eps: 0.01,
            knn_k: 8,
            max_iters: 5000,
            edge_check_resolution: 0.005,
            goal_connect_radius: 0.005,
            smoothing_iters: 200,
            m_floor: 0.1,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.step_eps, self.edge_check_resolution, self.goal_connect_radius];
        if pos.iter().any(|v| !(*v > 0.0)) || self.knn_k == 0 {
            return Err(Error::InvalidParameter(
                "step_eps, edge_check_resolution and goal_connect_radius must be > 0 and knn_k >= 1".into(),
            ));
        }
        if !(self.m_floor > 0.0 && self.m_floor <= 1.0) {
            return Err(Error::InvalidParameter("m_floor must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Quality weight of a node with predicted total cost `c_i`: 1 at the best
/// possible cost `c_star`, 0 at the worst seen so far `c_max`. The second
/// value reports whether `c_i` had to be clamped into range.
pub fn node_quality(c_i: f64, c_star: f64, c_max: f64) -> (f64, bool) {
    if c_max <= c_star {
        return (1.0, c_i < c_star || c_i > c_max);
    }
    let clamped = c_i.clamp(c_star, c_max);
    (1.0 - (clamped - c_star) / (c_max - c_star), clamped != c_i)
}

/// Softmax draw over negative goal costs with temperature `tau`; a zero
/// temperature draws uniformly.
pub fn select_goal_tree(costs: &[f64], tau: f64, rng: &mut Rng) -> usize {
    assert!(!costs.is_empty(), "no goal tree to select");
    if costs.len() == 1 {
        return 0;
    }
    let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = if tau > 1e-12 {
        costs.iter().map(|c| (-(c - lo) / tau).exp()).collect()
    } else {
        vec![1.0; costs.len()]
    };
    weighted_index(&weights, rng)
}

/// Temperature used for goal-tree selection: half the median goal cost.
pub fn goal_temperature(costs: &[f64]) -> f64 {
    let mut s = costs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
    0.5 * median
}

/// Index drawn with probability proportional to `weights`.
pub fn weighted_index(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Pose `step` (pose distance) from `from` toward `to`, or `to` itself if
/// closer than that.
pub fn steer(from: &Pose, to: &Pose, step: f64, w_rot: f64) -> Pose {
    let d = pose_distance(from, to, w_rot);
    if d <= step {
        return *to;
    }
    from.interpolate(to, step / d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub pose: Pose,
    pub parent: Option<usize>,
    /// Cost from the tree root.
    pub g: f64,
    /// Heuristic to the opposing root (the best active goal for the start tree).
    pub h: f64,
    pub c: f64,
    pub m_q: f64,
}

/// A search tree. `h[i][o]` is node `i`'s heuristic for objective `o`; the
/// start tree has one objective per goal, goal trees have one.
#[derive(Clone, Debug)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    h: Vec<Vec<f64>>,
    c_star: Vec<f64>,
    c_max: Vec<f64>,
    pub quality_clamps: usize,
}

impl Tree {
    pub fn new(root: Pose, h_root: Vec<f64>) -> Self {
        let best = h_root.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            nodes: vec![TreeNode {
                pose: root,
                parent: None,
                g: 0.0,
                h: best,
                c: best,
                m_q: 1.0,
            }],
            c_star: h_root.clone(),
            c_max: h_root.clone(),
            h: vec![h_root],
            quality_clamps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add(&mut self, pose: Pose, parent: usize, edge: f64, h: Vec<f64>) -> usize {
        let g = self.nodes[parent].g + edge;
        let mut best = f64::INFINITY;
        for (o, ho) in h.iter().enumerate() {
            self.c_max[o] = self.c_max[o].max(g + ho);
            best = best.min(*ho);
        }
        self.nodes.push(TreeNode {
            pose,
            parent: Some(parent),
            g,
            h: best,
            c: g + best,
            m_q: 1.0,
        });
        self.h.push(h);
        self.nodes.len() - 1
    }

    /// Quality of node `i` for objective `o`.
    pub fn quality(&mut self, i: usize, o: usize) -> f64 {
        let c = self.nodes[i].g + self.h[i][o];
        let (q, clamped) = node_quality(c, self.c_star[o], self.c_max[o]);
        self.quality_clamps += clamped as usize;
        self.nodes[i].m_q = q;
        q
    }

    /// The `k` nearest nodes to `p`, nearest first (ties by index).
    pub fn nearest_k(&self, p: &Pose, k: usize, w_rot: f64) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (pose_distance(&n.pose, p, w_rot), i))
            .collect();
        let k = k.min(d.len());
        if k < d.len() {
            d.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.truncate(k);
        }
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn nearest(&self, p: &Pose, w_rot: f64) -> usize {
        self.nearest_k(p, 1, w_rot)[0]
    }

    /// Picks an expansion node among the `k` nearest to `sample`, with
    /// probability proportional to `max(m_q, m_floor)` for objective `o`.
    pub fn choose_expansion_node(&mut self, sample: &Pose, o: usize, cfg: &PlannerConfig, w_rot: f64, rng: &mut Rng) -> usize {
        let near = self.nearest_k(sample, cfg.knn_k, w_rot);
        let weights: Vec<f64> = near.iter().map(|&i| self.quality(i, o).max(cfg.m_floor)).collect();
        near[weighted_index(&weights, rng)]
    }

    /// Poses from the root to node `i`.
    pub fn path_to(&self, mut i: usize) -> Vec<Pose> {
        let mut out = vec![self.nodes[i].pose];
        while let Some(p) = self.nodes[i].parent {
            out.push(self.nodes[p].pose);
            i = p;
        }
        out.reverse();
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub iterations: usize,
    pub start_tree_nodes: usize,
    pub goal_tree_nodes: Vec<usize>,
    pub straight_line_goals: usize,
    pub quality_clamps: usize,
    pub edge_checks: usize,
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    /// One entry per input goal; `None` when the goal was not reached.
    pub trajectories: Vec<Option<Trajectory>>,
    pub stats: PlanStats,
}

/// Everything a planning query needs besides the goals.
#[derive(Clone, Copy, Debug)]
pub struct PlanContext<'a> {
    pub scene: &'a Scene,
    pub weights: &'a CostWeights,
    pub rays: &'a ComfortRayConfig,
    pub cfg: &'a PlannerConfig,
}

impl PlanContext<'_> {
    pub fn edge_cost(&self, a: &Pose, b: &Pose) -> f64 {
        edge_cost(a, b, self.scene, self.rays, self.weights)
    }

    pub fn edge_free(&self, a: &Pose, b: &Pose) -> bool {
        self.scene.edge_is_free(a, b, self.cfg.edge_check_resolution, self.weights.w_rot)
    }
}

/// Straight segment split into pieces no longer than `step`.
pub(crate) fn densify(a: &Pose, b: &Pose, step: f64, w_rot: f64) -> Vec<Pose> {
    let d = pose_distance(a, b, w_rot);
    let n = (d / step).ceil().max(1.0) as usize;
    (0..=n).map(|k| a.interpolate(b, k as f64 / n as f64)).collect()
}

/// Random pose from the trajectory sampling distribution: translation
/// uniform in the box around start and goals, rotation between the start
/// and a random goal's, slightly perturbed.
fn sample_traj_pose(start: &Pose, goals: &[Pose], lo: &Vector3<f64>, hi: &Vector3<f64>, rng: &mut Rng) -> Pose {
    let t = Vector3::from_fn(|i, _| rng.random_range(lo[i]..=hi[i]));
    let g = &goals[rng.random_range(0..goals.len())];
    let base = slerp(&start.rotation, &g.rotation, rng.random::<f64>());
    let axis = Vector3::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0);
    let pert = match Unit::try_new(axis, 1e-9) {
        Some(a) => UnitQuaternion::from_axis_angle(&a, rng.random::<f64>() * 0.3),
        None => UnitQuaternion::identity(),
    };
    Pose::new(t, pert * base)
}

/// Plans from `start` to every goal. `terms` are the cached goal cost terms,
/// one per goal.
pub fn hbirrt_plan(ctx: &PlanContext, start: &Pose, goals: &[Pose], terms: &[GoalTerms]) -> Result<PlanResult> {
    assert_eq!(goals.len(), terms.len(), "one set of goal terms per goal");
    let cfg = ctx.cfg;
    let w = ctx.weights;
    let wr = w.w_rot;
    if !ctx.scene.is_free(start) {
        return Err(Error::InvalidStart);
    }
    let mut rng = rng(cfg.seed);
    let k = goals.len();
    let mut stats = PlanStats::default();
    let mut out: Vec<Option<Trajectory>> = vec![None; k];

    let heuristics = |p: &Pose| -> Vec<f64> {
        (0..k).map(|i| pose_distance(p, &goals[i], wr) + terms[i].penalty(w)).collect()
    };
    let goal_cost: Vec<f64> = heuristics(start);
    let mut start_tree = Tree::new(*start, goal_cost.clone());
    let mut goal_trees: Vec<Tree> = goals
        .iter()
        .map(|g| Tree::new(*g, vec![pose_distance(g, start, wr)]))
        .collect();

    let usable: Vec<bool> = goals.iter().map(|g| ctx.scene.is_free(g)).collect();
    for i in 0..k {
        if !usable[i] {
            continue;
        }
        if pose_distance(start, &goals[i], wr) <= cfg.goal_connect_radius {
            out[i] = Some(Trajectory::from_waypoints(ctx, i, vec![*start], terms[i]));
            continue;
        }
        let line = densify(start, &goals[i], cfg.step_eps, wr);
        stats.edge_checks += line.len() - 1;
        if line.windows(2).all(|s| ctx.edge_free(&s[0], &s[1])) {
            stats.straight_line_goals += 1;
            out[i] = Some(Trajectory::from_waypoints(ctx, i, line, terms[i]));
        }
    }

    let (mut lo, mut hi) = (start.translation, start.translation);
    for g in goals {
        lo = lo.inf(&g.translation);
        hi = hi.sup(&g.translation);
    }
    lo.add_scalar_mut(-0.05);
    hi.add_scalar_mut(0.05);

    for _ in 0..cfg.max_iters {
        let open: Vec<usize> = (0..k).filter(|&i| usable[i] && out[i].is_none()).collect();
        if open.is_empty() {
            break;
        }
        stats.iterations += 1;
        let costs: Vec<f64> = open.iter().map(|&i| goal_cost[i]).collect();
        let gi = open[select_goal_tree(&costs, goal_temperature(&costs), &mut rng)];
        let sample = sample_traj_pose(start, goals, &lo, &hi, &mut rng);

        let start_first = start_tree.len() <= goal_trees[gi].len();
        let joined = {
            let gt = &mut goal_trees[gi];
            let heur_goal = |p: &Pose| vec![pose_distance(p, start, wr)];
            let mut side_s = Side {
                tree: &mut start_tree,
                objective: gi,
                heur: &heuristics,
            };
            let mut side_g = Side {
                tree: gt,
                objective: 0,
                heur: &heur_goal,
            };
            if start_first {
                connect(ctx, &mut side_s, &mut side_g, &sample, &mut rng, &mut stats)
            } else {
                connect(ctx, &mut side_g, &mut side_s, &sample, &mut rng, &mut stats).map(|(a, b)| (b, a))
            }
        };
        if let Some((si, gj)) = joined {
            let mut path = start_tree.path_to(si);
            let mut back = goal_trees[gi].path_to(gj);
            back.reverse();
            if pose_distance(path.last().unwrap(), &back[0], wr) == 0.0 {
                back.remove(0);
            }
            path.extend(back);
            out[gi] = Some(Trajectory::from_waypoints(ctx, gi, path, terms[gi]));
        }
    }

    stats.start_tree_nodes = start_tree.len();
    stats.goal_tree_nodes = goal_trees.iter().map(Tree::len).collect();
    stats.quality_clamps = start_tree.quality_clamps + goal_trees.iter().map(|t| t.quality_clamps).sum::<usize>();
    Ok(PlanResult {
        trajectories: out,
        stats,
    })
}

/// One side of a connect step: a tree, the objective it is scored against
/// and how to compute heuristics for new nodes.
pub struct Side<'t, 'h> {
    pub tree: &'t mut Tree,
    pub objective: usize,
    pub heur: &'h dyn Fn(&Pose) -> Vec<f64>,
}

/// Extends `a` one step toward `sample`, then extends `b` toward the new
/// node until blocked or joined. Returns the joined node pair `(in a, in b)`.
pub fn connect(
    ctx: &PlanContext,
    a: &mut Side,
    b: &mut Side,
    sample: &Pose,
    rng: &mut Rng,
    stats: &mut PlanStats,
) -> Option<(usize, usize)> {
    let cfg = ctx.cfg;
    let wr = ctx.weights.w_rot;
    let from = a.tree.choose_expansion_node(sample, a.objective, cfg, wr, rng);
    let from_pose = a.tree.nodes[from].pose;
    let new_pose = steer(&from_pose, sample, cfg.step_eps, wr);
    if pose_distance(&from_pose, &new_pose, wr) == 0.0 {
        return None;
    }
    stats.edge_checks += 1;
    if !ctx.edge_free(&from_pose, &new_pose) {
        return None;
    }
    let new_a = a.tree.add(new_pose, from, ctx.edge_cost(&from_pose, &new_pose), (a.heur)(&new_pose));

    let mut cur = b.tree.nearest(&new_pose, wr);
    loop {
        let cur_pose = b.tree.nodes[cur].pose;
        let d = pose_distance(&cur_pose, &new_pose, wr);
        if d <= cfg.goal_connect_radius {
            stats.edge_checks += 1;
            if d == 0.0 || ctx.edge_free(&cur_pose, &new_pose) {
                return Some((new_a, cur));
            }
            return None;
        }
        let next = steer(&cur_pose, &new_pose, cfg.step_eps, wr);
        stats.edge_checks += 1;
        if !ctx.edge_free(&cur_pose, &next) {
            return None;
        }
        cur = b.tree.add(next, cur, ctx.edge_cost(&cur_pose, &next), (b.heur)(&next));
    }
}
