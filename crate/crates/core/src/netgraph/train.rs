use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BlockGraph, GraphError, Sequence, State};

/// Learning-rate and momentum decay and the mix of epoch modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSchedule {
    pub epochs: usize,
    pub lr0: f64,
    pub lr_decay: f64,
    pub momentum0: f64,
    pub momentum_decay: f64,
    /// Fraction of epochs run in sequential mode.
    pub mode_mix: f64,
    pub seed: u64,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        TrainingSchedule {
            epochs: 30,
            lr0: 0.05,
            lr_decay: 0.95,
            momentum0: 0.5,
            momentum_decay: 0.95,
            mode_mix: 0.5,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochMode {
    /// Utterances in order, frames in time order, state carried along.
    Sequential,
    /// All frames of all utterances in seeded random order, each starting
    /// from the teacher-forced state recorded at the start of the epoch.
    Random,
}

impl TrainingSchedule {
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: &str| Err(GraphError::Training(m.to_string()));
        if !(self.lr0 >= 0.0) {
            return bad("lr0 must be non-negative");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) || !(self.momentum_decay > 0.0 && self.momentum_decay <= 1.0) {
            return bad("decay factors must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.momentum0) {
            return bad("momentum0 must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.mode_mix) {
            return bad("mode_mix must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn lr(&self, epoch: usize) -> f64 {
        self.lr0 * self.lr_decay.powi(epoch as i32)
    }

    pub fn momentum(&self, epoch: usize) -> f64 {
        self.momentum0 * self.momentum_decay.powi(epoch as i32)
    }

    /// Sequential epochs are spread evenly: epoch `e` is sequential when
    /// `floor((e + 1) * mix) > floor(e * mix)`.
    pub fn mode(&self, epoch: usize) -> EpochMode {
        let e = epoch as f64;
        if ((e + 1.0) * self.mode_mix).floor() > (e * self.mode_mix).floor() {
            EpochMode::Sequential
        } else {
            EpochMode::Random
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-step loss of every epoch, measured before each step's update.
    pub losses: Vec<f64>,
    pub modes: Vec<EpochMode>,
    /// Mean per-step loss of always predicting the mean target.
    pub baseline: f64,
}

fn mean_predictor_loss(data: &[Sequence], w: &[f64], total_steps: usize) -> Result<f64, GraphError> {
    let mut mean = vec![0.0; w.len()];
    for t in data.iter().flat_map(|s| &s.targets) {
        mean.iter_mut().zip(t).for_each(|(m, v)| *m += v / total_steps as f64);
    }
    let mut sum = 0.0;
    for t in data.iter().flat_map(|s| &s.targets) {
        sum += super::weighted_euclidean(&mean, t, w)?;
    }
    Ok(sum / total_steps as f64)
}

fn apply_update(graph: &mut BlockGraph, grads: &mut [f64], velocity: &mut [f64], lr: f64, momentum: f64) {
    let mut k = 0;
    for b in &mut graph.blocks {
        for params in [&mut b.weights, &mut b.biases] {
            let n = params.len();
            for ((p, v), g) in params.iter_mut().zip(&mut velocity[k..k + n]).zip(&mut grads[k..k + n]) {
                *v = momentum * *v - lr * *g;
                *p += *v;
                *g = 0.0;
            }
            k += n;
        }
    }
}

/// Per-step momentum SGD on the weighted Euclidean loss. Every step's
/// gradient covers that step only; recurrent buffers marked teacher forced
/// are filled with targets in both modes.
pub fn train(
    graph: &mut BlockGraph,
    data: &[Sequence],
    w: &[f64],
    schedule: &TrainingSchedule,
) -> Result<TrainReport, GraphError> {
    schedule.validate()?;
    let total_steps: usize = data.iter().map(Sequence::len).sum();
    if total_steps == 0 {
        return Err(GraphError::Training("empty dataset".into()));
    }
    for s in data {
        graph.check_sequence(s, w)?;
    }
    let mut grads = vec![0.0; graph.n_params];
    let mut velocity = vec![0.0; graph.n_params];
    let mut report = TrainReport {
        losses: Vec::with_capacity(schedule.epochs),
        modes: Vec::with_capacity(schedule.epochs),
        baseline: mean_predictor_loss(data, w, total_steps)?,
    };
    let start = |g: &BlockGraph, s: &Sequence| s.initial.clone().unwrap_or_else(|| g.zero_state());

    for epoch in 0..schedule.epochs {
        let (lr, mu) = (schedule.lr(epoch), schedule.momentum(epoch));
        let mode = schedule.mode(epoch);
        let mut sum = 0.0;
        match mode {
            EpochMode::Sequential => {
                for s in data {
                    let mut state = start(graph, s);
                    for t in 0..s.len() {
                        sum += graph.train_step(&s.dense_inputs(t), &s.targets[t], w, &mut state, &mut grads)?;
                        apply_update(graph, &mut grads, &mut velocity, lr, mu);
                        graph.teacher_force(&mut state, &s.targets[t]);
                    }
                }
            }
            EpochMode::Random => {
                let mut snapshots: Vec<(usize, usize, State)> = Vec::with_capacity(total_steps);
                for (i, s) in data.iter().enumerate() {
                    let mut state = start(graph, s);
                    for t in 0..s.len() {
                        snapshots.push((i, t, state.clone()));
                        graph.step(&s.dense_inputs(t), &mut state)?;
                        graph.teacher_force(&mut state, &s.targets[t]);
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed ^ epoch as u64);
                snapshots.shuffle(&mut rng);
                for (i, t, mut state) in snapshots {
                    let s = &data[i];
                    sum += graph.train_step(&s.dense_inputs(t), &s.targets[t], w, &mut state, &mut grads)?;
                    apply_update(graph, &mut grads, &mut velocity, lr, mu);
                }
            }
        }
        report.losses.push(sum / total_steps as f64);
        report.modes.push(mode);
        log::debug!("epoch {epoch} ({mode:?}): loss {:.6}", sum / total_steps as f64);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{build_graph, Activation, SparseVec, TopologySpec};

    fn linear_graph() -> BlockGraph {
        let mut s = TopologySpec::new(9);
        s.input("x", 3).dense("d", 3, 2, Activation::Linear).output("y", 2).edge("x", "d").edge("d", "y");
        build_graph(&s).unwrap()
    }

    fn single_pair() -> Vec<Sequence> {
        vec![Sequence {
            inputs: vec![vec![SparseVec::from(vec![0.5, -1.0, 0.25])]],
            targets: vec![vec![0.3, -0.7]],
            initial: None,
        }]
    }

    #[test]
    fn schedule_laws() {
        let s = TrainingSchedule::default();
        assert!(s.lr(3) < s.lr(2) && s.momentum(3) < s.momentum(2));
        let modes: Vec<EpochMode> = (0..4).map(|e| s.mode(e)).collect();
        assert_eq!(modes, [EpochMode::Random, EpochMode::Sequential, EpochMode::Random, EpochMode::Sequential]);
        let all_seq = TrainingSchedule { mode_mix: 1.0, ..s.clone() };
        assert!((0..10).all(|e| all_seq.mode(e) == EpochMode::Sequential));
        let none = TrainingSchedule { mode_mix: 0.0, ..s.clone() };
        assert!((0..10).all(|e| none.mode(e) == EpochMode::Random));
        let quarter = TrainingSchedule { mode_mix: 0.25, ..s };
        assert_eq!((0..8).filter(|&e| quarter.mode(e) == EpochMode::Sequential).count(), 2);
        assert!(TrainingSchedule { mode_mix: 1.5, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut g = linear_graph();
        let before = g.parameters();
        let sched = TrainingSchedule { lr0: 0.0, epochs: 5, ..Default::default() };
        train(&mut g, &single_pair(), &[1.0, 1.0], &sched).unwrap();
        assert_eq!(g.parameters(), before);
    }

    #[test]
    fn single_pair_reaches_exact_fit() {
        let mut g = linear_graph();
        let sched = TrainingSchedule {
            epochs: 500,
            lr0: 0.2,
            lr_decay: 0.999,
            momentum0: 0.5,
            momentum_decay: 0.999,
            ..Default::default()
        };
        let data = single_pair();
        train(&mut g, &data, &[1.0, 1.0], &sched).unwrap();
        let loss = g.sequence_loss(&data[0], &[1.0, 1.0], false).unwrap();
        assert!(loss < 1e-10, "{loss}");
    }

    #[test]
    fn training_is_deterministic_and_empty_data_fails() {
        let data: Vec<Sequence> = (0..4)
            .map(|k| Sequence {
                inputs: (0..5).map(|t| vec![SparseVec::from(vec![t as f64 * 0.1, k as f64 * 0.2, 1.0])]).collect(),
                targets: (0..5).map(|t| vec![(t + k) as f64 * 0.05, 0.5]).collect(),
                initial: None,
            })
            .collect();
        let sched = TrainingSchedule { epochs: 6, ..Default::default() };
        let mut a = linear_graph();
        let mut b = linear_graph();
        let ra = train(&mut a, &data, &[1.0, 1.0], &sched).unwrap();
        let rb = train(&mut b, &data, &[1.0, 1.0], &sched).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.parameters(), b.parameters());
        assert!(ra.losses.last().unwrap() < &ra.losses[0]);
        // oracle: per-dimension variance of the targets, weighted
        let t: Vec<&Vec<f64>> = data.iter().flat_map(|s| &s.targets).collect();
        let n = t.len() as f64;
        let var = |d: usize| {
            let m = t.iter().map(|v| v[d]).sum::<f64>() / n;
            t.iter().map(|v| (v[d] - m).powi(2)).sum::<f64>() / n
        };
        assert!((ra.baseline - (var(0) + var(1))).abs() < 1e-12, "{}", ra.baseline);
        assert!(train(&mut a, &[], &[1.0, 1.0], &sched).is_err());
    }
}
