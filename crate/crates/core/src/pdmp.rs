//! The limiting piecewise deterministic process: deterministic replicator
//! flow between exponentially distributed environment switches.
//!
//! The flow is integrated with a classical fixed-substep fourth-order
//! scheme; no step ever crosses a switch, so given the integrator the paths
//! are exact in distribution. A separating-variables closed form for the
//! one-species flow serves as the accuracy oracle.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use crate::env::{drift_field_into, EnvironmentModel, FitnessVector, SimplexPoint, SIMPLEX_TOL};
use crate::rng::rng_from;
use crate::{Error, Result};

/// Default cap on the internal integration substep.
pub const DEFAULT_H_MAX: f64 = 1e-3;

/// Reusable integration workspace so the inner loop never allocates.
#[derive(Debug, Clone)]
pub struct FlowIntegrator {
    h_max: f64,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl FlowIntegrator {
    pub fn new(dim: usize, h_max: f64) -> Self {
        assert!(h_max > 0.0, "h_max must be positive");
        Self {
            h_max,
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Advance `x` by `dt` under the field of `s`, in place. Coordinates at
    /// exactly zero stay exactly zero (every stage multiplies by them), so
    /// boundary faces are invariant by construction.
    pub fn advance(&mut self, x: &mut [f64], s: &FitnessVector, dt: f64) -> Result<()> {
        if dt <= 0.0 {
            if dt == 0.0 {
                return Ok(());
            }
            return Err(Error::InvalidConfig(format!("flow step dt = {dt} < 0")));
        }
        let substeps = (dt / self.h_max).ceil().max(1.0) as u64;
        let h = dt / substeps as f64;
        let dim = x.len();
        for _ in 0..substeps {
            drift_field_into(x, s, &mut self.k1);
            for i in 0..dim {
                self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
            }
            drift_field_into(&self.tmp, s, &mut self.k2);
            for i in 0..dim {
                self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
            }
            drift_field_into(&self.tmp, s, &mut self.k3);
            for i in 0..dim {
                self.tmp[i] = x[i] + h * self.k3[i];
            }
            drift_field_into(&self.tmp, s, &mut self.k4);
            for i in 0..dim {
                x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
            }
        }
        clamp_to_simplex(x, 0.0)
    }
}

/// Clamp round-off-sized simplex violations; report anything larger.
fn clamp_to_simplex(x: &mut [f64], t: f64) -> Result<()> {
    let mut sum = 0.0;
    for i in 0..x.len() {
        let c = x[i];
        if c < 0.0 {
            if c > -SIMPLEX_TOL {
                x[i] = 0.0;
            } else {
                return Err(Error::SimplexViolation {
                    t,
                    index: i,
                    value: c,
                    state: x.to_vec(),
                });
            }
        } else if c > 1.0 {
            if c < 1.0 + SIMPLEX_TOL {
                x[i] = 1.0;
            } else {
                return Err(Error::SimplexViolation {
                    t,
                    index: i,
                    value: c,
                    state: x.to_vec(),
                });
            }
        }
        sum += x[i];
    }
    if sum > 1.0 {
        if sum < 1.0 + SIMPLEX_TOL {
            for c in x.iter_mut() {
                *c /= sum;
            }
        } else {
            return Err(Error::SimplexViolation {
                t,
                index: x.len(),
                value: sum,
                state: x.to_vec(),
            });
        }
    }
    Ok(())
}

/// One deterministic flow step of length `dt` with substeps capped at
/// `h_max`; see [`FlowIntegrator::advance`].
pub fn flow_step(x: &SimplexPoint, s: &FitnessVector, dt: f64, h_max: f64) -> Result<SimplexPoint> {
    let mut coords = x.coords().to_vec();
    let mut integ = FlowIntegrator::new(coords.len(), h_max);
    integ.advance(&mut coords, s, dt)?;
    SimplexPoint::new(coords)
}

/// Exact solution of the one-species flow `dx/dt = s x(1-x)/(1+s x)`.
///
/// Separating variables gives the strictly increasing implicit map
/// `φ(x) = ln x − (1+s) ln(1−x)`, with `φ(x_t) = φ(x_0) + s t`; the root is
/// found by monotone bisection on (0,1). Endpoints are fixed points and
/// `s = 0` freezes the state.
pub fn closed_form_flow_1d(x0: f64, s: f64, t: f64) -> f64 {
    assert!(s > -1.0, "fitness must exceed -1");
    if x0 <= 0.0 || x0 >= 1.0 || s == 0.0 || t == 0.0 {
        return x0.clamp(0.0, 1.0);
    }
    let phi = |x: f64| x.ln() - (1.0 + s) * (1.0 - x).ln();
    let target = phi(x0) + s * t;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Outcome of sampling the environment chain from one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchOutcome {
    /// Wait `holding`, then jump to `next`.
    Jump { holding: f64, next: usize },
    /// The row has no outgoing rate; the chain stays here forever.
    Absorbing,
}

/// Sample the holding time (exponential with the row's exit rate) and the
/// next state (proportional to the off-diagonal rates).
pub fn sample_switch(env_index: usize, q: &[Vec<f64>], rng: &mut ChaCha8Rng) -> SwitchOutcome {
    let row = &q[env_index];
    let rate: f64 = row
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != env_index)
        .map(|(_, &v)| v)
        .sum();
    if rate <= 0.0 {
        return SwitchOutcome::Absorbing;
    }
    let u: f64 = rng.random();
    let holding = -(1.0 - u).ln() / rate;
    let w: f64 = rng.random::<f64>() * rate;
    let mut acc = 0.0;
    let mut next = env_index;
    for (j, &v) in row.iter().enumerate() {
        if j == env_index {
            continue;
        }
        acc += v;
        if w < acc {
            next = j;
            break;
        }
        next = j;
    }
    SwitchOutcome::Jump { holding, next }
}

/// An environment switch along a path: the state is continuous through it,
/// the driving index jumps.
#[derive(Debug, Clone)]
pub struct JumpRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub from_env: usize,
    pub to_env: usize,
}

/// A simulated PDMP trajectory: dense samples on a uniform grid plus the
/// exact switch breakpoints. At each switch the state is recorded twice,
/// once with the outgoing environment and once with the incoming one, so
/// time integrals split exactly at jumps.
#[derive(Debug, Clone)]
pub struct PdmpPath {
    dim: usize,
    times: Vec<f64>,
    coords: Vec<f64>,
    envs: Vec<u32>,
    breakpoints: Vec<JumpRecord>,
}

impl PdmpPath {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn time(&self, idx: usize) -> f64 {
        self.times[idx]
    }

    pub fn state(&self, idx: usize) -> &[f64] {
        &self.coords[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn env(&self, idx: usize) -> usize {
        self.envs[idx] as usize
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn duration(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.times[self.len() - 1] - self.times[0]
        }
    }

    pub fn breakpoints(&self) -> &[JumpRecord] {
        &self.breakpoints
    }

    fn push(&mut self, t: f64, x: &[f64], env: usize) {
        self.times.push(t);
        self.coords.extend_from_slice(x);
        self.envs.push(env as u32);
    }

    /// CSV rows `t, x_1..x_S, env_index` over the dense samples.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.dim {
            out.push_str(&format!(",x_{i}"));
        }
        out.push_str(",env_index\n");
        for idx in 0..self.len() {
            out.push_str(&format!("{}", self.times[idx]));
            for &c in self.state(idx) {
                out.push_str(&format!(",{c}"));
            }
            out.push_str(&format!(",{}\n", self.envs[idx]));
        }
        out
    }
}

/// Options for [`simulate_pdmp`].
#[derive(Debug, Clone)]
pub struct PdmpOptions {
    pub dt_sample: f64,
    pub h_max: f64,
}

impl Default for PdmpOptions {
    fn default() -> Self {
        Self {
            dt_sample: 0.01,
            h_max: DEFAULT_H_MAX,
        }
    }
}

/// Simulate the switching flow on `[0, T]`: alternate exponential holding
/// times of the environment chain with deterministic flow, sampling the
/// state every `dt_sample`. Integration never steps across a switch.
pub fn simulate_pdmp(
    x0: &SimplexPoint,
    env0: usize,
    env: &EnvironmentModel,
    t_final: f64,
    opts: &PdmpOptions,
    seed: u64,
) -> Result<PdmpPath> {
    if t_final <= 0.0 {
        return Err(Error::InvalidConfig(format!("T = {t_final} must be > 0")));
    }
    if env0 >= env.num_envs() {
        return Err(Error::InvalidConfig(format!(
            "initial environment {env0} out of range"
        )));
    }
    if x0.dim() != env.num_species_free() {
        return Err(Error::InvalidConfig(format!(
            "state has {} coordinates, model expects {}",
            x0.dim(),
            env.num_species_free()
        )));
    }
    let mut rng = rng_from(seed);
    let dim = x0.dim();
    let mut integ = FlowIntegrator::new(dim, opts.h_max);
    let mut x = x0.coords().to_vec();
    let mut current_env = env0;
    let mut t = 0.0f64;

    let n_samples = (t_final / opts.dt_sample).floor() as u64;
    let mut path = PdmpPath {
        dim,
        times: Vec::with_capacity(n_samples as usize + 2),
        coords: Vec::with_capacity((n_samples as usize + 2) * dim),
        envs: Vec::with_capacity(n_samples as usize + 2),
        breakpoints: Vec::new(),
    };
    path.push(0.0, &x, current_env);
    let mut next_sample = 1u64;

    loop {
        let t_jump = match sample_switch(current_env, env.generator(), &mut rng) {
            SwitchOutcome::Jump { holding, next } => Some((t + holding, next)),
            SwitchOutcome::Absorbing => None,
        };
        let segment_end = t_jump.map_or(t_final, |(tj, _)| tj.min(t_final));

        // dense samples inside the segment
        while (next_sample as f64) * opts.dt_sample <= segment_end {
            let ts = next_sample as f64 * opts.dt_sample;
            integ
                .advance(&mut x, env.state(current_env), ts - t)
                .map_err(|e| attach_time(e, ts))?;
            t = ts;
            path.push(t, &x, current_env);
            next_sample += 1;
        }
        integ
            .advance(&mut x, env.state(current_env), segment_end - t)
            .map_err(|e| attach_time(e, segment_end))?;
        t = segment_end;

        match t_jump {
            Some((tj, next_env)) if tj < t_final => {
                path.push(t, &x, current_env);
                path.breakpoints.push(JumpRecord {
                    t,
                    x: x.clone(),
                    from_env: current_env,
                    to_env: next_env,
                });
                current_env = next_env;
                path.push(t, &x, current_env);
            }
            _ => {
                // reached the horizon
                if path.times.last().copied() != Some(t_final) {
                    path.push(t_final, &x, current_env);
                }
                break;
            }
        }
    }
    Ok(path)
}

fn attach_time(e: Error, t: f64) -> Error {
    match e {
        Error::SimplexViolation {
            index,
            value,
            state,
            ..
        } => Error::SimplexViolation {
            t,
            index,
            value,
            state,
        },
        other => other,
    }
}

/// Time average of `observable(x, env)` along the dense samples
/// (trapezoidal). Because switch instants are duplicated with both
/// environments, jumps contribute exactly.
pub fn ergodic_average(path: &PdmpPath, observable: impl Fn(&[f64], usize) -> f64) -> f64 {
    ergodic_average_from(path, path.times.first().copied().unwrap_or(0.0), observable)
}

/// Same as [`ergodic_average`] but discarding everything before
/// `t_start` (burn-in).
pub fn ergodic_average_from(
    path: &PdmpPath,
    t_start: f64,
    observable: impl Fn(&[f64], usize) -> f64,
) -> f64 {
    assert!(!path.is_empty(), "ergodic average of an empty path");
    let mut acc = 0.0;
    let mut total = 0.0;
    let mut prev_val: Option<f64> = None;
    for idx in 0..path.len() {
        let t = path.times[idx];
        if t < t_start {
            continue;
        }
        let val = observable(path.state(idx), path.env(idx));
        if let Some(pv) = prev_val {
            let dt = t - path.times[idx - 1];
            if dt > 0.0 {
                acc += 0.5 * (pv + val) * dt;
                total += dt;
            }
        }
        prev_val = Some(val);
    }
    if total > 0.0 {
        acc / total
    } else {
        // degenerate: single usable sample
        let idx = path.len() - 1;
        observable(path.state(idx), path.env(idx))
    }
}

/// Empirical occupation measure of the first coordinate on a uniform grid
/// over [0,1]: the fraction of time spent in each bin.
#[derive(Debug, Clone)]
pub struct OccupationHistogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub total_time: f64,
}

impl OccupationHistogram {
    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    /// L1 distance between the bin masses and a reference mass vector.
    pub fn l1_distance(&self, reference: &[f64]) -> f64 {
        assert_eq!(reference.len(), self.masses.len());
        self.masses
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,mass\n");
        for (k, m) in self.masses.iter().enumerate() {
            out.push_str(&format!("{},{},{m}\n", self.edges[k], self.edges[k + 1]));
        }
        out
    }
}

/// Build the occupation histogram of `x^1` from the dense samples; each
/// inter-sample interval contributes half its length at each endpoint (the
/// trapezoidal allocation consistent with [`ergodic_average`] of bin
/// indicators).
pub fn occupation_histogram(path: &PdmpPath, bins: usize) -> Result<OccupationHistogram> {
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("bins = {bins} < 2")));
    }
    let edges: Vec<f64> = (0..=bins).map(|k| k as f64 / bins as f64).collect();
    let mut masses = vec![0.0; bins];
    let bin_of = |x: f64| ((x * bins as f64) as usize).min(bins - 1);
    let mut total = 0.0;
    for idx in 1..path.len() {
        let dt = path.times[idx] - path.times[idx - 1];
        if dt <= 0.0 {
            continue;
        }
        masses[bin_of(path.state(idx - 1)[0])] += 0.5 * dt;
        masses[bin_of(path.state(idx)[0])] += 0.5 * dt;
        total += dt;
    }
    if total > 0.0 {
        for m in masses.iter_mut() {
            *m /= total;
        }
    }
    Ok(OccupationHistogram {
        edges,
        masses,
        total_time: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentModelSpec;

    fn fv(v: &[f64]) -> FitnessVector {
        FitnessVector::new(v.to_vec()).unwrap()
    }

    fn two_env(s1: f64, s2: f64, q1: f64, q2: f64) -> EnvironmentModel {
        EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![vec![s1], vec![s2]],
            q: vec![vec![-q1, q1], vec![q2, -q2]],
        })
        .unwrap()
    }

    #[test]
    fn vertices_are_fixed_points_of_flow() {
        let s = fv(&[0.4, -0.1]);
        for i in 1..=3 {
            let v = SimplexPoint::vertex(2, i).unwrap();
            let moved = flow_step(&v, &s, 7.3, 1e-2).unwrap();
            assert_eq!(moved.coords(), v.coords());
        }
    }

    #[test]
    fn closed_form_identity_and_fixed_points() {
        assert_eq!(closed_form_flow_1d(0.3, 0.7, 0.0), 0.3);
        assert_eq!(closed_form_flow_1d(0.0, 0.7, 5.0), 0.0);
        assert_eq!(closed_form_flow_1d(1.0, 0.7, 5.0), 1.0);
        assert_eq!(closed_form_flow_1d(0.42, 0.0, 5.0), 0.42);
    }

    #[test]
    fn closed_form_residual_small() {
        for &s in &[-0.5, 0.4, 1.0] {
            for &x0 in &[0.1, 0.5, 0.9] {
                for &t in &[0.3, 1.0, 10.0] {
                    let x = closed_form_flow_1d(x0, s, t);
                    let phi = |v: f64| v.ln() - (1.0 + s) * (1.0 - v).ln();
                    let residual = phi(x) - (phi(x0) + s * t);
                    assert!(
                        residual.abs() < 1e-10,
                        "s={s} x0={x0} t={t}: residual {residual}"
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_brute_force_euler() {
        // 10^6-substep explicit Euler as an independent oracle
        let (s, x0, t) = (0.4, 0.5, 1.0);
        let n = 1_000_000u32;
        let h = t / n as f64;
        let mut x = x0;
        for _ in 0..n {
            x += h * s * x * (1.0 - x) / (1.0 + s * x);
        }
        let exact = closed_form_flow_1d(x0, s, t);
        assert!(
            (x - exact).abs() < 1e-6,
            "euler {x} vs closed form {exact}"
        );
    }

    #[test]
    fn closed_form_monotone_to_one() {
        let mut prev = 0.2;
        for k in 1..=6 {
            let x = closed_form_flow_1d(0.2, 0.8, 10.0 * k as f64);
            assert!(x > prev);
            prev = x;
        }
        assert!(prev > 1.0 - 1e-3);
    }

    #[test]
    fn rk4_matches_closed_form() {
        // max error over the pinned grid with h_max = 1e-3 stays below 1e-8
        let mut worst: f64 = 0.0;
        for &s in &[-0.5, 0.4, 1.0] {
            for &x0 in &[0.1, 0.3, 0.5, 0.7, 0.9] {
                for &t in &[0.5, 2.0, 10.0] {
                    let p = SimplexPoint::new(vec![x0]).unwrap();
                    let rk = flow_step(&p, &fv(&[s]), t, 1e-3).unwrap().coords()[0];
                    let exact = closed_form_flow_1d(x0, s, t);
                    worst = worst.max((rk - exact).abs());
                }
            }
        }
        assert!(worst < 1e-8, "worst RK4 error {worst}");
    }

    #[test]
    fn constant_environment_converges_to_best_vertex() {
        // unique best fitness wins; tested via the 2-free-species flow
        let s = fv(&[0.4, -0.1]);
        let x0 = SimplexPoint::new(vec![0.2, 0.5]).unwrap();
        let end = flow_step(&x0, &s, 200.0, 1e-2).unwrap();
        assert!((end.coords()[0] - 1.0).abs() < 1e-6);
        assert!(end.coords()[1].abs() < 1e-6);
    }

    #[test]
    fn constant_environment_monotone_in_best_coordinate() {
        let s = fv(&[0.4, -0.1]);
        let mut x = SimplexPoint::new(vec![0.05, 0.6]).unwrap();
        let mut best = x.coords()[0];
        for _ in 0..100 {
            x = flow_step(&x, &s, 0.5, 1e-3).unwrap();
            assert!(x.coords()[0] >= best - 1e-14);
            best = x.coords()[0];
        }
    }

    #[test]
    fn constant_environment_exponential_rate() {
        // log distance to the winning vertex decays at rate
        // -min_{k != m} (s^m - s^k)/(1+s^m), within 10%
        let s = fv(&[0.4, -0.1]);
        let expected = -(((0.4 - 0.0) / 1.4_f64).min((0.4 - (-0.1)) / 1.4));
        let x0 = SimplexPoint::new(vec![0.3, 0.3]).unwrap();
        let a = flow_step(&x0, &s, 30.0, 1e-3).unwrap();
        let b = flow_step(&x0, &s, 50.0, 1e-3).unwrap();
        let dist = |p: &SimplexPoint| {
            let d0 = p.coords()[0] - 1.0;
            let d1 = p.coords()[1];
            (d0 * d0 + d1 * d1).sqrt()
        };
        let slope = (dist(&b).ln() - dist(&a).ln()) / 20.0;
        assert!(
            (slope - expected).abs() < 0.1 * expected.abs(),
            "slope {slope} vs expected {expected}"
        );
    }

    #[test]
    fn switch_sampling_two_states() {
        let q = vec![vec![-1.0, 1.0], vec![0.5, -0.5]];
        let mut rng = rng_from(9);
        let mut mean = 0.0;
        let n = 100_000;
        for _ in 0..n {
            match sample_switch(0, &q, &mut rng) {
                SwitchOutcome::Jump { holding, next } => {
                    assert_eq!(next, 1, "two-state chain jumps to the other state");
                    mean += holding;
                }
                SwitchOutcome::Absorbing => panic!("row has positive rate"),
            }
        }
        mean /= n as f64;
        // exponential(1): SE = 1/sqrt(n)
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn switch_sampling_three_state_split() {
        // row rates (2, 3) from state 0: next-state split 0.4 / 0.6
        let q = vec![
            vec![-5.0, 2.0, 3.0],
            vec![1.0, -2.0, 1.0],
            vec![1.0, 1.0, -2.0],
        ];
        let mut rng = rng_from(10);
        let n = 100_000;
        let mut hits = [0u32; 3];
        for _ in 0..n {
            if let SwitchOutcome::Jump { next, .. } = sample_switch(0, &q, &mut rng) {
                hits[next] += 1;
            }
        }
        let f1 = hits[1] as f64 / n as f64;
        let se = (0.4f64 * 0.6 / n as f64).sqrt();
        assert!((f1 - 0.4).abs() < 4.0 * se, "split {f1}");
        assert_eq!(hits[0], 0);
    }

    #[test]
    fn absorbing_row_signalled() {
        let q = vec![vec![0.0]];
        let mut rng = rng_from(1);
        assert_eq!(sample_switch(0, &q, &mut rng), SwitchOutcome::Absorbing);
    }

    #[test]
    fn degenerate_switching_is_pure_flow() {
        let env = EnvironmentModel::constant(vec![0.4]).unwrap();
        let x0 = SimplexPoint::new(vec![0.5]).unwrap();
        let path = simulate_pdmp(&x0, 0, &env, 3.0, &PdmpOptions::default(), 4).unwrap();
        assert!(path.breakpoints().is_empty());
        let exact = closed_form_flow_1d(0.5, 0.4, 3.0);
        assert!((path.final_state()[0] - exact).abs() < 1e-8);
    }

    #[test]
    fn pdmp_reproducible_and_well_formed() {
        let env = two_env(1.0, -0.4, 0.5, 0.5);
        let x0 = SimplexPoint::new(vec![0.5]).unwrap();
        let a = simulate_pdmp(&x0, 0, &env, 50.0, &PdmpOptions::default(), 77).unwrap();
        let b = simulate_pdmp(&x0, 0, &env, 50.0, &PdmpOptions::default(), 77).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        // breakpoint times strictly increasing
        for w in a.breakpoints().windows(2) {
            assert!(w[0].t < w[1].t);
        }
        // env piecewise constant between breakpoints, state within simplex
        for idx in 0..a.len() {
            let x = a.state(idx)[0];
            assert!((0.0..=1.0).contains(&x));
        }
        // duplicated jump instants carry old and new environment
        if let Some(j) = a.breakpoints().first() {
            let at: Vec<usize> = (0..a.len())
                .filter(|&i| a.time(i) == j.t)
                .map(|i| a.env(i))
                .collect();
            assert!(at.contains(&j.from_env) && at.contains(&j.to_env));
        }
    }

    #[test]
    fn ergodic_average_constant_is_constant() {
        let env = two_env(1.0, -0.4, 0.5, 0.5);
        let x0 = SimplexPoint::new(vec![0.5]).unwrap();
        let path = simulate_pdmp(&x0, 0, &env, 20.0, &PdmpOptions::default(), 5).unwrap();
        let avg = ergodic_average(&path, |_, _| 3.25);
        assert!((avg - 3.25).abs() < 1e-12);
    }

    #[test]
    fn ergodic_average_env_indicator_matches_stationary() {
        let env = two_env(1.0, -0.4, 1.0, 2.0);
        let x0 = SimplexPoint::new(vec![0.5]).unwrap();
        let path = simulate_pdmp(&x0, 0, &env, 4000.0, &PdmpOptions::default(), 12).unwrap();
        let frac0 = ergodic_average(&path, |_, e| if e == 0 { 1.0 } else { 0.0 });
        // p_0 = q_2/(q_1+q_2) = 2/3; mixing gives ~1/sqrt(T) fluctuations
        assert!(
            (frac0 - 2.0 / 3.0).abs() < 4.0 * 0.5 / 4000.0_f64.sqrt(),
            "occupation {frac0}"
        );
    }

    #[test]
    fn histogram_frozen_path_single_bin() {
        let env = EnvironmentModel::constant(vec![0.0]).unwrap();
        let x0 = SimplexPoint::new(vec![0.37]).unwrap();
        let path = simulate_pdmp(&x0, 0, &env, 5.0, &PdmpOptions::default(), 2).unwrap();
        let hist = occupation_histogram(&path, 10).unwrap();
        assert!((hist.masses[3] - 1.0).abs() < 1e-12);
        assert!((hist.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn face_invariance_under_switching_flow() {
        // a species at exactly zero stays at exactly zero along the flow
        let env = EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![vec![1.0, 0.5], vec![-0.25, -0.5]],
            q: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
        })
        .unwrap();
        let x0 = SimplexPoint::new(vec![0.0, 0.6]).unwrap();
        let path = simulate_pdmp(&x0, 0, &env, 30.0, &PdmpOptions::default(), 21).unwrap();
        for idx in 0..path.len() {
            assert_eq!(path.state(idx)[0], 0.0);
        }
    }
}
