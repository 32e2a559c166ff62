//! Python bindings: the environment model, both simulators and the
//! analytic layer, exposed with plain Python types (lists, tuples, dicts
//! come back as JSON strings where they are deeply nested).
//!
//! Build with maturin, or `cargo build -p moran-pdmp-python` and rename
//! `libmoran_pdmp.so` to `moran_pdmp.so` on the Python path (see
//! `python/smoke_test.py`).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use moran_pdmp_core::analysis as core_analysis;
use moran_pdmp_core::env as core_env;
use moran_pdmp_core::moran as core_moran;
use moran_pdmp_core::pdmp as core_pdmp;
use moran_pdmp_core::Error as CoreError;

fn to_py_err(e: CoreError) -> PyErr {
    match e {
        CoreError::InvalidModel(_) | CoreError::InvalidConfig(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A finite-state switching environment: per-environment fitness vectors
/// and the jump-rate generator of the selecting chain.
#[pyclass(frozen)]
struct EnvironmentModel {
    inner: core_env::EnvironmentModel,
}

#[pymethods]
impl EnvironmentModel {
    #[new]
    fn new(fitness: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner =
            core_env::EnvironmentModel::from_spec(&core_env::EnvironmentModelSpec { fitness, q })
                .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Stationary law of the environment chain.
    fn stationary(&self) -> Vec<f64> {
        self.inner.stationary().to_vec()
    }

    /// Number of species including the implicit reference one.
    #[getter]
    fn num_species(&self) -> usize {
        self.inner.num_species_free() + 1
    }

    #[getter]
    fn num_envs(&self) -> usize {
        self.inner.num_envs()
    }

    /// Vector field of the limiting flow at `x` under environment `env`.
    fn drift(&self, x: Vec<f64>, env: usize) -> PyResult<Vec<f64>> {
        if env >= self.inner.num_envs() {
            return Err(PyValueError::new_err(format!("environment {env} out of range")));
        }
        let point = core_env::SimplexPoint::new(x).map_err(to_py_err)?;
        Ok(core_env::drift_field(&point, self.inner.state(env)))
    }

    /// Jacobian of the flow at the monomorphic state of `species`.
    fn jacobian_at_vertex(&self, env: usize, species: usize) -> PyResult<Vec<Vec<f64>>> {
        if env >= self.inner.num_envs() {
            return Err(PyValueError::new_err(format!("environment {env} out of range")));
        }
        core_env::jacobian_at_vertex(self.inner.state(env), species).map_err(to_py_err)
    }

    /// Two-species growth-rate pair (lambda0, lambda1); S = 1 only.
    fn growth_rates(&self) -> PyResult<(f64, f64)> {
        let r = core_analysis::two_species_growth_rates(&self.inner).map_err(to_py_err)?;
        Ok((r.at_zero, r.at_one))
    }

    /// Regime name for a two-species model.
    fn classify(&self) -> PyResult<String> {
        let r = core_analysis::two_species_growth_rates(&self.inner).map_err(to_py_err)?;
        Ok(format!("{:?}", core_analysis::classify_two_species(&r)))
    }

    /// Per-edge endpoint growth-rate pairs of a three-species model.
    fn edge_rates(&self) -> PyResult<Vec<(f64, f64)>> {
        let r = core_analysis::three_species_edge_rates(&self.inner).map_err(to_py_err)?;
        Ok(r.edges.iter().map(|e| (e.at_zero, e.at_one)).collect())
    }

    /// Vertex invasion exponents, one per species.
    fn vertex_exponents(&self) -> PyResult<Vec<f64>> {
        core_analysis::vertex_invasion_exponents(&self.inner).map_err(to_py_err)
    }

    /// Closed-form invariant density of a persistent two-species model:
    /// `(exponent_zero, exponent_one, normalising_constant)`.
    fn density_exponents(&self) -> PyResult<(f64, f64, f64)> {
        let d = core_analysis::invariant_density(&self.inner).map_err(to_py_err)?;
        Ok((d.exponent_zero, d.exponent_one, d.c))
    }

    /// Invariant marginal density evaluated at interior points.
    fn density(&self, xs: Vec<f64>) -> PyResult<Vec<f64>> {
        let d = core_analysis::invariant_density(&self.inner).map_err(to_py_err)?;
        for &x in &xs {
            if !(0.0 < x && x < 1.0) {
                return Err(PyValueError::new_err(format!("x = {x} not in (0,1)")));
            }
        }
        Ok(xs.iter().map(|&x| d.total(x)).collect())
    }

    /// Monte-Carlo invasion rate of `edge`'s absent species:
    /// `(mean, std_error)`.
    #[pyo3(signature = (edge, seed, t=80.0, n_traj=1000))]
    fn invasion_rate_mc(
        &self,
        edge: usize,
        seed: u64,
        t: f64,
        n_traj: usize,
    ) -> PyResult<(f64, f64)> {
        let est = core_analysis::edge_invasion_rate_mc(
            &self.inner,
            edge,
            t,
            n_traj,
            seed,
            &core_analysis::EdgeMcOptions::default(),
        )
        .map_err(to_py_err)?;
        Ok((est.mean, est.std_error))
    }

    /// Full persistence verdict as a JSON string
    /// (`verdict`, `certificate`, `lambdas`, `edges`, `permutation`).
    #[pyo3(signature = (seed, t=80.0, n_traj=1000))]
    fn verdict(&self, seed: u64, t: f64, n_traj: usize) -> PyResult<String> {
        let opts = core_analysis::VerdictOptions {
            mc_horizon: t,
            mc_n_traj: n_traj,
            seed,
            ..core_analysis::VerdictOptions::default()
        };
        let v = core_analysis::persistence_verdict(&self.inner, &opts).map_err(to_py_err)?;
        serde_json::to_string(&v.to_report_json())
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Simulate the limiting process; returns `(times, states, envs)` with
    /// `states[i]` the free-coordinate list at `times[i]`.
    #[pyo3(signature = (x0, env0, t, seed, dt_sample=0.01, h_max=1e-3))]
    #[allow(clippy::type_complexity)]
    fn simulate_pdmp(
        &self,
        x0: Vec<f64>,
        env0: usize,
        t: f64,
        seed: u64,
        dt_sample: f64,
        h_max: f64,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<usize>)> {
        let start = core_env::SimplexPoint::new(x0).map_err(to_py_err)?;
        let opts = core_pdmp::PdmpOptions { dt_sample, h_max };
        let path = core_pdmp::simulate_pdmp(&start, env0, &self.inner, t, &opts, seed)
            .map_err(to_py_err)?;
        let times: Vec<f64> = (0..path.len()).map(|i| path.time(i)).collect();
        let states: Vec<Vec<f64>> = (0..path.len()).map(|i| path.state(i).to_vec()).collect();
        let envs: Vec<usize> = (0..path.len()).map(|i| path.env(i)).collect();
        Ok((times, states, envs))
    }

    /// Simulate the discrete process; returns `(times, fractions, envs)`
    /// with `fractions[i]` covering all S+1 species.
    #[pyo3(signature = (j, counts, env0, t, seed, record_every=None))]
    #[allow(clippy::type_complexity)]
    fn simulate_moran(
        &self,
        j: u64,
        counts: Vec<u64>,
        env0: usize,
        t: f64,
        seed: u64,
        record_every: Option<u64>,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<usize>)> {
        let mut cfg = core_moran::MoranConfig::new(j, self.inner.clone(), counts, seed)
            .map_err(to_py_err)?;
        cfg.initial_env = env0;
        cfg.horizon = (t * j as f64).round() as u64;
        cfg.record_every = record_every;
        cfg.validate().map_err(to_py_err)?;
        let path = core_moran::simulate_moran(&cfg).map_err(to_py_err)?;
        let species = self.inner.num_species_free() + 1;
        let times: Vec<f64> = (0..path.len()).map(|i| path.time(i)).collect();
        let fractions: Vec<Vec<f64>> = (0..path.len())
            .map(|i| (1..=species).map(|s| path.fraction(i, s)).collect())
            .collect();
        let envs: Vec<usize> = (0..path.len()).map(|i| path.env(i)).collect();
        Ok((times, fractions, envs))
    }
}

/// Exact one-species flow value at time `t` from `x0` under fitness `s`.
#[pyfunction]
fn closed_form_flow(x0: f64, s: f64, t: f64) -> PyResult<f64> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(PyValueError::new_err(format!("x0 = {x0} not in [0,1]")));
    }
    if s <= -1.0 {
        return Err(PyValueError::new_err(format!("s = {s} must exceed -1")));
    }
    Ok(core_pdmp::closed_form_flow_1d(x0, s, t))
}

/// Stationary law of an irreducible jump-rate generator.
#[pyfunction]
fn stationary_distribution(q: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    core_env::stationary_distribution(&q).map_err(to_py_err)
}

#[pymodule]
fn moran_pdmp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<EnvironmentModel>()?;
    m.add_function(wrap_pyfunction!(closed_form_flow, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_distribution, m)?)?;
    Ok(())
}
