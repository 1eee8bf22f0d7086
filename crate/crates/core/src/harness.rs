//! Coupled HMM / truncated-amplitude / limit-amplitude runs on a shared Brownian path,
//! error metrics and convergence sweeps.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::amplitude::{homog_coeffs_limit, homog_coeffs_model, AmplitudeCoeffs};
use crate::direct::run_amplitude_em;
use crate::error::{Error, Result};
use crate::hmm::{hmm_macro_run_diffusive, EffectiveCoeffs, HmmEstimator, HmmParams};
use crate::output::{fmt_num, CsvTable};
use crate::sde::{BrownianPath, Purpose, RngFactory, StreamId};
use crate::spectral::{build_truncated_system, ModelSpec};

/// Shared macro increments for one seed: stream `(Macro, 0, 0)`.
pub fn macro_path(factory: RngFactory, dt: f64, n: usize) -> Result<BrownianPath> {
    let mut s = factory.stream(StreamId::new(Purpose::Macro, 0, 0));
    BrownianPath::generate(&mut s, dt, n)
}

/// The three integrators driven by one Brownian path.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub dt: f64,
    pub x_hmm: Vec<f64>,
    pub x_hom: Vec<f64>,
    pub x_inf: Vec<f64>,
    /// HMM estimates at `x_hmm[n]`, `n = 0..=N`.
    pub estimates: Vec<EffectiveCoeffs>,
    /// Exact coefficients of the truncated system (what the estimator targets).
    pub coeffs_m: AmplitudeCoeffs,
    pub coeffs_inf: AmplitudeCoeffs,
}

/// Coefficients the HMM estimator converges to for `m` fast modes, and the limit ones.
pub fn reference_coeffs(model: &ModelSpec, m: usize) -> Result<(AmplitudeCoeffs, AmplitudeCoeffs)> {
    Ok((homog_coeffs_model(model, m)?, homog_coeffs_limit(model)?))
}

/// Runs HMM (`m` fast modes, `params`), the truncated amplitude SDE and the limit amplitude SDE
/// from `x0` with the same macro increments.
pub fn run_coupled(model: &ModelSpec, m: usize, params: &HmmParams, seed: u64, x0: f64) -> Result<CoupledRun> {
    let model = model.with_modes(model.null_dim() + m)?;
    let system = build_truncated_system(&model, m)?;
    let factory = RngFactory::new(seed);
    let path = macro_path(factory, params.dt_macro, params.n_macro)?;
    let (coeffs_m, coeffs_inf) = reference_coeffs(&model, m)?;
    let mut est = HmmEstimator::new(&system, params, factory)?;
    let hmm = hmm_macro_run_diffusive(&mut est, &path, x0)?;
    Ok(CoupledRun {
        dt: params.dt_macro,
        x_hmm: hmm.states,
        x_hom: run_amplitude_em(&coeffs_m, x0, &path)?,
        x_inf: run_amplitude_em(&coeffs_inf, x0, &path)?,
        estimates: hmm.estimates,
        coeffs_m,
        coeffs_inf,
    })
}

/// Where the limit diffusion is evaluated in the limit-error metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitPoint {
    /// Drift and diffusion both at `X_inf`.
    #[default]
    Consistent,
    /// Drift at `X_inf`, diffusion at `X_hom`.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMetrics {
    /// Distance of the estimates from the truncated coefficients.
    pub e_p: f64,
    /// Distance of the estimates from the limit coefficients.
    pub e_lp: f64,
}

/// `E_p = (1/N) sum_{n=1..N} |abar_n - a_M(X_hom,n)| + |sigbar_n - sig_M(X_hom,n)|` and the same
/// against the limit coefficients at `X_inf,n`.
pub fn error_metrics(run: &CoupledRun, point: LimitPoint) -> Result<ErrorMetrics> {
    let len = run.estimates.len();
    if run.x_hom.len() != len || run.x_inf.len() != len || run.x_hmm.len() != len {
        return Err(Error::GridMismatch(format!(
            "{} estimates, {} hmm, {} hom, {} inf",
            len,
            run.x_hmm.len(),
            run.x_hom.len(),
            run.x_inf.len()
        )));
    }
    if len < 2 {
        return Err(Error::Invalid("need at least one macro step".into()));
    }
    let (mut ep, mut elp) = (0.0, 0.0);
    for n in 1..len {
        let e = &run.estimates[n];
        let (xh, xi) = (run.x_hom[n], run.x_inf[n]);
        ep += (e.drift() - run.coeffs_m.drift(xh)).abs() + (e.diffusion() - run.coeffs_m.diffusion(xh)).abs();
        let xs = match point {
            LimitPoint::Consistent => xi,
            LimitPoint::Mixed => xh,
        };
        elp += (e.drift() - run.coeffs_inf.drift(xi)).abs() + (e.diffusion() - run.coeffs_inf.diffusion(xs)).abs();
    }
    let n = (len - 1) as f64;
    Ok(ErrorMetrics { e_p: ep / n, e_lp: elp / n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOptions {
    pub x0: f64,
    pub dt_macro: f64,
    pub n_macro: usize,
    pub k: usize,
    /// Multiplies the scheduled micro step `2^-p`.
    pub h_scale: f64,
    pub point: LimitPoint,
    /// Rows starting after this much wall time are skipped.
    pub row_cap: Duration,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            x0: 1.0,
            dt_macro: 0.1,
            n_macro: 10,
            k: 1,
            h_scale: 1.0,
            point: LimitPoint::Consistent,
            row_cap: Duration::from_secs(600),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub p: u32,
    pub m: usize,
    pub e_p: f64,
    pub e_lp: f64,
    pub se_ep: f64,
    pub se_elp: f64,
    pub seeds: usize,
    pub runtime_s: f64,
    /// `ok`, `unstable`, `diverged` or `skipped`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["p", "M", "E_p", "E_lp", "se_Ep", "se_Elp", "status"]);
        for r in &self.rows {
            t.push(vec![
                r.p.to_string(),
                r.m.to_string(),
                fmt_num(r.e_p),
                fmt_num(r.e_lp),
                fmt_num(r.se_ep),
                fmt_num(r.se_elp),
                r.status.clone(),
            ]);
        }
        t
    }

    pub fn ok_rows(&self) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(|r| r.status == "ok")
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `log2 y` against `x`.
pub fn log2_slope(x: &[f64], y: &[f64]) -> f64 {
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// For each `p`, runs the coupled experiment over `seeds` in parallel and aggregates the
/// metrics in seed order. Unstable schedules and divergent runs become annotated rows.
pub fn convergence_sweep(model: &ModelSpec, m: usize, ps: &[u32], seeds: &[u64], opts: &SweepOptions) -> Result<ConvergenceTable> {
    if ps.is_empty() {
        return Err(Error::Invalid("empty p range".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Invalid("no seeds".into()));
    }
    let system_model = model.with_modes(model.null_dim() + m)?;
    let system = build_truncated_system(&system_model, m)?;
    let start = Instant::now();
    let mut rows = Vec::with_capacity(ps.len());
    for &p in ps {
        let mut params = HmmParams::from_p(p).with_macro(opts.dt_macro, opts.n_macro);
        params.k = opts.k;
        params.h *= opts.h_scale;
        let mut row = ConvergenceRow {
            p,
            m,
            e_p: f64::NAN,
            e_lp: f64::NAN,
            se_ep: f64::NAN,
            se_elp: f64::NAN,
            seeds: 0,
            runtime_s: 0.0,
            status: "ok".into(),
        };
        if start.elapsed() > opts.row_cap {
            row.status = "skipped".into();
            rows.push(row);
            continue;
        }
        match params.validate(&system) {
            Err(e) if e.is_instability() => {
                row.status = "unstable".into();
                rows.push(row);
                continue;
            }
            Err(e) => return Err(e),
            Ok(()) => {}
        }
        let t0 = Instant::now();
        let results: Vec<Result<ErrorMetrics>> = seeds
            .par_iter()
            .map(|&s| run_coupled(model, m, &params, s, opts.x0).and_then(|r| error_metrics(&r, opts.point)))
            .collect();
        let mut ok = Vec::with_capacity(results.len());
        for r in results {
            match r {
                Ok(v) => ok.push(v),
                Err(e) if e.is_instability() => row.status = "diverged".into(),
                Err(e) => return Err(e),
            }
        }
        if !ok.is_empty() {
            let (a, sa) = mean_se(&ok.iter().map(|v| v.e_p).collect::<Vec<_>>());
            let (b, sb) = mean_se(&ok.iter().map(|v| v.e_lp).collect::<Vec<_>>());
            (row.e_p, row.se_ep, row.e_lp, row.se_elp) = (a, sa, b, sb);
        }
        row.seeds = ok.len();
        row.runtime_s = t0.elapsed().as_secs_f64();
        rows.push(row);
    }
    Ok(ConvergenceTable { rows })
}

/// Time series of the three integrators; absent series are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x_hmm: Option<Vec<f64>>,
    pub x_hom: Option<Vec<f64>>,
    pub x_inf: Option<Vec<f64>>,
    /// One line per series that could not be produced.
    pub notes: Vec<String>,
}

impl Trajectory {
    /// Columns `t,X_hmm,X_hom,X_inf`, omitting absent series.
    pub fn to_csv(&self) -> CsvTable {
        let cols: Vec<(&str, &Vec<f64>)> = [("X_hmm", &self.x_hmm), ("X_hom", &self.x_hom), ("X_inf", &self.x_inf)]
            .into_iter()
            .filter_map(|(name, s)| s.as_ref().map(|v| (name, v)))
            .collect();
        let mut header = vec!["t"];
        header.extend(cols.iter().map(|c| c.0));
        let mut t = CsvTable::new(&header);
        for (n, tn) in self.times.iter().enumerate() {
            let mut row = vec![*tn];
            row.extend(cols.iter().map(|c| c.1[n]));
            t.push_nums(&row);
        }
        t
    }
}

/// HMM against both amplitude equations on one shared path. A failing series is dropped and noted.
pub fn trajectory_compare(model: &ModelSpec, m: usize, params: &HmmParams, seed: u64, x0: f64) -> Result<Trajectory> {
    let model = model.with_modes(model.null_dim() + m)?;
    let system = build_truncated_system(&model, m)?;
    let factory = RngFactory::new(seed);
    let path = macro_path(factory, params.dt_macro, params.n_macro)?;
    let (cm, ci) = reference_coeffs(&model, m)?;
    let mut notes = Vec::new();
    let mut keep = |name: &str, r: Result<Vec<f64>>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    };
    let x_hmm = keep(
        "X_hmm",
        HmmEstimator::new(&system, params, factory).and_then(|mut est| hmm_macro_run_diffusive(&mut est, &path, x0).map(|r| r.states)),
    );
    let x_hom = keep("X_hom", run_amplitude_em(&cm, x0, &path));
    let x_inf = keep("X_inf", run_amplitude_em(&ci, x0, &path));
    Ok(Trajectory {
        times: (0..=params.n_macro).map(|n| n as f64 * params.dt_macro).collect(),
        x_hmm,
        x_hom,
        x_inf,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::Truncation;

    fn fake_run(offset: f64) -> CoupledRun {
        let c = AmplitudeCoeffs { a: 0.1, b: 1.0 / 12.0, c: 0.001, d: 1.0 / 36.0, truncation: Truncation::Modes(2), tail_bound: 0.0 };
        let xs = vec![1.0, 0.9, 0.8];
        let estimates = xs
            .iter()
            .map(|&x| EffectiveCoeffs::scalar(c.drift(x) + offset, c.diffusion(x).powi(2)))
            .collect();
        CoupledRun {
            dt: 0.1,
            x_hmm: xs.clone(),
            x_hom: xs.clone(),
            x_inf: xs,
            estimates,
            coeffs_m: c,
            coeffs_inf: c,
        }
    }

    #[test]
    fn exact_estimates_give_zero_error() {
        let m = error_metrics(&fake_run(0.0), LimitPoint::Consistent).unwrap();
        assert!(m.e_p.abs() < 1e-15 && m.e_lp.abs() < 1e-15);
    }

    #[test]
    fn constant_offset_is_recovered() {
        let m = error_metrics(&fake_run(0.25), LimitPoint::Mixed).unwrap();
        assert!((m.e_p - 0.25).abs() < 1e-12);
        assert!((m.e_lp - 0.25).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let mut r = fake_run(0.0);
        r.x_inf.pop();
        assert!(matches!(error_metrics(&r, LimitPoint::Consistent), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn unstable_rows_are_annotated() {
        let model = ModelSpec::burgers_default(5, 0.0).unwrap();
        let t = convergence_sweep(&model, 4, &[3], &[1], &SweepOptions::default()).unwrap();
        assert_eq!(t.rows[0].status, "unstable");
        assert!(convergence_sweep(&model, 4, &[], &[1], &SweepOptions::default()).is_err());
    }

    #[test]
    fn slope_of_powers() {
        let x = [1.0, 2.0, 3.0];
        assert!((log2_slope(&x, &[0.5, 0.25, 0.125]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_columns() {
        let model = ModelSpec::burgers_default(3, 0.0).unwrap();
        let p = HmmParams::from_p(3).with_macro(0.1, 10);
        let t = trajectory_compare(&model, 2, &p, 4, 1.0).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.header, vec!["t", "X_hmm", "X_hom", "X_inf"]);
        assert_eq!(csv.rows.len(), 11);
        let unstable = trajectory_compare(&ModelSpec::burgers_default(5, 0.0).unwrap(), 4, &p, 4, 1.0).unwrap();
        assert!(unstable.x_hmm.is_none() && unstable.x_hom.is_some());
        assert_eq!(unstable.to_csv().header, vec!["t", "X_hom", "X_inf"]);
    }
}
