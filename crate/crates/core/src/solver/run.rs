use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::init::{spectral_init_detailed, SpectralInit};
use super::metrics::{aligned_difference, balance_gap, relative_recovery_error};
use super::objective::objective_with;
use super::step::{default_step_size, gd_step_with, projected_step_counting, Radii};
use super::FactorPair;
use crate::error::{Error, Result};
use crate::problem::{project_omega, GroundTruth, ObservationSet, SamplingMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Vanilla,
    Projected,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Vanilla => "vanilla",
            Variant::Projected => "projected",
        }
    }
}

/// Where `σ₁`, `σ_r` for the theory step size come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumSource {
    /// `Σ⁰` of the spectral initialisation (observable).
    Init,
    /// The planted spectrum.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepSize {
    Fixed(f64),
    /// `σ_r/(200σ₁²)` with the spectrum taken from the given source.
    Theory(SpectrumSource),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// Stop once `min_R ‖[X;Y]R − [U;V]‖_F / √σ_r ≤ stop_tol`.
    Oracle,
    /// Stop once the objective has decreased by less than
    /// `PLATEAU_REL_CHANGE` (relative) over the last `PLATEAU_WINDOW`
    /// iterations. An increase counts as no decrease, which is what happens
    /// once a noiseless problem reaches the rounding floor. Never looks at
    /// the truth.
    Plateau,
}

pub const PLATEAU_WINDOW: usize = 100;
pub const PLATEAU_REL_CHANGE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub step: StepSize,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub record_every: usize,
    pub stop_rule: StopRule,
    /// Radii of the projected baseline are
    /// `(1 + slack)·max(‖U‖_{2,∞}, ‖V‖_{2,∞})`.
    pub projection_slack: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: StepSize::Theory(SpectrumSource::Init),
            max_iters: 50_000,
            stop_tol: 1e-7,
            record_every: 10,
            stop_rule: StopRule::Oracle,
            projection_slack: 0.02,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let StepSize::Fixed(eta) = self.step {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(Error::param("eta", format!("must be positive, got {eta}")));
            }
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::param("stop_tol", "must be nonnegative"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        if !(self.projection_slack >= 0.0) {
            return Err(Error::param("projection_slack", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Metrics of one recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iter: usize,
    pub objective: f64,
    #[serde(rename = "frob_err")]
    pub aligned_frob_err: f64,
    #[serde(rename = "spec_err")]
    pub aligned_spec_err: f64,
    #[serde(rename = "two_inf_err")]
    pub aligned_2inf_err: f64,
    pub balance_gap: f64,
}

pub const TRAJECTORY_HEADER: &str = "iter,objective,frob_err,spec_err,two_inf_err,balance_gap";

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TrajectoryRecord>,
    pub final_pair: FactorPair,
    pub eta: f64,
    /// Index of the last iterate.
    pub iterations: usize,
    pub stopped_early: bool,
    /// `‖XYᵀ − M‖_F/‖M‖_F` at the last iterate.
    pub relative_error: f64,
    /// `Σ⁰` of the spectral initialisation.
    pub init_singulars: Vec<f64>,
    /// Rows rescaled by the projection over the whole run (0 for vanilla).
    pub clipped_rows: usize,
}

/// Everything a run needs besides the configuration.
pub struct Problem<'a> {
    pub gt: &'a GroundTruth,
    pub mask: &'a SamplingMask,
    pub observations: ObservationSet,
    pub init: SpectralInit,
}

impl<'a> Problem<'a> {
    /// Builds `P_Ω(M)` and the spectral initialisation. Only the observed
    /// entries reach the solver.
    pub fn new(gt: &'a GroundTruth, mask: &'a SamplingMask) -> Result<Self> {
        let observed = project_omega(&gt.matrix(), mask)?;
        let observations = ObservationSet::from_projected(&observed, mask)?;
        let init = spectral_init_detailed(&observed, mask, gt.r)?;
        Ok(Self {
            gt,
            mask,
            observations,
            init,
        })
    }

    pub fn step_size(&self, step: StepSize) -> Result<f64> {
        match step {
            StepSize::Fixed(eta) => Ok(eta),
            StepSize::Theory(SpectrumSource::Init) => {
                let s = &self.init.singulars;
                Ok(default_step_size(s[0], s[s.len() - 1])?.1)
            }
            StepSize::Theory(SpectrumSource::Oracle) => {
                Ok(default_step_size(self.gt.sigma_max(), self.gt.sigma_min())?.1)
            }
        }
    }

    /// Both radii equal `(1 + slack)·max(‖U‖_{2,∞}, ‖V‖_{2,∞})`.
    pub fn oracle_radii(&self, slack: f64) -> Radii {
        let radius = (1.0 + slack) * self.gt.u.norm_2inf().max(self.gt.v.norm_2inf());
        Radii { x: radius, y: radius }
    }
}

/// Spectral initialisation followed by up to `cfg.max_iters` gradient steps.
pub fn run(
    gt: &GroundTruth,
    mask: &SamplingMask,
    cfg: &SolverConfig,
    variant: Variant,
) -> Result<RunOutput> {
    run_observed(gt, mask, cfg, variant, |_, _| Ok(()))
}

/// Like [`run`], calling `observe(t, iterate)` on every iterate, including
/// the initialisation (`t = 0`) and the last one.
pub fn run_observed(
    gt: &GroundTruth,
    mask: &SamplingMask,
    cfg: &SolverConfig,
    variant: Variant,
    mut observe: impl FnMut(usize, &FactorPair) -> Result<()>,
) -> Result<RunOutput> {
    cfg.validate()?;
    let problem = Problem::new(gt, mask)?;
    let eta = problem.step_size(cfg.step)?;
    let radii = match variant {
        Variant::Vanilla => Radii::unbounded(),
        Variant::Projected => problem.oracle_radii(cfg.projection_slack),
    };
    let m = gt.matrix();
    let truth = gt.stacked();
    let root_sigma_r = gt.sigma_min().sqrt();
    let obs = &problem.observations;

    let mut fp = problem.init.pair.clone();
    let mut records = Vec::new();
    let mut clipped_rows = 0;
    let mut history: Vec<f64> = Vec::new();
    let stopped_early;
    let mut t = 0;

    loop {
        observe(t, &fp)?;
        let aligned = aligned_difference(&fp, &truth)?;
        let objective = match cfg.stop_rule {
            StopRule::Plateau => Some(objective_with(obs, &fp)?),
            StopRule::Oracle => None,
        };
        let stop = match cfg.stop_rule {
            StopRule::Oracle => aligned.frobenius() <= cfg.stop_tol * root_sigma_r,
            StopRule::Plateau => {
                let f = objective.expect("computed above");
                history.push(f);
                f == 0.0
                    || (t >= PLATEAU_WINDOW && {
                        let past = history[t - PLATEAU_WINDOW];
                        past - f <= PLATEAU_REL_CHANGE * past
                    })
            }
        };
        let last = stop || t == cfg.max_iters;
        if t % cfg.record_every == 0 || last {
            records.push(TrajectoryRecord {
                iter: t,
                objective: match objective {
                    Some(f) => f,
                    None => objective_with(obs, &fp)?,
                },
                aligned_frob_err: aligned.frobenius(),
                aligned_spec_err: aligned.spectral(),
                aligned_2inf_err: aligned.two_inf(),
                balance_gap: balance_gap(&fp),
            });
        }
        if last {
            stopped_early = stop;
            break;
        }

        fp = match variant {
            Variant::Vanilla => gd_step_with(obs, &fp, eta)?,
            Variant::Projected => {
                let step = projected_step_counting(obs, &fp, eta, radii)?;
                clipped_rows += step.clipped_rows;
                step.pair
            }
        };
        t += 1;
        if !fp.is_finite() {
            return Err(Error::Diverged { iter: t });
        }
    }

    Ok(RunOutput {
        records,
        relative_error: relative_recovery_error(&fp, &m)?,
        final_pair: fp,
        eta,
        iterations: t,
        stopped_early,
        init_singulars: problem.init.singulars,
        clipped_rows,
    })
}

/// Writes records as CSV with header [`TRAJECTORY_HEADER`].
pub fn write_trajectory_csv<W: Write>(records: &[TrajectoryRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(TRAJECTORY_HEADER.split(','))
            .map_err(|e| Error::Input(e.to_string()))?;
    }
    for rec in records {
        w.serialize(rec).map_err(|e| Error::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::Input(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.join(",") != TRAJECTORY_HEADER {
        return Err(Error::Input(format!("unexpected trajectory header {header:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Input(e.to_string())))
        .collect()
}
