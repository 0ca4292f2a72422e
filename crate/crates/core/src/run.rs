//! Run orchestration: one entry point per mode, all randomness derived
//! from the config seed.

use crate::dynamics::{
    close_fiducial_algebra, closed_generator, evolve_closed, learn_generator, taylor_truncation_order, OpStateVector,
};
use crate::error::{Error, Result};
use crate::gateset::{build_operational_rep, clip_probability, GateSet, OperationalRep, Sequence};
use crate::io::config::{Builtin, DesignSource, Mode, PriorSource, RunConfig, TruthSource};
use crate::io::{
    ingest_dataset, read_gate_set, read_json, write_dataset, write_gate_set, write_json, write_rows, write_table,
    DataSet, OperationalRepFile, PredictionRow, SimulationRow, SurvivalRow, TvdCsvRow,
};
use crate::protocols::ramsey::{RX as RAMSEY_RX, DT as RAMSEY_DT};
use crate::protocols::rb::{rb_prior, rb_test_lengths, rb_testing, rb_training};
use crate::protocols::statetomo::{bloch_vector, distance, statetomo_prior, RX as TOMO_RX, RY as TOMO_RY};
use crate::protocols::tvd::tvd_rows;
use crate::protocols::{
    build_clifford_table, fit_decay, fit_ramsey_frequency, lsgst_design, naive_pseudo_bloch, pseudo_bloch,
    ramsey_design, rb_credible_interval, rb_design, rb_survival, statetomo_design, survival_curve, CliffordTable,
    CredibleIntervals, DecayFit, Experiment, ExperimentDesign, RamseyFit, RbGroup,
};
use crate::rng::SeedTree;
use crate::smc::{
    bayes_update, effective_sample_size, induce_operational_prior, posterior_mean, predict, Checkpoint, Datum,
    ParticleCloud, PriorSpec, SmcSettings,
};
use nalgebra::DVector;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

/// What a run wrote and its headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub seed: u64,
    /// File names inside the output directory, sorted.
    pub artifacts: Vec<String>,
    pub summary: serde_json::Value,
}

/// Executes `config` and writes every artifact under its `output_dir`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let out = config.output_dir.as_path();
    std::fs::create_dir_all(out)?;
    let mut ctx = Context {
        config,
        seeds: SeedTree::new(config.seed),
        out,
        artifacts: BTreeSet::new(),
    };
    let summary = match config.mode {
        Mode::Simulate => serde_json::to_value(ctx.simulate()?)?,
        Mode::Infer => serde_json::to_value(ctx.infer()?)?,
        Mode::Rb => serde_json::to_value(ctx.rb()?)?,
        Mode::Dynamics => serde_json::to_value(ctx.dynamics()?)?,
        Mode::Statetomo => serde_json::to_value(ctx.statetomo()?)?,
        Mode::Report => serde_json::to_value(ctx.report()?)?,
    };
    ctx.artifacts.insert("summary.json".into());
    let report = RunReport {
        mode: config.mode,
        seed: config.seed,
        artifacts: ctx.artifacts.into_iter().collect(),
        summary,
    };
    write_json(&out.join("summary.json"), &report)?;
    Ok(report)
}

/// One binomial draw per experiment from `probability`, each on its own
/// `(stream, index)` substream. Returns the clipped probabilities as well.
pub fn simulate_counts<F>(
    experiments: &[Experiment],
    mut probability: F,
    seeds: &SeedTree,
    stream: &str,
) -> Result<Vec<(f64, Datum)>>
where
    F: FnMut(&Sequence) -> Result<f64>,
{
    experiments
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let p = clip_probability(probability(&e.sequence)?);
            let k = Binomial::new(e.shots, p)
                .map_err(|err| Error::InvalidDatum(format!("{}: {err}", e.sequence)))?
                .sample(&mut seeds.stream(stream, i as u64));
            Ok((p, Datum::new(e.sequence.clone(), e.shots, k)?))
        })
        .collect()
}

/// Counters from a sequence of Bayes updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceStats {
    pub particles: usize,
    pub updates: usize,
    pub resamples: usize,
    pub final_ess: f64,
}

/// Induces the prior cloud on `seeds/prior` and folds in `data` in order.
/// Returns the prior cloud alongside the posterior.
pub fn infer_cloud(
    prior: &PriorSpec,
    particles: usize,
    data: &[Datum],
    settings: &SmcSettings,
    seeds: &SeedTree,
) -> Result<(ParticleCloud, ParticleCloud, InferenceStats)> {
    let initial = induce_operational_prior(prior, particles, &seeds.child("prior", 0))?;
    let mut cloud = initial.clone();
    let smc = seeds.child("smc", 0);
    let mut resamples = 0;
    for (i, d) in data.iter().enumerate() {
        if bayes_update(&mut cloud, d, settings, &smc, i)?.resampled {
            resamples += 1;
        }
    }
    let stats = InferenceStats {
        particles,
        updates: data.len(),
        resamples,
        final_ess: effective_sample_size(&cloud),
    };
    Ok((initial, cloud, stats))
}

/// Posterior-mean representation of a cloud.
pub fn mean_rep(cloud: &ParticleCloud) -> Result<OperationalRep> {
    OperationalRep::from_minimal(cloud.layout().clone(), posterior_mean(cloud))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub training: usize,
    pub testing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyReport {
    pub omega_hat: f64,
    pub fit: RamseyFit,
    pub omega_true: Option<f64>,
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferSummary {
    pub inference: InferenceStats,
    pub testing: usize,
    /// Mean quadratic loss of the Bayes mean against exact probabilities.
    pub mean_quadratic_loss: Option<f64>,
    pub tvd_prior: f64,
    pub tvd_posterior: f64,
    pub ramsey: Option<RamseyReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbSummary {
    pub inference: InferenceStats,
    pub usable_particles: usize,
    pub truth_fit: Option<DecayFit>,
    pub posterior_fit: DecayFit,
    pub intervals: CredibleIntervals,
    pub truth_in_interval: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebitRow {
    pub rebit: usize,
    pub true_x: f64,
    pub true_y: f64,
    pub true_z: f64,
    pub oper_x: f64,
    pub oper_y: f64,
    pub oper_z: f64,
    pub naive_x: f64,
    pub naive_y: f64,
    pub naive_z: f64,
    pub posterior_x: f64,
    pub posterior_y: f64,
    pub posterior_z: f64,
    /// Distance of the naive vector to the true Bloch vector.
    pub naive_distance: f64,
    pub posterior_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatetomoSummary {
    pub rebits: usize,
    pub mean_naive_distance: f64,
    pub mean_posterior_distance: f64,
    /// Naive vectors with norm above one.
    pub naive_out_of_disk: usize,
    pub max_naive_abs_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSummary {
    pub algebra_elements: usize,
    pub state_len: usize,
    pub steps: usize,
    pub taylor_order: Option<usize>,
    /// Relative Frobenius error of a generator fitted to the trajectory.
    pub generator_relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub records: usize,
    pub tvd_total: f64,
    pub mean_ess_fraction: f64,
}

struct Context<'a> {
    config: &'a RunConfig,
    seeds: SeedTree,
    out: &'a Path,
    artifacts: BTreeSet<String>,
}

enum Design {
    Plain(ExperimentDesign),
    Rb {
        design: ExperimentDesign,
        table: CliffordTable,
        testing: Vec<RbGroup>,
    },
}

impl Design {
    fn experiments(&self) -> &ExperimentDesign {
        match self {
            Design::Plain(d) | Design::Rb { design: d, .. } => d,
        }
    }
}

fn builtin_prior(b: Builtin) -> PriorSpec {
    match b {
        Builtin::Ramsey => crate::protocols::ramsey::ramsey_prior(),
        Builtin::Rb => rb_prior(),
        Builtin::Statetomo => statetomo_prior(),
        Builtin::Lsgst => crate::protocols::germs::lsgst_prior(),
    }
}

fn range([lo, hi]: [usize; 2], field: &str) -> Result<std::ops::RangeInclusive<usize>> {
    if lo > hi {
        return Err(Error::Config(format!("design.{field}: empty range [{lo}, {hi}]")));
    }
    Ok(lo..=hi)
}

impl Context<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.insert(name.to_string());
        self.out.join(name)
    }

    fn prior(&self) -> Result<PriorSpec> {
        let spec = match &self.config.prior {
            Some(PriorSource::Builtin(b)) => builtin_prior(*b),
            Some(PriorSource::Inline(p)) => p.clone(),
            Some(PriorSource::File(p)) => read_json(p)?,
            None => match self.config.mode {
                Mode::Rb => rb_prior(),
                Mode::Statetomo => statetomo_prior(),
                _ => return Err(Error::Config(format!("prior: required in {} mode", self.config.mode.name()))),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn design(&self) -> Result<Design> {
        let source = self
            .config
            .design
            .as_ref()
            .ok_or_else(|| Error::Config("design: missing".into()))?;
        let mut rng = self.seeds.stream("design", 0);
        let design = match source {
            DesignSource::Ramsey { train, test, shots } => {
                Design::Plain(ramsey_design(range(*train, "train")?, range(*test, "test")?, *shots))
            }
            DesignSource::Lsgst { shots } => Design::Plain(lsgst_design(*shots)),
            DesignSource::Statetomo {
                train,
                test,
                count,
                shots,
            } => Design::Plain(statetomo_design(
                range(*train, "train")?,
                range(*test, "test")?,
                *count,
                *shots,
                &mut rng,
            )),
            DesignSource::Rb {
                training,
                training_lengths,
                testing_count,
                testing_lengths,
                per_length,
                shots,
            } => {
                let table = build_clifford_table()?;
                let lengths: Vec<usize> = range(*training_lengths, "training_lengths")?.collect();
                if lengths[0] == 0 || testing_lengths[0] == 0 {
                    return Err(Error::Config("design: RB lengths must be at least 1".into()));
                }
                let train = rb_training(&table, *training, &lengths, &mut rng)?;
                let [lo, hi] = *testing_lengths;
                range(*testing_lengths, "testing_lengths")?;
                let testing = rb_testing(&table, &rb_test_lengths(*testing_count, lo, hi), *per_length, &mut rng)?;
                let design = rb_design(&table, &train, &testing, *shots);
                Design::Rb { design, table, testing }
            }
            DesignSource::Inline(d) => Design::Plain(d.clone()),
            DesignSource::File(p) => Design::Plain(read_json(p)?),
        };
        design.experiments().validate()?;
        if self.config.mode == Mode::Rb && !matches!(design, Design::Rb { .. }) {
            return Err(Error::Config("design: rb mode needs an `rb` design".into()));
        }
        Ok(design)
    }

    /// The simulated box; `index` offsets prior draws for multi-box runs.
    fn truth(&self, prior: Option<&PriorSpec>, index: u64) -> Result<Option<GateSet>> {
        Ok(match &self.config.truth {
            None => None,
            Some(TruthSource::Ramsey(t)) => Some(t.gate_set()?),
            Some(TruthSource::File(p)) => Some(read_gate_set(p)?),
            Some(TruthSource::PriorSample(i)) => {
                let prior = prior.ok_or_else(|| Error::Config("truth: prior_sample needs a prior".into()))?;
                Some(prior.sample_gate_set(&mut self.seeds.stream("truth", i + index))?)
            }
        })
    }

    /// Training and testing counts, from the data file or simulated from `truth`.
    fn data(
        &mut self,
        design: &ExperimentDesign,
        truth: Option<&GateSet>,
        seeds: &SeedTree,
        write: bool,
    ) -> Result<(Vec<Datum>, Vec<Datum>)> {
        if let Some(path) = &self.config.data {
            let data = ingest_dataset(path)?;
            let held_out: BTreeSet<&Sequence> = design.testing.iter().map(|e| &e.sequence).collect();
            let (testing, training) = data.records.into_iter().partition(|d| held_out.contains(&d.sequence));
            return Ok((training, testing));
        }
        let truth = truth.ok_or_else(|| Error::Config("truth: needed to simulate data".into()))?;
        let compiled = truth.compile();
        let train = simulate_counts(&design.training, |s| compiled.probability(s), seeds, "counts-training")?;
        let test = simulate_counts(&design.testing, |s| compiled.probability(s), seeds, "counts-testing")?;
        let training: Vec<Datum> = train.into_iter().map(|(_, d)| d).collect();
        let testing: Vec<Datum> = test.into_iter().map(|(_, d)| d).collect();
        if write {
            let p = self.path("data_training.txt");
            write_dataset(&p, &DataSet::from_records(training.clone(), "simulated training"))?;
            if !testing.is_empty() {
                let p = self.path("data_testing.txt");
                write_dataset(&p, &DataSet::from_records(testing.clone(), "simulated testing"))?;
            }
        }
        Ok((training, testing))
    }

    fn simulate(&mut self) -> Result<SimulateSummary> {
        let prior = self.config.prior.as_ref().map(|_| self.prior()).transpose()?;
        let design = self.design()?;
        let design = design.experiments();
        let truth = self.truth(prior.as_ref(), 0)?.expect("validated");
        let compiled = truth.compile();
        let seeds = self.seeds.child("data", 0);
        let mut rows = Vec::new();
        let mut sets = Vec::new();
        for (set, exps, stream) in [
            ("training", &design.training, "counts-training"),
            ("testing", &design.testing, "counts-testing"),
        ] {
            let sim = simulate_counts(exps, |s| compiled.probability(s), &seeds, stream)?;
            rows.extend(sim.iter().map(|(p, d)| SimulationRow {
                set: set.into(),
                sequence: d.sequence.to_string(),
                probability: *p,
                trials: d.trials,
                successes: d.successes,
            }));
            sets.push(sim.into_iter().map(|(_, d)| d).collect::<Vec<_>>());
        }
        let p = self.path("data_training.txt");
        write_dataset(&p, &DataSet::from_records(sets[0].clone(), "simulated training"))?;
        let p = self.path("data_testing.txt");
        write_dataset(&p, &DataSet::from_records(sets[1].clone(), "simulated testing"))?;
        let p = self.path("simulation.csv");
        write_rows(&p, &rows)?;
        let p = self.path("truth.json");
        write_gate_set(&p, &truth)?;
        Ok(SimulateSummary {
            training: sets[0].len(),
            testing: sets[1].len(),
        })
    }

    fn infer(&mut self) -> Result<InferSummary> {
        let prior = self.prior()?;
        let design = self.design()?;
        let design = design.experiments().clone();
        let truth = self.truth(Some(&prior), 0)?;
        let (training, testing) = self.data(&design, truth.as_ref(), &self.seeds.child("data", 0), true)?;
        let (initial, cloud, stats) =
            infer_cloud(&prior, self.config.particles, &training, &self.config.smc, &self.seeds)?;
        let p = self.path("posterior.json");
        write_json(&p, &Checkpoint::capture(&cloud, &self.seeds, stats.updates))?;
        let p = self.path("posterior_mean.json");
        write_json(&p, &OperationalRepFile::from(&mean_rep(&cloud)?))?;

        let compiled = truth.as_ref().map(GateSet::compile);
        let mut rows = Vec::with_capacity(testing.len());
        for d in &testing {
            let pred = predict(&cloud, &d.sequence)?;
            let exact = compiled.as_ref().map(|c| c.probability(&d.sequence).map(clip_probability)).transpose()?;
            rows.push(PredictionRow::new(d, pred.bme, pred.variance, exact));
        }
        let p = self.path("predictions.csv");
        write_rows(&p, &rows)?;
        let losses: Vec<f64> = rows.iter().filter_map(|r| r.quadratic_loss).collect();
        let mean_quadratic_loss = (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64);

        let tvd = tvd_rows(&cloud, &testing)?;
        let tvd_prior: f64 = tvd_rows(&initial, &testing)?.iter().map(|r| r.tvd).sum();
        let tvd_posterior: f64 = tvd.iter().map(|r| r.tvd).sum();
        let p = self.path("tvd.csv");
        write_rows(
            &p,
            tvd.iter().map(|r| TvdCsvRow {
                sequence: r.sequence.to_string(),
                predicted: r.predicted,
                observed: r.observed,
                tvd: r.tvd,
            }),
        )?;

        let ramsey = if design.buttons.iter().map(String::as_str).eq([RAMSEY_RX, RAMSEY_DT]) {
            let report = self.ramsey_report(&cloud, &design, truth.as_ref())?;
            let p = self.path("ramsey.json");
            write_json(&p, &report)?;
            Some(report)
        } else {
            None
        };
        Ok(InferSummary {
            inference: stats,
            testing: testing.len(),
            mean_quadratic_loss,
            tvd_prior,
            tvd_posterior,
            ramsey,
        })
    }

    fn ramsey_report(&self, cloud: &ParticleCloud, design: &ExperimentDesign, truth: Option<&GateSet>) -> Result<RamseyReport> {
        let mut points = Vec::new();
        for e in design.training.iter().chain(&design.testing) {
            let labels = e.sequence.labels();
            let is_ramsey = labels.len() >= 2
                && labels[0] == RAMSEY_RX
                && labels[labels.len() - 1] == RAMSEY_RX
                && labels[1..labels.len() - 1].iter().all(|l| l == RAMSEY_DT);
            if is_ramsey {
                points.push((labels.len() - 2, predict(cloud, &e.sequence)?.bme));
            }
        }
        let fit = fit_ramsey_frequency(&points, 1.0)?;
        let omega_true = match (&self.config.truth, truth) {
            (Some(TruthSource::Ramsey(t)), _) => Some(t.omega),
            _ => None,
        };
        Ok(RamseyReport {
            omega_hat: fit.omega,
            fit,
            omega_true,
            relative_error: omega_true.map(|w| (fit.omega - w).abs() / w),
        })
    }

    fn rb(&mut self) -> Result<RbSummary> {
        let prior = self.prior()?;
        let Design::Rb { design, table, testing } = self.design()? else {
            unreachable!("checked in design()")
        };
        let truth = self.truth(Some(&prior), 0)?;
        let (training, _) = self.data(&design, truth.as_ref(), &self.seeds.child("data", 0), true)?;
        let (_, cloud, stats) = infer_cloud(&prior, self.config.particles, &training, &self.config.smc, &self.seeds)?;
        let p = self.path("posterior.json");
        write_json(&p, &Checkpoint::capture(&cloud, &self.seeds, stats.updates))?;

        let surv = rb_survival(&cloud, &table, &testing)?;
        let mut fits = Vec::new();
        let mut weights = Vec::new();
        for (curve, w) in surv.per_particle.iter().zip(cloud.weights()) {
            if let Some(Ok(fit)) = curve.as_ref().map(|c| fit_decay(c)) {
                fits.push(fit);
                weights.push(*w);
            }
        }
        let intervals = rb_credible_interval(&fits, &weights, self.config.credible_level)?;
        let posterior_fit = fit_decay(&surv.cloud)?;
        let mut rows: Vec<SurvivalRow> = SurvivalRow::from_points("posterior", &surv.cloud).collect();
        let truth_fit = match &truth {
            Some(gs) => {
                let curve = survival_curve(&gs.compile(), &gs.button_index(), &table, &testing)?;
                rows.extend(SurvivalRow::from_points("truth", &curve));
                Some(fit_decay(&curve)?)
            }
            None => None,
        };
        let p = self.path("survival.csv");
        write_rows(&p, &rows)?;
        let summary = RbSummary {
            inference: stats,
            usable_particles: fits.len(),
            truth_in_interval: truth_fit.as_ref().map(|f| intervals.fidelity.contains(f.fidelity)),
            truth_fit,
            posterior_fit,
            intervals,
        };
        let p = self.path("rb_fit.json");
        write_json(&p, &summary)?;
        Ok(summary)
    }

    fn statetomo(&mut self) -> Result<StatetomoSummary> {
        let prior = self.prior()?;
        let design = self.design()?.experiments().clone();
        let shots = design.training.first().map_or(100, |e| e.shots);
        let naive_exps = ExperimentDesign::with_shots(
            [Sequence::empty(), Sequence::new([TOMO_RX]), Sequence::new([TOMO_RY])],
            shots,
        );
        let mut rows = Vec::new();
        for r in 0..self.config.statetomo.rebits {
            let seeds = self.seeds.child("rebit", r as u64);
            let truth = self
                .truth(Some(&prior), r as u64)?
                .ok_or_else(|| Error::Config("truth: statetomo needs a simulated box".into()))?;
            let compiled = truth.compile();
            let naive_data: Vec<Datum> = simulate_counts(&naive_exps, |s| compiled.probability(s), &seeds, "counts-naive")?
                .into_iter()
                .map(|(_, d)| d)
                .collect();
            let (training, _) = self.data(&design, Some(&truth), &seeds, false)?;
            let all: Vec<Datum> = naive_data.iter().cloned().chain(training).collect();
            let (_, cloud, _) = infer_cloud(&prior, self.config.particles, &all, &self.config.smc, &seeds)?;

            let t = bloch_vector(&truth.rho)?;
            let oper = pseudo_bloch(&build_operational_rep(&truth, &prior.fiducials)?)?;
            let naive = naive_pseudo_bloch(&naive_data)?;
            let post = pseudo_bloch(&mean_rep(&cloud)?)?;
            rows.push(RebitRow {
                rebit: r,
                true_x: t[0],
                true_y: t[1],
                true_z: t[2],
                oper_x: oper[0],
                oper_y: oper[1],
                oper_z: oper[2],
                naive_x: naive[0],
                naive_y: naive[1],
                naive_z: naive[2],
                posterior_x: post[0],
                posterior_y: post[1],
                posterior_z: post[2],
                naive_distance: distance(&naive, &t),
                posterior_distance: distance(&post, &t),
            });
        }
        let p = self.path("rebits.csv");
        write_rows(&p, &rows)?;
        let n = rows.len() as f64;
        Ok(StatetomoSummary {
            rebits: rows.len(),
            mean_naive_distance: rows.iter().map(|r| r.naive_distance).sum::<f64>() / n,
            mean_posterior_distance: rows.iter().map(|r| r.posterior_distance).sum::<f64>() / n,
            naive_out_of_disk: rows
                .iter()
                .filter(|r| r.naive_x.powi(2) + r.naive_y.powi(2) + r.naive_z.powi(2) > 1.0)
                .count(),
            max_naive_abs_y: rows.iter().map(|r| r.naive_y.abs()).fold(0.0, f64::max),
        })
    }

    fn dynamics(&mut self) -> Result<DynamicsSummary> {
        let params = self.config.dynamics.clone().expect("validated");
        let prior = self.config.prior.as_ref().map(|_| self.prior()).transpose()?;
        let truth = self.truth(prior.as_ref(), 0)?.expect("validated");
        let fids = params
            .fiducials
            .iter()
            .map(|s| truth.sequence_superop(s))
            .collect::<Result<Vec<_>>>()?;
        let algebra = close_fiducial_algebra(&fids)?;
        if !algebra.closed {
            return Err(Error::NotClosed);
        }
        let alpha = DVector::from_vec(params.alpha.clone());
        let psi0 = OpStateVector::from_gate_set(&truth, &algebra);
        let traj = evolve_closed(&psi0, &algebra, &alpha, (0.0, params.t_end), params.steps)?;
        let mut header = vec!["t".to_string()];
        header.extend(psi0.layout.header());
        let p = self.path("trajectory.csv");
        write_table(
            &p,
            &header,
            traj.iter().map(|(t, s)| std::iter::once(*t).chain(s.psi.iter().copied()).collect()),
        )?;
        let generator_relative_error = if traj.len() > psi0.layout.len() {
            let snapshots: Vec<(f64, DVector<f64>)> = traj.iter().map(|(t, s)| (*t, s.psi.clone())).collect();
            let fit = learn_generator(&snapshots)?;
            let exact = closed_generator(&psi0.layout, &algebra, &alpha)?;
            Some((&fit.k - &exact).norm() / exact.norm().max(f64::MIN_POSITIVE))
        } else {
            None
        };
        let taylor_order = params
            .taylor
            .map(|t| taylor_truncation_order(&params.alpha, t.delta, t.eps))
            .transpose()?;
        Ok(DynamicsSummary {
            algebra_elements: algebra.len(),
            state_len: psi0.layout.len(),
            steps: params.steps,
            taylor_order,
            generator_relative_error,
        })
    }

    fn report(&mut self) -> Result<ReportSummary> {
        let checkpoint: Checkpoint = read_json(self.config.checkpoint.as_ref().expect("validated"))?;
        let cloud = checkpoint.restore()?;
        let data = ingest_dataset(self.config.data.as_ref().expect("validated"))?;
        let mut rows = Vec::with_capacity(data.len());
        for d in &data.records {
            let pred = predict(&cloud, &d.sequence)?;
            rows.push(PredictionRow::new(d, pred.bme, pred.variance, None));
        }
        let p = self.path("predictions.csv");
        write_rows(&p, &rows)?;
        let tvd = tvd_rows(&cloud, &data.records)?;
        let p = self.path("tvd.csv");
        write_rows(
            &p,
            tvd.iter().map(|r| TvdCsvRow {
                sequence: r.sequence.to_string(),
                predicted: r.predicted,
                observed: r.observed,
                tvd: r.tvd,
            }),
        )?;
        Ok(ReportSummary {
            records: data.len(),
            tvd_total: tvd.iter().map(|r| r.tvd).sum(),
            mean_ess_fraction: effective_sample_size(&cloud) / cloud.len() as f64,
        })
    }
}
