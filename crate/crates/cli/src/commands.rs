use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use netinfer_core::gof::{fit_baseline, gof_reference, predict_response_probs, roc_auc, ResponseModel, Roc, Statistic};
use netinfer_core::inference::{confidence_intervals, godambe_cov_with, GodambeConfig};
use netinfer_core::optimizer::{fit, warm_start, FitOptions};
use netinfer_core::sampler::{
    make_subpopulation_neighborhoods, mean_degree, simulate_with_rng, stream_rng, GibbsConfig,
};
use netinfer_core::study::{coverage, CovariateLaw, median_sup_error, run_replication, Replication, SimStudyConfig};
use netinfer_core::{FamilyKind, Theta};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{FitArtifact, NamedValue, Truth, Uncertainty, VERSION};
use crate::config::{config_hash, FamilyConfig, ModelChoice, SimulateConfig};
use crate::data::{read_data_dir, read_json, write_csv, write_data_dir, write_json, LoadedData};
use crate::error::{invalid, CliError, CliResult};

pub const TRUTH: &str = "truth.json";

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

// ---------------------------------------------------------------- simulate

/// Draws one dataset from the configured model and writes the data
/// directory plus `truth.json` into `out`.
pub fn simulate(config_path: &Path, seed: u64, out: &Path) -> CliResult<Truth> {
    let text = fs::read_to_string(config_path).map_err(|e| invalid(format!("{}: {e}", config_path.display())))?;
    let cfg = SimulateConfig::parse(&text)?;
    let spec = cfg.spec()?;
    let n = cfg.n;
    let pop = make_subpopulation_neighborhoods(n)?;
    let mut rng = stream_rng(seed, 0);
    let normal = Normal::new(cfg.nuisance_mean, cfg.nuisance_sd).map_err(|e| invalid(e.to_string()))?;
    let nuisance: Vec<f64> = (0..spec.n_nuisance()).map(|_| normal.sample(&mut rng)).collect();
    let theta = Theta::from_parts(&nuisance, &cfg.interest());
    let x = if cfg.model.is_directed() {
        DMatrix::from_fn(n, 4, |_, c| if c == 0 { rng.random_range(0..2) as f64 } else { rng.random_range(0..3) as f64 })
    } else {
        DMatrix::from_fn(n, 1, |_, _| match cfg.covariates {
            CovariateLaw::Uniform => rng.random::<f64>(),
            CovariateLaw::Bernoulli { p } => (rng.random::<f64>() < p) as u8 as f64,
        })
    };
    let gibbs = GibbsConfig::new(cfg.burn_in, 1, seed);
    let draw = simulate_with_rng(&spec, &pop, &x, &theta, &gibbs, 1, &mut rng)?.remove(0);
    let data = draw.into_dataset(x)?;
    fs::create_dir_all(out)?;
    write_data_dir(out, &pop, &data)?;
    let truth = Truth {
        version: VERSION.into(),
        model: cfg.model,
        family: cfg.family,
        n_units: n,
        seed,
        config_hash: config_hash(&cfg),
        mean_degree: mean_degree(&data.network),
        parameters: spec
            .param_names()
            .into_iter()
            .zip(theta.values())
            .map(|(name, &value)| NamedValue { name, value })
            .collect(),
    };
    write_json(&out.join(TRUTH), &truth)?;
    Ok(truth)
}

// ---------------------------------------------------------------- fit

#[derive(Serialize)]
struct FitHashInput<'a> {
    command: &'static str,
    model: ModelChoice,
    family: FamilyConfig,
    options: &'a FitOptions,
    data: &'a crate::data::DataDigest,
}

pub fn load_for_model(dir: &Path, model: ModelChoice, family: FamilyConfig) -> CliResult<LoadedData> {
    // the spec for three units is enough to learn the covariate count
    let cols = model.spec(3, family.family()?)?.required_covariates();
    read_data_dir(dir, model.is_directed(), Some(cols))
}

pub fn fit_data(
    data_dir: &Path,
    model: ModelChoice,
    family: FamilyConfig,
    options: FitOptions,
    out: &Path,
) -> CliResult<FitArtifact> {
    let loaded = load_for_model(data_dir, model, family)?;
    let spec = model.spec(loaded.data.n_units(), family.family()?)?;
    spec.validate(&loaded.pop, &loaded.data)?;
    let init = warm_start(&spec, &loaded.data)?;
    let result = fit(&spec, &loaded.pop, &loaded.data, &init, &options)?;
    if !result.converged {
        log::warn!("no convergence after {} iterations; the artifact is flagged", result.iterations);
    }
    let hash = config_hash(&FitHashInput { command: "fit", model, family, options: &options, data: &loaded.digest });
    let art = FitArtifact::new(model, &spec, data_dir.display().to_string(), loaded.digest, options, hash, &result);
    write_json(out, &art)?;
    Ok(art)
}

/// Reloads the data behind an artifact and checks it is unchanged.
pub fn load_artifact_data(art: &FitArtifact, data_override: Option<&Path>) -> CliResult<LoadedData> {
    let dir = data_override.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&art.data_dir));
    let loaded = load_for_model(&dir, art.model, art.family)?;
    if loaded.digest != art.data {
        return Err(invalid(format!("data in {} differs from the data the model was fitted to", dir.display())));
    }
    Ok(loaded)
}

// ---------------------------------------------------------------- se

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeOptions {
    pub draws: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub level: f64,
}

pub fn standard_errors(fit_path: &Path, opts: SeOptions, data: Option<&Path>, out: &Path) -> CliResult<FitArtifact> {
    let mut art: FitArtifact = read_json(fit_path)?;
    if opts.draws < 2 {
        return Err(invalid("--draws must be at least 2"));
    }
    if opts.thin == 0 {
        return Err(invalid("--thin must be at least 1"));
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(invalid(format!("--level {} is outside (0, 1)", opts.level)));
    }
    let loaded = load_artifact_data(&art, data)?;
    let spec = art.spec()?;
    let theta = art.theta(&spec)?;
    let gc = GodambeConfig { draws: opts.draws, burn_in: opts.burn_in, thin: opts.thin, seed: opts.seed };
    let cov = godambe_cov_with(&spec, &loaded.pop, &loaded.data, &theta, &gc)?;
    let ci = confidence_intervals(&cov, &theta, opts.level)?;
    for ((p, &se), &(lo, hi)) in art.parameters.iter_mut().zip(&cov.se).zip(&ci) {
        if !se.is_finite() {
            return Err(CliError::Numerical(format!("standard error of {} is not finite", p.name)));
        }
        p.se = Some(se);
        p.ci_lo = Some(lo);
        p.ci_hi = Some(hi);
    }
    art.seed = Some(opts.seed);
    art.uncertainty = Some(Uncertainty {
        method: "godambe".into(),
        draws: opts.draws,
        burn_in: opts.burn_in,
        thin: opts.thin,
        seed: opts.seed,
        level: opts.level,
        ridge: cov.ridge,
        config_hash: config_hash(&(&art.config_hash, &opts)),
    });
    write_json(out, &art)?;
    Ok(art)
}

// ---------------------------------------------------------------- gof

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofOptions {
    pub sims: usize,
    pub stats: Vec<String>,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub statistic: String,
    pub points: usize,
    /// Share of non-degenerate points whose observed value lies in the 90%
    /// envelope.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofSummary {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub sims: usize,
    pub statistics: Vec<StatSummary>,
    pub auc_joint: Option<f64>,
    pub auc_baseline: Option<f64>,
    /// Why ROC output was skipped, if it was.
    pub roc_skipped: Option<String>,
}

pub const GOF_HEADER: [&str; 8] = ["k", "observed", "min", "q05", "median", "q95", "max", "inside"];

pub fn goodness_of_fit(fit_path: &Path, opts: &GofOptions, data: Option<&Path>, out: &Path) -> CliResult<GofSummary> {
    let stats: Vec<Statistic> = opts.stats.iter().map(|s| Statistic::parse(s.trim())).collect::<Result<_, _>>()?;
    if stats.is_empty() {
        return Err(invalid("--stats is empty"));
    }
    if opts.sims < 2 {
        return Err(invalid("--sims must be at least 2"));
    }
    if opts.thin == 0 {
        return Err(invalid("--thin must be at least 1"));
    }
    let art: FitArtifact = read_json(fit_path)?;
    let loaded = load_artifact_data(&art, data)?;
    let spec = art.spec()?;
    let theta = art.theta(&spec)?;
    let gibbs = GibbsConfig::new(opts.burn_in, opts.thin, opts.seed);
    let series = gof_reference(&spec, &loaded.pop, &loaded.data, &theta, &stats, opts.sims, &gibbs)?;
    fs::create_dir_all(out)?;
    let mut summaries = Vec::new();
    for s in &series {
        let rows = s.points.iter().map(|p| {
            let mut r = vec![p.k.to_string(), p.observed.to_string()];
            match p.envelope {
                Some(e) => {
                    r.extend([e.min, e.q05, e.median, e.q95, e.max].iter().map(f64::to_string));
                    r.push(e.covers(p.observed).to_string());
                }
                None => r.extend(std::iter::repeat_n(String::new(), 6)),
            }
            r
        });
        write_csv(&out.join(format!("gof_{}.csv", s.statistic.name())), &GOF_HEADER, rows)?;
        summaries.push(StatSummary {
            statistic: s.statistic.name().into(),
            points: s.points.len(),
            coverage: s.coverage(),
        });
    }
    let (mut auc_joint, mut auc_baseline, mut roc_skipped) = (None, None, None);
    match roc_curves(&spec, &theta, &loaded) {
        Ok((joint, base)) => {
            auc_joint = Some(joint.auc);
            auc_baseline = Some(base.auc);
            let rows = [("joint", &joint), ("baseline", &base)].into_iter().flat_map(|(name, roc)| {
                roc.points.iter().map(move |p| vec![name.to_string(), p.threshold.to_string(), p.fpr.to_string(), p.tpr.to_string()])
            });
            write_csv(&out.join("roc.csv"), &["model", "threshold", "fpr", "tpr"], rows)?;
        }
        Err(e) => roc_skipped = Some(e.to_string()),
    }
    let summary = GofSummary {
        version: VERSION.into(),
        config_hash: config_hash(&(&art.config_hash, opts)),
        seed: opts.seed,
        sims: opts.sims,
        statistics: summaries,
        auc_joint,
        auc_baseline,
        roc_skipped,
    };
    write_json(&out.join("gof_summary.json"), &summary)?;
    Ok(summary)
}

/// ROC curves of the joint model's response probabilities and of a logistic
/// regression on all covariates.
fn roc_curves(spec: &netinfer_core::ModelSpec, theta: &Theta, loaded: &LoadedData) -> CliResult<(Roc, Roc)> {
    if spec.family().kind() != FamilyKind::Bernoulli {
        return Err(invalid("ROC curves need binary responses"));
    }
    let labels: Vec<bool> = loaded.data.responses.iter().map(|&y| y == 1.0).collect();
    let joint = predict_response_probs(&ResponseModel::Joint { spec, theta }, &loaded.pop, &loaded.data)?;
    let columns: Vec<usize> = (0..loaded.data.covariates.ncols()).collect();
    let glm = fit_baseline(&loaded.data, &columns)?;
    let base = predict_response_probs(
        &ResponseModel::Baseline { columns, coefficients: glm.coefficients },
        &loaded.pop,
        &loaded.data,
    )?;
    Ok((roc_auc(&joint, &labels)?, roc_auc(&base, &labels)?))
}

// ---------------------------------------------------------------- study

pub const STUDY_RECORDS: &str = "study.csv";
pub const STUDY_REPLICATIONS: &str = "replications.csv";
pub const STUDY_MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub version: String,
    /// Hash of the configuration without the replication range, so a study
    /// can be extended in several runs.
    pub config_hash: String,
    pub seed: u64,
    pub config: SimStudyConfig,
    pub completed: Vec<(usize, usize)>,
    pub failed: usize,
}

fn study_hash(cfg: &SimStudyConfig) -> String {
    config_hash(&SimStudyConfig { replications: 0, first_replication: 0, ns: vec![], ..cfg.clone() })
}

const RECORD_HEADER: [&str; 9] = ["n", "rep", "component", "theta_star", "theta_hat", "abs_err", "ci_lo", "ci_hi", "covered"];
const REP_HEADER: [&str; 7] = ["n", "rep", "sup_error", "converged", "iterations", "mean_degree", "error"];

fn read_rows(path: &Path) -> CliResult<Vec<Vec<String>>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    r.records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| invalid(format!("{}: {e}", path.display()))))
        .collect()
}

/// Runs the replications of `config` not yet present in `out` and appends
/// them. Replication streams depend only on `(seed, n, rep)`, so a study
/// split over several runs matches a single run.
pub fn study(config_path: &Path, seed: Option<u64>, out: &Path) -> CliResult<(StudyManifest, Vec<Replication>)> {
    let text = fs::read_to_string(config_path).map_err(|e| invalid(format!("{}: {e}", config_path.display())))?;
    let mut cfg: SimStudyConfig = serde_json::from_str(&text).map_err(|e| invalid(format!("config: {e}")))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| invalid(format!("config field {e}")))?;
    let hash = study_hash(&cfg);
    let manifest_path = out.join(STUDY_MANIFEST);
    let mut completed: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut failed = 0;
    if manifest_path.exists() {
        let old: StudyManifest = read_json(&manifest_path)?;
        if old.config_hash != hash {
            return Err(invalid(format!("{} belongs to a study with a different configuration", out.display())));
        }
        completed.extend(old.completed);
        failed = old.failed;
    }
    let jobs: Vec<(usize, usize)> = cfg
        .ns
        .iter()
        .flat_map(|&n| (cfg.first_replication..cfg.first_replication + cfg.replications).map(move |r| (n, r)))
        .filter(|job| !completed.contains(job))
        .collect();
    let reps: Vec<Replication> =
        jobs.par_iter().map(|&(n, rep)| run_replication(&cfg, n, rep)).collect::<Result<_, _>>()?;
    fs::create_dir_all(out)?;
    let mut records = read_rows(&out.join(STUDY_RECORDS))?;
    let mut rep_rows = read_rows(&out.join(STUDY_REPLICATIONS))?;
    for r in &reps {
        rep_rows.push(vec![
            r.n.to_string(),
            r.rep.to_string(),
            opt(r.sup_error),
            r.converged.to_string(),
            r.iterations.to_string(),
            r.mean_degree.to_string(),
            r.error.clone().unwrap_or_default(),
        ]);
        records.extend(r.records.iter().map(|s| {
            vec![
                s.n.to_string(),
                s.rep.to_string(),
                s.component.clone(),
                opt(s.theta_star),
                opt(s.theta_hat),
                opt(s.abs_err),
                opt(s.ci_lo),
                opt(s.ci_hi),
                s.covered.map_or(String::new(), |c| c.to_string()),
            ]
        }));
        failed += r.error.is_some() as usize;
        completed.insert((r.n, r.rep));
    }
    let key = |row: &Vec<String>| (row[0].parse::<usize>().unwrap_or(0), row[1].parse::<usize>().unwrap_or(0));
    // stable sort keeps the component order within a replication
    records.sort_by_key(key);
    rep_rows.sort_by_key(key);
    write_csv(&out.join(STUDY_RECORDS), &RECORD_HEADER, records.into_iter())?;
    write_csv(&out.join(STUDY_REPLICATIONS), &REP_HEADER, rep_rows.into_iter())?;
    let manifest = StudyManifest {
        version: VERSION.into(),
        config_hash: hash,
        seed: cfg.seed,
        config: cfg,
        completed: completed.into_iter().collect(),
        failed,
    };
    write_json(&manifest_path, &manifest)?;
    Ok((manifest, reps))
}

/// Short text report of a batch of replications.
pub fn study_report(reps: &[Replication]) -> String {
    let ns: BTreeSet<usize> = reps.iter().map(|r| r.n).collect();
    let mut s = String::new();
    for n in ns {
        let m = median_sup_error(reps, n).map_or("n/a".into(), |v| format!("{v:.4}"));
        s.push_str(&format!("N={n}: {} replications, median sup error {m}\n", reps.iter().filter(|r| r.n == n).count()));
        for (name, rate, count) in coverage(reps, n) {
            s.push_str(&format!("  coverage {name}: {rate:.3} ({count})\n"));
        }
    }
    s
}
