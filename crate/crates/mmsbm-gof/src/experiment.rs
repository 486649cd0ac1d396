//! Size/power experiment harness: simulate networks from a true model, fit
//! a (possibly misspecified) model, run the exact test, and tabulate
//! rejection frequencies per statistic and partial-conjunction index.
//!
//! Replicates run in parallel on seeds derived per replicate, so results do
//! not depend on thread scheduling. Finished replicates are flushed to a
//! log file as they complete and are skipped on restart; the final summary
//! artifacts are rewritten from sorted in-memory results and are therefore
//! byte-identical across reruns.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gof::{exact_test_multi, StatKind, TestConfig};
use crate::mmsbm::{simulate_network, Hyperparams};
use crate::numeric::{derive_stream, derive_subseed};
use crate::report::{to_json_string, CurvePlot};

/// Generating model of an experiment arm: a_kl = 1 with the b matrix set by
/// a diagonal/off-diagonal pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub k: usize,
    pub d: usize,
    pub lambda: f64,
    pub beta_diag: f64,
    pub beta_off: f64,
}

impl ModelSpec {
    pub fn hyperparams(&self) -> Result<Hyperparams> {
        Hyperparams::with_beta_pattern(self.k, self.lambda, self.beta_diag, self.beta_off)
    }
}

/// Fitted model when it differs from the generating one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub k: usize,
    pub lambda: f64,
    pub beta_diag: f64,
    pub beta_off: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub true_model: ModelSpec,
    /// `None` fits the generating model (a size experiment).
    #[serde(default)]
    pub fitted: Option<FitSpec>,
    pub replicates: usize,
    /// Statistics to tabulate.
    pub stats: Vec<StatKind>,
    /// Partial-conjunction indices to tabulate.
    pub m_indices: Vec<usize>,
    pub test: TestConfig,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("need at least one replicate".into()));
        }
        if self.stats.is_empty() || self.m_indices.is_empty() {
            return Err(Error::Config(
                "need at least one statistic and one m index".into(),
            ));
        }
        for &m in &self.m_indices {
            if m < 1 || m > self.test.n_realizations {
                return Err(Error::Config(format!(
                    "m index {m} outside 1..={}",
                    self.test.n_realizations
                )));
            }
        }
        self.test.validate()
    }

    pub fn fitted_hyperparams(&self) -> Result<Hyperparams> {
        match &self.fitted {
            Some(f) => Hyperparams::with_beta_pattern(f.k, f.lambda, f.beta_diag, f.beta_off),
            None => self.true_model.hyperparams(),
        }
    }
}

/// Rejection decisions of one replicate: `reject[s][mi]` for stats x
/// m_indices, plus the whole rejection curve per statistic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub reject: Vec<Vec<bool>>,
    pub pc_curves: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub version: u32,
    pub spec: ExperimentSpec,
    /// `rates[s][mi]`: rejection frequency of stats[s] at m_indices[mi].
    pub rates: Vec<Vec<f64>>,
    /// Mean rejection frequency across replicates at every m = 1..=N.
    pub rejection_curves: Vec<Vec<f64>>,
    pub replicates_done: usize,
}

impl ExperimentResult {
    /// Frequency for one (statistic, m) cell.
    pub fn rate(&self, stat: StatKind, m: usize) -> Option<f64> {
        let s = self.spec.stats.iter().position(|&x| x == stat)?;
        let mi = self.spec.m_indices.iter().position(|&x| x == m)?;
        Some(self.rates[s][mi])
    }
}

/// Run one replicate: simulate, fit, test; returns decisions at every
/// (stat, m_index) plus full curves.
fn run_replicate(spec: &ExperimentSpec, rep: usize) -> Result<ReplicateOutcome> {
    let sim_seed = derive_subseed(spec.master_seed, 2 * rep as u64);
    let test_seed = derive_subseed(spec.master_seed, 2 * rep as u64 + 1);
    let true_hyper = spec.true_model.hyperparams()?;
    let mut sim_rng = derive_stream(sim_seed, 0);
    let sim = simulate_network(&true_hyper, spec.true_model.d, &mut sim_rng)?;
    let fit_hyper = spec.fitted_hyperparams()?;
    let reports = exact_test_multi(&sim.y, &fit_hyper, &spec.test, &spec.stats, test_seed)?;
    let reject: Vec<Vec<bool>> = reports
        .iter()
        .map(|r| {
            spec.m_indices
                .iter()
                .map(|&m| r.pc_curve[m - 1] <= spec.test.alpha)
                .collect()
        })
        .collect();
    let pc_curves = reports.into_iter().map(|r| r.pc_curve).collect();
    Ok(ReplicateOutcome {
        replicate: rep,
        reject,
        pc_curves,
    })
}

fn log_path(dir: &Path) -> PathBuf {
    dir.join("replicates.csv")
}

fn outcomes_path(dir: &Path) -> PathBuf {
    dir.join("outcomes.jsonl")
}

fn outcome_log_lines(spec: &ExperimentSpec, o: &ReplicateOutcome) -> String {
    let mut s = String::new();
    for (si, stat) in spec.stats.iter().enumerate() {
        for (mi, m) in spec.m_indices.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                o.replicate,
                stat.name(),
                m,
                u8::from(o.reject[si][mi])
            ));
        }
    }
    s
}

fn spec_fingerprint(spec: &ExperimentSpec) -> Result<String> {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(serde_json::to_string(spec)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Load outcomes finished in a previous run of the same spec. The first
/// line of the store is a fingerprint of the spec; a mismatch aborts rather
/// than silently mixing experiments.
fn load_cached_outcomes(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<ReplicateOutcome>> {
    let path = outcomes_path(dir);
    let Ok(text) = fs::read_to_string(&path) else {
        return Ok(Vec::new());
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == spec_fingerprint(spec)? => {}
        Some(_) => {
            return Err(Error::DataIntegrity(format!(
                "{} belongs to a different experiment spec; remove the directory to start over",
                path.display()
            )))
        }
        None => return Ok(Vec::new()),
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let o: ReplicateOutcome = serde_json::from_str(line)?;
        if o.replicate < spec.replicates && seen.insert(o.replicate) {
            out.push(o);
        }
    }
    Ok(out)
}

/// Run the experiment, resuming over any replicates already stored in
/// `out_dir`, and write `outcomes.jsonl`, `replicates.csv`, `summary.csv`,
/// `summary.json`, and `rejection_curve.{csv,svg}`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<ExperimentResult> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;

    let cached = load_cached_outcomes(spec, out_dir)?;
    let done: BTreeSet<usize> = cached.iter().map(|o| o.replicate).collect();
    let pending: Vec<usize> = (0..spec.replicates).filter(|r| !done.contains(r)).collect();

    let store = {
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(outcomes_path(out_dir))?;
        if cached.is_empty() {
            f.set_len(0)?;
            writeln!(f, "{}", spec_fingerprint(spec)?)?;
        }
        Mutex::new(f)
    };

    let mut fresh: Vec<ReplicateOutcome> = pending
        .par_iter()
        .map(|&rep| {
            let outcome = run_replicate(spec, rep)?;
            // Flush each finished replicate so an interrupted run resumes.
            let mut guard = store.lock().unwrap();
            writeln!(guard, "{}", serde_json::to_string(&outcome)?)?;
            guard.flush()?;
            Ok(outcome)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut outcomes = cached;
    outcomes.append(&mut fresh);
    outcomes.sort_by_key(|o| o.replicate);

    // Rewrite both logs sorted so finished runs are byte-identical.
    let mut store_text = format!("{}\n", spec_fingerprint(spec)?);
    let mut decisions = String::from("replicate,stat,m,reject\n");
    for o in &outcomes {
        store_text.push_str(&serde_json::to_string(o)?);
        store_text.push('\n');
        decisions.push_str(&outcome_log_lines(spec, o));
    }
    fs::write(outcomes_path(out_dir), store_text)?;
    fs::write(log_path(out_dir), decisions)?;

    let total = outcomes.len() as f64;
    let rates: Vec<Vec<f64>> = (0..spec.stats.len())
        .map(|si| {
            (0..spec.m_indices.len())
                .map(|mi| {
                    outcomes.iter().filter(|o| o.reject[si][mi]).count() as f64 / total
                })
                .collect()
        })
        .collect();
    let n = spec.test.n_realizations;
    let rejection_curves: Vec<Vec<f64>> = (0..spec.stats.len())
        .map(|si| {
            (0..n)
                .map(|mi| {
                    outcomes
                        .iter()
                        .filter(|o| o.pc_curves[si][mi] <= spec.test.alpha)
                        .count() as f64
                        / total
                })
                .collect()
        })
        .collect();

    let result = ExperimentResult {
        version: crate::gof::REPORT_VERSION,
        spec: spec.clone(),
        rates,
        rejection_curves,
        replicates_done: outcomes.len(),
    };

    // Summary table shaped like the size/power tables: one row per
    // statistic, one column per m index.
    let mut summary = String::from("stat");
    for m in &spec.m_indices {
        summary.push_str(&format!(",m={m}"));
    }
    summary.push('\n');
    for (si, stat) in spec.stats.iter().enumerate() {
        summary.push_str(stat.name());
        for mi in 0..spec.m_indices.len() {
            summary.push_str(&format!(",{}", result.rates[si][mi]));
        }
        summary.push('\n');
    }
    fs::write(out_dir.join("summary.csv"), summary)?;
    fs::write(out_dir.join("summary.json"), to_json_string(&result)?)?;

    let mut curve_csv = String::from("stat,m,rate\n");
    for (si, stat) in spec.stats.iter().enumerate() {
        for m in 1..=n {
            curve_csv.push_str(&format!(
                "{},{m},{}\n",
                stat.name(),
                result.rejection_curves[si][m - 1]
            ));
        }
    }
    fs::write(out_dir.join("rejection_curve.csv"), curve_csv)?;
    let plot = CurvePlot {
        x_label: "m",
        y_label: "rejection rate",
        alpha: Some(spec.test.alpha),
        series: spec
            .stats
            .iter()
            .zip(&result.rejection_curves)
            .map(|(s, c)| (s.name().to_string(), c.clone()))
            .collect(),
    };
    fs::write(out_dir.join("rejection_curve.svg"), plot.to_svg())?;

    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::WalkConfig;
    use crate::mmsbm::GibbsSchedule;

    fn tiny_spec(dir_seed: u64) -> ExperimentSpec {
        ExperimentSpec {
            name: "tiny".into(),
            true_model: ModelSpec {
                k: 2,
                d: 6,
                lambda: 1.0,
                beta_diag: 5.0,
                beta_off: 1.0,
            },
            fitted: None,
            replicates: 3,
            stats: vec![StatKind::ChiSq, StatKind::DInf],
            m_indices: vec![1, 4],
            test: TestConfig {
                n_realizations: 8,
                m_index: 4,
                gibbs: GibbsSchedule {
                    sweeps: 60,
                    burn_in: 20,
                },
                walk: WalkConfig {
                    samples: 30,
                    burn_in: 50,
                    thin: 2,
                    ..WalkConfig::default()
                },
                ..TestConfig::default()
            },
            master_seed: dir_seed,
        }
    }

    #[test]
    fn harness_runs_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let spec = tiny_spec(41);
        let first = run_experiment(&spec, dir.path()).unwrap();
        assert_eq!(first.replicates_done, 3);
        let log1 = fs::read_to_string(log_path(dir.path())).unwrap();
        assert_eq!(log1.lines().count(), 1 + 3 * 2 * 2);
        let store1 = fs::read_to_string(outcomes_path(dir.path())).unwrap();

        // Re-running over the same directory reuses the store and
        // reproduces identical artifacts.
        let second = run_experiment(&spec, dir.path()).unwrap();
        assert_eq!(fs::read_to_string(log_path(dir.path())).unwrap(), log1);
        assert_eq!(
            fs::read_to_string(outcomes_path(dir.path())).unwrap(),
            store1
        );
        assert_eq!(
            serde_json::to_string(&first.rates).unwrap(),
            serde_json::to_string(&second.rates).unwrap()
        );

        // A truncated store (interrupted run) resumes by replicate index
        // and converges to the same artifacts.
        let truncated: Vec<&str> = store1.lines().take(2).collect();
        fs::write(
            outcomes_path(dir.path()),
            format!("{}\n", truncated.join("\n")),
        )
        .unwrap();
        let third = run_experiment(&spec, dir.path()).unwrap();
        assert_eq!(fs::read_to_string(log_path(dir.path())).unwrap(), log1);
        assert_eq!(
            fs::read_to_string(outcomes_path(dir.path())).unwrap(),
            store1
        );
        assert_eq!(third.replicates_done, 3);

        // A store written by a different spec is rejected.
        let other = tiny_spec(999);
        assert!(matches!(
            run_experiment(&other, dir.path()),
            Err(Error::DataIntegrity(_))
        ));
    }

    #[test]
    fn summary_schema_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let spec = tiny_spec(42);
        run_experiment(&spec, dir.path()).unwrap();
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        let mut lines = summary.lines();
        assert_eq!(lines.next().unwrap(), "stat,m=1,m=4");
        assert!(lines.next().unwrap().starts_with("chi2,"));
        assert!(lines.next().unwrap().starts_with("dinf,"));
        let curve = fs::read_to_string(dir.path().join("rejection_curve.csv")).unwrap();
        assert_eq!(curve.lines().next().unwrap(), "stat,m,rate");
        assert_eq!(curve.lines().count(), 1 + 2 * 8);
        let svg = fs::read_to_string(dir.path().join("rejection_curve.svg")).unwrap();
        assert!(crate::report::svg_is_well_formed(&svg));
    }

    #[test]
    fn determinism_across_thread_counts() {
        let spec = tiny_spec(43);
        let run = |threads: usize| {
            let dir = tempfile::tempdir().unwrap();
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let res = pool.install(|| run_experiment(&spec, dir.path()).unwrap());
            let files: Vec<String> = ["replicates.csv", "summary.csv", "summary.json"]
                .iter()
                .map(|f| fs::read_to_string(dir.path().join(f)).unwrap())
                .collect();
            (serde_json::to_string(&res.rates).unwrap(), files)
        };
        assert_eq!(run(1), run(4));
    }
}
