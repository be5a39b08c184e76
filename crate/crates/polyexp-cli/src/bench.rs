//! Timed benchmark comparing the Monte Carlo Jeffreys estimate against the
//! fast dual-parameter heuristic on randomly drawn mixture pairs.
//!
//! Reproducibility contract: every trial owns a ChaCha8 stream seeded with
//! `trial_seed(master_seed, k, trial_index)` (a splitmix64-finalizer chain,
//! see [`trial_seed`]), so reruns with the same master seed regenerate the
//! same mixtures and Monte Carlo draws bit for bit. Trials run on a thread
//! pool; results are collected in trial order, so everything except the
//! wall-clock columns is byte-identical across runs.

use std::time::{Duration, Instant};

use polyexp::divergences::{jeffreys_gaussians, jeffreys_heuristic, jeffreys_mc};
use polyexp::gmm::random_gmm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// One benchmark trial: a random mixture pair of size `k`, the Monte Carlo
/// reference, the order-`2k` heuristic, and both wall times.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub k: usize,
    pub d: usize,
    pub trial: usize,
    pub seed: u64,
    /// Monte Carlo Jeffreys estimate.
    pub jd_mc: f64,
    /// Fast dual-parameter heuristic value.
    pub jd_heuristic: f64,
    /// `|reference − jd_heuristic| / reference`. The reference is `jd_mc`
    /// except for `k = 1`, where the heuristic is exact and the closed-form
    /// normal Jeffreys divergence replaces the noisy Monte Carlo value.
    pub rel_error: f64,
    pub t_mc: Duration,
    /// Median of three repetitions (the heuristic is microsecond-scale).
    pub t_heuristic: Duration,
}

/// Aggregate over the included trials of one mixture size.
#[derive(Debug, Clone)]
pub struct BenchSummary {
    pub k: usize,
    pub d: usize,
    /// Trials included in the averages.
    pub trials: usize,
    /// Trials that failed and were excluded.
    pub excluded: usize,
    pub mean_error: f64,
    pub max_error: f64,
    /// Mean of per-trial `t_mc / t_heuristic` ratios.
    pub mean_speedup: f64,
}

/// Everything a benchmark run produced.
#[derive(Debug)]
pub struct BenchOutcome {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<BenchSummary>,
    /// `(k, trial_index, message)` for every excluded trial.
    pub failures: Vec<(usize, usize, String)>,
}

/// One splitmix64 finalizer round.
fn splitmix64(z: u64) -> u64 {
    let mut x = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic per-trial seed: three chained splitmix64 finalizer rounds
/// absorbing the master seed, the mixture size, and the trial index in
/// turn — `sm(sm(sm(master) ^ k) ^ trial)`.
pub fn trial_seed(master_seed: u64, k: usize, trial_index: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ k as u64) ^ trial_index as u64)
}

/// Clamp a measured duration away from zero so speed-up ratios stay finite.
fn positive(d: Duration) -> Duration {
    d.max(Duration::from_nanos(1))
}

fn run_trial(
    k: usize,
    trial: usize,
    mc_samples: usize,
    master_seed: u64,
) -> std::result::Result<TrialRecord, String> {
    let seed = trial_seed(master_seed, k, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m1 = random_gmm(k, &mut rng).map_err(|e| e.to_string())?;
    let m2 = random_gmm(k, &mut rng).map_err(|e| e.to_string())?;
    let d = 2 * k;

    let started = Instant::now();
    let mc = jeffreys_mc(&m1, &m2, &mut rng, mc_samples).map_err(|e| e.to_string())?;
    let t_mc = positive(started.elapsed());

    let mut times = Vec::with_capacity(3);
    let mut heuristic = None;
    for _ in 0..3 {
        let started = Instant::now();
        let est = jeffreys_heuristic(&m1, &m2, d).map_err(|e| e.to_string())?;
        times.push(positive(started.elapsed()));
        heuristic = Some(est);
    }
    times.sort();
    let t_heuristic = times[1];
    let jd_heuristic = heuristic.expect("three repetitions ran").value;

    let reference = if k == 1 {
        let a = &m1.components()[0];
        let b = &m2.components()[0];
        jeffreys_gaussians(a.mu, a.sigma, b.mu, b.sigma)
    } else {
        mc.value
    };
    if !(reference > 0.0) {
        return Err(format!("degenerate reference divergence {reference}"));
    }

    Ok(TrialRecord {
        k,
        d,
        trial,
        seed,
        jd_mc: mc.value,
        jd_heuristic,
        rel_error: (reference - jd_heuristic).abs() / reference,
        t_mc,
        t_heuristic,
    })
}

/// Run `trials` trials for every mixture size in `k_list` with `mc_samples`
/// Monte Carlo draws each, in parallel, deterministically seeded from
/// `master_seed`. Failed trials are excluded from the averages and reported
/// in [`BenchOutcome::failures`].
pub fn run_bench(
    k_list: &[usize],
    trials: usize,
    mc_samples: usize,
    master_seed: u64,
) -> Result<BenchOutcome> {
    if k_list.is_empty() {
        return Err(CliError::Usage("at least one mixture size is required".into()));
    }
    if let Some(&bad) = k_list.iter().find(|&&k| k == 0) {
        return Err(CliError::Usage(format!("mixture size must be positive, got {bad}")));
    }
    if trials == 0 {
        return Err(CliError::Usage("trial count must be positive".into()));
    }
    if mc_samples == 0 {
        return Err(CliError::Usage("sample count must be positive".into()));
    }

    let jobs: Vec<(usize, usize)> = k_list
        .iter()
        .flat_map(|&k| (0..trials).map(move |t| (k, t)))
        .collect();
    let results: Vec<(usize, usize, std::result::Result<TrialRecord, String>)> = jobs
        .par_iter()
        .map(|&(k, t)| (k, t, run_trial(k, t, mc_samples, master_seed)))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (k, t, r) in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(msg) => failures.push((k, t, msg)),
        }
    }

    let summaries = k_list
        .iter()
        .map(|&k| {
            let included: Vec<&TrialRecord> = records.iter().filter(|r| r.k == k).collect();
            let excluded = failures.iter().filter(|(fk, _, _)| *fk == k).count();
            let n = included.len();
            let (mut mean_error, mut max_error, mut mean_speedup) = (0.0, 0.0_f64, 0.0);
            for r in &included {
                mean_error += r.rel_error;
                max_error = max_error.max(r.rel_error);
                mean_speedup += r.t_mc.as_secs_f64() / r.t_heuristic.as_secs_f64();
            }
            if n > 0 {
                mean_error /= n as f64;
                mean_speedup /= n as f64;
            }
            BenchSummary {
                k,
                d: 2 * k,
                trials: n,
                excluded,
                mean_error,
                max_error,
                mean_speedup,
            }
        })
        .collect();

    Ok(BenchOutcome {
        records,
        summaries,
        failures,
    })
}

/// Render trial records as CSV. Wall-clock columns sit last and are emitted
/// only when `with_timings` is set, so the deterministic prefix of the file
/// can be compared byte for byte across runs.
pub fn trials_csv(records: &[TrialRecord], with_timings: bool) -> String {
    let mut out = String::from("k,D,trial,seed,jd_mc,jd_heuristic,rel_error");
    if with_timings {
        out.push_str(",t_mc_ns,t_heuristic_ns");
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}",
            r.k, r.d, r.trial, r.seed, r.jd_mc, r.jd_heuristic, r.rel_error
        ));
        if with_timings {
            out.push_str(&format!(
                ",{},{}",
                r.t_mc.as_nanos(),
                r.t_heuristic.as_nanos()
            ));
        }
        out.push('\n');
    }
    out
}

/// Render per-k summaries as CSV.
pub fn summary_csv(summaries: &[BenchSummary]) -> String {
    let mut out = String::from("k,D,trials,excluded,mean_error,max_error,mean_speedup\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.k, s.d, s.trials, s.excluded, s.mean_error, s.max_error, s.mean_speedup
        ));
    }
    out
}
