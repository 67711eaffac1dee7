//! Batch driver: every pipeline of the core crate as a reproducible
//! experiment with a versioned JSON, CSV or text report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use coblab::certificate::Certificate;
use coblab::constructions::{
    build_bad_pair_family_with, build_joint_not_double, check_bad_joint, check_double_bad, check_mur_envelope,
    kac_salem_series, large_coeff_witness, petersen_series, refine_lacunary, ConstructionOptions, NormMode, TailInfo,
};
use coblab::diophantine::{
    bad_pair_constant, badness_profile, continued_fraction, convergents, dirichlet_pair_search, records_csv,
    select_summable_lacunary, square_approximation_search, Irrational, PrecisionPolicy,
};
use coblab::fourier::{apply_difference, double_ergodic_sum_norm, SparseFourierSeries};
use coblab::shift::{build_h, build_q, divergence_certificate, lp_partial_norm, DEFAULT_TAIL_TERMS};
use coblab::spectral::{
    cesaro_rate_profile, coboundary_integral, double_criterion_sum, double_term_certificate, doubling_tripling_variance,
    joint_criterion_sum, joint_increment_certificate, spectral_measure, Which,
};
use coblab::Error as CoreError;

/// Version of the report envelope.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ApproxMode {
    Dirichlet,
    BadPair,
    Squares,
    Cf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructMode {
    /// Joint coboundary that is not a double coboundary.
    Joint,
    /// The same, thinned to a larger lacunarity ratio.
    Refine,
    /// Bad-pair family with `a_k = q_k^{-1/2}`.
    BadPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    BadJointC,
    BadJointL2,
    Envelope,
    DoubleBad,
    Witness,
    Petersen,
    KacSalem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RatesMode {
    Cesaro,
    DoublingTripling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name", content = "mode")]
pub enum Command {
    Approx(ApproxMode),
    Construct(ConstructMode),
    Check(CheckMode),
    Spectral,
    Rates(RatesMode),
    Shift,
    Selftest,
}

/// Everything a run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha: String,
    pub beta: String,
    pub q: u64,
    pub k: u64,
    pub n: u64,
    pub depth: u64,
    pub delta: f64,
    pub gamma: f64,
    pub p: f64,
    pub r: Option<f64>,
    pub ratio: f64,
    pub budget: f64,
    pub tol: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub series: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            alpha: "sqrt(2)-1".into(),
            beta: "sqrt(3)-1".into(),
            q: 1_000_000,
            k: 10,
            n: 64,
            depth: 20,
            delta: 0.6,
            gamma: 2.0,
            p: 2.0,
            r: None,
            ratio: 2.0,
            budget: 2.0,
            tol: 1e-12,
            seed: 0,
            threads: None,
            series: None,
            out: None,
            format: Format::Json,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [("Q", self.q), ("K", self.k), ("N", self.n), ("depth", self.depth)];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(CliError::config(format!("{name} must be positive")));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::config(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.threads == Some(0) {
            return Err(CliError::config("threads must be positive"));
        }
        for (name, v) in [("delta", self.delta), ("gamma", self.gamma), ("p", self.p), ("ratio", self.ratio), ("budget", self.budget)] {
            if !v.is_finite() {
                return Err(CliError::config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn policy(&self) -> PrecisionPolicy {
        PrecisionPolicy {
            tol: self.tol,
            ..PrecisionPolicy::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub status: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            status: "config-error",
            message: message.into(),
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> String {
        json!({ "status": self.status, "exit_code": self.code, "reason": self.message }).to_string()
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let (code, status) = match &e {
            CoreError::InvalidSurd(_)
            | CoreError::InvalidParameter(_)
            | CoreError::NotCentered(_)
            | CoreError::NotMonotone(_)
            | CoreError::Precondition(_)
            | CoreError::Overflow => (2, "config-error"),
            CoreError::Shortfall(_) | CoreError::InsufficientCandidates { .. } | CoreError::PrecisionExhausted { .. } => {
                (3, "shortfall")
            }
            CoreError::CertificationFailure(_) => (4, "certification-failure"),
        };
        CliError {
            code,
            status,
            message: e.to_string(),
        }
    }
}

/// Result of a run before formatting.
#[derive(Debug, Default)]
pub struct Outcome {
    pub result: Value,
    pub text: String,
    pub csv: Option<String>,
    /// `false` when a reported certificate fails; this is a finding, not an
    /// error, and does not change the exit status.
    pub verdict: Option<bool>,
}

#[derive(Debug)]
pub struct Report {
    pub body: String,
    pub verdict: Option<bool>,
}

fn header(config: &ExperimentConfig) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "coblab",
        "tool_version": TOOL_VERSION,
        "config": config,
        "policy": config.policy(),
        "seed": config.seed,
    })
}

fn render(config: &ExperimentConfig, outcome: Outcome) -> Result<String, CliError> {
    let head = header(config);
    Ok(match config.format {
        Format::Json => {
            let mut doc = json!({ "header": head, "result": outcome.result });
            if let Some(v) = outcome.verdict {
                doc["verdict"] = json!(v);
            }
            serde_json::to_string_pretty(&doc).map_err(|e| CliError::config(e.to_string()))? + "\n"
        }
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "# coblab {TOOL_VERSION} (schema {SCHEMA_VERSION})");
            let _ = writeln!(out, "# config: {}", head["config"]);
            let _ = writeln!(out, "# policy: {}", head["policy"]);
            out.push_str(&outcome.text);
            if let Some(v) = outcome.verdict {
                let _ = writeln!(out, "verdict: {}", if v { "PASS" } else { "FAIL" });
            }
            out
        }
        Format::Csv => {
            let csv = outcome
                .csv
                .ok_or_else(|| CliError::config("this command has no CSV output; use --format json or text"))?;
            let mut out = String::new();
            let _ = writeln!(out, "# coblab {TOOL_VERSION} (schema {SCHEMA_VERSION})");
            let _ = writeln!(out, "# config: {}", head["config"]);
            let _ = writeln!(out, "# policy: {}", head["policy"]);
            out.push_str(&csv);
            out
        }
    })
}

/// Runs one experiment and writes the report to `config.out` (or returns
/// it for stdout when unset).
pub fn run(config: &ExperimentConfig) -> Result<Report, CliError> {
    config.validate()?;
    let outcome = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::config(e.to_string()))?
            .install(|| dispatch(config)),
        None => dispatch(config),
    }?;
    let verdict = outcome.verdict;
    let body = render(config, outcome)?;
    if let Some(path) = &config.out {
        write_report(path, &body)?;
    }
    Ok(Report { body, verdict })
}

fn write_report(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn surd(s: &str) -> Result<Irrational, CliError> {
    s.parse::<Irrational>().map_err(CliError::from)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn certificate_outcome(certs: Vec<Certificate>, extra: Value) -> Outcome {
    let verdict = certs.iter().all(|c| c.verdict());
    let text = certs.iter().map(|c| c.render_text()).collect::<String>();
    Outcome {
        result: json!({ "certificates": to_value(&certs), "details": extra }),
        text,
        csv: None,
        verdict: Some(verdict),
    }
}

fn dispatch(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    match c.command {
        Command::Approx(mode) => approx(c, mode),
        Command::Construct(mode) => construct(c, mode),
        Command::Check(mode) => check(c, mode),
        Command::Spectral => spectral(c),
        Command::Rates(mode) => rates(c, mode),
        Command::Shift => shift(c),
        Command::Selftest => Ok(selftest(c)),
    }
}

fn approx(c: &ExperimentConfig, mode: ApproxMode) -> Result<Outcome, CliError> {
    let alpha = surd(&c.alpha)?;
    let policy = c.policy();
    match mode {
        ApproxMode::Dirichlet => {
            let beta = surd(&c.beta)?;
            let s = dirichlet_pair_search(&alpha, &beta, c.q, &policy)?;
            let selection = select_summable_lacunary(&s.records, c.ratio, c.budget).ok();
            let mut text = format!("{} certified q <= {}; unresolved {:?}\n", s.records.len(), c.q, s.unresolved);
            if let Some(sel) = &selection {
                let _ = writeln!(text, "lacunary selection (ratio {}, budget {}): {:?}", sel.ratio, sel.budget, sel.qs());
            }
            Ok(Outcome {
                result: json!({ "search": to_value(&s), "selection": to_value(&selection) }),
                csv: Some(records_csv(&s.records)),
                text: text + &records_csv(&s.records),
                verdict: None,
            })
        }
        ApproxMode::BadPair => {
            let beta = surd(&c.beta)?;
            let e = bad_pair_constant(&alpha, &beta, c.q, &policy)?;
            Ok(Outcome {
                result: to_value(&e),
                text: format!("min over q <= {} of sqrt(q) max(||q alpha||, ||q beta||) = {} at q = {}\n", e.depth, e.value, e.argmin),
                csv: Some(format!("depth,argmin,value_lo,value_hi\n{},{},{:e},{:e}\n", e.depth, e.argmin, e.value.lo_f64(), e.value.hi_f64())),
                verdict: None,
            })
        }
        ApproxMode::Squares => {
            let hits = square_approximation_search(&alpha, c.delta, c.n, &policy)?;
            let mut csv = String::from("n,dist_lo,dist_hi\n");
            for h in &hits {
                let _ = writeln!(csv, "{},{:e},{:e}", h.n, h.dist.lo_f64(), h.dist.hi_f64());
            }
            Ok(Outcome {
                result: to_value(&hits),
                text: format!("{} n <= {} with ||n^2 x|| < n^-{}\n", hits.len(), c.n, c.delta) + &csv,
                csv: Some(csv),
                verdict: None,
            })
        }
        ApproxMode::Cf => {
            let depth = c.depth as usize;
            let quotients = continued_fraction(&alpha, depth);
            let conv = convergents(&quotients);
            let profile = badness_profile(&alpha, depth.max(2))?;
            let mut csv = String::from("k,a_k,p_k,q_k\n");
            for (i, (a, (p, q))) in quotients.iter().zip(&conv).enumerate() {
                let _ = writeln!(csv, "{i},{a},{p},{q}");
            }
            Ok(Outcome {
                result: json!({
                    "quotients": quotients.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                    "convergents": conv.iter().map(|(p, q)| [p.to_string(), q.to_string()]).collect::<Vec<_>>(),
                    "badness": to_value(&profile),
                }),
                text: format!(
                    "max partial quotient {}, min q ||q x|| = {}\n{csv}",
                    profile.max_quotient, profile.min_product
                ),
                csv: Some(csv),
                verdict: None,
            })
        }
    }
}

fn construct(c: &ExperimentConfig, mode: ConstructMode) -> Result<Outcome, CliError> {
    let alpha = surd(&c.alpha)?;
    let beta = surd(&c.beta)?;
    let opts = ConstructionOptions {
        ratio: c.ratio,
        budget: c.budget,
        policy: c.policy(),
    };
    let k = usize::try_from(c.k).map_err(|_| CliError::config("K too large"))?;
    let r = match mode {
        ConstructMode::Joint => build_joint_not_double(&alpha, &beta, k, c.q, &opts)?,
        ConstructMode::Refine => {
            let base = build_joint_not_double(&alpha, &beta, k, c.q, &ConstructionOptions { ratio: 2.0, ..opts })?;
            refine_lacunary(&base, c.ratio)?
        }
        ConstructMode::BadPair => build_bad_pair_family_with(&alpha, &beta, k, c.q, |_, q| (q as f64).powf(-0.5), &opts)?,
    };
    let mut result = to_value(&r);
    result["report_text"] = json!(r.render_text());
    Ok(Outcome {
        result,
        text: r.render_text(),
        csv: Some(r.f.to_csv()),
        verdict: Some(r.verdict()),
    })
}

/// Reads `n,re[,im]` rows; lines starting with `#` and a header row whose
/// first field is not an integer are skipped.
pub fn read_series(path: &Path) -> Result<SparseFourierSeries, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let mut terms = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let bad = || CliError::config(format!("{}: malformed row {}", path.display(), i + 1));
        let Ok(n) = row.get(0).ok_or_else(bad)?.parse::<i64>() else {
            if i == 0 {
                continue;
            }
            return Err(bad());
        };
        let re: f64 = row.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let im: f64 = match row.get(2) {
            Some(s) if !s.is_empty() => s.parse().map_err(|_| bad())?,
            _ => 0.0,
        };
        if !re.is_finite() || !im.is_finite() {
            return Err(bad());
        }
        terms.push((n, Complex64::new(re, im)));
    }
    Ok(SparseFourierSeries::from_coeffs(terms))
}

/// The series under test: `--series` if given, else a mode-specific default.
fn series_for(c: &ExperimentConfig, default: impl FnOnce() -> Result<SparseFourierSeries, CliError>) -> Result<SparseFourierSeries, CliError> {
    match &c.series {
        Some(p) => read_series(p),
        None => default(),
    }
}

fn convergent_series(x: &Irrational, depth: usize) -> SparseFourierSeries {
    let conv = convergents(&continued_fraction(x, depth));
    SparseFourierSeries::from_real(conv.iter().filter_map(|(_, q)| {
        let q: i64 = q.try_into().ok()?;
        (q < 1 << 40).then(|| (q, 1.0 / q as f64))
    }))
}

fn check(c: &ExperimentConfig, mode: CheckMode) -> Result<Outcome, CliError> {
    let alpha = surd(&c.alpha)?;
    let n = c.n as i64;
    match mode {
        CheckMode::BadJointC | CheckMode::BadJointL2 => {
            let f = series_for(c, || Ok(SparseFourierSeries::from_real((1..=n).map(|k| (k, (k as f64).powi(-3))))))?;
            let profile = badness_profile(&alpha, (c.depth as usize).max(2))?;
            // finite-depth badness constant with a safety factor
            let badness = 0.9 * profile.min_product.lo_f64();
            let norm = if mode == CheckMode::BadJointC { NormMode::C } else { NormMode::L2 };
            let cert = check_bad_joint(&f, norm, Some((&alpha, badness)))?;
            Ok(certificate_outcome(vec![cert], json!({ "badness_constant": badness })))
        }
        CheckMode::Envelope => {
            let g = c.gamma;
            let a: Vec<f64> = (1..=c.n).map(|k| 1.0 / (k as f64 * ((k + 1) as f64).ln().powf(g))).collect();
            // sum_{k > N} k a_k^2 <= log(N)^{1 - 2 gamma} / (2 gamma - 1) for gamma > 1/2
            let tail = if g > 0.5 && c.n >= 2 {
                TailInfo::Bound((c.n as f64).ln().powf(1.0 - 2.0 * g) / (2.0 * g - 1.0) * (1.0 + 1e-9))
            } else {
                TailInfo::Divergent
            };
            let cert = check_mur_envelope(&a, 1, tail)?;
            Ok(certificate_outcome(vec![cert], json!({ "envelope": "1/(k log(k+1)^gamma)", "tail": to_value(&tail) })))
        }
        CheckMode::DoubleBad => {
            let g = c.gamma;
            let f = series_for(c, || {
                Ok(SparseFourierSeries::from_real(
                    (2..=n.max(2)).map(|k| (k, 1.0 / ((k * k) as f64 * (k as f64).ln().powf(g)))),
                ))
            })?;
            let cert = check_double_bad(&f, g)?;
            Ok(certificate_outcome(vec![cert], Value::Null))
        }
        CheckMode::Witness => {
            let beta = surd(&c.beta)?;
            let f = series_for(c, || Ok(convergent_series(&beta, c.depth as usize)))?;
            let cert = large_coeff_witness(&f, &beta, c.depth as usize, 0.1)?;
            Ok(certificate_outcome(vec![cert], Value::Null))
        }
        CheckMode::Petersen => {
            let beta = surd(&c.beta)?;
            let f = series_for(c, || Ok(convergent_series(&alpha, c.depth as usize)))?;
            let s = petersen_series(&f, &alpha, &beta)?;
            let mut csv = String::from("n,term_lo,term_hi,partial_lo,partial_hi\n");
            for ((k, t), p) in s.terms.iter().zip(s.cumulative()) {
                let _ = writeln!(csv, "{k},{:e},{:e},{:e},{:e}", t.lo_f64(), t.hi_f64(), p.lo_f64(), p.hi_f64());
            }
            Ok(Outcome {
                result: to_value(&s),
                text: format!("partial sum {} over {} terms (no convergence claim)\n{csv}", s.total, s.terms.len()),
                csv: Some(csv),
                verdict: None,
            })
        }
        CheckMode::KacSalem => {
            let g = c.gamma;
            let mags: Vec<(i64, f64)> = match &c.series {
                Some(p) => read_series(p)?.iter().map(|(k, v)| (k, v.norm())).collect(),
                None => (2..=n.max(2)).map(|k| (k, 1.0 / (k as f64 * (k as f64).ln().powf(g)))).collect(),
            };
            let r = kac_salem_series(&mags, &alpha)?;
            let mut csv = String::from("n,term_lo,term_hi\n");
            for (k, t) in &r.series.terms {
                let _ = writeln!(csv, "{k},{:e},{:e}", t.lo_f64(), t.hi_f64());
            }
            Ok(Outcome {
                result: to_value(&r),
                text: format!("partial sum {}, entropy {} (no convergence claim)\n", r.series.total, r.entropy),
                csv: Some(csv),
                verdict: None,
            })
        }
    }
}

fn spectral(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let alpha = surd(&c.alpha)?;
    let beta = surd(&c.beta)?;
    let phi = match &c.series {
        Some(p) => read_series(p)?,
        None => {
            let opts = ConstructionOptions {
                ratio: c.ratio,
                budget: c.budget,
                policy: c.policy(),
            };
            let k = usize::try_from(c.k).map_err(|_| CliError::config("K too large"))?;
            build_joint_not_double(&alpha, &beta, k, c.q, &opts)?.phi()
        }
    };
    let m = spectral_measure(&phi, &alpha, &beta)?;
    let ia = coboundary_integral(&m, Which::Alpha);
    let ib = coboundary_integral(&m, Which::Beta);
    let joint = joint_criterion_sum(&m)?;
    let double = double_criterion_sum(&m);
    let inc = joint_increment_certificate(&m, &alpha)?;
    let dbl = double_term_certificate(&m, None);
    let mut csv = String::from("n,joint_lo,joint_hi,double_lo,double_hi\n");
    for ((n, j), (_, d)) in joint.terms().iter().zip(double.terms()) {
        let _ = writeln!(csv, "{n},{:e},{:e},{:e},{:e}", j.lo_f64(), j.hi_f64(), d.lo_f64(), d.hi_f64());
    }
    let mut out = certificate_outcome(
        vec![inc, dbl],
        json!({
            "atoms": m.len(),
            "total_mass": to_value(&m.total_mass),
            "integral_alpha": to_value(&ia),
            "integral_beta": to_value(&ib),
            "joint": to_value(&joint),
            "double": to_value(&double),
        }),
    );
    let show = |s: &coblab::spectral::SpectralSum| s.total().map_or("divergent".to_string(), |t| t.to_string());
    out.text = format!(
        "{} atoms, total mass {}\nintegral alpha {}\nintegral beta {}\njoint criterion {}\ndouble criterion {}\n{}",
        m.len(),
        m.total_mass,
        show(&ia),
        show(&ib),
        show(&joint),
        show(&double),
        out.text
    );
    out.csv = Some(csv);
    Ok(out)
}

fn rates(c: &ExperimentConfig, mode: RatesMode) -> Result<Outcome, CliError> {
    match mode {
        RatesMode::Cesaro => {
            let alpha = surd(&c.alpha)?;
            let beta = surd(&c.beta)?;
            let f = match &c.series {
                Some(p) => read_series(p)?,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
                    let x = SparseFourierSeries::random_centered(&mut rng, 10, true);
                    let y = SparseFourierSeries::random_centered(&mut rng, 10, true);
                    apply_difference(&x, &alpha).add(&apply_difference(&y, &beta))
                }
            };
            let ns: Vec<u64> = std::iter::successors(Some(1u64), |&n| n.checked_mul(2)).take_while(|&n| n <= c.n).collect();
            let profile = cesaro_rate_profile(&f, &alpha, &beta, &ns)?;
            let mut csv = String::from("n,norm_over_n,norm_over_n2\n");
            for (n, a, b) in &profile {
                let _ = writeln!(csv, "{n},{a:e},{b:e}");
            }
            Ok(Outcome {
                result: json!({ "profile": to_value(&profile) }),
                text: csv.clone(),
                csv: Some(csv),
                verdict: None,
            })
        }
        RatesMode::DoublingTripling => {
            let top = u32::try_from(c.n).map_err(|_| CliError::config("N too large"))?;
            let mut csv = String::from("n,value\n");
            let mut values = Vec::new();
            for n in 1..=top {
                let v = doubling_tripling_variance(n)?;
                let _ = writeln!(csv, "{n},{v}");
                values.push(v.to_string());
            }
            Ok(Outcome {
                result: json!({ "values": values }),
                text: csv.clone(),
                csv: Some(csv),
                verdict: None,
            })
        }
    }
}

fn shift(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let h = build_h(c.p)?;
    let norm = lp_partial_norm(&h, c.p, c.k, c.k)?;
    let cert = divergence_certificate(c.p, c.k, c.r)?;
    let grid = c.k.min(c.n).min(100);
    let q = build_q(&h, grid, grid, DEFAULT_TAIL_TERMS)?;
    let mut out = certificate_outcome(
        vec![cert, q.roundtrip_check()],
        json!({ "h": to_value(&h), "partial_norm": to_value(&norm), "q_grid": to_value(&q) }),
    );
    out.text = format!("sum of h^p over the {0} x {0} box: {1}\nwith tail: {2}\n{3}", c.k, norm.box_sum, norm.total(), out.text);
    out.csv = Some(q.to_csv());
    Ok(out)
}

/// Seeded property checks over random trigonometric polynomials.
fn selftest(c: &ExperimentConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let alpha: Irrational = "sqrt(2)-1".parse().expect("valid");
    let beta: Irrational = "sqrt(3)-1".parse().expect("valid");
    let mut lines = Vec::new();
    let mut pass = true;
    let mut record = |name: &str, ok: bool, detail: String| {
        pass &= ok;
        lines.push(json!({ "property": name, "pass": ok, "detail": detail }));
    };
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let g = SparseFourierSeries::random_centered(&mut rng, 10, false);
        let f = apply_difference(&g, &alpha);
        let back = coblab::fourier::transfer_coefficients(&f, &alpha, &beta)
            .map(|t| apply_difference(&f, &alpha).max_relative_difference(&apply_difference(&t, &beta)))
            .unwrap_or(f64::INFINITY);
        worst = worst.max(back);
    }
    record("joint identity through the transfer map", worst <= 1e-12, format!("max relative gap {worst:e}"));
    let mut ratio = 0.0f64;
    for _ in 0..20 {
        let h = SparseFourierSeries::random_centered(&mut rng, 10, false);
        let phi = apply_difference(&apply_difference(&h, &alpha), &beta);
        for n in [1u64, 10, 100, 1000] {
            ratio = ratio.max(double_ergodic_sum_norm(&phi, &alpha, &beta, n, n) / (4.0 * h.l2_norm()));
        }
    }
    record("double ergodic sums bounded by 4 |h|", ratio <= 1.0 + 1e-12, format!("max ratio {ratio:.4}"));
    let exact = (1..=16).all(|n| doubling_tripling_variance(n).map(|v| v == num_rational::BigRational::from_integer(1.into())).unwrap_or(false));
    record("doubling/tripling variance is 1", exact, "n = 1..=16".into());
    let text = lines
        .iter()
        .map(|l| format!("[{}] {}: {}\n", if l["pass"] == json!(true) { "PASS" } else { "FAIL" }, l["property"].as_str().unwrap_or(""), l["detail"].as_str().unwrap_or("")))
        .collect();
    Outcome {
        result: json!({ "properties": lines }),
        text,
        csv: None,
        verdict: Some(pass),
    }
}

#[derive(Debug, Parser)]
#[command(name = "coblab", version, about = "Certified experiments on joint and double coboundaries of circle rotations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Diophantine searches: Dirichlet pairs, bad-pair constant, square
    /// approximations, continued fractions.
    Approx {
        #[arg(long, value_enum, default_value = "dirichlet")]
        mode: ApproxMode,
    },
    /// Build a certified joint coboundary that is not a double coboundary.
    Construct {
        #[arg(long, value_enum, default_value = "joint")]
        mode: ConstructMode,
    },
    /// Sufficient-condition checkers and diagnostic series.
    Check {
        #[arg(long, value_enum)]
        mode: CheckMode,
    },
    /// Spectral integrals and the joint/double criteria.
    Spectral,
    /// Cesaro-rate profiles and the doubling/tripling example.
    Rates {
        #[arg(long, value_enum, default_value = "cesaro")]
        mode: RatesMode,
    },
    /// The shift example on l_p(N^2).
    Shift,
    /// Seeded property suite.
    Selftest,
}

#[derive(Debug, Args)]
pub struct Flags {
    /// Config file (JSON); explicit flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true)]
    pub beta: Option<String>,
    #[arg(long = "Q", global = true)]
    pub q: Option<u64>,
    #[arg(long = "K", global = true)]
    pub k: Option<u64>,
    #[arg(long = "N", global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true)]
    pub depth: Option<u64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Exponent of the bounded power sums in `shift` (default 2p + 1).
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub ratio: Option<f64>,
    #[arg(long, global = true)]
    pub budget: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// CSV of `n,re,im` coefficients replacing the default test series.
    #[arg(long, global = true)]
    pub series: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

impl Cli {
    pub fn into_config(self) -> Result<ExperimentConfig, CliError> {
        let command = match self.command {
            CliCommand::Approx { mode } => Command::Approx(mode),
            CliCommand::Construct { mode } => Command::Construct(mode),
            CliCommand::Check { mode } => Command::Check(mode),
            CliCommand::Spectral => Command::Spectral,
            CliCommand::Rates { mode } => Command::Rates(mode),
            CliCommand::Shift => Command::Shift,
            CliCommand::Selftest => Command::Selftest,
        };
        let f = self.flags;
        let mut c = match &f.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
                let mut c: ExperimentConfig =
                    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
                c.command = command;
                c
            }
            None => ExperimentConfig::new(command),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = f.$field { c.$field = v; } )* };
        }
        set!(alpha, beta, q, k, n, depth, delta, gamma, p, ratio, budget, tol, seed, format);
        if f.r.is_some() {
            c.r = f.r;
        }
        if f.threads.is_some() {
            c.threads = f.threads;
        }
        if f.series.is_some() {
            c.series = f.series;
        }
        if f.out.is_some() {
            c.out = f.out;
        }
        Ok(c)
    }
}
