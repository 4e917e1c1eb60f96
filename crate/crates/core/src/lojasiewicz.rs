//! The discrete Łojasiewicz lemma and its measurement on rescaled flows.
//!
//! Sequence side: hypothesis checks, the square-root increment sum, the
//! polynomial decay bound and an empirical search for the amplitude
//! threshold δ(ε, K, μ) over seeded generator families.
//!
//! Flow side: Gaussian area along a rescaled history, its gaps, the
//! Łojasiewicz–Simon inequality against a model cylinder, and the
//! Cauchy–Schwarz chain bounding the weighted drift `∫∫|H⃗ + ½x⊥|`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowHistory;
use crate::functionals::{entropy, gaussian_area, EntropySearch};
use crate::mesh::Vec3;
use crate::neck::fit_cylinder;
use crate::scenario::{generate, Generator, Scenario};

/// Slack used by every hypothesis comparison.
pub const HYPOTHESIS_SLACK: f64 = 1e-12;

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LojSequence {
    pub values: Vec<f64>,
    pub k: f64,
    pub mu: f64,
    pub delta: f64,
}

impl LojSequence {
    pub fn new(values: Vec<f64>, k: f64, mu: f64, delta: f64) -> Result<Self> {
        if !(k > 0.0 && mu > 0.0 && mu < 1.0 && delta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "need K > 0, μ ∈ (0,1), δ > 0; got K={k}, μ={mu}, δ={delta}"
            )));
        }
        Ok(Self {
            values,
            k,
            mu,
            delta,
        })
    }

    /// Last index `T`.
    pub fn last_index(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisFlags {
    pub non_increasing: bool,
    pub recurrence: bool,
    pub bounded: bool,
    /// `max_t |f(t)|^{1+μ} / (f(t−1) − f(t+1))`; `None` when some index
    /// has a non-positive gap and nonzero value, which no K can fix.
    pub tightest_k: Option<f64>,
    pub first_increase: Option<usize>,
    pub first_recurrence_failure: Option<usize>,
}

impl HypothesisFlags {
    pub fn all(&self) -> bool {
        self.non_increasing && self.recurrence && self.bounded
    }
}

pub fn check_hypotheses(seq: &LojSequence) -> Result<HypothesisFlags> {
    let f = &seq.values;
    if f.len() < 3 {
        return Err(Error::TooShort(f.len()));
    }
    let first_increase = (0..f.len() - 1).find(|&t| f[t + 1] > f[t] + HYPOTHESIS_SLACK);
    let mut tightest: Option<f64> = Some(0.0);
    let mut first_fail = None;
    for t in 1..f.len() - 1 {
        let lhs = f[t].abs().powf(1.0 + seq.mu);
        let gap = f[t - 1] - f[t + 1];
        if lhs > seq.k * gap + HYPOTHESIS_SLACK && first_fail.is_none() {
            first_fail = Some(t);
        }
        if gap > 0.0 {
            tightest = tightest.map(|k| k.max(lhs / gap));
        } else if lhs > 0.0 {
            tightest = None;
        }
    }
    Ok(HypothesisFlags {
        non_increasing: first_increase.is_none(),
        recurrence: first_fail.is_none(),
        bounded: f.iter().all(|x| x.abs() <= seq.delta),
        tightest_k: tightest,
        first_increase,
        first_recurrence_failure: first_fail,
    })
}

/// `Σ_{j=1}^{T} |f(j) − f(j−1)|^{1/2}`, compensated.
pub fn sqrt_increment_sum(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs().sqrt())
        .collect::<CompensatedSum>()
        .value()
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayCheck {
    pub holds: bool,
    /// First `(t, f(t), C·t^{−1/μ})` with `f(t)` above the bound.
    pub witness: Option<(usize, f64, f64)>,
    /// Smallest index from which every later value is negative
    /// (`T + 1` when the sequence never settles below zero).
    pub t0: usize,
}

/// Checks `f(t) ≤ C·t^{−1/μ}` for `1 ≤ t ≤ t0`.
pub fn decay_bound_check(seq: &LojSequence, c: f64) -> Result<DecayCheck> {
    let flags = check_hypotheses(seq)?;
    if !flags.all() {
        return Err(Error::HypothesesFail(format!(
            "non_increasing={} recurrence={} bounded={}",
            flags.non_increasing, flags.recurrence, flags.bounded
        )));
    }
    let f = &seq.values;
    let n = f.len();
    let mut t0 = n;
    while t0 > 0 && f[t0 - 1] < 0.0 {
        t0 -= 1;
    }
    let mut witness = None;
    for t in 1..=t0.min(n - 1) {
        let bound = c * (t as f64).powf(-1.0 / seq.mu);
        if f[t] > bound {
            witness = Some((t, f[t], bound));
            break;
        }
    }
    Ok(DecayCheck {
        holds: witness.is_none(),
        witness,
        t0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `A·((t+s)/s)^{−1/μ}` with random shift `s`.
    PowerLaw,
    /// `A·q^t` with random ratio `q`.
    Geometric,
    /// Products of random per-step ratios.
    RandomGeometric,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::PowerLaw => "power_law",
            Family::Geometric => "geometric",
            Family::RandomGeometric => "random_geometric",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power_law" => Ok(Family::PowerLaw),
            "geometric" => Ok(Family::Geometric),
            "random_geometric" => Ok(Family::RandomGeometric),
            other => Err(Error::InvalidParams(format!("unknown family {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeltaOptions {
    pub n_sequences: usize,
    pub length: usize,
    pub seed: u64,
    pub amplitude_cap: f64,
    pub bisection_steps: usize,
}

impl Default for DeltaOptions {
    fn default() -> Self {
        Self {
            n_sequences: 200,
            length: 200,
            seed: 0,
            amplitude_cap: 1.0,
            bisection_steps: 40,
        }
    }
}

/// Shape parameters of a family chosen so every member satisfies the
/// recurrence at every amplitude up to the cap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FamilyManifest {
    pub family: Family,
    pub k: f64,
    pub mu: f64,
    pub amplitude_cap: f64,
    /// Power law: range of the shift `s`. Geometric: range of the ratio `q`.
    pub param_range: (f64, f64),
    pub length: usize,
}

impl FamilyManifest {
    pub fn new(family: Family, k: f64, mu: f64, cap: f64, length: usize) -> Result<Self> {
        if !(k > 0.0 && mu > 0.0 && mu < 1.0 && cap > 0.0 && length >= 3) {
            return Err(Error::InvalidParams(
                "family needs K > 0, μ ∈ (0,1), cap > 0, length ≥ 3".into(),
            ));
        }
        let a_mu = cap.powf(mu);
        let param_range = match family {
            // |f|^{1+μ}/gap ≈ A^μ·μs/2 for the power law
            Family::PowerLaw => {
                let s_max = (k / (mu * a_mu)).min(50.0);
                if s_max < 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "K = {k} too small for amplitude cap {cap}"
                    )));
                }
                (1.0f64.min(s_max), s_max)
            }
            // A^μ q^{1+μ}/(1 − q²) ≤ K holds for q² ≤ 1 − A^μ/K
            Family::Geometric | Family::RandomGeometric => {
                let q_max = (1.0 - a_mu / k).max(0.0).sqrt() * 0.99;
                if q_max < 0.3 {
                    return Err(Error::InvalidParams(format!(
                        "K = {k} too small for amplitude cap {cap}"
                    )));
                }
                (0.3, q_max)
            }
        };
        Ok(Self {
            family,
            k,
            mu,
            amplitude_cap: cap,
            param_range,
            length,
        })
    }

    /// Unit-amplitude member `index` of the batch `seed`.
    pub fn shape(&self, seed: u64, index: usize) -> Vec<f64> {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let (lo, hi) = self.param_range;
        let n = self.length;
        match self.family {
            Family::PowerLaw => {
                let s = rng.gen_range(lo..=hi);
                (0..n)
                    .map(|t| ((t as f64 + s) / s).powf(-1.0 / self.mu))
                    .collect()
            }
            Family::Geometric => {
                let q = rng.gen_range(lo..=hi);
                (0..n).map(|t| q.powi(t as i32)).collect()
            }
            Family::RandomGeometric => {
                let mut f = Vec::with_capacity(n);
                let mut x = 1.0;
                for _ in 0..n {
                    f.push(x);
                    x *= rng.gen_range(lo..=hi);
                }
                f
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaCertificate {
    pub eps: f64,
    pub delta_hat: f64,
    pub hit_cap: bool,
    pub manifest: FamilyManifest,
    pub n_sequences: usize,
    pub seed: u64,
    pub bisection_steps: usize,
    /// Largest increment sum at `delta_hat`.
    pub worst_sum: f64,
}

fn batch_max_sum(manifest: &FamilyManifest, opts: &DeltaOptions, amplitude: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..opts.n_sequences {
        let f: Vec<f64> = manifest
            .shape(opts.seed, i)
            .iter()
            .map(|x| x * amplitude)
            .collect();
        if amplitude > 0.0 {
            let seq = LojSequence::new(
                f.clone(),
                manifest.k,
                manifest.mu,
                amplitude.max(f64::MIN_POSITIVE),
            )?;
            let flags = check_hypotheses(&seq)?;
            if !flags.all() {
                return Err(Error::GeneratorInvalid {
                    family: manifest.family.as_str().into(),
                    index: i,
                    reason: format!("{flags:?}"),
                });
            }
        }
        worst = worst.max(sqrt_increment_sum(&f));
    }
    Ok(worst)
}

/// Largest amplitude at which every generated sequence has
/// `sqrt_increment_sum ≤ eps`, by bisection on the amplitude.
pub fn empirical_delta(
    k: f64,
    mu: f64,
    eps: f64,
    family: Family,
    opts: &DeltaOptions,
) -> Result<DeltaCertificate> {
    if !(eps >= 0.0) || opts.n_sequences == 0 {
        return Err(Error::InvalidParams(
            "eps must be ≥ 0 and the batch nonempty".into(),
        ));
    }
    let manifest = FamilyManifest::new(family, k, mu, opts.amplitude_cap, opts.length)?;
    let cap = opts.amplitude_cap;
    let at_cap = batch_max_sum(&manifest, opts, cap)?;
    let (delta_hat, hit_cap) = if at_cap <= eps {
        (cap, true)
    } else {
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..opts.bisection_steps {
            let mid = 0.5 * (lo + hi);
            if batch_max_sum(&manifest, opts, mid)? <= eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, false)
    };
    Ok(DeltaCertificate {
        eps,
        delta_hat,
        hit_cap,
        manifest,
        n_sequences: opts.n_sequences,
        seed: opts.seed,
        bisection_steps: opts.bisection_steps,
        worst_sum: batch_max_sum(&manifest, opts, delta_hat)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateCheck {
    pub amplitude: f64,
    pub checked: usize,
    pub failures: usize,
    pub worst_sum: f64,
}

/// Re-runs the certificate's batch at `fraction · delta_hat` and counts
/// sequences that break the hypotheses or exceed `eps`.
pub fn verify_certificate(cert: &DeltaCertificate, fraction: f64) -> Result<CertificateCheck> {
    let amplitude = cert.delta_hat * fraction;
    let m = &cert.manifest;
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for i in 0..cert.n_sequences {
        let f: Vec<f64> = m
            .shape(cert.seed, i)
            .iter()
            .map(|x| x * amplitude)
            .collect();
        let s = sqrt_increment_sum(&f);
        worst = worst.max(s);
        let hyp_ok = amplitude == 0.0
            || check_hypotheses(&LojSequence::new(f, m.k, m.mu, amplitude)?)?.all();
        if !hyp_ok || s > cert.eps {
            failures += 1;
        }
    }
    Ok(CertificateCheck {
        amplitude,
        checked: cert.n_sequences,
        failures,
        worst_sum: worst,
    })
}

pub fn sequence_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{v:?}");
    }
    out
}

/// Reads `index,value` rows (header optional) ordered by index.
pub fn parse_sequence_csv(text: &str) -> Result<Vec<f64>> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("index") {
            continue;
        }
        let mut parts = line.split(',');
        let (Some(i), Some(v)) = (parts.next(), parts.next()) else {
            return Err(Error::Parse(format!(
                "line {}: expected index,value",
                ln + 1
            )));
        };
        let i: usize = i
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad index", ln + 1)))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad value", ln + 1)))?;
        rows.push((i, v));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(k, r)| r.0 != k) {
        return Err(Error::Parse("indices must be 0..T without gaps".into()));
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

/// Gaussian area and drift along a rescaled history (state times are `s`).
#[derive(Debug, Clone, Serialize)]
pub struct FGapSeries {
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    /// `F(Σ_{t−1}) − F(Σ_{t+1})` for `t = 1..T−1`.
    pub gaps: Vec<f64>,
    /// `F(Σ_j) − F(Σ_{j+1})`.
    pub step_gaps: Vec<f64>,
    /// `∫ |H⃗ + ½x⊥| (4π)⁻¹e^{−|x|²/4} dμ` at every snapshot.
    pub drift: Vec<f64>,
}

pub fn f_gap_series(history: &FlowHistory) -> FGapSeries {
    let origin = Vec3::zeros();
    let mut s = Vec::new();
    let mut f = Vec::new();
    let mut drift = Vec::new();
    for st in &history.states {
        s.push(st.t);
        f.push(gaussian_area(&st.mesh, &origin, 1.0));
        let d: CompensatedSum = st
            .mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(v, x)| {
                let speed = (-st.curv.mean[v] + 0.5 * x.dot(&st.curv.normal_at(v))).abs();
                st.curv.vertex_area[v] * speed * (-0.25 * x.norm_squared()).exp() / (4.0 * PI)
            })
            .collect();
        drift.push(d.value());
    }
    let gaps = (1..f.len().saturating_sub(1))
        .map(|t| f[t - 1] - f[t + 1])
        .collect();
    let step_gaps = f.windows(2).map(|w| w[0] - w[1]).collect();
    FGapSeries {
        s,
        f,
        gaps,
        step_gaps,
        drift,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LsOptions {
    pub mu: f64,
    /// Neck eps allowed in the gate.
    pub gate_eps: f64,
    /// Radius `R̄` of the gate ball about the origin.
    pub gate_radius: f64,
    /// `F(Z)`; `None` measures it on a model cylinder mesh.
    pub z_value: Option<f64>,
    pub reference_around: usize,
    pub reference_length: f64,
}

impl Default for LsOptions {
    fn default() -> Self {
        Self {
            mu: 0.5,
            gate_eps: 0.25,
            gate_radius: 4.0,
            z_value: None,
            reference_around: 48,
            reference_length: 16.0,
        }
    }
}

/// `F` of the capped cylinder of radius √2 centred at the origin, measured
/// by [`gaussian_area`] on a mesh of the given resolution.
pub fn model_cylinder_f(around: usize, length: f64) -> Result<f64> {
    let g = generate(&Scenario::new(
        "model-cylinder",
        Generator::CappedCylinder {
            radius: 2f64.sqrt(),
            length,
            around,
            ripple: 0.0,
            ripple_wavelength: 1.0,
        },
    ))?;
    let mid = Vec3::new(0.0, 0.0, 0.5 * length);
    Ok(gaussian_area(&g.mesh, &mid, 1.0))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LsRecord {
    pub s: f64,
    /// `|F(Σ_s) − F(Z)|^{1+μ}`.
    pub lhs: f64,
    /// `F(Σ_{s−1}) − F(Σ_{s+1})`.
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LsMeasurement {
    pub z_value: f64,
    pub mu: f64,
    pub gate_eps: f64,
    pub gate_radius: f64,
    /// Snapshots `0..gated` passed the gate.
    pub gated: usize,
    pub first_gate_failure: Option<(usize, f64, String)>,
    pub records: Vec<LsRecord>,
    /// Smallest K with `lhs ≤ K·gap` on every record; infinite if some
    /// record has a positive left side and no positive gap.
    pub min_k: f64,
}

fn gate(history: &FlowHistory, k: usize, opts: &LsOptions) -> std::result::Result<(), String> {
    let st = &history.states[k];
    let seed = st
        .mesh
        .vertices()
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm_squared().total_cmp(&b.1.norm_squared()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    match fit_cylinder(&st.mesh, &st.curv, seed, opts.gate_radius) {
        Ok(fit) if fit.eps_measured <= opts.gate_eps => Ok(()),
        Ok(fit) => Err(format!(
            "eps {:.4} > gate {}",
            fit.eps_measured, opts.gate_eps
        )),
        Err(e) => Err(e.to_string()),
    }
}

/// Both sides of `|F(Σ_t) − F(Z)|^{1+μ} ≤ K(F(Σ_{t−1}) − F(Σ_{t+1}))` over
/// the gated prefix of a rescaled history, and the smallest admissible K.
pub fn measure_ls_inequality(history: &FlowHistory, opts: &LsOptions) -> Result<LsMeasurement> {
    if history.len() < 3 {
        return Err(Error::TooShort(history.len()));
    }
    let mut gated: usize = 0;
    let mut first_failure = None;
    for k in 0..history.len() {
        match gate(history, k, opts) {
            Ok(()) => gated += 1,
            Err(reason) => {
                if k == 0 {
                    return Err(Error::GateFailed {
                        index: 0,
                        s: history.states[0].t,
                        reason,
                    });
                }
                first_failure = Some((k, history.states[k].t, reason));
                break;
            }
        }
    }
    let z = match opts.z_value {
        Some(z) => z,
        None => model_cylinder_f(opts.reference_around, opts.reference_length)?,
    };
    let series = f_gap_series(history);
    let mut records = Vec::new();
    let mut min_k: f64 = 0.0;
    for t in 1..gated.saturating_sub(1) {
        let lhs = (series.f[t] - z).abs().powf(1.0 + opts.mu);
        let gap = series.f[t - 1] - series.f[t + 1];
        if gap > 0.0 {
            min_k = min_k.max(lhs / gap);
        } else if lhs > HYPOTHESIS_SLACK {
            min_k = f64::INFINITY;
        }
        records.push(LsRecord {
            s: series.s[t],
            lhs,
            gap,
        });
    }
    Ok(LsMeasurement {
        z_value: z,
        mu: opts.mu,
        gate_eps: opts.gate_eps,
        gate_radius: opts.gate_radius,
        gated,
        first_gate_failure: first_failure,
        records,
        min_k,
    })
}

/// Slack on the Cauchy–Schwarz chain for quadrature error.
pub const CHAIN_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct ChainReport {
    /// `Σ_j ∫_{s_j}^{s_{j+1}} ∫|H⃗ + ½x⊥| ρ dμ ds` (trapezoid in s).
    pub lhs: f64,
    /// `Λ^{1/2} Σ_j (Δs_j)^{1/2} (F_j − F_{j+1})^{1/2}`.
    pub rhs: f64,
    pub lambda: f64,
    pub holds: bool,
    /// `|Σ_j (F_j − F_{j+1}) − (F_0 − F_T)|`.
    pub telescoping_error: f64,
    pub per_step: Vec<(f64, f64)>,
}

/// Evaluates both ends of the chain
/// `∫∫|H⃗ + ½x⊥| ρ ≤ Λ^{1/2} Σ (F(Σ_j) − F(Σ_{j+1}))^{1/2}`. With `lambda`
/// unset, Λ is the entropy of the first snapshot.
pub fn tilt_sum_chain(history: &FlowHistory, lambda: Option<f64>) -> Result<ChainReport> {
    if history.len() < 2 {
        return Err(Error::TooShort(history.len()));
    }
    let lambda = match lambda {
        Some(l) => l,
        None => entropy(&history.states[0].mesh, &EntropySearch::default())?.lambda,
    };
    let series = f_gap_series(history);
    let mut lhs = CompensatedSum::default();
    let mut rhs = CompensatedSum::default();
    let mut per_step = Vec::new();
    for j in 0..series.step_gaps.len() {
        let ds = series.s[j + 1] - series.s[j];
        let l = 0.5 * (series.drift[j] + series.drift[j + 1]) * ds;
        let r = lambda.sqrt() * ds.sqrt() * series.step_gaps[j].max(0.0).sqrt();
        lhs.add(l);
        rhs.add(r);
        per_step.push((l, r));
    }
    let telescoped: CompensatedSum = series.step_gaps.iter().copied().collect();
    let direct = series.f[0] - series.f[series.f.len() - 1];
    let (lhs, rhs) = (lhs.value(), rhs.value());
    Ok(ChainReport {
        lhs,
        rhs,
        lambda,
        holds: lhs <= rhs * (1.0 + CHAIN_SLACK),
        telescoping_error: (telescoped.value() - direct).abs(),
        per_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn constant_positive_fails_recurrence() {
        let seq = LojSequence::new(vec![1.0; 10], 5.0, 0.5, 2.0).unwrap();
        let f = check_hypotheses(&seq).unwrap();
        assert!(f.non_increasing && !f.recurrence && f.tightest_k.is_none());
    }

    #[test]
    fn t0_for_sign_change() {
        let seq = LojSequence::new(vec![0.3, 0.1, 0.0, -0.1, -0.2], 100.0, 0.5, 1.0).unwrap();
        assert_eq!(decay_bound_check(&seq, 1.0).unwrap().t0, 3);
    }

    #[test]
    fn sequence_csv_round_trip() {
        let v = vec![0.5, 0.25, -1e-3];
        assert_eq!(parse_sequence_csv(&sequence_csv(&v)).unwrap(), v);
        assert!(parse_sequence_csv("0,1\n2,3\n").is_err());
    }
}
