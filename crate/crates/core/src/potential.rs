//! Scalar self-interaction `W(s) = ½m²s² + N(s)` for the modulus `s = |ψ| ≥ 0`,
//! together with sample-based certification of the structural assumptions
//! (positivity, nondegeneracy at the origin, hylomorphy and growth) that the
//! existence theory needs.

use std::fmt;

use thiserror::Error;

/// Relative slack used when comparing sampled values against zero.
const POSITIVITY_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("potential evaluated at negative modulus s = {0}")]
    NegativeArgument(f64),
    #[error("invalid potential parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown potential preset `{0}`")]
    UnknownPreset(String),
    #[error("{0}")]
    Admissibility(#[from] AdmissibilityError),
    #[error("hylomorphy violated: no admissible (alpha, s_bar) with 0 < alpha < m (min ratio {min_ratio})")]
    HylomorphyViolated { min_ratio: f64 },
}

/// Named shape of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `W(s) = ½m²s²(1 − s/v)²`, a degenerate double well with a second zero at `s = v`.
    DoubleWell { v: f64 },
    /// `W(s) = ½m²s²`; no nonlinearity.
    PureMass,
    /// `W(s) = ½m²s² − (a/4)s⁴ + (b/6)s⁶`.
    Polynomial { a: f64, b: f64 },
}

impl Preset {
    /// Builds a preset from its configuration name and coefficient list.
    pub fn from_name(name: &str, coefficients: &[f64]) -> Result<Self, PotentialError> {
        let arity = |k: usize| -> Result<(), PotentialError> {
            if coefficients.len() == k {
                Ok(())
            } else {
                Err(PotentialError::InvalidParameter(format!(
                    "preset `{name}` takes {k} coefficient(s), got {}",
                    coefficients.len()
                )))
            }
        };
        match name {
            "default" | "double-well" => {
                if coefficients.is_empty() {
                    return Ok(Preset::DoubleWell { v: 1.0 });
                }
                arity(1)?;
                let v = coefficients[0];
                if !(v.is_finite() && v > 0.0) {
                    return Err(PotentialError::InvalidParameter(format!(
                        "double-well zero must be positive, got {v}"
                    )));
                }
                Ok(Preset::DoubleWell { v })
            }
            "pure-mass" => {
                arity(0)?;
                Ok(Preset::PureMass)
            }
            "polynomial" => {
                arity(2)?;
                let (a, b) = (coefficients[0], coefficients[1]);
                if !(a.is_finite() && b.is_finite()) {
                    return Err(PotentialError::InvalidParameter(
                        "polynomial coefficients must be finite".into(),
                    ));
                }
                Ok(Preset::Polynomial { a, b })
            }
            other => Err(PotentialError::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::DoubleWell { .. } => "double-well",
            Preset::PureMass => "pure-mass",
            Preset::Polynomial { .. } => "polynomial",
        }
    }

    pub fn coefficients(&self) -> Vec<f64> {
        match *self {
            Preset::DoubleWell { v } => vec![v],
            Preset::PureMass => vec![],
            Preset::Polynomial { a, b } => vec![a, b],
        }
    }

    /// Growth exponent `p` naturally attached to the preset.
    fn natural_growth_exponent(&self) -> f64 {
        match *self {
            Preset::Polynomial { b, .. } if b != 0.0 => 6.0,
            _ => 4.0,
        }
    }
}

/// Values returned by [`PotentialSpec::eval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValues {
    pub w: f64,
    pub dw: f64,
    pub n: f64,
    pub dn: f64,
}

/// Immutable description of the potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    m: f64,
    preset: Preset,
    growth_exponent: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            m: 1.0,
            preset: Preset::DoubleWell { v: 1.0 },
            growth_exponent: 4.0,
        }
    }
}

impl PotentialSpec {
    pub fn new(m: f64, preset: Preset) -> Result<Self, PotentialError> {
        if !(m.is_finite() && m > 0.0) {
            return Err(PotentialError::InvalidParameter(format!(
                "mass must be positive, got {m}"
            )));
        }
        let growth_exponent = preset.natural_growth_exponent();
        Ok(Self {
            m,
            preset,
            growth_exponent,
        })
    }

    pub fn pure_mass(m: f64) -> Result<Self, PotentialError> {
        Self::new(m, Preset::PureMass)
    }

    /// Overrides the declared exponent `p` of the growth bound.
    pub fn with_growth_exponent(mut self, p: f64) -> Result<Self, PotentialError> {
        if !p.is_finite() {
            return Err(PotentialError::InvalidParameter(format!(
                "growth exponent must be finite, got {p}"
            )));
        }
        self.growth_exponent = p;
        Ok(self)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn growth_exponent(&self) -> f64 {
        self.growth_exponent
    }

    /// `W`, `W′`, `N`, `N′` at a nonnegative modulus.
    pub fn eval(&self, s: f64) -> Result<PotentialValues, PotentialError> {
        if s < 0.0 || s.is_nan() {
            return Err(PotentialError::NegativeArgument(s));
        }
        let w = self.w(s);
        let dw = self.dw(s);
        let half_m2 = 0.5 * self.m * self.m;
        Ok(PotentialValues {
            w,
            dw,
            n: self.n(s),
            dn: dw - 2.0 * half_m2 * s,
        })
    }

    // The evaluators below use the even extension W(|s|), so solvers can feed
    // slightly negative tail values without special casing.

    pub fn w(&self, s: f64) -> f64 {
        let m2 = self.m * self.m;
        let s = s.abs();
        match self.preset {
            Preset::DoubleWell { v } => {
                let t = 1.0 - s / v;
                0.5 * m2 * s * s * t * t
            }
            Preset::PureMass => 0.5 * m2 * s * s,
            Preset::Polynomial { a, b } => {
                let s2 = s * s;
                s2 * (0.5 * m2 - s2 * (0.25 * a - b * s2 / 6.0))
            }
        }
    }

    /// `N(s) = W(s) − ½m²s²`, evaluated without cancellation.
    pub fn n(&self, s: f64) -> f64 {
        let m2 = self.m * self.m;
        let s = s.abs();
        match self.preset {
            Preset::DoubleWell { v } => {
                // ½m²s²[(1 − s/v)² − 1] = ½m²s²(s/v)(s/v − 2)
                let x = s / v;
                0.5 * m2 * s * s * x * (x - 2.0)
            }
            Preset::PureMass => 0.0,
            Preset::Polynomial { a, b } => {
                let s4 = s * s * s * s;
                s4 * (b * s * s / 6.0 - 0.25 * a)
            }
        }
    }

    /// `W′(s)/s`, continuous at the origin where it equals `m²`.
    pub fn dw_over_s(&self, s: f64) -> f64 {
        let m2 = self.m * self.m;
        let s = s.abs();
        match self.preset {
            Preset::DoubleWell { v } => m2 * (1.0 - s / v) * (1.0 - 2.0 * s / v),
            Preset::PureMass => m2,
            Preset::Polynomial { a, b } => {
                let s2 = s * s;
                m2 - a * s2 + b * s2 * s2
            }
        }
    }

    pub fn dw(&self, s: f64) -> f64 {
        s * self.dw_over_s(s)
    }

    pub fn d2w(&self, s: f64) -> f64 {
        let m2 = self.m * self.m;
        let s = s.abs();
        match self.preset {
            Preset::DoubleWell { v } => {
                let x = s / v;
                m2 * (1.0 - 6.0 * x + 6.0 * x * x)
            }
            Preset::PureMass => m2,
            Preset::Polynomial { a, b } => {
                let s2 = s * s;
                m2 - 3.0 * a * s2 + 5.0 * b * s2 * s2
            }
        }
    }

    pub fn dn(&self, s: f64) -> f64 {
        self.dw(s) - self.m * self.m * s
    }

    /// Pointwise hylomorphy ratio `α(s) = √(2W(s))/s` for `s > 0`.
    pub fn ratio(&self, s: f64) -> f64 {
        (2.0 * self.w(s).max(0.0)).sqrt() / s
    }

    /// Samples the structural assumptions on `[0, s_max]`.
    ///
    /// Always computes the full report; when an assumption fails the report is
    /// returned inside the error so callers can still persist it.
    pub fn check_admissibility(
        &self,
        s_max: f64,
        n_samples: usize,
        alpha_floor: f64,
    ) -> Result<AdmissibilityReport, AdmissibilityError> {
        let report = self.admissibility_report(s_max, n_samples, alpha_floor);
        match report.first_violation() {
            None => Ok(report),
            Some(assumption) => Err(AdmissibilityError {
                assumption,
                report: Box::new(report),
            }),
        }
    }

    /// Report without the pass/fail conversion. Panics on a malformed range.
    pub fn admissibility_report(
        &self,
        s_max: f64,
        n_samples: usize,
        alpha_floor: f64,
    ) -> AdmissibilityReport {
        assert!(s_max > 0.0 && s_max.is_finite(), "s_max must be positive");
        assert!(n_samples >= 100, "need at least 100 samples");
        let samples: Vec<f64> = (0..n_samples)
            .map(|i| s_max * i as f64 / (n_samples - 1) as f64)
            .collect();
        let m = self.m;
        let m2 = m * m;

        let min_w = samples
            .iter()
            .map(|&s| self.w(s))
            .fold(f64::INFINITY, f64::min);
        let positivity = min_w >= -POSITIVITY_SLACK;

        let w2_fd = second_derivative_at_origin(|s| self.w(s), 1e-3);
        let nondegeneracy = self.w(0.0).abs() <= 1e-14
            && self.dw(0.0).abs() <= 1e-12
            && ((w2_fd - m2) / m2).abs() <= 1e-4;

        let (s_at_min, min_ratio) = samples[1..]
            .iter()
            .map(|&s| (s, self.ratio(s)))
            .fold((f64::NAN, f64::INFINITY), |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            });
        let hylomorphy = min_ratio < m;
        let (s_bar, alpha) = if hylomorphy {
            (Some(s_at_min), Some(min_ratio.max(alpha_floor).min(m)))
        } else {
            (None, None)
        };

        let p = self.growth_exponent;
        let positive: Vec<f64> = samples[1..].to_vec();
        let growth_fit = fit_growth_bound(&positive, p, |s| self.dn(s).abs());
        let growth = if !(p > 2.0) || p > 6.0 {
            GrowthStatus::Fail
        } else if p == 6.0 {
            GrowthStatus::Marginal
        } else {
            GrowthStatus::Pass
        };
        let small_count = (positive.len() / 10).max(1);
        let small_s_linear = positive[..small_count]
            .iter()
            .map(|&s| self.dn(s).abs() / s)
            .fold(0.0, f64::max);

        AdmissibilityReport {
            positivity,
            nondegeneracy,
            hylomorphy,
            growth,
            s_bar,
            alpha,
            min_ratio,
            min_w,
            w2_fd,
            growth_exponent: p,
            growth_fit,
            small_s_linear,
            s_max,
            n_samples,
        }
    }

    /// Hylomorphy witnesses `(α, s̄)` under the chosen policy.
    pub fn hylomorphy_constants(
        &self,
        policy: AlphaPolicy,
        s_max: f64,
        n_samples: usize,
    ) -> Result<HylomorphyConstants, PotentialError> {
        let report = self.admissibility_report(s_max, n_samples, 0.0);
        let Some(s_bar) = report.s_bar else {
            return Err(PotentialError::HylomorphyViolated {
                min_ratio: report.min_ratio,
            });
        };
        let m = self.m;
        let alpha = match policy {
            AlphaPolicy::MinRatio { floor } => report.min_ratio.max(floor),
            // (m − α)³α peaks at m/4 and decreases beyond, so the constrained
            // maximizer is the smallest feasible α above m/4.
            AlphaPolicy::MaxThreshold => report.min_ratio.max(0.25 * m),
        };
        if !(alpha > 0.0 && alpha < m) {
            return Err(PotentialError::HylomorphyViolated {
                min_ratio: report.min_ratio,
            });
        }
        Ok(HylomorphyConstants { alpha, s_bar })
    }

    /// Default sample range for the checks: ten times the natural plateau height.
    pub fn default_s_max(&self) -> f64 {
        match self.preset {
            Preset::DoubleWell { v } => 10.0 * v,
            Preset::PureMass => 10.0,
            Preset::Polynomial { a, b } => {
                if a > 0.0 && b > 0.0 {
                    10.0 * (0.75 * a / b).sqrt()
                } else if a > 0.0 {
                    10.0 / a.sqrt()
                } else {
                    10.0
                }
            }
        }
    }
}

/// `W″(0)` from one-sided samples, assuming `W(0) = W′(0) = 0`.
fn second_derivative_at_origin(w: impl Fn(f64) -> f64, h: f64) -> f64 {
    let coarse = 2.0 * (w(h) - w(0.0)) / (h * h);
    let half = 0.5 * h;
    let fine = 2.0 * (w(half) - w(0.0)) / (half * half);
    2.0 * fine - coarse
}

/// Smallest `a + b` (both ≥ 0) with `a·s^{p−1} + b·s^{2−2/p} ≥ g(s)` on the samples.
fn fit_growth_bound(samples: &[f64], p: f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    let rows: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|&s| (s.powf(p - 1.0), s.powf(2.0 - 2.0 / p), g(s)))
        .collect();
    let b_for = |a: f64| {
        rows.iter()
            .map(|&(x, y, target)| ((target - a * x) / y).max(0.0))
            .fold(0.0, f64::max)
    };
    let a_hi = rows
        .iter()
        .map(|&(x, _, target)| target / x)
        .fold(0.0, f64::max);
    if !a_hi.is_finite() {
        return (f64::INFINITY, f64::INFINITY);
    }
    // a + b(a) is convex and piecewise linear in a.
    let (mut lo, mut hi) = (0.0, a_hi);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if m1 + b_for(m1) <= m2 + b_for(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let a = 0.5 * (lo + hi);
    (a, b_for(a))
}

/// How the hylomorphy witness `α` is chosen from the sampled ratio curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaPolicy {
    /// Sampled minimum of `α(s)`, raised to `floor` so estimates stay finite.
    MinRatio { floor: f64 },
    /// Maximizer of `(m − α)³α` over the feasible witnesses.
    MaxThreshold,
}

impl AlphaPolicy {
    pub fn min_ratio(floor: f64) -> Self {
        AlphaPolicy::MinRatio { floor }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HylomorphyConstants {
    pub alpha: f64,
    pub s_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthStatus {
    Pass,
    /// Exponent at the excluded endpoint `p = 6`.
    Marginal,
    Fail,
}

impl fmt::Display for GrowthStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthStatus::Pass => "pass",
            GrowthStatus::Marginal => "marginal",
            GrowthStatus::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    Positivity,
    Nondegeneracy,
    Hylomorphy,
    Growth,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assumption::Positivity => "positivity",
            Assumption::Nondegeneracy => "nondegeneracy",
            Assumption::Hylomorphy => "hylomorphy",
            Assumption::Growth => "growth",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub positivity: bool,
    pub nondegeneracy: bool,
    pub hylomorphy: bool,
    pub growth: GrowthStatus,
    pub s_bar: Option<f64>,
    /// Sampled minimum of `α(s)` clipped to the configured floor.
    pub alpha: Option<f64>,
    /// Unclipped sampled minimum of `α(s)`.
    pub min_ratio: f64,
    pub min_w: f64,
    /// Finite-difference estimate of `W″(0)`.
    pub w2_fd: f64,
    pub growth_exponent: f64,
    /// Smallest `(a, b)` in `|N′(s)| ≤ a·s^{p−1} + b·s^{2−2/p}` on the samples.
    pub growth_fit: (f64, f64),
    /// `max |N′(s)|/s` over the lowest tenth of the samples.
    pub small_s_linear: f64,
    pub s_max: f64,
    pub n_samples: usize,
}

impl AdmissibilityReport {
    pub fn first_violation(&self) -> Option<Assumption> {
        if !self.positivity {
            Some(Assumption::Positivity)
        } else if !self.nondegeneracy {
            Some(Assumption::Nondegeneracy)
        } else if !self.hylomorphy {
            Some(Assumption::Hylomorphy)
        } else if self.growth == GrowthStatus::Fail {
            Some(Assumption::Growth)
        } else {
            None
        }
    }

    pub fn all_pass(&self) -> bool {
        self.first_violation().is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("assumption `{assumption}` violated")]
pub struct AdmissibilityError {
    pub assumption: Assumption,
    pub report: Box<AdmissibilityReport>,
}
