//! JSON documents and CSV row types of the file interfaces.

use serde::{Deserialize, Serialize};

use crate::chart::WaveChartPoint;
use crate::error::{CfsError, Result};
use crate::expedient::ChainReport;
use crate::hoelder::HoelderFit;
use crate::measure::{DiscreteMeasure, IterationLog};
use crate::operator::{HilbertConfig, Operator, SpinSpaceFrame, Tolerances};
use crate::scalar::{cplx, lit, to_f64, CMat, Real};

/// Row-major real and imaginary parts of a square or rectangular matrix.
fn split<T: Real>(m: &CMat<T>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows = |part: fn(&nalgebra::Complex<T>) -> T| {
        (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| to_f64(part(&m[(r, c)]))).collect()).collect()
    };
    (rows(|z| z.re), rows(|z| z.im))
}

fn join<T: Real>(re: &[Vec<f64>], im: &[Vec<f64>], rows: usize, cols: usize) -> Result<CMat<T>> {
    let shape_ok = |p: &[Vec<f64>]| p.len() == rows && p.iter().all(|r| r.len() == cols);
    if !shape_ok(re) || !shape_ok(im) {
        return Err(CfsError::Parse(format!("expected {rows}x{cols} real and imaginary parts")));
    }
    Ok(CMat::from_fn(rows, cols, |r, c| cplx(lit(re[r][c]), lit(im[r][c]))))
}

/// `{ "d", "n", "re", "im" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub d: usize,
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl OperatorJson {
    pub fn from_operator<T: Real>(x: &Operator<T>) -> Self {
        let (re, im) = split(x.matrix());
        Self { d: x.config().d, n: x.config().n, re, im }
    }

    /// The raw matrix, without the selfadjointness and signature checks.
    pub fn matrix<T: Real>(&self) -> Result<CMat<T>> {
        join(&self.re, &self.im, self.d, self.d)
    }

    pub fn to_operator<T: Real>(&self, tol: Tolerances<T>) -> Result<Operator<T>> {
        let cfg = HilbertConfig::with_tolerances(self.d, self.n, tol)?;
        Operator::new(self.matrix()?, &cfg)
    }
}

/// `{ "points": [Operator...], "weights": [...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureJson {
    pub points: Vec<OperatorJson>,
    pub weights: Vec<f64>,
}

impl MeasureJson {
    pub fn from_measure<T: Real>(rho: &DiscreteMeasure<T>) -> Self {
        Self {
            points: rho.points().iter().map(OperatorJson::from_operator).collect(),
            weights: rho.weights().iter().map(|&w| to_f64(w)).collect(),
        }
    }

    /// The Hilbert space is read off the points; an empty measure lives on
    /// `fallback`.
    pub fn to_measure<T: Real>(&self, fallback: &HilbertConfig<T>) -> Result<DiscreteMeasure<T>> {
        let cfg = match self.points.first() {
            Some(p) => HilbertConfig::with_tolerances(p.d, p.n, fallback.tol)?,
            None => *fallback,
        };
        let points = self
            .points
            .iter()
            .map(|p| {
                if (p.d, p.n) != (cfg.d, cfg.n) {
                    return Err(CfsError::DimensionMismatch {
                        expected: format!("d={} n={}", cfg.d, cfg.n),
                        found: format!("d={} n={}", p.d, p.n),
                    });
                }
                Operator::new(p.matrix()?, &cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(&cfg, points, self.weights.iter().map(|&w| lit(w)).collect())
    }
}

/// `{ "anchor": Operator, "psi_re", "psi_im" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveChartPointJson {
    pub anchor: OperatorJson,
    pub psi_re: Vec<Vec<f64>>,
    pub psi_im: Vec<Vec<f64>>,
}

impl WaveChartPointJson {
    pub fn from_point<T: Real>(p: &WaveChartPoint<T>) -> Self {
        let (psi_re, psi_im) = split(p.psi());
        Self { anchor: OperatorJson::from_operator(p.anchor()), psi_re, psi_im }
    }

    pub fn to_point<T: Real>(&self, tol: Tolerances<T>) -> Result<WaveChartPoint<T>> {
        let anchor = self.anchor.to_operator(tol)?;
        let frame = SpinSpaceFrame::new(&anchor)?;
        let psi = join(&self.psi_re, &self.psi_im, frame.spin_rank(), frame.d())?;
        WaveChartPoint::new(frame, psi)
    }
}

/// `{ exponent_hat, constant_hat, r2, n_points }`; the exponent and `r2`
/// are `null` for an exact-zero scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummaryJson {
    pub exponent_hat: Option<f64>,
    pub constant_hat: f64,
    pub r2: Option<f64>,
    pub n_points: usize,
    pub exact_zero: bool,
    pub low_confidence: bool,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&HoelderFit> for FitSummaryJson {
    fn from(f: &HoelderFit) -> Self {
        Self {
            exponent_hat: finite(f.exponent_hat),
            constant_hat: f.constant_hat,
            r2: finite(f.r2),
            n_points: f.n_points,
            exact_zero: f.exact_zero,
            low_confidence: f.low_confidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStepJson {
    pub h: f64,
    pub lhs: f64,
    pub residual: f64,
}

/// `{ residual_abs, residual_rel, decay_order, steps }`; `decay_order` is
/// `null` when every residual is at the rounding floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReportJson {
    pub order: usize,
    pub rhs: f64,
    pub residual_abs: f64,
    pub residual_rel: f64,
    pub decay_order: Option<f64>,
    pub steps: Vec<ChainStepJson>,
}

impl From<&ChainReport> for ChainReportJson {
    fn from(r: &ChainReport) -> Self {
        Self {
            order: r.order,
            rhs: r.rhs,
            residual_abs: r.residual_abs,
            residual_rel: r.residual_rel,
            decay_order: finite(r.decay_order),
            steps: r.steps.iter().map(|s| ChainStepJson { h: s.h, lhs: s.lhs, residual: s.residual }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub delta: f64,
    pub ratio: f64,
}

impl ScanRow {
    pub fn rows(fit: &HoelderFit, alpha: f64) -> Vec<Self> {
        fit.ratio_rows(alpha).into_iter().map(|(t, delta, ratio)| Self { t, delta, ratio }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianRow {
    pub trial: usize,
    pub closed_form: f64,
    pub fd_value: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iter: usize,
    pub action: f64,
    pub boundedness: f64,
    pub volume: f64,
}

impl<T: Real> From<&IterationLog<T>> for IterationRow {
    fn from(l: &IterationLog<T>) -> Self {
        Self { iter: l.iter, action: to_f64(l.action), boundedness: to_f64(l.boundedness), volume: to_f64(l.volume) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub lagrangian: f64,
    pub spectral_weight: f64,
}

pub fn parse_json<D: serde::de::DeserializeOwned>(text: &str) -> Result<D> {
    serde_json::from_str(text).map_err(|e| CfsError::Parse(e.to_string()))
}
