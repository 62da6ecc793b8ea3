//! Positive backward heat solutions generated by finite atomic measures.
//!
//! A [`GaussianMixture`] with base scale `τ` and atoms `(c_i, w_i)` is the
//! function `v(x, t) = Σ w_i K(x, c_i, τ - t)` on `[0, τ)`, where `K` is the
//! heat kernel of the ambient space. Every such `v` solves `∂_t v = -Δv`, has
//! unit mass at all times, and `v(·, 0)` is an element of the family over
//! which the maximized density is taken.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{DiscreteCurve, Vec2};
use crate::quadrature::{CurveQuadrature, HermiteGrid};

/// Multiplicative slack allowed when checking inequalities between
/// exponentials.
pub const INEQUALITY_SLACK: f64 = 1e-12;

/// Center and scale of a heat kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub center: DVector<f64>,
    pub tau: f64,
}

impl KernelParams {
    pub fn new(center: DVector<f64>, tau: f64) -> Result<Self> {
        ensure_positive("tau", tau)?;
        Ok(Self { center, tau })
    }

    pub fn planar(center: Vec2, tau: f64) -> Result<Self> {
        Self::new(DVector::from_column_slice(center.as_slice()), tau)
    }

    pub(crate) fn planar_center(&self) -> Result<Vec2> {
        if self.center.len() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: self.center.len(),
            });
        }
        Ok(Vec2::new(self.center[0], self.center[1]))
    }
}

fn log_kernel(dist2: f64, sigma: f64, dim: usize) -> f64 {
    -dist2 / (4.0 * sigma) - 0.5 * dim as f64 * (4.0 * PI * sigma).ln()
}

/// `e^{-|x-p|²/4τ} / (4πτ)^{d/2}` with `d = x.len()`.
pub fn heat_kernel(x: &DVector<f64>, params: &KernelParams) -> Result<f64> {
    ensure_positive("tau", params.tau)?;
    if x.len() != params.center.len() {
        return Err(Error::Dimension {
            expected: params.center.len(),
            got: x.len(),
        });
    }
    let d2 = (x - &params.center).norm_squared();
    Ok(log_kernel(d2, params.tau, x.len()).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub center: DVector<f64>,
    pub weight: f64,
}

/// Finite probability measure convolved with the heat kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    tau: f64,
    ambient: usize,
    atoms: Vec<Atom>,
}

/// Value, gradient and Hessian of a mixture at one space-time point.
#[derive(Debug, Clone)]
pub struct MixtureDerivatives {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Both sides of the backward Li–Yau inequality.
#[derive(Debug, Clone, Copy)]
pub struct HarnackCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `ln rhs - ln lhs`; non-negative when the inequality holds exactly.
    pub log_margin: f64,
    pub holds: bool,
}

impl GaussianMixture {
    /// Weights must be positive and sum to one (within `1e-9`).
    pub fn new(tau: f64, atoms: Vec<Atom>) -> Result<Self> {
        ensure_positive("tau", tau)?;
        let ambient = atoms
            .first()
            .map(|a| a.center.len())
            .ok_or_else(|| Error::Invalid("mixture needs at least one atom".into()))?;
        if ambient == 0 {
            return Err(Error::Invalid("ambient dimension must be positive".into()));
        }
        let mut sum = 0.0;
        for a in &atoms {
            if a.center.len() != ambient {
                return Err(Error::Dimension {
                    expected: ambient,
                    got: a.center.len(),
                });
            }
            if !(a.weight > 0.0) || a.center.iter().any(|c| !c.is_finite()) {
                return Err(Error::MixtureWeights(a.weight));
            }
            sum += a.weight;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::MixtureWeights(sum));
        }
        Ok(Self {
            tau,
            ambient,
            atoms,
        })
    }

    /// Rescales positive weights to sum to one.
    pub fn normalized(tau: f64, mut atoms: Vec<Atom>) -> Result<Self> {
        let sum: f64 = atoms.iter().map(|a| a.weight).sum();
        if !(sum > 0.0) {
            return Err(Error::MixtureWeights(sum));
        }
        for a in &mut atoms {
            a.weight /= sum;
        }
        Self::new(tau, atoms)
    }

    /// One atom of unit weight: the backward heat kernel centered at `center`.
    pub fn single(center: DVector<f64>, tau: f64) -> Result<Self> {
        Self::new(
            tau,
            vec![Atom {
                center,
                weight: 1.0,
            }],
        )
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    fn sigma(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t < self.tau) {
            return Err(Error::TimeOutOfRange {
                t,
                lo: 0.0,
                hi: self.tau,
            });
        }
        Ok(self.tau - t)
    }

    fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.ambient {
            return Err(Error::Dimension {
                expected: self.ambient,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `ln v(x, t)`, stable far from every atom.
    pub fn log_value(&self, x: &DVector<f64>, t: f64) -> Result<f64> {
        let sigma = self.sigma(t)?;
        self.check_point(x)?;
        let logs: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| a.weight.ln() - (x - &a.center).norm_squared() / (4.0 * sigma))
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
        Ok(m + s.ln() - 0.5 * self.ambient as f64 * (4.0 * PI * sigma).ln())
    }

    /// `v(x, t) = Σ w_i K(x, c_i, τ - t)`.
    pub fn value(&self, x: &DVector<f64>, t: f64) -> Result<f64> {
        let sigma = self.sigma(t)?;
        self.check_point(x)?;
        Ok(self
            .atoms
            .iter()
            .map(|a| a.weight * log_kernel((x - &a.center).norm_squared(), sigma, self.ambient).exp())
            .sum())
    }

    /// Exact value, gradient and Hessian in `x`.
    pub fn derivatives(&self, x: &DVector<f64>, t: f64) -> Result<MixtureDerivatives> {
        let sigma = self.sigma(t)?;
        self.check_point(x)?;
        let d = self.ambient;
        let mut value = 0.0;
        let mut gradient = DVector::zeros(d);
        let mut hessian = DMatrix::zeros(d, d);
        for a in &self.atoms {
            let r = x - &a.center;
            let u = a.weight * log_kernel(r.norm_squared(), sigma, d).exp();
            value += u;
            gradient -= &r * (u / (2.0 * sigma));
            hessian += (&r * r.transpose()) * (u / (4.0 * sigma * sigma));
            for i in 0..d {
                hessian[(i, i)] -= u / (2.0 * sigma);
            }
        }
        Ok(MixtureDerivatives {
            value,
            gradient,
            hessian,
        })
    }

    /// `∂_t v` computed from the scale derivative of each kernel.
    pub fn time_derivative(&self, x: &DVector<f64>, t: f64) -> Result<f64> {
        let sigma = self.sigma(t)?;
        self.check_point(x)?;
        let d = self.ambient as f64;
        Ok(-self
            .atoms
            .iter()
            .map(|a| {
                let r2 = (x - &a.center).norm_squared();
                let k = a.weight * log_kernel(r2, sigma, self.ambient).exp();
                k * (r2 / (4.0 * sigma * sigma) - d / (2.0 * sigma))
            })
            .sum::<f64>())
    }

    /// `∫ v(x, t) dx` by a tensor Gauss–Hermite rule of the given order,
    /// centered at the weighted mean of the atoms and wide enough to cover
    /// every atom.
    pub fn mass(&self, t: f64, order: usize) -> Result<f64> {
        let sigma = self.sigma(t)?;
        // One rule per atom, matched to its width; the kernels get narrow as t → τ.
        let mut total = 0.0;
        for a in &self.atoms {
            let params = KernelParams::new(a.center.clone(), sigma)?;
            let grid = HermiteGrid::new(&a.center, (2.0 * sigma).sqrt(), order);
            total += a.weight * grid.integrate(|x| heat_kernel(x, &params).unwrap_or(0.0));
        }
        Ok(total)
    }

    /// Draws a mixture with `count` atoms, centers uniform in `[-spread, spread]^d`
    /// and weights uniform in `(0.05, 1]` before normalization.
    pub fn random<R: Rng>(
        rng: &mut R,
        ambient: usize,
        tau: f64,
        count: usize,
        spread: f64,
    ) -> Result<Self> {
        let atoms = (0..count.max(1))
            .map(|_| Atom {
                center: DVector::from_fn(ambient, |_, _| rng.random_range(-spread..spread)),
                weight: rng.random_range(0.05..1.0),
            })
            .collect();
        Self::normalized(tau, atoms)
    }
}

/// Backward Li–Yau inequality
/// `v(x,t) ≤ v(y,s) ((τ-s)/(τ-t))^{d/2} exp(|x-y|²/(4(t-s)))` for `0 ≤ s ≤ t < τ`,
/// checked in log form with multiplicative slack [`INEQUALITY_SLACK`].
pub fn li_yau_check(
    m: &GaussianMixture,
    x: &DVector<f64>,
    t: f64,
    y: &DVector<f64>,
    s: f64,
) -> Result<HarnackCheck> {
    if s > t {
        return Err(Error::TimeOrder { s, t });
    }
    let log_lhs = m.log_value(x, t)?;
    let log_vy = m.log_value(y, s)?;
    let d2 = (x - y).norm_squared();
    let dt = t - s;
    let exponent = if d2 == 0.0 {
        0.0
    } else if dt == 0.0 {
        f64::INFINITY
    } else {
        d2 / (4.0 * dt)
    };
    let tau = m.tau();
    let log_rhs =
        log_vy + 0.5 * m.ambient() as f64 * ((tau - s) / (tau - t)).ln() + exponent;
    let log_margin = log_rhs - log_lhs;
    Ok(HarnackCheck {
        lhs: log_lhs.exp(),
        rhs: log_rhs.exp(),
        log_margin,
        holds: log_margin >= -INEQUALITY_SLACK,
    })
}

/// Value, gradient and Hessian at `(x, t)`.
pub fn mixture_gradients(
    m: &GaussianMixture,
    x: &DVector<f64>,
    t: f64,
) -> Result<MixtureDerivatives> {
    m.derivatives(x, t)
}

/// Integrand `∇⊥∇⊥u - |∇⊥u|²/u + u/(2(C-t))` for the unit normal `normal`.
/// Vanishes identically when `u` is a single backward heat kernel with
/// `τ = C`.
pub fn normal_second_term(
    m: &GaussianMixture,
    x: &DVector<f64>,
    t: f64,
    c: f64,
    normal: &DVector<f64>,
) -> Result<f64> {
    let d = m.derivatives(x, t)?;
    let hnn = (normal.transpose() * &d.hessian * normal)[(0, 0)];
    let gn = d.gradient.dot(normal);
    Ok(hnn - gn * gn / d.value + d.value / (2.0 * (c - t)))
}

/// `√(4π(τ-t)) ∫_M v(·, t) dμ` for a plane curve and a mixture on `R^2`.
pub fn curve_pairing(curve: &DiscreteCurve, m: &GaussianMixture, t: f64) -> Result<f64> {
    let quad = CurveQuadrature::new(curve);
    curve_pairing_with(&quad, m, t)
}

pub(crate) fn curve_pairing_with(
    quad: &CurveQuadrature,
    m: &GaussianMixture,
    t: f64,
) -> Result<f64> {
    if m.ambient() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: m.ambient(),
        });
    }
    let sigma = m.sigma(t)?;
    let norm = (4.0 * PI * sigma).sqrt();
    let mut acc = 0.0;
    let mut x = DVector::zeros(2);
    for (p, w) in quad.points.iter().zip(&quad.weights) {
        x[0] = p.x;
        x[1] = p.y;
        acc += w * m.value(&x, t)?;
    }
    Ok(norm * acc)
}

/// Checks that pairing the curve with `m` at `t = 0` does not beat the best
/// single heat kernel `best`: the supremum over the convex family is attained
/// at its extreme points.
pub fn extremality_check(
    curve: &DiscreteCurve,
    tau: f64,
    m: &GaussianMixture,
    best: &KernelParams,
) -> Result<bool> {
    if (m.tau() - tau).abs() > 1e-12 * tau {
        return Err(Error::ClockMismatch {
            mixture_tau: m.tau(),
            c: tau,
        });
    }
    let quad = CurveQuadrature::new(curve);
    let mixed = curve_pairing_with(&quad, m, 0.0)?;
    let delta = crate::density::huisken_functional_with(&quad, best.planar_center()?, tau)?;
    Ok(mixed <= delta + 1e-9)
}

/// Serialized form: `{"tau": τ, "ambient": d, "atoms": [{"c": [..], "w": w}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureFile {
    pub tau: f64,
    pub ambient: usize,
    pub atoms: Vec<AtomFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomFile {
    pub c: Vec<f64>,
    pub w: f64,
}

impl From<&GaussianMixture> for MixtureFile {
    fn from(m: &GaussianMixture) -> Self {
        Self {
            tau: m.tau,
            ambient: m.ambient,
            atoms: m
                .atoms
                .iter()
                .map(|a| AtomFile {
                    c: a.center.iter().copied().collect(),
                    w: a.weight,
                })
                .collect(),
        }
    }
}

impl TryFrom<MixtureFile> for GaussianMixture {
    type Error = Error;

    fn try_from(f: MixtureFile) -> Result<Self> {
        let m = GaussianMixture::new(
            f.tau,
            f.atoms
                .into_iter()
                .map(|a| Atom {
                    center: DVector::from_vec(a.c),
                    weight: a.w,
                })
                .collect(),
        )?;
        if m.ambient != f.ambient {
            return Err(Error::Dimension {
                expected: f.ambient,
                got: m.ambient,
            });
        }
        Ok(m)
    }
}
