use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::estimation::{BoxSet, EllipsoidSet, SeparableSet};
use crate::linalg::{self, serde_rowmajor};
use crate::{Error, Result};

/// Below this value of `x' sigma_mu x` the ellipsoid penalty contributes the
/// zero subgradient (compared against its square).
pub const SOC_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Mark,
    Box,
    Ellip,
    Sep,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Mark, ModelKind::Box, ModelKind::Ellip, ModelKind::Sep];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mark => "Mark",
            ModelKind::Box => "Box",
            ModelKind::Ellip => "Ellip",
            ModelKind::Sep => "Sep",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mark" => Ok(ModelKind::Mark),
            "box" => Ok(ModelKind::Box),
            "ellip" => Ok(ModelKind::Ellip),
            "sep" => Ok(ModelKind::Sep),
            _ => Err(Error::InvalidArgument(format!("unknown model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum UncertaintySpec {
    None,
    Box {
        #[serde(with = "serde_rowmajor::vector")]
        delta: DVector<f64>,
    },
    Ellipsoid {
        delta_sq: f64,
        #[serde(with = "serde_rowmajor::matrix")]
        sigma_mu: DMatrix<f64>,
    },
    Separable {
        #[serde(with = "serde_rowmajor::vector")]
        mu_lo: DVector<f64>,
        #[serde(with = "serde_rowmajor::vector")]
        mu_hi: DVector<f64>,
        #[serde(with = "serde_rowmajor::matrix")]
        sigma_lo: DMatrix<f64>,
        #[serde(with = "serde_rowmajor::matrix")]
        sigma_hi: DMatrix<f64>,
    },
}

/// One of the four objectives at a fixed risk aversion.
///
/// For `Sep`, `mu_hat` and `sigma` hold the worst-case `mu_lo` and
/// `sigma_hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(with = "serde_rowmajor::vector")]
    pub mu_hat: DVector<f64>,
    #[serde(with = "serde_rowmajor::matrix")]
    pub sigma: DMatrix<f64>,
    pub lambda: f64,
    pub set: UncertaintySpec,
}

impl ModelSpec {
    pub fn mark(mu_hat: DVector<f64>, sigma: DMatrix<f64>, lambda: f64) -> Self {
        Self {
            kind: ModelKind::Mark,
            mu_hat,
            sigma,
            lambda,
            set: UncertaintySpec::None,
        }
    }

    pub fn box_model(mu_hat: DVector<f64>, sigma: DMatrix<f64>, lambda: f64, set: &BoxSet) -> Self {
        Self {
            kind: ModelKind::Box,
            mu_hat,
            sigma,
            lambda,
            set: UncertaintySpec::Box {
                delta: set.delta.clone(),
            },
        }
    }

    pub fn ellip(mu_hat: DVector<f64>, sigma: DMatrix<f64>, lambda: f64, set: &EllipsoidSet) -> Self {
        Self {
            kind: ModelKind::Ellip,
            mu_hat,
            sigma,
            lambda,
            set: UncertaintySpec::Ellipsoid {
                delta_sq: set.delta_sq,
                sigma_mu: set.sigma_mu.clone(),
            },
        }
    }

    pub fn sep(set: &SeparableSet, lambda: f64) -> Self {
        Self {
            kind: ModelKind::Sep,
            mu_hat: set.mu_lo.clone(),
            sigma: set.sigma_hi.clone(),
            lambda,
            set: UncertaintySpec::Separable {
                mu_lo: set.mu_lo.clone(),
                mu_hi: set.mu_hi.clone(),
                sigma_lo: set.sigma_lo.clone(),
                sigma_hi: set.sigma_hi.clone(),
            },
        }
    }

    pub fn n_assets(&self) -> usize {
        self.mu_hat.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mu_hat.len();
        if n == 0 {
            return Err(Error::InvalidArgument("model has no assets".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        let square = |m: &DMatrix<f64>, what: &str| -> Result<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{what} is {}x{}, model has {n} assets",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(())
        };
        square(&self.sigma, "sigma")?;
        linalg::ensure_psd(&self.sigma, "sigma")?;

        match (&self.kind, &self.set) {
            (ModelKind::Mark, UncertaintySpec::None) => {}
            (ModelKind::Box, UncertaintySpec::Box { delta }) => {
                if delta.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "delta has {} entries, model has {n}",
                        delta.len()
                    )));
                }
                if delta.iter().any(|d| d.is_nan() || *d < 0.0) {
                    return Err(Error::InvalidArgument("box radii must be nonnegative".into()));
                }
            }
            (ModelKind::Ellip, UncertaintySpec::Ellipsoid { delta_sq, sigma_mu }) => {
                if !(*delta_sq >= 0.0 && delta_sq.is_finite()) {
                    return Err(Error::InvalidArgument(format!("delta_sq must be >= 0, got {delta_sq}")));
                }
                square(sigma_mu, "sigma_mu")?;
                linalg::ensure_psd(sigma_mu, "sigma_mu")?;
            }
            (
                ModelKind::Sep,
                UncertaintySpec::Separable {
                    mu_lo,
                    mu_hi,
                    sigma_lo,
                    sigma_hi,
                },
            ) => {
                if mu_lo.len() != n || mu_hi.len() != n {
                    return Err(Error::DimensionMismatch("separable mean bounds".into()));
                }
                square(sigma_lo, "sigma_lo")?;
                square(sigma_hi, "sigma_hi")?;
            }
            (kind, _) => {
                return Err(Error::InvalidArgument(format!(
                    "uncertainty set does not match model {kind}"
                )));
            }
        }
        if self.mu_hat.iter().any(|v| !v.is_finite()) || self.sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite model data".into()));
        }
        Ok(())
    }

    fn check_dims(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.mu_hat.len() {
            return Err(Error::DimensionMismatch(format!(
                "weights have {} entries, model has {}",
                x.len(),
                self.mu_hat.len()
            )));
        }
        Ok(())
    }
}

/// Smooth reformulation used by the solver; valid on `x >= 0`.
pub(crate) struct Objective {
    linear: DVector<f64>,
    sigma: DMatrix<f64>,
    lambda: f64,
    /// `(delta, sigma_mu)` of the ellipsoid penalty.
    soc: Option<(f64, DMatrix<f64>)>,
}

impl Objective {
    pub(crate) fn compile(model: &ModelSpec) -> Self {
        let (linear, soc) = match &model.set {
            UncertaintySpec::Box { delta } => (&model.mu_hat - delta, None),
            UncertaintySpec::Ellipsoid { delta_sq, sigma_mu } => {
                (model.mu_hat.clone(), Some((delta_sq.sqrt(), sigma_mu.clone())))
            }
            UncertaintySpec::None | UncertaintySpec::Separable { .. } => (model.mu_hat.clone(), None),
        };
        Self {
            linear,
            sigma: model.sigma.clone(),
            lambda: model.lambda,
            soc,
        }
    }

    pub(crate) fn value(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.linear.dot(x) - self.lambda * linalg::quad_form(&self.sigma, x);
        if let Some((delta, sigma_mu)) = &self.soc {
            v -= delta * linalg::quad_form(sigma_mu, x).max(0.0).sqrt();
        }
        v
    }

    pub(crate) fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = &self.linear - (&self.sigma * x) * (2.0 * self.lambda);
        if let Some((delta, sigma_mu)) = &self.soc {
            let smx = sigma_mu * x;
            let q = x.dot(&smx);
            if q > SOC_EPSILON * SOC_EPSILON {
                g -= smx * (delta / q.sqrt());
            }
        }
        g
    }

    pub(crate) fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = &self.sigma * (-2.0 * self.lambda);
        if let Some((delta, sigma_mu)) = &self.soc {
            let smx = sigma_mu * x;
            let q = x.dot(&smx);
            if q > SOC_EPSILON * SOC_EPSILON {
                let s = q.sqrt();
                h -= (sigma_mu - (&smx * smx.transpose()) / q) * (delta / s);
            }
        }
        h
    }
}

/// Model objective at `x`:
///
/// * Mark: `mu' x - lambda x' Sigma x`
/// * Box: Mark minus `delta' |x|`
/// * Ellip: Mark minus `delta sqrt(x' Sigma_mu x)` with `delta = sqrt(delta_sq)`
/// * Sep: `mu_lo' x - lambda x' Sigma_hi x`
pub fn objective_value(model: &ModelSpec, x: &DVector<f64>) -> Result<f64> {
    model.check_dims(x)?;
    let mut v = model.mu_hat.dot(x) - model.lambda * linalg::quad_form(&model.sigma, x);
    match &model.set {
        UncertaintySpec::Box { delta } => v -= delta.dot(&x.abs()),
        UncertaintySpec::Ellipsoid { delta_sq, sigma_mu } => {
            v -= delta_sq.sqrt() * linalg::quad_form(sigma_mu, x).max(0.0).sqrt();
        }
        UncertaintySpec::None | UncertaintySpec::Separable { .. } => {}
    }
    Ok(v)
}

/// Gradient of [`objective_value`], with the subgradient choices
/// `d|x_i|/dx_i = 1` at `x_i = 0` and zero for the ellipsoid term when
/// `x' Sigma_mu x <= SOC_EPSILON^2`.
pub fn objective_subgradient(model: &ModelSpec, x: &DVector<f64>) -> Result<DVector<f64>> {
    model.check_dims(x)?;
    let mut g = &model.mu_hat - (&model.sigma * x) * (2.0 * model.lambda);
    match &model.set {
        UncertaintySpec::Box { delta } => {
            for i in 0..g.len() {
                g[i] -= if x[i] >= 0.0 { delta[i] } else { -delta[i] };
            }
        }
        UncertaintySpec::Ellipsoid { delta_sq, sigma_mu } => {
            let smx = sigma_mu * x;
            let q = x.dot(&smx);
            if q > SOC_EPSILON * SOC_EPSILON {
                g -= smx * (delta_sq.sqrt() / q.sqrt());
            }
        }
        UncertaintySpec::None | UncertaintySpec::Separable { .. } => {}
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    fn mark_example() -> ModelSpec {
        ModelSpec::mark(dv(&[0.2, 0.1]), DMatrix::identity(2, 2), 2.0)
    }

    #[test]
    fn mark_hand_value() {
        let v = objective_value(&mark_example(), &dv(&[0.5, 0.5])).unwrap();
        assert!((v - -0.85).abs() < 1e-15);
    }

    #[test]
    fn zero_radius_penalties_vanish() {
        let m = mark_example();
        let b = ModelSpec::box_model(
            m.mu_hat.clone(),
            m.sigma.clone(),
            2.0,
            &BoxSet {
                delta: DVector::zeros(2),
                alpha: 0.05,
            },
        );
        let e = ModelSpec::ellip(
            m.mu_hat.clone(),
            m.sigma.clone(),
            2.0,
            &EllipsoidSet {
                delta_sq: 0.0,
                sigma_mu: DMatrix::identity(2, 2),
                alpha: 0.05,
            },
        );
        for x in [[0.0, 1.0], [0.3, 0.7], [1.0, 0.0]] {
            let x = dv(&x);
            let mv = objective_value(&m, &x).unwrap();
            assert_eq!(objective_value(&b, &x).unwrap(), mv);
            assert_eq!(objective_value(&e, &x).unwrap(), mv);
        }
    }

    #[test]
    fn ellip_gradient_with_zero_sigma_mu_is_mark_gradient() {
        let m = mark_example();
        let e = ModelSpec::ellip(
            m.mu_hat.clone(),
            m.sigma.clone(),
            2.0,
            &EllipsoidSet {
                delta_sq: 9.0,
                sigma_mu: DMatrix::zeros(2, 2),
                alpha: 0.05,
            },
        );
        let x = dv(&[0.25, 0.75]);
        assert_eq!(
            objective_subgradient(&e, &x).unwrap(),
            objective_subgradient(&m, &x).unwrap()
        );
    }

    #[test]
    fn compiled_objective_agrees_on_simplex() {
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
        let mu = dv(&[0.3, 0.1, -0.2]);
        let set = BoxSet {
            delta: dv(&[0.05, 0.0, 0.2]),
            alpha: 0.05,
        };
        let ell = EllipsoidSet {
            delta_sq: 4.0,
            sigma_mu: &sigma * 0.1,
            alpha: 0.05,
        };
        let models = [
            ModelSpec::box_model(mu.clone(), sigma.clone(), 1.5, &set),
            ModelSpec::ellip(mu.clone(), sigma.clone(), 1.5, &ell),
        ];
        let x = dv(&[0.2, 0.5, 0.3]);
        for m in &models {
            let compiled = Objective::compile(m);
            assert!((compiled.value(&x) - objective_value(m, &x).unwrap()).abs() < 1e-15);
            assert!((compiled.gradient(&x) - objective_subgradient(m, &x).unwrap()).amax() < 1e-15);
        }
    }

    #[test]
    fn validation() {
        let mut m = mark_example();
        assert!(m.validate().is_ok());
        m.lambda = 0.0;
        assert!(m.validate().is_err());
        let mut m = mark_example();
        m.sigma[(0, 0)] = -1.0;
        assert!(matches!(m.validate(), Err(Error::NotPositiveSemidefinite(_))));
        let mut m = mark_example();
        m.kind = ModelKind::Box;
        assert!(m.validate().is_err());
        assert!(matches!(
            objective_value(&mark_example(), &dv(&[1.0])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn model_names_parse() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.as_str().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("robust".parse::<ModelKind>().is_err());
    }

    #[test]
    fn json_uses_row_major_arrays_and_string_tag() {
        let m = ModelSpec::mark(
            dv(&[0.1, 0.2]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]),
            3.0,
        );
        let json: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(json["kind"], "Mark");
        assert_eq!(json["sigma"], serde_json::json!([[1.0, 0.5], [0.5, 2.0]]));
        let back: ModelSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
    }
}
