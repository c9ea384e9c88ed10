//! Constitutive constants and pointwise constitutive evaluation for the
//! coupled piezoelectric-flexoelectric plane-strain model.
//!
//! Vector orderings:
//!   strain        (e11, e22, g12)                 with g12 = 2 e12
//!   strain grad   (e11,1  e22,1  g12,1  e11,2  e22,2  g12,2)
//!   electric field (E1, E2)

use crate::error::{FlexoError, Result};
use nalgebra::{DMatrix, Matrix2, Matrix3, SMatrix, Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Matrix2x3 = SMatrix<f64, 2, 3>;
pub type Matrix2x6 = SMatrix<f64, 2, 6>;
pub type Vector6 = SMatrix<f64, 6, 1>;

/// All constitutive constants in SI units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaterialSet {
    /// Young's modulus (Pa).
    pub e_modulus: f64,
    /// Poisson ratio.
    pub nu: f64,
    /// Dielectric permittivity (C/Vm).
    pub kappa11: f64,
    pub kappa22: f64,
    /// Piezoelectric coefficients (C/m^2).
    pub e11: f64,
    pub e21: f64,
    pub e22: f64,
    pub e15: f64,
    /// Flexoelectric coefficients (C/m).
    pub mu11: f64,
    pub mu12: f64,
    pub mu44: f64,
    /// Strain-gradient length scale (m).
    pub length_scale: f64,
}

impl MaterialSet {
    /// Simulation-study constants: E = 100 GPa, nu = 0.37,
    /// mu11 = mu12 = 1e-6 C/m, e11 = 4.4, e21 = -4.4 C/m^2,
    /// kappa = 12.48e-9 C/Vm, length scale 0.1 nm.
    pub fn default_study() -> Self {
        Self {
            e_modulus: 100e9,
            nu: 0.37,
            kappa11: 12.48e-9,
            kappa22: 12.48e-9,
            e11: 4.4,
            e21: -4.4,
            e22: 0.0,
            e15: 0.0,
            mu11: 1e-6,
            mu12: 1e-6,
            mu44: 0.0,
            length_scale: 0.1e-9,
        }
    }

    /// One-dimensional emulation preset: kappa11, mu11, e11 and nu are
    /// zeroed (kappa11 keeps a tiny fraction of kappa22 so the electrical
    /// block stays definite).
    pub fn preset_1d() -> Self {
        let mut m = Self::default_study();
        m.nu = 0.0;
        m.mu11 = 0.0;
        m.e11 = 0.0;
        m.kappa11 = 1e-9 * m.kappa22;
        m
    }

    pub fn without_piezo(mut self) -> Self {
        self.e11 = 0.0;
        self.e21 = 0.0;
        self.e22 = 0.0;
        self.e15 = 0.0;
        self
    }

    pub fn without_flexo(mut self) -> Self {
        self.mu11 = 0.0;
        self.mu12 = 0.0;
        self.mu44 = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.e_modulus <= 0.0 {
            return Err(FlexoError::InvalidArgument("E must be positive".into()));
        }
        if self.nu <= -1.0 || self.nu >= 0.5 {
            return Err(FlexoError::SingularMaterial(format!(
                "nu = {} outside (-1, 0.5)",
                self.nu
            )));
        }
        if self.kappa11 <= 0.0 || self.kappa22 <= 0.0 {
            return Err(FlexoError::InvalidArgument("kappa must be positive".into()));
        }
        if self.length_scale < 0.0 {
            return Err(FlexoError::InvalidArgument("length scale must be >= 0".into()));
        }
        Ok(())
    }

    pub fn c_matrix(&self) -> Result<Matrix3<f64>> {
        build_c(self.e_modulus, self.nu)
    }

    pub fn h_matrix(&self) -> Result<Matrix6> {
        Ok(build_h(&self.c_matrix()?, self.length_scale))
    }

    pub fn kappa_matrix(&self) -> Matrix2<f64> {
        build_kappa(self.kappa11, self.kappa22)
    }

    pub fn e_matrix(&self) -> Matrix2x3 {
        // General 2x3 layout; the (1,1) slot carries e11 of the extended
        // matrix used in the validation studies.
        Matrix2x3::new(self.e11, 0.0, self.e15, self.e21, self.e22, 0.0)
    }

    pub fn mu_matrix(&self) -> Matrix2x6 {
        build_mu(self.mu11, self.mu12, self.mu44)
    }
}

/// Plane-strain elasticity matrix.
pub fn build_c(e_modulus: f64, nu: f64) -> Result<Matrix3<f64>> {
    if nu >= 0.5 || nu <= -1.0 {
        return Err(FlexoError::SingularMaterial(format!("nu = {nu}")));
    }
    let f = e_modulus / ((1.0 + nu) * (1.0 - 2.0 * nu));
    Ok(Matrix3::new(
        f * (1.0 - nu),
        f * nu,
        0.0,
        f * nu,
        f * (1.0 - nu),
        0.0,
        0.0,
        0.0,
        f * (1.0 - 2.0 * nu) / 2.0,
    ))
}

/// Strain-gradient elasticity matrix: two copies of the {C11, C12, C44}
/// pattern scaled by the squared length scale.
pub fn build_h(c: &Matrix3<f64>, length_scale: f64) -> Matrix6 {
    let l2 = length_scale * length_scale;
    let mut h = Matrix6::zeros();
    for b in 0..2 {
        let o = 3 * b;
        h[(o, o)] = l2 * c[(0, 0)];
        h[(o, o + 1)] = l2 * c[(0, 1)];
        h[(o + 1, o)] = l2 * c[(0, 1)];
        h[(o + 1, o + 1)] = l2 * c[(0, 0)];
        h[(o + 2, o + 2)] = l2 * c[(2, 2)];
    }
    h
}

pub fn build_kappa(k11: f64, k22: f64) -> Matrix2<f64> {
    Matrix2::new(k11, 0.0, 0.0, k22)
}

/// Appendix-layout piezoelectric matrix (no extended (1,1) slot).
pub fn build_e(e15: f64, e21: f64, e22: f64) -> Matrix2x3 {
    Matrix2x3::new(0.0, 0.0, e15, e21, e22, 0.0)
}

pub fn build_mu(mu11: f64, mu12: f64, mu44: f64) -> Matrix2x6 {
    Matrix2x6::new(
        mu11, mu12, 0.0, 0.0, 0.0, mu44, 0.0, 0.0, mu44, mu12, mu11, 0.0,
    )
}

/// Strain, strain gradient, and electric field at a point.
#[derive(Debug, Clone)]
pub struct PointState {
    pub eps: Vector3<f64>,
    pub grad_eps: Vector6,
    pub e_field: Vector2<f64>,
}

impl PointState {
    pub fn zero() -> Self {
        Self {
            eps: Vector3::zeros(),
            grad_eps: Vector6::zeros(),
            e_field: Vector2::zeros(),
        }
    }
}

/// Stress, double stress, and electric displacement at a point. The
/// higher-order electric displacement is identically zero and not stored.
#[derive(Debug, Clone)]
pub struct PointFlux {
    pub sigma_hat: Vector3<f64>,
    pub sigma_tilde: Vector6,
    pub d_hat: Vector2<f64>,
}

/// Pointwise constitutive law:
///   sigma_hat   = C eps - e^T E
///   sigma_tilde = h grad_eps - mu^T E
///   d_hat       = kappa E + e eps + mu grad_eps
pub fn constitutive(state: &PointState, mat: &MaterialSet) -> Result<PointFlux> {
    let c = mat.c_matrix()?;
    let h = mat.h_matrix()?;
    let e = mat.e_matrix();
    let mu = mat.mu_matrix();
    let kappa = mat.kappa_matrix();
    Ok(PointFlux {
        sigma_hat: c * state.eps - e.transpose() * state.e_field,
        sigma_tilde: h * state.grad_eps - mu.transpose() * state.e_field,
        d_hat: kappa * state.e_field + e * state.eps + mu * state.grad_eps,
    })
}

/// Electric enthalpy density
///   H = 1/2 eps C eps + 1/2 grad_eps h grad_eps - 1/2 E kappa E
///       - E e eps - E mu grad_eps.
pub fn enthalpy_density(state: &PointState, mat: &MaterialSet) -> Result<f64> {
    let c = mat.c_matrix()?;
    let h = mat.h_matrix()?;
    let e = mat.e_matrix();
    let mu = mat.mu_matrix();
    let kappa = mat.kappa_matrix();
    let s = state;
    Ok(0.5 * (s.eps.dot(&(c * s.eps)))
        + 0.5 * s.grad_eps.dot(&(h * s.grad_eps))
        - 0.5 * s.e_field.dot(&(kappa * s.e_field))
        - s.e_field.dot(&(e * s.eps))
        - s.e_field.dot(&(mu * s.grad_eps)))
}

/// Dense view of the mu matrix, handy for index-notation oracles in tests.
pub fn mu_dense(mat: &MaterialSet) -> DMatrix<f64> {
    let m = mat.mu_matrix();
    DMatrix::from_fn(2, 6, |i, j| m[(i, j)])
}
