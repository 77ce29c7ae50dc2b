//! Low-rank-plus-diagonal covariance algebra.
//!
//! The covariance implied by a two-factor model is
//! `Σ = β βᵀ σ_mkt² + γ γᵀ σ_bmg² + D` with `D` diagonal. Its inverse is
//! obtained from the Sherman-Morrison-Woodbury identity without ever
//! factorizing an `n × n` matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn check_denominator(denominator: f64, terms: f64) -> Result<()> {
    if !denominator.is_finite() || denominator.abs() < 1e-12 * (1.0 + terms.abs()) {
        return Err(Error::Singular { denominator });
    }
    Ok(())
}

/// Precision-weighted inner product `Σ_s x_s y_s / σ̃_s²`.
pub fn phi(x: &DVector<f64>, y: &DVector<f64>, idio_var: &DVector<f64>) -> f64 {
    assert_eq!(x.len(), y.len(), "phi: x and y lengths differ");
    assert_eq!(x.len(), idio_var.len(), "phi: idio_var length differs");
    x.iter()
        .zip(y.iter())
        .zip(idio_var.iter())
        .map(|((a, b), s2)| a * b / s2)
        .sum()
}

/// `(A + u vᵀ)⁻¹` from a known `A⁻¹`.
pub fn smw_rank1_inverse(
    a_inv: &DMatrix<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = a_inv.nrows();
    if a_inv.ncols() != n || u.len() != n || v.len() != n {
        return Err(Error::Dimension(format!(
            "rank-1 update of {}x{} inverse with vectors of length {} and {}",
            n,
            a_inv.ncols(),
            u.len(),
            v.len()
        )));
    }
    let a_inv_u = a_inv * u;
    let vt_a_inv = a_inv.tr_mul(v);
    let quad = v.dot(&a_inv_u);
    let denominator = 1.0 + quad;
    check_denominator(denominator, quad)?;
    Ok(a_inv - (a_inv_u * vt_a_inv.transpose()) / denominator)
}

/// `(A + u vᵀ)⁻¹` for diagonal `A` given by its diagonal entries.
pub fn smw_rank1_inverse_diag(
    a_diag: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let a_inv = diag_inverse(a_diag)?;
    smw_rank1_inverse(&DMatrix::from_diagonal(&a_inv), u, v)
}

fn diag_inverse(a_diag: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(&bad) = a_diag.iter().find(|a| **a == 0.0 || !a.is_finite()) {
        return Err(Error::Singular { denominator: bad });
    }
    Ok(a_diag.map(|a| 1.0 / a))
}

/// Inverse of `A + u₁v₁ᵀ + u₂v₂ᵀ` for diagonal `A`, held in factored form.
///
/// With capacitance entries `S_kl = δ_kl + v_kᵀ A⁻¹ u_l`, the determinant is
/// `|S| = (1+T₁₁)(1+T₂₂) − T₁₂T₂₁` and
/// `|S|·U S⁻¹ Vᵀ = (1+T₂₂) u₁v₁ᵀ + (1+T₁₁) u₂v₂ᵀ − T₂₁ u₂v₁ᵀ − T₁₂ u₁v₂ᵀ`.
#[derive(Debug, Clone)]
pub struct Rank2Inverse {
    a_inv: DVector<f64>,
    u1: DVector<f64>,
    v1: DVector<f64>,
    u2: DVector<f64>,
    v2: DVector<f64>,
    t11: f64,
    t22: f64,
    t12: f64,
    t21: f64,
    det: f64,
}

impl Rank2Inverse {
    pub fn new(
        a_diag: &DVector<f64>,
        u1: &DVector<f64>,
        v1: &DVector<f64>,
        u2: &DVector<f64>,
        v2: &DVector<f64>,
    ) -> Result<Self> {
        let n = a_diag.len();
        if [u1.len(), v1.len(), u2.len(), v2.len()].iter().any(|&l| l != n) {
            return Err(Error::Dimension(format!(
                "rank-2 update vectors must have length {n}"
            )));
        }
        let a_inv = diag_inverse(a_diag)?;
        let weighted = |x: &DVector<f64>, y: &DVector<f64>| -> f64 {
            x.iter()
                .zip(y.iter())
                .zip(a_inv.iter())
                .map(|((p, q), w)| p * q * w)
                .sum()
        };
        let t11 = weighted(u1, v1);
        let t22 = weighted(u2, v2);
        // T_kl = v_kᵀ A⁻¹ u_l
        let t12 = weighted(v1, u2);
        let t21 = weighted(v2, u1);
        let det = 1.0 + t11 + t22 + t11 * t22 - t12 * t21;
        check_denominator(det, t11.abs() + t22.abs() + (t11 * t22).abs() + (t12 * t21).abs())?;
        Ok(Self {
            a_inv,
            u1: u1.clone(),
            v1: v1.clone(),
            u2: u2.clone(),
            v2: v2.clone(),
            t11,
            t22,
            t12,
            t21,
            det,
        })
    }

    /// Symmetric case `u_k = v_k`.
    pub fn symmetric(a_diag: &DVector<f64>, u1: &DVector<f64>, u2: &DVector<f64>) -> Result<Self> {
        Self::new(a_diag, u1, u1, u2, u2)
    }

    /// Determinant `|S|` of the 2×2 capacitance matrix.
    pub fn capacitance_det(&self) -> f64 {
        self.det
    }

    pub fn dim(&self) -> usize {
        self.a_inv.len()
    }

    /// `(A + UVᵀ)⁻¹ w` without materializing the inverse.
    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        assert_eq!(w.len(), self.dim(), "Rank2Inverse::apply: length mismatch");
        let aw = self.a_inv.component_mul(w);
        let v1_aw = self.v1.dot(&aw);
        let v2_aw = self.v2.dot(&aw);
        let c1 = ((1.0 + self.t22) * v1_aw - self.t12 * v2_aw) / self.det;
        let c2 = ((1.0 + self.t11) * v2_aw - self.t21 * v1_aw) / self.det;
        let correction = (&self.u1 * c1 + &self.u2 * c2).component_mul(&self.a_inv);
        aw - correction
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let k11 = (1.0 + self.t22) / self.det;
        let k22 = (1.0 + self.t11) / self.det;
        let k21 = -self.t21 / self.det; // coefficient of u₂v₁ᵀ
        let k12 = -self.t12 / self.det; // coefficient of u₁v₂ᵀ
        DMatrix::from_fn(n, n, |i, j| {
            let core = k11 * self.u1[i] * self.v1[j]
                + k22 * self.u2[i] * self.v2[j]
                + k21 * self.u2[i] * self.v1[j]
                + k12 * self.u1[i] * self.v2[j];
            let diag = if i == j { self.a_inv[i] } else { 0.0 };
            diag - self.a_inv[i] * core * self.a_inv[j]
        })
    }
}

/// `(A + u₁u₁ᵀ + u₂u₂ᵀ)⁻¹` for diagonal `A`, materialized.
pub fn smw_rank2_inverse(
    a_diag: &DVector<f64>,
    u1: &DVector<f64>,
    u2: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    Ok(Rank2Inverse::symmetric(a_diag, u1, u2)?.to_dense())
}

/// Two-factor covariance `Σ = β βᵀ σ_mkt² + γ γᵀ σ_bmg² + D`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCovarianceModel {
    pub beta_mkt: DVector<f64>,
    pub beta_bmg: DVector<f64>,
    pub sigma_mkt: f64,
    pub sigma_bmg: f64,
    /// Specific variances `σ̃_i²`.
    pub idio_var: DVector<f64>,
}

impl FactorCovarianceModel {
    pub fn new(
        beta_mkt: DVector<f64>,
        beta_bmg: DVector<f64>,
        sigma_mkt: f64,
        sigma_bmg: f64,
        idio_var: DVector<f64>,
    ) -> Result<Self> {
        let n = beta_mkt.len();
        if beta_bmg.len() != n || idio_var.len() != n {
            return Err(Error::Dimension(format!(
                "beta_mkt has {n} entries, beta_bmg {}, idio_var {}",
                beta_bmg.len(),
                idio_var.len()
            )));
        }
        if !(sigma_mkt > 0.0 && sigma_mkt.is_finite()) || !(sigma_bmg > 0.0 && sigma_bmg.is_finite())
        {
            return Err(Error::Domain(format!(
                "factor volatilities must be positive, got {sigma_mkt} and {sigma_bmg}"
            )));
        }
        if idio_var.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Domain("specific variances must be positive".into()));
        }
        if beta_mkt.iter().chain(beta_bmg.iter()).any(|b| !b.is_finite()) {
            return Err(Error::Domain("betas must be finite".into()));
        }
        Ok(Self {
            beta_mkt,
            beta_bmg,
            sigma_mkt,
            sigma_bmg,
            idio_var,
        })
    }

    /// Builds the model from specific volatilities `σ̃_i` rather than variances.
    pub fn from_idio_vol(
        beta_mkt: DVector<f64>,
        beta_bmg: DVector<f64>,
        sigma_mkt: f64,
        sigma_bmg: f64,
        idio_vol: &DVector<f64>,
    ) -> Result<Self> {
        Self::new(beta_mkt, beta_bmg, sigma_mkt, sigma_bmg, idio_vol.map(|s| s * s))
    }

    /// Single-factor model: the carbon loadings are identically zero.
    pub fn capm(beta_mkt: DVector<f64>, sigma_mkt: f64, idio_var: DVector<f64>) -> Result<Self> {
        let n = beta_mkt.len();
        Self::new(beta_mkt, DVector::zeros(n), sigma_mkt, 1.0, idio_var)
    }

    pub fn n(&self) -> usize {
        self.beta_mkt.len()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.n();
        let (sm2, sb2) = (self.sigma_mkt.powi(2), self.sigma_bmg.powi(2));
        DMatrix::from_fn(n, n, |i, j| {
            let mut v = sm2 * self.beta_mkt[i] * self.beta_mkt[j]
                + sb2 * self.beta_bmg[i] * self.beta_bmg[j];
            if i == j {
                v += self.idio_var[i];
            }
            v
        })
    }

    /// `Σ⁻¹` in factored form via the rank-2 identity with `A = D`,
    /// `u₁ = σ_mkt β` and `u₂ = σ_bmg γ`.
    pub fn inverse(&self) -> Result<Rank2Inverse> {
        Rank2Inverse::symmetric(
            &self.idio_var,
            &(&self.beta_mkt * self.sigma_mkt),
            &(&self.beta_bmg * self.sigma_bmg),
        )
    }

    /// `σ_i² = β_i² σ_mkt² + γ_i² σ_bmg² + σ̃_i²`.
    pub fn total_variance(&self, i: usize) -> f64 {
        self.beta_mkt[i].powi(2) * self.sigma_mkt.powi(2)
            + self.beta_bmg[i].powi(2) * self.sigma_bmg.powi(2)
            + self.idio_var[i]
    }

    pub fn portfolio_variance(&self, x: &DVector<f64>) -> f64 {
        let m = self.beta_mkt.dot(x);
        let g = self.beta_bmg.dot(x);
        let idio: f64 = x
            .iter()
            .zip(self.idio_var.iter())
            .map(|(w, s2)| w * w * s2)
            .sum();
        m * m * self.sigma_mkt.powi(2) + g * g * self.sigma_bmg.powi(2) + idio
    }

    /// Sub-model on the given asset indices, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let pick = |v: &DVector<f64>| DVector::from_iterator(indices.len(), indices.iter().map(|&i| v[i]));
        Self {
            beta_mkt: pick(&self.beta_mkt),
            beta_bmg: pick(&self.beta_bmg),
            sigma_mkt: self.sigma_mkt,
            sigma_bmg: self.sigma_bmg,
            idio_var: pick(&self.idio_var),
        }
    }

    /// Same model with `γ → −γ`.
    pub fn flip_bmg(&self) -> Self {
        Self {
            beta_bmg: -&self.beta_bmg,
            ..self.clone()
        }
    }
}
