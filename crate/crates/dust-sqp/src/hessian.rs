//! Positive-definite curvature models `H_0 ~ sum eta_i hess c_i` and
//! `H_rho = rho H_f + H_0` behind one interface, in two backends:
//!
//! * dense exact-modified Hessians (eigenvalue floor plus condition-number
//!   blend), factored once per assembly;
//! * compact limited-memory form `H = s I + U M^{-1} U^T`, whose inverse
//!   `H^{-1} = (1/s)(I - U V^T)` follows from the Sherman-Morrison-Woodbury
//!   identity and applies in O(n r) per vector.
//!
//! Reducing `rho` to `rho_bar` inside a subproblem solve reuses the existing
//! factors: with `tau = rho_bar/rho` and `sbar = tau s + (1 - tau) gamma`,
//! `H_rho_bar = H_tau + (1 - tau) Phi Gamma^{-1} Phi^T` where
//! `H_tau = sbar I + tau Psi Sigma^{-1} Psi^T`, and two small solves give the
//! updated inverse operator without touching any n x n matrix.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HessianError {
    #[error("matrix of size {0} is not positive definite")]
    NotPositiveDefinite(usize),
    #[error("singular {0}x{0} inner system in low-rank inverse")]
    SingularSmallSystem(usize),
    #[error("rescale target rho_bar={rho_bar} must lie in (0, {rho})")]
    BadRescaleTarget { rho_bar: f64, rho: f64 },
}

/// Eigenvalue floor and condition-number blend.
///
/// Eigenvalues below `tau_eig` are reset to `tau_eig`; if the condition number
/// still exceeds `t_cond`, the matrix is blended with the identity using the
/// largest weight `alpha` in [0,1] for which the blend's condition number (a
/// function of the two extreme eigenvalues only) equals `t_cond`.
pub fn build_exact_modified(h_raw: &DMatrix<f64>, tau_eig: f64, t_cond: f64) -> DMatrix<f64> {
    assert!(tau_eig > 0.0 && t_cond >= 1.0);
    let n = h_raw.nrows();
    let sym = nalgebra::SymmetricEigen::new(h_raw.clone());
    let mut vals = sym.eigenvalues.clone();
    for v in vals.iter_mut() {
        *v = v.max(tau_eig);
    }
    let lo = vals.min();
    let hi = vals.max();
    let mut h = &sym.eigenvectors * DMatrix::from_diagonal(&vals) * sym.eigenvectors.transpose();
    if hi > t_cond * lo {
        let alpha = (t_cond - 1.0) / (hi - t_cond * lo + t_cond - 1.0);
        h = alpha * h + DMatrix::from_diagonal_element(n, n, 1.0 - alpha);
    }
    // symmetrize away the eigenvector-product roundoff
    h = 0.5 * (&h + h.transpose());
    h
}

/// Compact factors for `H = scalar I + u m^{-1} u^T` (`u`: n x r, `m`: r x r
/// symmetric invertible; empty factors mean `H = scalar I`).
#[derive(Debug, Clone)]
pub struct CompactFactors {
    pub scalar: f64,
    pub u: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

impl CompactFactors {
    pub fn identity_scaled(n: usize, scalar: f64) -> Self {
        CompactFactors { scalar, u: DMatrix::zeros(n, 0), m: DMatrix::zeros(0, 0) }
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// `H z`.
    pub fn apply(&self, z: &DVector<f64>, m_lu: &nalgebra::LU<f64, Dyn, Dyn>) -> DVector<f64> {
        if self.rank() == 0 {
            return self.scalar * z;
        }
        let ut_z = self.u.transpose() * z;
        let sol = m_lu.solve(&ut_z).expect("factorized");
        self.scalar * z + &self.u * sol
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.u.nrows();
        let mut h = DMatrix::from_diagonal_element(n, n, self.scalar);
        if self.rank() > 0 {
            let minv = self.m.clone().lu().solve(&self.u.transpose()).expect("invertible m");
            h += &self.u * minv;
        }
        h
    }
}

/// Curvature pairs accepted into a compact update. Pairs with
/// `<s, y> <= eps ||s|| ||y||` carry no useful positive curvature and are
/// skipped.
pub const CURVATURE_EPS: f64 = 1e-8;

/// Builds the compact form of the BFGS approximation from the most recent
/// `memory` accepted `(s, y)` pairs. The base scalar is `<y,y>/<s,y>` of the
/// newest accepted pair (1 with no history). Returns the factors and the
/// number of skipped pairs.
pub fn lbfgs_update(n: usize, history: &[(DVector<f64>, DVector<f64>)], memory: usize) -> (CompactFactors, usize) {
    let mut accepted: Vec<&(DVector<f64>, DVector<f64>)> = Vec::new();
    let mut skipped = 0;
    for pair in history {
        let (s, y) = pair;
        if s.dot(y) > CURVATURE_EPS * s.norm() * y.norm() {
            accepted.push(pair);
        } else {
            skipped += 1;
        }
    }
    if accepted.len() > memory {
        let cut = accepted.len() - memory;
        accepted.drain(..cut);
    }
    let k = accepted.len();
    if k == 0 {
        return (CompactFactors::identity_scaled(n, 1.0), skipped);
    }
    let (s_new, y_new) = accepted[k - 1];
    let scalar = y_new.dot(y_new) / s_new.dot(y_new);

    let mut s_mat = DMatrix::zeros(n, k);
    let mut y_mat = DMatrix::zeros(n, k);
    for (j, (s, y)) in accepted.iter().enumerate() {
        s_mat.set_column(j, s);
        y_mat.set_column(j, y);
    }
    let sts = s_mat.transpose() * &s_mat;
    let sty = s_mat.transpose() * &y_mat;
    // H = scalar I - [scalar S, Y] W^{-1} [scalar S, Y]^T with
    // W = [scalar S^T S, L; L^T, -D]; stored as m = -W so H = scalar I + u m^{-1} u^T.
    let mut u = DMatrix::zeros(n, 2 * k);
    for j in 0..k {
        u.set_column(j, &(scalar * s_mat.column(j)));
        u.set_column(k + j, &y_mat.column(j));
    }
    let mut m = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = -scalar * sts[(i, j)];
            // L has the strictly lower triangle of S^T Y
            let l_ij = if i > j { sty[(i, j)] } else { 0.0 };
            m[(i, k + j)] = -l_ij;
            m[(k + j, i)] = -l_ij;
        }
        m[(k + i, k + i)] = sty[(i, i)];
    }
    (CompactFactors { scalar, u, m }, skipped)
}

/// Inverse operator `H^{-1} = (1/s)(I - u v^T)`; empty factors mean
/// `H^{-1} = (1/s) I`.
#[derive(Debug, Clone)]
pub struct InverseFactors {
    pub s: f64,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl InverseFactors {
    fn scaled_identity(s: f64, n: usize) -> Self {
        InverseFactors { s, u: DMatrix::zeros(n, 0), v: DMatrix::zeros(n, 0) }
    }

    /// From compact direct factors: `v^T = (s m + u^T u)^{-1} u^T`.
    fn from_compact(f: &CompactFactors) -> Result<Self, HessianError> {
        if f.rank() == 0 {
            return Ok(Self::scaled_identity(f.scalar, f.u.nrows()));
        }
        let small = f.scalar * &f.m + f.u.transpose() * &f.u;
        let vt = solve_small(&small, &f.u.transpose())?;
        Ok(InverseFactors { s: f.scalar, u: f.u.clone(), v: vt.transpose() })
    }

    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        if self.u.ncols() == 0 {
            return z / self.s;
        }
        (z - &self.u * (self.v.transpose() * z)) / self.s
    }
}

/// LU solve of a small symmetric (possibly indefinite) system with a tiny
/// jitter retry; definite failure violates the positive-definiteness contract.
fn solve_small(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, HessianError> {
    let r = a.nrows();
    if let Some(x) = a.clone().lu().solve(b) {
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    let jittered = a + DMatrix::from_diagonal_element(r, r, 1e-14 * (1.0 + a.amax()));
    match jittered.lu().solve(b) {
        Some(x) if x.iter().all(|v| v.is_finite()) => Ok(x),
        _ => Err(HessianError::SingularSmallSystem(r)),
    }
}

#[derive(Debug, Clone)]
pub struct DenseModel {
    pub h_f: DMatrix<f64>,
    pub h_0: DMatrix<f64>,
    h_rho: DMatrix<f64>,
    chol_rho: Cholesky<f64, Dyn>,
    chol_0: Option<Cholesky<f64, Dyn>>,
    rho: f64,
}

#[derive(Debug, Clone)]
pub struct LowRankModel {
    /// Direct factors of `H_rho` at the current rho.
    rho_part: CompactFactors,
    rho_lu: nalgebra::LU<f64, Dyn, Dyn>,
    /// Direct factors of `H_0`.
    zero_part: CompactFactors,
    zero_lu: nalgebra::LU<f64, Dyn, Dyn>,
    inv_rho: InverseFactors,
    inv_0: InverseFactors,
    rho: f64,
}

/// A positive-definite model of `(H_rho, H_0)` at one penalty value.
#[derive(Debug, Clone)]
pub enum HessianModel {
    Dense(DenseModel),
    LowRank(LowRankModel),
}

/// Backend-specific handle the QP workspace uses to form `H^{-1} a_i` terms.
pub enum InverseOperator<'a> {
    Dense(&'a Cholesky<f64, Dyn>),
    Factored(&'a InverseFactors),
}

impl HessianModel {
    /// Dense model from already-modified `H_f` and `H_0`; `H_rho` must be
    /// positive definite at `rho` (guaranteed when both parts are).
    pub fn dense_from_parts(h_f: DMatrix<f64>, h_0: DMatrix<f64>, rho: f64) -> Result<Self, HessianError> {
        let n = h_f.nrows();
        let h_rho = rho * &h_f + &h_0;
        let chol_rho =
            Cholesky::new(h_rho.clone()).ok_or(HessianError::NotPositiveDefinite(n))?;
        let chol_0 = Cholesky::new(h_0.clone());
        Ok(HessianModel::Dense(DenseModel { h_f, h_0, h_rho, chol_rho, chol_0, rho }))
    }

    /// Low-rank model from compact factors of `H_f` and `H_0` at weight `rho`:
    /// `H_rho = (rho s_f + gamma) I + [U_f, Phi] blkdiag(M_f/rho, Gamma)^{-1} [..]^T`.
    pub fn low_rank_from_parts(
        f_part: &CompactFactors,
        zero_part: &CompactFactors,
        rho: f64,
    ) -> Result<Self, HessianError> {
        assert!(rho > 0.0);
        let n = f_part.u.nrows();
        let rf = f_part.rank();
        let rz = zero_part.rank();
        let mut u = DMatrix::zeros(n, rf + rz);
        u.view_mut((0, 0), (n, rf)).copy_from(&f_part.u);
        u.view_mut((0, rf), (n, rz)).copy_from(&zero_part.u);
        let mut m = DMatrix::zeros(rf + rz, rf + rz);
        m.view_mut((0, 0), (rf, rf)).copy_from(&(&f_part.m / rho));
        m.view_mut((rf, rf), (rz, rz)).copy_from(&zero_part.m);
        let rho_part = CompactFactors { scalar: rho * f_part.scalar + zero_part.scalar, u, m };
        Self::low_rank_from_combined(rho_part, zero_part.clone(), rho)
    }

    fn low_rank_from_combined(
        rho_part: CompactFactors,
        zero_part: CompactFactors,
        rho: f64,
    ) -> Result<Self, HessianError> {
        let inv_rho = InverseFactors::from_compact(&rho_part)?;
        let inv_0 = InverseFactors::from_compact(&zero_part)?;
        let rho_lu = rho_part.m.clone().lu();
        let zero_lu = zero_part.m.clone().lu();
        Ok(HessianModel::LowRank(LowRankModel {
            rho_part,
            rho_lu,
            zero_part,
            zero_lu,
            inv_rho,
            inv_0,
            rho,
        }))
    }

    pub fn n(&self) -> usize {
        match self {
            HessianModel::Dense(d) => d.h_f.nrows(),
            HessianModel::LowRank(l) => l.rho_part.u.nrows(),
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            HessianModel::Dense(d) => d.rho,
            HessianModel::LowRank(l) => l.rho,
        }
    }

    pub fn apply_rho(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            HessianModel::Dense(d) => &d.h_rho * z,
            HessianModel::LowRank(l) => l.rho_part.apply(z, &l.rho_lu),
        }
    }

    pub fn apply_h0(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            HessianModel::Dense(d) => &d.h_0 * z,
            HessianModel::LowRank(l) => l.zero_part.apply(z, &l.zero_lu),
        }
    }

    /// `H_rho^{-1} z`. The dense path applies one step of iterative
    /// refinement; the eigenvalue floor admits condition numbers up to
    /// `t_cond`, and a raw solve at that conditioning is not accurate enough
    /// for the duality bookkeeping downstream.
    pub fn inverse_apply(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            HessianModel::Dense(d) => {
                let mut x = d.chol_rho.solve(z);
                let r = z - &d.h_rho * &x;
                x += d.chol_rho.solve(&r);
                x
            }
            HessianModel::LowRank(l) => l.inv_rho.apply(z),
        }
    }

    /// `H_0^{-1} z`, refined like [`Self::inverse_apply`].
    pub fn inverse_apply_h0(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            HessianModel::Dense(d) => {
                let chol = d.chol_0.as_ref().expect("H0 not positive definite");
                let mut x = chol.solve(z);
                let r = z - &d.h_0 * &x;
                x += chol.solve(&r);
                x
            }
            HessianModel::LowRank(l) => l.inv_0.apply(z),
        }
    }

    /// `<d, H_rho d>`.
    pub fn quad_rho(&self, d: &DVector<f64>) -> f64 {
        d.dot(&self.apply_rho(d))
    }

    /// `<d, H_0 d>`.
    pub fn quad_h0(&self, d: &DVector<f64>) -> f64 {
        d.dot(&self.apply_h0(d))
    }

    pub fn inverse_op_rho(&self) -> InverseOperator<'_> {
        match self {
            HessianModel::Dense(d) => InverseOperator::Dense(&d.chol_rho),
            HessianModel::LowRank(l) => InverseOperator::Factored(&l.inv_rho),
        }
    }

    pub fn inverse_op_h0(&self) -> InverseOperator<'_> {
        match self {
            HessianModel::Dense(d) => {
                InverseOperator::Dense(d.chol_0.as_ref().expect("H0 not positive definite"))
            }
            HessianModel::LowRank(l) => InverseOperator::Factored(&l.inv_0),
        }
    }

    /// The model at a smaller penalty weight. Dense reassembles and refactors;
    /// low-rank reuses the standing factors: the new inverse is assembled from
    /// two small solves (`Theta_3`, then the `Gamma`-coupled correction), never
    /// forming an n x n matrix. `rho_bar == rho` returns an unchanged copy.
    pub fn rescale_rho(&self, rho_bar: f64) -> Result<Self, HessianError> {
        let rho = self.rho();
        if rho_bar == rho {
            return match self {
                HessianModel::Dense(d) => {
                    Self::dense_from_parts(d.h_f.clone(), d.h_0.clone(), rho)
                }
                HessianModel::LowRank(l) => {
                    Self::low_rank_from_combined(l.rho_part.clone(), l.zero_part.clone(), rho)
                }
            };
        }
        if !(rho_bar > 0.0 && rho_bar < rho) {
            return Err(HessianError::BadRescaleTarget { rho_bar, rho });
        }
        match self {
            HessianModel::Dense(d) => Self::dense_from_parts(d.h_f.clone(), d.h_0.clone(), rho_bar),
            HessianModel::LowRank(l) => {
                let tau = rho_bar / rho;
                let sigma = l.rho_part.scalar;
                let gamma = l.zero_part.scalar;
                let sbar = tau * sigma + (1.0 - tau) * gamma;
                let psi = &l.rho_part.u;
                let phi = &l.zero_part.u;
                let n = psi.nrows();
                let r = psi.ncols();
                let lr = phi.ncols();

                // H_tau^{-1} = (1/sbar)(I - Psi Theta3^T),
                // Theta3^T = ((sbar/tau) Sigma + Psi^T Psi)^{-1} Psi^T
                let theta3_t = if r > 0 {
                    let small = (sbar / tau) * &l.rho_part.m + psi.transpose() * psi;
                    solve_small(&small, &psi.transpose())?
                } else {
                    DMatrix::zeros(0, n)
                };
                let apply_h_tau_inv = |z: &DMatrix<f64>| -> DMatrix<f64> {
                    if r > 0 {
                        (z - psi * (&theta3_t * z)) / sbar
                    } else {
                        z / sbar
                    }
                };

                // H_rho_bar^{-1} = H_tau^{-1} - W M^{-1} W^T with W = H_tau^{-1} Phi
                // and M = Gamma/(1-tau) + Phi^T W.
                let (u_new, v_new) = if lr > 0 {
                    let w = apply_h_tau_inv(phi);
                    let m_small = &l.zero_part.m / (1.0 - tau) + phi.transpose() * &w;
                    let x = solve_small(&m_small.transpose(), &w.transpose())?.transpose();
                    let mut u_new = DMatrix::zeros(n, r + lr);
                    u_new.view_mut((0, 0), (n, r)).copy_from(psi);
                    u_new.view_mut((0, r), (n, lr)).copy_from(&(sbar * &w));
                    let mut v_new = DMatrix::zeros(n, r + lr);
                    v_new.view_mut((0, 0), (n, r)).copy_from(&theta3_t.transpose());
                    v_new.view_mut((0, r), (n, lr)).copy_from(&x);
                    (u_new, v_new)
                } else {
                    (psi.clone(), theta3_t.transpose())
                };
                let inv_rho = InverseFactors { s: sbar, u: u_new, v: v_new };

                // Direct factors of H_rho_bar: sbar I + Psi (Sigma/tau)^{-1} Psi^T
                //                                     + Phi (Gamma/(1-tau))^{-1} Phi^T
                let mut u_dir = DMatrix::zeros(n, r + lr);
                u_dir.view_mut((0, 0), (n, r)).copy_from(psi);
                u_dir.view_mut((0, r), (n, lr)).copy_from(phi);
                let mut m_dir = DMatrix::zeros(r + lr, r + lr);
                m_dir.view_mut((0, 0), (r, r)).copy_from(&(&l.rho_part.m / tau));
                m_dir
                    .view_mut((r, r), (lr, lr))
                    .copy_from(&(&l.zero_part.m / (1.0 - tau)));
                let rho_part = CompactFactors { scalar: sbar, u: u_dir, m: m_dir };
                let rho_lu = rho_part.m.clone().lu();

                Ok(HessianModel::LowRank(LowRankModel {
                    rho_part,
                    rho_lu,
                    zero_part: l.zero_part.clone(),
                    zero_lu: l.zero_part.m.clone().lu(),
                    inv_rho,
                    inv_0: l.inv_0.clone(),
                    rho: rho_bar,
                }))
            }
        }
    }

    /// Extreme eigenvalues of `H_rho`: exact for the dense backend, via the
    /// reduced rank-r eigenproblem for the compact backend.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        match self {
            HessianModel::Dense(d) => {
                let vals = nalgebra::SymmetricEigen::new(d.h_rho.clone()).eigenvalues;
                (vals.min(), vals.max())
            }
            HessianModel::LowRank(l) => {
                let s = l.rho_part.scalar;
                let r = l.rho_part.rank();
                let n = l.rho_part.u.nrows();
                if r == 0 {
                    return (s, s);
                }
                // nonzero eigenvalues of U M^{-1} U^T equal those of M^{-1} U^T U
                let utu = l.rho_part.u.transpose() * &l.rho_part.u;
                let reduced = l.rho_lu.solve(&utu).expect("factorized");
                let mut lo = if r < n { 0.0f64 } else { f64::INFINITY };
                let mut hi = if r < n { 0.0f64 } else { f64::NEG_INFINITY };
                for ev in reduced.complex_eigenvalues().iter() {
                    lo = lo.min(ev.re);
                    hi = hi.max(ev.re);
                }
                (s + lo, s + hi)
            }
        }
    }
}
