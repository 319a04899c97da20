//! Mean and mean-square convergence predictions for the proportionate LMS
//! family under white Gaussian input.
//!
//! Everything here works on the weight error `w~(n) = w_opt - w(n)`, whose
//! update is
//!
//! ```text
//! w~(n+1) = [I - mu G(n) u(n) u^T(n)] w~(n) - mu G(n) u(n) v(n)
//! ```
//!
//! Under the independence assumption (and treating the slowly varying gain
//! matrix as independent of the regressors) the first moment evolves through
//! `B = I - mu G_bar R`, and the weighted second moment through the
//! `L^2 x L^2` coefficient matrix
//!
//! ```text
//! F = I - mu (I (x) R G_bar) - mu (R G_bar (x) I) + mu^2 Pi E(G (x) G)
//!   = I - mu C + mu^2 D
//! ```
//!
//! with `Pi = E[(u u^T) (x) (u u^T)]`. For zero-mean white Gaussian
//! regressors `Pi` has the exact fourth-moment closed form
//! `sigma_u^4 (I + K + vec(I) vec(I)^T)` where `K` is the commutation
//! matrix. The weighted variance relation
//!
//! ```text
//! E||w~(n+1)||^2_sigma = E||w~(n)||^2_{F sigma} + mu^2 sigma_v^2 gamma^T sigma
//! ```
//!
//! then yields the transient MSD by propagating `sigma`, the steady-state
//! MSD in closed form, and the mean-square stability range of the step size.
//!
//! The gain moments `G_bar = E[G]` and `E(G (x) G)` are not specified by the
//! recursion itself; they are either evaluated at the true system ("plugin",
//! justified near convergence where the gains change slowly) or averaged
//! over steady-state weight samples from a pilot run ("empirical").

pub mod kron;

use crate::error::{Error, Result};
use crate::gain::{gain_vector, GainRule, GainVariant};
use kron::{commutation_matrix, vec_identity, vec_of};
use nalgebra::{Complex, DMatrix, DVector};

/// Tolerance used to decide whether an eigenvalue is real and positive.
const EIG_REAL_TOL: f64 = 1e-9;

/// Eigenvalues of a general square matrix through a bounded Schur pass.
///
/// The companion matrices arising here can be badly defective (white-input
/// LMS makes C a multiple of the identity), and the QR iteration then stalls
/// short of machine precision, so both the tolerance and the iteration count
/// are capped.
fn complex_eigenvalues_bounded(m: &DMatrix<f64>) -> Result<DVector<Complex<f64>>> {
    for eps in [1e-12, 1e-9] {
        if let Some(schur) = nalgebra::linalg::Schur::try_new(m.clone(), eps, 100_000) {
            return Ok(schur.complex_eigenvalues());
        }
    }
    Err(Error::Singular {
        context: "eigenvalue iteration (Schur) did not converge",
    })
}

/// How the gain moments are obtained.
#[derive(Debug, Clone, Copy)]
pub enum GainMomentsMode<'a> {
    /// Evaluate the gain rule at the true system `w_opt`.
    Plugin,
    /// Average `G` and `G (x) G` over an ensemble of weight vectors,
    /// typically steady-state samples from a pilot simulation.
    Empirical(&'a [Vec<f64>]),
}

/// First and second gain moments, both diagonal because `G(n)` is diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMoments {
    /// Diagonal of `G_bar = E[G(n)]`.
    pub g_bar: DVector<f64>,
    /// Diagonal of `E(G (x) G)`, length `L^2`.
    pub g_kron: DVector<f64>,
}

/// Estimate `(G_bar, E(G (x) G))` for a rule.
pub fn estimate_gain_moments(
    w_opt: &[f64],
    rule: &GainRule,
    mode: GainMomentsMode<'_>,
) -> Result<GainMoments> {
    let l = w_opt.len();
    match mode {
        GainMomentsMode::Plugin => {
            let g = gain_vector(w_opt, rule)?;
            let g = DVector::from_vec(g.into_vec());
            let mut g_kron = DVector::zeros(l * l);
            for i in 0..l {
                for k in 0..l {
                    g_kron[i * l + k] = g[i] * g[k];
                }
            }
            Ok(GainMoments { g_bar: g, g_kron })
        }
        GainMomentsMode::Empirical(samples) => {
            if samples.is_empty() {
                return Err(Error::EmptyEnsemble);
            }
            let mut g_bar = DVector::zeros(l);
            let mut g_kron = DVector::zeros(l * l);
            for w in samples {
                if w.len() != l {
                    return Err(Error::DimensionMismatch {
                        context: "gain moment sample",
                        expected: l,
                        got: w.len(),
                    });
                }
                let g = gain_vector(w, rule)?;
                let g = g.as_slice();
                for i in 0..l {
                    g_bar[i] += g[i];
                    for k in 0..l {
                        g_kron[i * l + k] += g[i] * g[k];
                    }
                }
            }
            let inv = 1.0 / samples.len() as f64;
            Ok(GainMoments {
                g_bar: g_bar * inv,
                g_kron: g_kron * inv,
            })
        }
    }
}

/// Fourth-moment matrix `Pi = E[(u u^T) (x) (u u^T)]` for zero-mean white
/// Gaussian regressors with `R = sigma_u^2 I`.
pub fn build_pi(l: usize, sigma_u2: f64) -> DMatrix<f64> {
    assert!(l >= 1, "filter length must be at least 1");
    assert!(sigma_u2 > 0.0, "input variance must be positive");
    let n = l * l;
    let v = vec_identity(l);
    let mut pi = commutation_matrix(l);
    for i in 0..n {
        pi[(i, i)] += 1.0;
    }
    pi += &v * v.transpose();
    pi * (sigma_u2 * sigma_u2)
}

/// Empirical estimate of `Pi` from raw regressor draws; the fallback for
/// input models without a closed form (and the oracle used in tests).
pub fn estimate_pi(draws: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let l = draws.first().map(|d| d.len()).ok_or(Error::EmptyEnsemble)?;
    let n = l * l;
    let mut pi = DMatrix::zeros(n, n);
    for u in draws {
        if u.len() != l {
            return Err(Error::DimensionMismatch {
                context: "regressor draw",
                expected: l,
                got: u.len(),
            });
        }
        for j in 0..l {
            for ll in 0..l {
                let col = j * l + ll;
                let w = u[j] * u[ll];
                for i in 0..l {
                    let base = i * l;
                    let ui_w = u[i] * w;
                    for k in 0..l {
                        pi[(base + k, col)] += ui_w * u[k];
                    }
                }
            }
        }
    }
    Ok(pi / draws.len() as f64)
}

/// Mean stability limits on the step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStabilityBound {
    /// `2 / (g_max lambda_max(R))`, the matrix-norm bound.
    pub mu_max: f64,
    /// `2 / lambda_max(G_bar R)`, the sharper spectral bound.
    pub mu_max_sharp: f64,
}

/// Mean-square stability limits on the step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsStabilityRange {
    /// `min(cd_bound, h_bound)`: `F(mu)` is stable for `0 < mu < mu_max`.
    pub mu_max: f64,
    /// `1 / lambda_max(C^-1 D)`; infinite if that matrix has no real
    /// positive eigenvalue.
    pub cd_bound: f64,
    /// `1 / max(lambda(H))` over real positive eigenvalues of the companion
    /// `H = [[C/2, -D/2], [I, 0]]`; infinite if there are none.
    pub h_bound: f64,
}

/// All second-moment machinery for one (rule, system, step size) triple.
#[derive(Debug, Clone)]
pub struct TheoryModel {
    l: usize,
    mu: f64,
    sigma_u2: f64,
    sigma_v2: f64,
    rule: GainRule,
    w_opt: Vec<f64>,
    r: DMatrix<f64>,
    g_bar: DVector<f64>,
    g_kron: DVector<f64>,
    pi: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    f: DMatrix<f64>,
    gamma: DVector<f64>,
}

impl TheoryModel {
    /// Assemble the model for white Gaussian input with `R = sigma_u2 I`.
    pub fn build(
        w_opt: &[f64],
        rule: &GainRule,
        mu: f64,
        sigma_u2: f64,
        sigma_v2: f64,
        moments: GainMomentsMode<'_>,
    ) -> Result<TheoryModel> {
        let l = w_opt.len();
        if l == 0 {
            return Err(Error::InvalidParameter {
                name: "w_opt",
                message: "system must have at least one tap".into(),
            });
        }
        if w_opt.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context: "w_opt" });
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                message: format!("step size must be nonnegative, got {mu}"),
            });
        }
        if !(sigma_u2.is_finite() && sigma_u2 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_u2",
                message: format!("input variance must be positive, got {sigma_u2}"),
            });
        }
        if !(sigma_v2.is_finite() && sigma_v2 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_v2",
                message: format!("noise variance must be nonnegative, got {sigma_v2}"),
            });
        }

        let GainMoments { g_bar, g_kron } = estimate_gain_moments(w_opt, rule, moments)?;
        if matches!(
            rule.variant(),
            GainVariant::StandardLms | GainVariant::Plms | GainVariant::MuLawPlms
        ) {
            let trace = g_bar.sum();
            if ((trace - l as f64) / l as f64).abs() > 1e-8 {
                return Err(Error::InvalidParameter {
                    name: "g_bar",
                    message: format!("trace {trace} deviates from L = {l}"),
                });
            }
        }

        let n = l * l;
        let r = DMatrix::identity(l, l) * sigma_u2;
        let pi = build_pi(l, sigma_u2);

        // C = (I (x) R G_bar) + (R G_bar (x) I). R is diagonal here, so both
        // Kronecker factors are diagonal and C is too, but the assembly below
        // stays valid for any diagonal G_bar and square R.
        let rg = &r * DMatrix::from_diagonal(&g_bar);
        let identity_l = DMatrix::identity(l, l);
        let c = identity_l.kronecker(&rg) + rg.kronecker(&identity_l);

        // D = Pi E(G (x) G): scale the columns of Pi by the diagonal moments.
        let mut d = pi.clone();
        for (j, mut col) in d.column_iter_mut().enumerate() {
            let scale = g_kron[j];
            for x in col.iter_mut() {
                *x *= scale;
            }
        }

        let mu2 = mu * mu;
        let mut f = DMatrix::identity(n, n);
        f.zip_zip_apply(&c, &d, |fx, cx, dx| {
            *fx = (*fx - mu * cx) + mu2 * dx;
        });

        // gamma = E(G (x) G) vec(R).
        let vec_r = vec_of(&r);
        let gamma = DVector::from_fn(n, |i, _| g_kron[i] * vec_r[i]);

        Ok(TheoryModel {
            l,
            mu,
            sigma_u2,
            sigma_v2,
            rule: *rule,
            w_opt: w_opt.to_vec(),
            r,
            g_bar,
            g_kron,
            pi,
            c,
            d,
            f,
            gamma,
        })
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma_u2(&self) -> f64 {
        self.sigma_u2
    }

    pub fn sigma_v2(&self) -> f64 {
        self.sigma_v2
    }

    pub fn rule(&self) -> &GainRule {
        &self.rule
    }

    pub fn w_opt(&self) -> &[f64] {
        &self.w_opt
    }

    pub fn w_opt_norm2(&self) -> f64 {
        self.w_opt.iter().map(|x| x * x).sum()
    }

    pub fn autocorrelation(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Diagonal of `G_bar`.
    pub fn g_bar(&self) -> &DVector<f64> {
        &self.g_bar
    }

    /// Diagonal of `E(G (x) G)`.
    pub fn g_kron(&self) -> &DVector<f64> {
        &self.g_kron
    }

    pub fn pi(&self) -> &DMatrix<f64> {
        &self.pi
    }

    pub fn c_matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d_matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn f_matrix(&self) -> &DMatrix<f64> {
        &self.f
    }

    /// `gamma = E(G (x) G) vec(R)`, the noise loading of the variance
    /// relation.
    pub fn noise_gamma(&self) -> &DVector<f64> {
        &self.gamma
    }

    /// Mean recursion matrix `B = I - mu G_bar R`: the mean weight error
    /// evolves as `E[w~(n)] = B^n w~(0)`.
    pub fn mean_recursion_matrix(&self) -> DMatrix<f64> {
        let gr = DMatrix::from_diagonal(&self.g_bar) * &self.r;
        DMatrix::identity(self.l, self.l) - gr * self.mu
    }

    /// Step-size limits for convergence in the mean.
    pub fn mean_stability_bound(&self) -> Result<MeanStabilityBound> {
        let lambda_r = self
            .r
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if lambda_r <= 0.0 {
            return Err(Error::Singular {
                context: "autocorrelation matrix (lambda_max <= 0)",
            });
        }
        let g_max = self.g_bar.max();
        // G_bar R is similar to the symmetric G^(1/2) R G^(1/2).
        let sqrt_g = self.g_bar.map(f64::sqrt);
        let mut grg = self.r.clone();
        for i in 0..self.l {
            for j in 0..self.l {
                grg[(i, j)] *= sqrt_g[i] * sqrt_g[j];
            }
        }
        let lambda_gr = grg
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(MeanStabilityBound {
            mu_max: 2.0 / (g_max * lambda_r),
            mu_max_sharp: 2.0 / lambda_gr,
        })
    }

    /// True when C is diagonal and the kron moments are strictly positive,
    /// which makes `F` similar to a symmetric matrix via `M^(-1/2)`.
    fn symmetric_route(&self) -> bool {
        if self.g_kron.min() <= 0.0 {
            return false;
        }
        let n = self.l * self.l;
        for i in 0..n {
            for j in 0..n {
                if i != j && self.c[(i, j)] != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// `M^(1/2) Pi M^(1/2)`, the symmetric matrix similar to `D = Pi M`.
    fn d_symmetrized(&self) -> DMatrix<f64> {
        let sqrt_m = self.g_kron.map(f64::sqrt);
        let n = self.l * self.l;
        let mut sym = self.pi.clone();
        for i in 0..n {
            for j in 0..n {
                sym[(i, j)] *= sqrt_m[i] * sqrt_m[j];
            }
        }
        sym
    }

    /// Spectral radius of `F`.
    ///
    /// `F = I - mu C + mu^2 Pi M` with diagonal `C` and positive diagonal `M`
    /// is similar to the symmetric `I - mu C + mu^2 M^(1/2) Pi M^(1/2)`, so
    /// the spectrum is real and a symmetric eigensolve suffices; otherwise we
    /// fall back to the dense nonsymmetric solver.
    pub fn spectral_radius_f(&self) -> Result<f64> {
        if self.symmetric_route() {
            let n = self.l * self.l;
            let mut fs = self.d_symmetrized() * (self.mu * self.mu);
            for i in 0..n {
                fs[(i, i)] += 1.0 - self.mu * self.c[(i, i)];
            }
            Ok(fs
                .symmetric_eigenvalues()
                .iter()
                .fold(0.0_f64, |m, &x| m.max(x.abs())))
        } else {
            Ok(complex_eigenvalues_bounded(&self.f)?
                .iter()
                .fold(0.0_f64, |m, x| m.max(x.norm())))
        }
    }

    /// Predicted transient `E||w~(n)||^2` for `n = 0..=n_iters`, by
    /// propagating the weighting vector through `F` (never forming powers
    /// of `F`):
    ///
    /// ```text
    /// E||w~(n)||^2 = (w~(0) (x) w~(0))^T F^n vec(I)
    ///                + mu^2 sigma_v^2 gamma^T sum_{i<n} F^i vec(I)
    /// ```
    pub fn transient_curve(&self, w0_error: &[f64], n_iters: usize) -> Result<Vec<f64>> {
        if w0_error.len() != self.l {
            return Err(Error::DimensionMismatch {
                context: "transient_curve initial error",
                expected: self.l,
                got: w0_error.len(),
            });
        }
        let n = self.l * self.l;
        let mut q = DVector::zeros(n);
        for i in 0..self.l {
            for k in 0..self.l {
                // column-major vec of the outer product w0 w0^T
                q[i * self.l + k] = w0_error[i] * w0_error[k];
            }
        }
        let noise_scale = self.mu * self.mu * self.sigma_v2;
        let mut sigma = vec_identity(self.l);
        let mut accum: DVector<f64> = DVector::zeros(n);
        let mut curve = Vec::with_capacity(n_iters + 1);
        for iter in 0..=n_iters {
            let msd = q.dot(&sigma) + noise_scale * self.gamma.dot(&accum);
            if !msd.is_finite() {
                return Err(Error::Diverged { iteration: iter });
            }
            curve.push(msd);
            if iter < n_iters {
                accum += &sigma;
                sigma = &self.f * sigma;
            }
        }
        Ok(curve)
    }

    /// Steady-state MSD `mu^2 sigma_v^2 gamma^T (I - F)^-1 vec(I)`.
    ///
    /// Requires a stable `F`; the resolvent is applied through a linear
    /// solve, not an explicit inverse.
    pub fn steady_state_msd(&self) -> Result<f64> {
        let rho = self.spectral_radius_f()?;
        if rho >= 1.0 {
            return Err(Error::Unstable {
                spectral_radius: rho,
            });
        }
        let n = self.l * self.l;
        let mut i_minus_f = -self.f.clone();
        for i in 0..n {
            i_minus_f[(i, i)] += 1.0;
        }
        let x = i_minus_f.lu().solve(&vec_identity(self.l)).ok_or(Error::Singular {
            context: "I - F",
        })?;
        Ok(self.mu * self.mu * self.sigma_v2 * self.gamma.dot(&x))
    }

    /// Steady-state MSD normalized by `||w_opt||^2`, in dB.
    pub fn steady_state_msd_db(&self) -> Result<f64> {
        let norm2 = self.w_opt_norm2();
        if norm2 <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "w_opt",
                message: "cannot normalize by a zero system".into(),
            });
        }
        Ok(10.0 * (self.steady_state_msd()? / norm2).log10())
    }

    /// Mean-square stability range from the C/D split of `F`:
    /// `0 < mu < min(1/lambda_max(C^-1 D), 1/max(lambda(H)))`, where only
    /// real positive eigenvalues constrain the step size.
    ///
    /// For structured models the companion bound is located through the
    /// symmetric similarity of `F(mu)` rather than an eigensolve of `H`
    /// itself; the dense companion path is reserved for unstructured
    /// inputs, where the QR iteration is better conditioned.
    pub fn ms_stability_range(&self) -> Result<MsStabilityRange> {
        let structured = self.symmetric_route();
        let cd_bound = self.cd_bound(structured)?;
        let h_bound = if structured {
            self.h_bound_scan(cd_bound)
        } else {
            self.h_bound_dense()?
        };
        Ok(MsStabilityRange {
            mu_max: cd_bound.min(h_bound),
            cd_bound,
            h_bound,
        })
    }

    fn cd_bound(&self, structured: bool) -> Result<f64> {
        let n = self.l * self.l;
        let lambda_max = if structured {
            // C^-1 D is similar to C^(-1/2) M^(1/2) Pi M^(1/2) C^(-1/2).
            let sqrt_m = self.g_kron.map(f64::sqrt);
            let mut sym = self.pi.clone();
            for i in 0..n {
                let ci = self.c[(i, i)];
                if ci <= 0.0 {
                    return Err(Error::Singular { context: "C" });
                }
                for j in 0..n {
                    sym[(i, j)] *= sqrt_m[i] * sqrt_m[j] / (ci * self.c[(j, j)]).sqrt();
                }
            }
            sym.symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        } else {
            let solved = self
                .c
                .clone()
                .lu()
                .solve(&self.d)
                .ok_or(Error::Singular { context: "C" })?;
            max_real_positive_eigenvalue(&solved)?
        };
        Ok(if lambda_max > EIG_REAL_TOL {
            1.0 / lambda_max
        } else {
            f64::INFINITY
        })
    }

    fn h_bound_dense(&self) -> Result<f64> {
        let n = self.l * self.l;
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = 0.5 * self.c[(i, j)];
                h[(i, n + j)] = -0.5 * self.d[(i, j)];
            }
            h[(n + i, i)] = 1.0;
        }
        let lambda_max = max_real_positive_eigenvalue(&h)?;
        Ok(if lambda_max > EIG_REAL_TOL {
            1.0 / lambda_max
        } else {
            f64::INFINITY
        })
    }

    /// Companion bound for structured models, without forming `H`. A real
    /// positive eigenvalue `lambda` of `H` corresponds to `mu = 1/lambda`
    /// with `det(2I - mu C + mu^2 D) = 0`, i.e. an eigenvalue of `F(mu)`
    /// crossing -1; the smallest such `mu` (the binding one) is located by
    /// scanning `lambda_min` of the symmetric similarity of `F(mu)` and
    /// bisecting the first sign change of `lambda_min + 1`.
    fn h_bound_scan(&self, cd_bound: f64) -> f64 {
        let n = self.l * self.l;
        let d_sym = self.d_symmetrized();
        let lambda_min_plus_1 = |mu: f64| -> f64 {
            let mut fs = &d_sym * (mu * mu);
            for i in 0..n {
                fs[(i, i)] += 1.0 - mu * self.c[(i, i)];
            }
            fs.symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
                + 1.0
        };

        // lambda_min(F(mu)) >= 1 - mu lambda_max(C), so no crossing can
        // occur before mu = 2 / lambda_max(C).
        let c_max = (0..n).fold(0.0_f64, |m, i| m.max(self.c[(i, i)]));
        let mu_start = 2.0 / c_max;
        let mu_cap = if cd_bound.is_finite() {
            (4.0 * cd_bound).max(4.0 * mu_start)
        } else {
            4.0 * mu_start
        };
        let grid = 32;
        let mut lo = mu_start;
        if lambda_min_plus_1(lo) <= 0.0 {
            return lo;
        }
        let mut bracket = None;
        for k in 1..=grid {
            let hi = mu_start + (mu_cap - mu_start) * k as f64 / grid as f64;
            if lambda_min_plus_1(hi) <= 0.0 {
                bracket = Some((lo, hi));
                break;
            }
            lo = hi;
        }
        match bracket {
            None => f64::INFINITY,
            Some((mut lo, mut hi)) => {
                while hi - lo > 1e-10 * hi {
                    let mid = 0.5 * (lo + hi);
                    if lambda_min_plus_1(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

/// Largest real positive eigenvalue of a general square matrix, or negative
/// infinity when there is none.
fn max_real_positive_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Ok(complex_eigenvalues_bounded(m)?
        .iter()
        .filter(|z| z.im.abs() <= EIG_REAL_TOL * z.re.abs().max(1.0) && z.re > 0.0)
        .fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re)))
}
