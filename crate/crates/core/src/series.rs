//! Dof-level engine for expansions in inverse powers of a large inclusion coefficient.
//!
//! With `K(η) = K_bg + η K_inc`, the terms of `u = Σ η^{-j} u_j` satisfy
//! `K_inc u_0 = 0` and `K_bg u_j + K_inc u_{j+1} = F δ_{j0}` away from the outer
//! boundary. Each step is a kernel-constrained Neumann solve per inclusion, a
//! harmonic extension into the background and a small balancing solve on the span
//! of the characteristic fields. The engine is shared by the scalar, elastic and
//! one-dimensional problems, which differ only in their matrices and kernel modes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{dense_spd_solve, dot, is_spd, norm2, CsrMatrix, DirichletSolver, LuFactor, NeumannSolver};

/// Relative flux-balance violation above which a term is rejected.
pub const FLUX_BALANCE_LIMIT: f64 = 1e-8;

/// Description of a stiff-inclusion problem at the dof level.
pub struct StiffSystem {
    /// Stiffness of the background elements (unit coefficient).
    pub background: CsrMatrix,
    /// Stiffness of the inclusion elements (unit coefficient).
    pub inclusion: CsrMatrix,
    /// Dofs carrying Dirichlet data.
    pub outer_dofs: Vec<usize>,
    /// Sorted dofs of each inclusion closure.
    pub closures: Vec<Vec<usize>>,
    /// Kernel modes of each inclusion operator, over that inclusion's closure dofs.
    pub modes: Vec<Vec<Vec<f64>>>,
    /// Lumped-mass weights over each closure's dofs, used by the Neumann constraints.
    pub weights: Vec<Vec<f64>>,
}

/// Characteristic fields, the coarse Gram matrix and factored subproblems.
pub struct StiffEngine {
    system: StiffSystem,
    background_solver: DirichletSolver,
    neumann: Vec<NeumannSolver>,
    /// `(inclusion, mode)` for each characteristic field.
    labels: Vec<(usize, usize)>,
    characteristics: Vec<Vec<f64>>,
    /// `K_bg χ_k` for each characteristic field.
    characteristic_flux: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    tol: f64,
}

/// One computed term with its balancing constants.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub field: Vec<f64>,
    /// One constant per characteristic field.
    pub constants: Vec<f64>,
    /// Largest `|χ_kᵀ K_bg u| / (‖u‖ ‖χ_k‖)` in the background energy. Zero for `u_0`,
    /// which is balanced against the load instead.
    pub flux_residual: f64,
    /// Largest compatibility defect of the Neumann loads that produced this term.
    pub compatibility_defect: f64,
    /// Norm of the extension before the balancing correction, in the unit-coefficient
    /// energy over the whole domain. Equals the term's own norm for `u_0`.
    pub extension_norm: f64,
}

/// Leading term together with its background part `u_{0,0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadingTerm {
    pub term: Term,
    pub background_part: Vec<f64>,
}

impl StiffEngine {
    pub fn new(system: StiffSystem, tol: f64) -> Result<Self> {
        Self::with_characteristics(system, None, tol)
    }

    /// Like [`StiffEngine::new`], reusing previously computed characteristic fields.
    /// Supplied fields are checked against their defining equations and rejected with a
    /// validation error if they do not satisfy them.
    pub fn with_characteristics(system: StiffSystem, supplied: Option<Vec<Vec<f64>>>, tol: f64) -> Result<Self> {
        let n = system.background.dim();
        if system.inclusion.dim() != n {
            return Err(Error::Dimension { expected: n, found: system.inclusion.dim() });
        }
        let m = system.closures.len();
        if system.modes.len() != m || system.weights.len() != m {
            return Err(Error::validation("closures, modes and weights must have equal length"));
        }
        let mut owner = vec![usize::MAX; n];
        for &d in &system.outer_dofs {
            owner[d] = m;
        }
        for (k, closure) in system.closures.iter().enumerate() {
            for &d in closure {
                if owner[d] != usize::MAX {
                    return Err(Error::validation(format!(
                        "dof {d} belongs to inclusion {} and to another closure or the outer boundary",
                        k + 1
                    )));
                }
                owner[d] = k;
            }
        }
        let mut fixed: Vec<usize> = system.outer_dofs.clone();
        fixed.extend(system.closures.iter().flatten().copied());
        fixed.sort_unstable();
        let background_solver = DirichletSolver::new(&system.background, &fixed, tol)?;

        let labels: Vec<(usize, usize)> = system
            .modes
            .iter()
            .enumerate()
            .flat_map(|(k, modes)| (0..modes.len()).map(move |l| (k, l)))
            .collect();
        let zeros = vec![0.0; n];
        let boundary_data = |k: usize, l: usize| {
            let mut values = vec![0.0; n];
            for (i, &d) in system.closures[k].iter().enumerate() {
                values[d] = system.modes[k][l][i];
            }
            values
        };
        let characteristics: Vec<Vec<f64>> = match supplied {
            Some(fields) => fields,
            None => labels
                .par_iter()
                .map(|&(k, l)| background_solver.solve(&zeros, &boundary_data(k, l)))
                .collect::<Result<_>>()?,
        };
        if characteristics.len() != labels.len() {
            return Err(Error::Dimension { expected: labels.len(), found: characteristics.len() });
        }
        let characteristic_flux: Vec<Vec<f64>> = characteristics
            .par_iter()
            .map(|c| system.background.matvec(c))
            .collect::<Result<_>>()?;
        let flux_scale = system.background.norm_inf();
        for (idx, (&(k, l), (c, kc))) in labels.iter().zip(characteristics.iter().zip(&characteristic_flux)).enumerate() {
            let data = boundary_data(k, l);
            let data_gap = (0..n)
                .filter(|&d| background_solver.is_fixed(d))
                .fold(0.0f64, |m, d| m.max((c[d] - data[d]).abs()));
            let interior_flux = background_solver
                .free_dofs()
                .iter()
                .fold(0.0f64, |m, &d| m.max(kc[d].abs()));
            if data_gap > 0.0 || interior_flux > tol.max(1e-12) * flux_scale {
                return Err(Error::validation(format!(
                    "characteristic field {idx} is not discrete harmonic with its boundary data"
                )));
            }
        }
        let gram: Vec<Vec<f64>> = characteristics
            .iter()
            .map(|a| characteristic_flux.iter().map(|kb| dot(a, kb)).collect())
            .collect();
        if !is_spd(&gram) {
            return Err(Error::Internal("coarse Gram matrix is not positive definite".into()));
        }

        let neumann: Vec<NeumannSolver> = (0..m)
            .into_par_iter()
            .map(|k| {
                let local = system.inclusion.restrict(&system.closures[k]);
                NeumannSolver::new(&local, system.modes[k].clone(), &system.weights[k], tol)
            })
            .collect::<Result<_>>()?;

        Ok(Self { system, background_solver, neumann, labels, characteristics, characteristic_flux, gram, tol })
    }

    pub fn system(&self) -> &StiffSystem {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.system.background.dim()
    }

    pub fn characteristics(&self) -> &[Vec<f64>] {
        &self.characteristics
    }

    /// `(inclusion index from 0, mode index)` of each characteristic field.
    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    /// Gram matrix `χ_aᵀ K_bg χ_b`.
    pub fn gram(&self) -> &[Vec<f64>] {
        &self.gram
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Background solve with `load` on background rows, `outer_values` on the outer
    /// dofs and zero on every inclusion closure.
    pub fn background_part(&self, load: &[f64], outer_values: &[f64]) -> Result<Vec<f64>> {
        if outer_values.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: outer_values.len() });
        }
        let mut fixed = vec![0.0; self.dim()];
        for &d in &self.system.outer_dofs {
            fixed[d] = outer_values[d];
        }
        self.background_solver.solve(load, &fixed)
    }

    /// Leading term: background part plus the Galerkin projection onto the
    /// characteristic fields.
    pub fn leading_term(&self, load: &[f64], outer_values: &[f64]) -> Result<LeadingTerm> {
        let n = self.dim();
        if load.len() != n || outer_values.len() != n {
            return Err(Error::Dimension { expected: n, found: load.len().min(outer_values.len()) });
        }
        let u00 = self.background_part(load, outer_values)?;
        let ku00 = self.system.background.matvec(&u00)?;
        let rhs: Vec<f64> = self.characteristics.iter().map(|c| dot(c, load) - dot(c, &ku00)).collect();
        let constants = dense_spd_solve(&self.gram, &rhs)?;
        let field = self.combine(&u00, &constants);
        let extension_norm = self.energy_norm(&field)?;
        Ok(LeadingTerm {
            term: Term { field, constants, flux_residual: 0.0, compatibility_defect: 0.0, extension_norm },
            background_part: u00,
        })
    }

    /// Next term from the current one; `load` is `Some` only when stepping from `u_0`.
    pub fn next_term(&self, current: &[f64], load: Option<&[f64]>) -> Result<Term> {
        let n = self.dim();
        if current.len() != n {
            return Err(Error::Dimension { expected: n, found: current.len() });
        }
        let flux = self.system.background.matvec(current)?;
        // Defects are measured against the size of the flux data rather than the
        // assembled load alone, which may vanish up to rounding.
        let flux_scale = self.system.background.norm_inf() * current.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let local: Vec<(Vec<f64>, f64)> = (0..self.neumann.len())
            .into_par_iter()
            .map(|k| {
                let closure = &self.system.closures[k];
                let rhs: Vec<f64> = closure
                    .iter()
                    .map(|&d| load.map_or(0.0, |f| f[d]) - flux[d])
                    .collect();
                let sol = self.neumann[k].solve(&rhs)?;
                let rhs_norm = norm2(&rhs);
                let scale = rhs_norm + flux_scale * (closure.len() as f64).sqrt();
                let defect = if scale > 0.0 { sol.compatibility_defect * rhs_norm / scale } else { 0.0 };
                Ok((sol.u, defect))
            })
            .collect::<Result<_>>()?;
        let mut interface_values = vec![0.0; n];
        let mut compatibility_defect: f64 = 0.0;
        for (k, (u, defect)) in local.iter().enumerate() {
            compatibility_defect = compatibility_defect.max(*defect);
            for (i, &d) in self.system.closures[k].iter().enumerate() {
                interface_values[d] = u[i];
            }
        }
        if compatibility_defect > FLUX_BALANCE_LIMIT {
            return Err(Error::Internal(format!(
                "inclusion Neumann load is incompatible (defect {compatibility_defect:.3e}); the previous term is not balanced"
            )));
        }
        let extension = self.background_solver.solve(&vec![0.0; n], &interface_values)?;
        let rhs: Vec<f64> = self.characteristic_flux.iter().map(|kc| -dot(kc, &extension)).collect();
        let constants = dense_spd_solve(&self.gram, &rhs)?;
        let field = self.combine(&extension, &constants);
        let flux_residual = self.flux_residual(&field)?;
        if flux_residual > FLUX_BALANCE_LIMIT {
            return Err(Error::Internal(format!(
                "flux balance violated after correction: {flux_residual:.3e}"
            )));
        }
        let extension_norm = self.energy_norm(&extension)?;
        Ok(Term { field, constants, flux_residual, compatibility_defect, extension_norm })
    }

    /// `sqrt(uᵀ(K_bg + K_inc)u)`.
    pub fn energy_norm(&self, u: &[f64]) -> Result<f64> {
        let k0 = &self.system.background;
        let k1 = &self.system.inclusion;
        Ok((k0.bilinear(u, u)? + k1.bilinear(u, u)?).max(0.0).sqrt())
    }

    /// Largest normalized background flux of `u` against the characteristic fields.
    pub fn flux_residual(&self, u: &[f64]) -> Result<f64> {
        let k1 = &self.system.inclusion;
        let u_norm = self.energy_norm(u)?;
        if u_norm == 0.0 {
            return Ok(0.0);
        }
        let mut worst: f64 = 0.0;
        for (c, kc) in self.characteristics.iter().zip(&self.characteristic_flux) {
            let c_norm = (dot(c, kc) + k1.bilinear(c, c)?).max(0.0).sqrt();
            worst = worst.max(dot(kc, u).abs() / (u_norm * c_norm));
        }
        Ok(worst)
    }

    /// Leading term followed by `count` further terms.
    pub fn expand(&self, load: &[f64], outer_values: &[f64], count: usize) -> Result<(LeadingTerm, Vec<Term>)> {
        let lead = self.leading_term(load, outer_values)?;
        let mut terms: Vec<Term> = Vec::with_capacity(count);
        for j in 0..count {
            let prev = terms.last().map_or(&lead.term.field, |t| &t.field);
            let next = self.next_term(prev, (j == 0).then_some(load))?;
            terms.push(next);
        }
        Ok((lead, terms))
    }

    /// Direct solve of `(K_bg + η K_inc) u = load` with `outer_values` on the outer dofs.
    ///
    /// For `η > 1` the inclusion block is rewritten in terms of the scaled flux
    /// variable `w = η (u − Σ α_l z_l)` on each closure, with `z_l` the kernel modes.
    /// The resulting system has entries of order one and `1/η`, so its conditioning
    /// does not degrade as the contrast grows.
    pub fn direct(&self, eta: f64, load: &[f64], outer_values: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if load.len() != n || outer_values.len() != n {
            return Err(Error::Dimension { expected: n, found: load.len().min(outer_values.len()) });
        }
        if eta <= 1.0 || self.system.closures.is_empty() {
            let matrix = self.system.background.add_scaled(eta, &self.system.inclusion)?;
            let solver = DirichletSolver::new(&matrix, &self.system.outer_dofs, self.tol)?;
            return solver.solve(load, outer_values);
        }
        self.direct_scaled(eta, load, outer_values)
    }

    fn direct_scaled(&self, eta: f64, load: &[f64], outer_values: &[f64]) -> Result<Vec<f64>> {
        let sys = &self.system;
        let n = self.dim();
        let mut is_outer = vec![false; n];
        for &d in &sys.outer_dofs {
            is_outer[d] = true;
        }
        // unknown layout: free u dofs, then w per closure dof, then α per mode
        let mut u_index = vec![usize::MAX; n];
        let mut count = 0;
        for d in 0..n {
            if !is_outer[d] {
                u_index[d] = count;
                count += 1;
            }
        }
        let mut w_index = vec![usize::MAX; n];
        for &d in sys.closures.iter().flatten() {
            w_index[d] = count;
            count += 1;
        }
        let alpha_start = count;
        count += self.labels.len();

        let mut triplets = Vec::new();
        let mut rhs = vec![0.0; count];
        for d in (0..n).filter(|&d| !is_outer[d]) {
            let row = u_index[d];
            rhs[row] = load[d];
            for (j, v) in sys.background.row(d) {
                if is_outer[j] {
                    rhs[row] -= v * outer_values[j];
                } else {
                    triplets.push((row, u_index[j], v));
                }
            }
            for (j, v) in sys.inclusion.row(d) {
                if w_index[j] == usize::MAX {
                    return Err(Error::validation(format!("inclusion stiffness couples dof {d} outside every closure")));
                }
                triplets.push((row, w_index[j], v));
            }
        }
        let mut alpha = alpha_start;
        for (k, closure) in sys.closures.iter().enumerate() {
            let weight_scale = sys.weights[k].iter().fold(0.0f64, |m, w| m.max(w.abs()));
            let weight_scale = if weight_scale > 0.0 { weight_scale } else { 1.0 };
            for (l, mode) in sys.modes[k].iter().enumerate() {
                for (i, &d) in closure.iter().enumerate() {
                    triplets.push((w_index[d], alpha + l, -mode[i]));
                    triplets.push((alpha + l, w_index[d], sys.weights[k][i] * mode[i] / weight_scale));
                }
            }
            for &d in closure {
                triplets.push((w_index[d], u_index[d], 1.0));
                triplets.push((w_index[d], w_index[d], -1.0 / eta));
            }
            alpha += sys.modes[k].len();
        }
        let factor = LuFactor::new(CsrMatrix::from_triplets(count, triplets), self.tol)?;
        let (x, _) = factor.solve(&rhs)?;
        Ok((0..n).map(|d| if is_outer[d] { outer_values[d] } else { x[u_index[d]] }).collect())
    }

    fn combine(&self, base: &[f64], constants: &[f64]) -> Vec<f64> {
        let mut out = base.to_vec();
        for (c, &x) in self.characteristics.iter().zip(constants) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += x * v;
            }
        }
        out
    }
}

/// `Σ_{j≤J} η^{-j} u_j`, evaluated by Horner's rule from the highest term.
pub fn partial_sum(terms: &[&[f64]], eta: f64) -> Vec<f64> {
    let n = terms.first().map_or(0, |t| t.len());
    let mut acc = vec![0.0; n];
    for t in terms.iter().rev() {
        for (a, v) in acc.iter_mut().zip(t.iter()) {
            *a = *a / eta + v;
        }
    }
    acc
}

/// Least-squares line through `log10` of the errors of successive partial sums.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DecayFit {
    /// Change of `log10(error)` per added term.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of leading errors used by the fit.
    pub points: usize,
}

impl DecayFit {
    /// Fitted error ratio between consecutive partial sums.
    pub fn ratio(&self) -> f64 {
        10f64.powf(self.slope)
    }
}

/// Fits the geometric phase of `errors`, indexed by truncation order. The fit keeps
/// the leading run in which every error is below half its predecessor and above
/// `floor`, so the rounding plateau is excluded. Needs at least three points.
pub fn decay_fit(errors: &[f64], floor: f64) -> Option<DecayFit> {
    let mut points = 0;
    for (j, &e) in errors.iter().enumerate() {
        if !(e > floor && e.is_finite()) || (j > 0 && e >= 0.5 * errors[j - 1]) {
            break;
        }
        points = j + 1;
    }
    if points < 3 {
        return None;
    }
    let xs: Vec<f64> = (0..points).map(|j| j as f64).collect();
    let ys: Vec<f64> = errors[..points].iter().map(|e| e.log10()).collect();
    let nf = points as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(DecayFit { slope, intercept: my - slope * mx, r_squared, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_sum_matches_explicit_powers() {
        let t0 = [1.0, 2.0];
        let t1 = [3.0, -1.0];
        let t2 = [0.5, 4.0];
        let s = partial_sum(&[&t0, &t1, &t2], 10.0);
        assert!((s[0] - (1.0 + 0.3 + 0.005)).abs() < 1e-15);
        assert!((s[1] - (2.0 - 0.1 + 0.04)).abs() < 1e-15);
    }

    #[test]
    fn decay_fit_recovers_geometric_ratio() {
        let errors: Vec<f64> = (0..6).map(|j| 0.3 * 0.1f64.powi(j)).chain([2e-6, 2e-6]).collect();
        let fit = decay_fit(&errors, 0.0).unwrap();
        assert_eq!(fit.points, 6);
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.ratio() - 0.1).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(decay_fit(&[1.0, 0.9, 0.8], 0.0).is_none());
    }
}
