//! Best rectifier factorization of a threshold-unit matrix under the induced
//! infinity norm of the transposed residual.

use nalgebra::DMatrix;

use super::encoding::EncodingMatrix;
use super::factor::{log2_exact, UMatrix, VMatrix};
use super::simplex::{LinearProgram, Relation};
use crate::error::{Error, Result};

pub const MAX_LP_BITS: usize = 10;

/// Upper bound accepted on the duality gap of a reported optimum.
pub const LP_GAP_TOLERANCE: f64 = 1e-7;

/// `||A^T||_inf`: the largest row L1 norm of `A^T`.
pub fn induced_inf_norm_transposed(a: &DMatrix<f64>) -> f64 {
    a.transpose().row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `||(V - U T)^T||_inf`.
pub fn residual_norm(v: &VMatrix, u: &UMatrix) -> Result<f64> {
    let ut = u.times_encoding()?;
    let vm = v.matrix();
    if ut.shape() != vm.shape() {
        return Err(Error::DimensionMismatch { expected: vm.ncols(), got: ut.ncols() });
    }
    Ok(induced_inf_norm_transposed(&(vm - ut)))
}

#[derive(Debug, Clone)]
pub struct InfNormFit {
    pub u: UMatrix,
    pub objective: f64,
    pub duality_gap: f64,
    pub dual_infeasibility: f64,
    pub pivots: usize,
}

/// `argmin_U ||(V - U T)^T||_inf` with the zero weight block of `U` enforced.
pub fn min_infnorm_factor(v: &VMatrix) -> Result<InfNormFit> {
    let all: Vec<usize> = (0..v.num_units()).collect();
    min_infnorm_factor_on(v, &all)
}

/// As [`min_infnorm_factor`], with the maximum taken only over the listed columns of `V`.
pub fn min_infnorm_factor_on(v: &VMatrix, columns: &[usize]) -> Result<InfNormFit> {
    let n = log2_exact(v.num_units())?;
    if n == 0 {
        return Err(Error::InvalidArgument("V needs at least two columns".into()));
    }
    if n > MAX_LP_BITS {
        return Err(Error::SizeGuard(format!("n = {n} exceeds the linear program limit {MAX_LP_BITS}")));
    }
    if let Some(&c) = columns.iter().find(|&&c| c >= v.num_units()) {
        return Err(Error::IndexOutOfRange(format!("column {c} of {}", v.num_units())));
    }
    let ext = EncodingMatrix::new(n)?.extended();
    let vm = v.matrix();
    let rows = vm.nrows();
    let d = rows - 1;

    let mut lp = LinearProgram::new();
    // u[r][k]: weight rows use k < n, the bias row also has w0 at k = n.
    let u: Vec<Vec<usize>> =
        (0..rows).map(|r| (0..if r == d { n + 1 } else { n }).map(|_| lp.add_var(0.0, true)).collect()).collect();
    let t = lp.add_var(1.0, false);
    for &i in columns {
        let mut slacks = Vec::with_capacity(rows);
        for (r, ur) in u.iter().enumerate() {
            let s = lp.add_var(0.0, false);
            slacks.push((s, 1.0));
            let ut: Vec<(usize, f64)> =
                ur.iter().enumerate().filter(|(k, _)| ext[(*k, i)] != 0.0).map(|(_, &var)| (var, 1.0)).collect();
            // (U T)_ri - s <= V_ri and -(U T)_ri - s <= -V_ri.
            let mut plus = ut.clone();
            plus.push((s, -1.0));
            lp.add_constraint(plus, Relation::Le, vm[(r, i)])?;
            let mut minus: Vec<(usize, f64)> = ut.into_iter().map(|(var, a)| (var, -a)).collect();
            minus.push((s, -1.0));
            lp.add_constraint(minus, Relation::Le, -vm[(r, i)])?;
        }
        slacks.push((t, -1.0));
        lp.add_constraint(slacks, Relation::Le, 0.0)?;
    }
    let sol = lp.solve().map_err(|e| Error::Solver(format!("internal error, the program is always feasible: {e}")))?;
    if sol.duality_gap > LP_GAP_TOLERANCE || sol.dual_infeasibility > LP_GAP_TOLERANCE {
        return Err(Error::Solver(format!(
            "optimality not certified (gap {:e}, dual infeasibility {:e})",
            sol.duality_gap, sol.dual_infeasibility
        )));
    }
    let mut um = DMatrix::zeros(rows, n + 1);
    for (r, ur) in u.iter().enumerate() {
        for (k, &var) in ur.iter().enumerate() {
            um[(r, k)] = sol.x[var];
        }
    }
    Ok(InfNormFit {
        u: UMatrix::new(um)?,
        objective: sol.objective,
        duality_gap: sol.duality_gap,
        dual_infeasibility: sol.dual_infeasibility,
        pivots: sol.pivots,
    })
}
