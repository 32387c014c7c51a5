//! Small complex linear-algebra helpers shared by the model and the solvers.

use nalgebra::{Complex, DMatrix, DVector};

use crate::tolerances::HERMITIAN_TOL;

pub type C64 = Complex<f64>;

/// Real part of the quadratic form x^H M x. For Hermitian M the imaginary
/// part is rounding noise and is dropped.
pub fn quad_form(m: &DMatrix<C64>, x: &DVector<C64>) -> f64 {
    let y = m * x;
    x.dotc(&y).re
}

/// Outer product u u^H.
pub fn outer(u: &DVector<C64>) -> DMatrix<C64> {
    u * u.adjoint()
}

/// Largest entry-wise deviation from Hermitian symmetry, max |M_ij - conj(M_ji)|.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Largest entry magnitude, used to scale symmetry/PSD tolerances.
pub fn max_entry_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn is_hermitian(m: &DMatrix<C64>) -> bool {
    m.is_square() && hermitian_defect(m) <= HERMITIAN_TOL * max_entry_norm(m).max(1.0)
}

/// Rotate a vector by a global phase so its largest-magnitude entry becomes
/// real and positive; exact magnitude ties keep the first index. This makes
/// eigenvector output deterministic. Zero vectors are left untouched.
pub fn phase_normalize(v: &mut DVector<C64>) {
    let mut idx = 0;
    let mut best = 0.0f64;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best {
            best = mag;
            idx = i;
        }
    }
    if best == 0.0 {
        return;
    }
    let factor = v[idx].conj() / C64::new(best, 0.0);
    for z in v.iter_mut() {
        *z *= factor;
    }
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues sorted in
/// descending order and eigenvectors phase-normalized. The caller is
/// responsible for passing a (numerically) Hermitian matrix.
pub fn hermitian_eigen_desc(m: &DMatrix<C64>) -> (Vec<f64>, Vec<DVector<C64>>) {
    let se = m.clone().symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &i in &order {
        values.push(se.eigenvalues[i]);
        let mut v = se.eigenvectors.column(i).into_owned();
        phase_normalize(&mut v);
        vectors.push(v);
    }
    (values, vectors)
}
