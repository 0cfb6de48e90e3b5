//! Eigenvalues of real symmetric tridiagonal matrices by implicit QL with
//! Wilkinson-type shifts.

use super::model::OperatorModel;
use super::LatticeError;

/// Largest box accepted by [`finite_box_spectrum`].
pub const MAX_BOX_SITES: usize = 20_001;

/// Eigenvalues (ascending) of the symmetric tridiagonal matrix with
/// diagonal `diag` and off-diagonal `off` (`off[i]` couples `i`, `i+1`).
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, LatticeError> {
    let n = diag.len();
    if n == 0 {
        return Ok(vec![]);
    }
    assert_eq!(off.len() + 1, n, "off-diagonal length must be n-1");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(LatticeError::EigenNotConverged { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d)
}

/// Spectrum of `H` restricted to `[-half_width, half_width]` with Dirichlet
/// boundary conditions.
///
/// The Hermitian truncation with weights `w_n` is unitarily equivalent (by
/// a diagonal phase gauge) to the real symmetric one with weights `|w_n|`.
pub fn finite_box_spectrum(model: &OperatorModel, half_width: i64) -> Result<Vec<f64>, LatticeError> {
    box_spectrum_range(model, -half_width, half_width)
}

/// Spectrum of the Dirichlet truncation to sites `lo..=hi`.
pub fn box_spectrum_range(model: &OperatorModel, lo: i64, hi: i64) -> Result<Vec<f64>, LatticeError> {
    let n = (hi - lo + 1).max(0) as usize;
    if n > MAX_BOX_SITES {
        return Err(LatticeError::WindowTooLarge { len: n as u64, cap: MAX_BOX_SITES as u64 });
    }
    model.check_covers(lo, hi)?;
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for j in lo..=hi {
        let (w, v) = model.site(j);
        diag.push(v);
        if j < hi {
            off.push(w.norm());
        }
    }
    tridiagonal_eigenvalues(&diag, &off)
}

/// Box eigenvalues that move by less than `tol (1 + |E|)` when the box is
/// enlarged on both sides: bulk states rather than boundary artefacts.
///
/// Falls back to the full list if no eigenvalue is stable.
pub fn stable_box_spectrum(model: &OperatorModel, half_width: i64, tol: f64) -> Result<Vec<f64>, LatticeError> {
    let base = finite_box_spectrum(model, half_width)?;
    let pad = (half_width / 8).max(8);
    let wider = box_spectrum_range(model, -half_width - pad, half_width + pad + 3)?;
    let stable: Vec<f64> = base
        .iter()
        .copied()
        .filter(|&e| {
            let k = wider.partition_point(|&x| x < e);
            let near = [k.checked_sub(1), Some(k)]
                .into_iter()
                .flatten()
                .filter_map(|i| wider.get(i))
                .map(|x| (x - e).abs())
                .fold(f64::INFINITY, f64::min);
            near <= tol * (1.0 + e.abs())
        })
        .collect();
    Ok(if stable.is_empty() { base } else { stable })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_site_laplacian() {
        let ev = tridiagonal_eigenvalues(&[0.0; 3], &[1.0, 1.0]).unwrap();
        let s = 2f64.sqrt();
        for (a, b) in ev.iter().zip([-s, 0.0, s]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn free_laplacian_box_matches_cosines() {
        let n = 101usize;
        let ev = finite_box_spectrum(&OperatorModel::free(), 50).unwrap();
        let mut exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 * (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos())
            .collect();
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_large_box() {
        assert!(matches!(
            finite_box_spectrum(&OperatorModel::free(), 20_000),
            Err(LatticeError::WindowTooLarge { .. })
        ));
    }
}
