//! Diagnostics: error norms, convergence rates, spectra, shoreline, total
//! variation and mass.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Result, SweError};
use crate::mesh::Mesh;

/// Normalized L2 error `|a - b| / |b|` under the mesh quadrature.
pub fn l2_error(mesh: &Mesh, computed: &[f64], exact: &[f64]) -> Result<f64> {
    let n = mesh.n_local();
    if computed.len() != n || exact.len() != n {
        return Err(SweError::SizeMismatch {
            expected: n,
            got: computed.len().min(exact.len()),
        });
    }
    if !(mesh.measure() > 0.0) {
        return Err(SweError::InvalidArgument("zero-measure domain".into()));
    }
    let m = mesh.mass();
    let num: f64 = (0..n).map(|k| m[k] * (computed[k] - exact[k]).powi(2)).sum();
    let den: f64 = (0..n).map(|k| m[k] * exact[k].powi(2)).sum();
    if den <= f64::MIN_POSITIVE {
        // Reference is identically zero: report the absolute norm.
        return Ok(num.sqrt());
    }
    Ok((num / den).sqrt())
}

/// Fitted slope of `log(error)` against `log(size)` (reported positive for decay).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceFit {
    pub rate: f64,
    /// False when errors do not decrease monotonically with the size.
    pub monotone: bool,
}

pub fn convergence_rate(sizes: &[f64], errors: &[f64]) -> Result<ConvergenceFit> {
    if sizes.len() != errors.len() {
        return Err(SweError::SizeMismatch {
            expected: sizes.len(),
            got: errors.len(),
        });
    }
    if sizes.len() < 3 {
        return Err(SweError::InvalidArgument(format!(
            "need at least 3 grid levels, got {}",
            sizes.len()
        )));
    }
    if sizes.iter().chain(errors).any(|v| !(*v > 0.0)) {
        return Err(SweError::InvalidArgument("sizes and errors must be positive".into()));
    }
    let xs: Vec<f64> = sizes.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let nf = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / nf, ys.iter().sum::<f64>() / nf);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let mut idx: Vec<usize> = (0..sizes.len()).collect();
    idx.sort_by(|&a, &b| sizes[a].total_cmp(&sizes[b]));
    let monotone = idx.windows(2).all(|w| errors[w[0]] < errors[w[1]]);
    if !monotone {
        log::warn!("error sequence is not monotone in the grid size");
    }
    Ok(ConvergenceFit {
        rate: sxy / sxx,
        monotone,
    })
}

/// One-sided energy spectrum of equispaced samples.
///
/// With `u_k = DFT(u)_k / n`, `E(0) = |u_0|^2 / 2`, `E(k) = |u_k|^2` for
/// `0 < k < n/2` and `E(n/2) = |u_{n/2}|^2 / 2`, so that `sum E = mean(u^2) / 2`.
/// Wavenumbers are `2 pi k / length` in rad/m.
pub fn energy_spectrum(samples: &[f64], length: f64) -> Result<Vec<(f64, f64)>> {
    let n = samples.len();
    if n < 8 {
        return Err(SweError::InvalidArgument(format!("need at least 8 samples, got {n}")));
    }
    if !(length > 0.0) {
        return Err(SweError::InvalidArgument("sample length must be positive".into()));
    }
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&u| Complex::new(u, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let half = n / 2;
    let mut out = Vec::with_capacity(half + 1);
    for k in 0..=half {
        let p = buf[k].norm_sqr() / (nf * nf);
        let e = if k == 0 || (n.is_multiple_of(2) && k == half) {
            0.5 * p
        } else {
            p
        };
        out.push((2.0 * std::f64::consts::PI * k as f64 / length, e));
    }
    Ok(out)
}

/// Spectrum of a 2D field along `x`, averaged over `lines` equispaced rows,
/// resampled at `per_element` points per element.
pub fn energy_spectrum_x(mesh: &Mesh, field: &[f64], lines: usize, per_element: usize) -> Result<Vec<(f64, f64)>> {
    let [nx, _] = mesh.counts();
    let (lo, hi) = (mesh.lower(), mesh.upper());
    let ns = nx * per_element;
    let dx = (hi[0] - lo[0]) / ns as f64;
    let rows: Vec<f64> = if mesh.dim() == 1 {
        vec![0.0]
    } else {
        let lines = lines.max(1);
        let dy = (hi[1] - lo[1]) / lines as f64;
        (0..lines).map(|j| lo[1] + (j as f64 + 0.5) * dy).collect()
    };
    let mut acc: Option<Vec<(f64, f64)>> = None;
    for &y in &rows {
        let samples = (0..ns)
            .map(|i| {
                let x = lo[0] + (i as f64 + 0.5) * dx;
                mesh.evaluate(field, [x, y])
                    .ok_or_else(|| SweError::InvalidArgument(format!("point ({x}, {y}) outside the mesh")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let spectrum = energy_spectrum(&samples, hi[0] - lo[0])?;
        match acc.as_mut() {
            None => acc = Some(spectrum),
            Some(a) => a.iter_mut().zip(&spectrum).for_each(|(s, e)| s.1 += e.1),
        }
    }
    let mut spectrum = acc.expect("at least one line");
    let nl = rows.len() as f64;
    spectrum.iter_mut().for_each(|s| s.1 /= nl);
    Ok(spectrum)
}

/// Shoreline: first `x` where the depth crosses `threshold` going from dry to
/// wet or from wet to dry, linearly interpolated. `None` when there is no crossing.
pub fn shoreline(x: &[f64], depth: &[f64], threshold: f64) -> Option<f64> {
    let wet = |h: f64| h > threshold;
    for i in 0..x.len().saturating_sub(1) {
        let (h0, h1) = (depth[i], depth[i + 1]);
        if wet(h0) != wet(h1) {
            let s = (threshold - h0) / (h1 - h0);
            return Some(x[i] + s * (x[i + 1] - x[i]));
        }
    }
    None
}

/// Sorted `(x, value)` samples of a 1D element-local field with shared nodes deduplicated.
pub fn profile_1d(mesh: &Mesh, field: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = mesh.coords().iter().map(|c| c[0]).zip(field.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    pts
}

/// `sum |q_{i+1} - q_i|`.
pub fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Quadrature integral of the depth field.
pub fn total_mass(mesh: &Mesh, h: &[f64]) -> f64 {
    h.iter().zip(mesh.mass()).map(|(a, b)| a * b).sum()
}

/// Samples `field` at `count` equispaced points on the segment `a -> b`.
pub fn sample_line(mesh: &Mesh, field: &[f64], a: [f64; 2], b: [f64; 2], count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(SweError::InvalidArgument("need at least two sample points".into()));
    }
    (0..count)
        .map(|i| {
            let s = i as f64 / (count - 1) as f64;
            let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            mesh.evaluate(field, p)
                .ok_or_else(|| SweError::InvalidArgument(format!("point {p:?} outside the mesh")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSet;
    use crate::mesh::{BoundaryKind, BoundarySides};

    #[test]
    fn l2_examples() {
        let mesh = Mesh::new_1d(0.0, 2.0, 4, BasisSet::new(3).unwrap(), [BoundaryKind::Wall; 2]).unwrap();
        let n = mesh.n_local();
        let exact = vec![1.0 / 2f64.sqrt(); n]; // integral of exact^2 is 1
        assert_eq!(l2_error(&mesh, &exact, &exact).unwrap(), 0.0);
        let c = 0.01;
        let shifted: Vec<f64> = exact.iter().map(|e| e + c).collect();
        assert!((l2_error(&mesh, &shifted, &exact).unwrap() - c * 2f64.sqrt()).abs() < 1e-14);
        let half: Vec<f64> = exact.iter().map(|e| e + c / 2.0).collect();
        let r = l2_error(&mesh, &shifted, &exact).unwrap() / l2_error(&mesh, &half, &exact).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rate_examples() {
        let h = [1.0, 0.5, 0.25];
        assert!((convergence_rate(&h, &[1.0, 1.0 / 16.0, 1.0 / 256.0]).unwrap().rate - 4.0).abs() < 1e-12);
        assert!((convergence_rate(&h, &[1.0, 1.0 / 8.0, 1.0 / 64.0]).unwrap().rate - 3.0).abs() < 1e-12);
        assert!(convergence_rate(&[1.0], &[1.0]).is_err());
        assert!(!convergence_rate(&h, &[1.0, 2.0, 0.5]).unwrap().monotone);
    }

    #[test]
    fn spectrum_examples() {
        let n = 64;
        let l = 2.0 * std::f64::consts::PI;
        let k0 = 5;
        let u: Vec<f64> = (0..n).map(|i| (k0 as f64 * l * i as f64 / n as f64).sin()).collect();
        let s = energy_spectrum(&u, l).unwrap();
        assert!((s[k0].1 - 0.25).abs() < 1e-14);
        assert!((s[k0].0 - k0 as f64).abs() < 1e-12);
        let rest: f64 = s.iter().enumerate().filter(|(k, _)| *k != k0).map(|(_, e)| e.1).sum();
        assert!(rest < 1e-25);
        let c = energy_spectrum(&[0.7; 16], 1.0).unwrap();
        assert!((c[0].1 - 0.5 * 0.49).abs() < 1e-15);
        assert!(c[1..].iter().all(|e| e.1 < 1e-30));
        assert!(energy_spectrum(&[1.0; 7], 1.0).is_err());
    }

    #[test]
    fn shoreline_examples() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1 - 0.5).collect();
        let step: Vec<f64> = x.iter().map(|&v| if v < 0.0 { 1e-3 } else { 1.0 }).collect();
        let s = shoreline(&x, &step, 2e-3).unwrap();
        assert!(s.abs() <= 0.1 + 1e-12);
        assert!(shoreline(&x, &[1.0; 11], 2e-3).is_none());
        let ramp: Vec<f64> = x.iter().map(|&v| 1e-3 + (v - 0.3)).collect();
        let s = shoreline(&x, &ramp, 1e-3).unwrap();
        assert!((s - 0.3).abs() < 1e-12);
    }

    #[test]
    fn tv_and_mass() {
        assert_eq!(total_variation(&[0.0, 1.0, 2.0, 5.0]), 5.0);
        let base = [1.0, 1.0, 1.0, 1.0];
        let spike = [1.0, 1.0, 1.3, 1.0];
        assert!((total_variation(&spike) - total_variation(&base) - 0.6).abs() < 1e-15);
        let mesh = Mesh::new_2d(
            [0.0, 0.0],
            [2.0, 2.0],
            [2, 3],
            BasisSet::new(2).unwrap(),
            BoundarySides::walls(),
        )
        .unwrap();
        assert!((total_mass(&mesh, &vec![1.0; mesh.n_local()]) - 4.0).abs() < 1e-13);
    }
}
