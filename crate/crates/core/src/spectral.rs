//! Spectral transforms: multiplier application, derivatives, Sobolev norms,
//! trigonometric resampling.
//!
//! All operators act by pointwise multiplication in Fourier space. Symbols
//! are real and even, so every operator here maps real data to real data;
//! the imaginary residue left by round-off is checked and truncated.

use std::sync::{Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use crate::grid::{GridFunction, PeriodicGrid};
use crate::symbols::SymbolSpec;

static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .expect("fft planner poisoned");
    planner.plan_fft(n, direction)
}

/// Unnormalized forward DFT of real samples.
pub(crate) fn fft_forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(values.len(), FftDirection::Forward).process(&mut buf);
    buf
}

/// Inverse DFT (including the 1/n normalization) of a spectrum that is
/// conjugate-symmetric up to round-off; returns the real part after checking
/// the imaginary residue against `1e-12 * reference`.
pub(crate) fn fft_inverse_real(mut spectrum: Vec<Complex64>, reference: f64) -> Vec<f64> {
    let n = spectrum.len();
    plan(n, FftDirection::Inverse).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    let mut max_im = 0.0f64;
    let out: Vec<f64> = spectrum
        .iter()
        .map(|c| {
            max_im = max_im.max(c.im.abs() * scale);
            c.re * scale
        })
        .collect();
    debug_assert!(
        max_im <= 1e-12 * reference.max(f64::MIN_POSITIVE),
        "imaginary residue {max_im:.3e} exceeds 1e-12 * {reference:.3e}; \
         is the multiplier even?"
    );
    out
}

/// Unnormalized inverse DFT of a real spectrum, scaled by `scale`.
/// Used for kernel transforms where the spectrum plays the role of a
/// function of frequency sampled on the grid.
pub(crate) fn inverse_transform_scaled(spectrum: &[f64], scale: f64) -> Vec<f64> {
    let mut buf: Vec<Complex64> = spectrum.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(spectrum.len(), FftDirection::Inverse).process(&mut buf);
    buf.iter().map(|c| c.re * scale).collect()
}

/// Unnormalized inverse DFT in place.
pub(crate) fn inverse_in_place(buf: &mut [Complex64]) {
    plan(buf.len(), FftDirection::Inverse).process(buf);
}

/// Apply the Fourier multiplier given by an even real function of frequency.
pub fn apply_even_multiplier(f: &GridFunction, mult: impl Fn(f64) -> f64) -> GridFunction {
    let table: Vec<f64> = (0..f.grid.n()).map(|j| mult(f.grid.freq(j))).collect();
    apply_table(f, &table)
}

/// Diagnostic: the imaginary residue left by a multiplier application,
/// before truncation, as max |Im| over the grid. Bounded by
/// 1e-12 ||f||_inf for the operator powers the solver uses.
pub fn imaginary_residue(f: &GridFunction, spec: &SymbolSpec, alpha: f64) -> f64 {
    let table = multiplier_table(&f.grid, spec, alpha);
    let mut buf = fft_forward(&f.values);
    for (c, &m) in buf.iter_mut().zip(&table) {
        *c *= m;
    }
    plan(buf.len(), FftDirection::Inverse).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs() * scale))
}

fn table_gain(table: &[f64]) -> f64 {
    table.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

pub(crate) fn apply_table(f: &GridFunction, table: &[f64]) -> GridFunction {
    let mut spec = fft_forward(&f.values);
    for (c, &m) in spec.iter_mut().zip(table) {
        *c *= m;
    }
    let values = fft_inverse_real(spec, f.max_abs() * table_gain(table));
    GridFunction {
        grid: f.grid,
        values,
    }
}

/// Apply several multiplier tables to one function, sharing the forward
/// transform.
pub(crate) fn apply_tables(f: &GridFunction, tables: &[&[f64]]) -> Vec<GridFunction> {
    let spec = fft_forward(&f.values);
    let reference = f.max_abs();
    tables
        .iter()
        .map(|table| {
            let scaled: Vec<Complex64> = spec.iter().zip(*table).map(|(c, &m)| c * m).collect();
            let values = fft_inverse_real(scaled, reference * table_gain(table));
            GridFunction {
                grid: f.grid,
                values,
            }
        })
        .collect()
}

pub(crate) fn multiplier_table(grid: &PeriodicGrid, spec: &SymbolSpec, alpha: f64) -> Vec<f64> {
    (0..grid.n())
        .map(|j| {
            let m = spec.value(grid.freq(j));
            if alpha == 1.0 {
                m
            } else {
                m.powf(alpha)
            }
        })
        .collect()
}

/// L^alpha f: each Fourier coefficient multiplied by m(xi_k)^alpha. The
/// Nyquist mode is retained and multiplied by the real symbol value, which
/// preserves conjugate symmetry and the L^{1/2} o L^{-1/2} = id identity.
pub fn apply_multiplier(f: &GridFunction, spec: &SymbolSpec, alpha: f64) -> GridFunction {
    let table = multiplier_table(&f.grid, spec, alpha);
    apply_table(f, &table)
}

/// Spectral d/dx. The multiplier i*xi is odd, so the unpaired Nyquist mode is
/// zeroed to keep the output real.
pub fn derivative(f: &GridFunction) -> GridFunction {
    let n = f.grid.n();
    let mut spec = fft_forward(&f.values);
    for (j, c) in spec.iter_mut().enumerate() {
        if j == n / 2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, f.grid.freq(j));
        }
    }
    let values = fft_inverse_real(spec, f.max_abs() * f.grid.nyquist().max(1.0));
    GridFunction {
        grid: f.grid,
        values,
    }
}

/// Spectral d^2/dx^2 (even multiplier -xi^2, Nyquist retained).
pub fn second_derivative(f: &GridFunction) -> GridFunction {
    apply_even_multiplier(f, |xi| -xi * xi)
}

/// Sobolev norm ||f||_{H^r}: sqrt of the quadrature of (J^r f)^2 where J^r
/// has multiplier (1 + xi^2)^{r/2}. For r = 0 this is the L2 norm, i.e.
/// sqrt(2 Q(f)).
pub fn sobolev_norm(f: &GridFunction, r: f64) -> f64 {
    assert!(r >= 0.0, "sobolev_norm requires r >= 0, got {r}");
    let spec = fft_forward(&f.values);
    let n = f.grid.n() as f64;
    let w = f.grid.dx() / n;
    let mut sum = 0.0;
    for (j, c) in spec.iter().enumerate() {
        let xi = f.grid.freq(j);
        sum += (1.0 + xi * xi).powf(r) * c.norm_sqr();
    }
    (w * sum).sqrt()
}

/// Spectral inner product dx/n * sum f_hat conj(g_hat); equals the
/// quadrature of f*g by the discrete Parseval identity.
pub fn parseval_inner(f: &GridFunction, g: &GridFunction) -> f64 {
    assert_eq!(
        f.grid, g.grid,
        "grid functions combine only on identical grids"
    );
    let fs = fft_forward(&f.values);
    let gs = fft_forward(&g.values);
    let w = f.grid.dx() / f.grid.n() as f64;
    fs.iter()
        .zip(&gs)
        .map(|(a, b)| (a * b.conj()).re)
        .sum::<f64>()
        * w
}

/// Trigonometric interpolation onto `target`, zero-padding or truncating the
/// spectrum. Returns the resampled function and the fraction of spectral
/// mass discarded by truncation.
pub fn resample_checked(f: &GridFunction, target: PeriodicGrid) -> (GridFunction, f64) {
    if target == f.grid {
        return (f.clone(), 0.0);
    }
    let ns = f.grid.n();
    let nt = target.n();
    let src = fft_forward(&f.values);
    let ratio = nt as f64 / ns as f64;
    let mut dst = vec![Complex64::new(0.0, 0.0); nt];
    let keep = ns.min(nt) / 2;

    // modes |k| < keep copy over; Nyquist handling depends on direction
    dst[0] = src[0] * ratio;
    for k in 1..keep {
        dst[k] = src[k] * ratio;
        dst[nt - k] = src[ns - k] * ratio;
    }
    let mut kept_extra = 0.0;
    if nt > ns {
        // upsampling: split the source Nyquist mode across +-ns/2
        let half = src[ns / 2] * (0.5 * ratio);
        dst[ns / 2] = half;
        dst[nt - ns / 2] = half;
        kept_extra = src[ns / 2].norm_sqr();
    } else if nt < ns {
        // downsampling: the target Nyquist collects both source modes +-nt/2
        dst[nt / 2] = (src[nt / 2] + src[ns - nt / 2]) * ratio;
        kept_extra = src[nt / 2].norm_sqr() + src[ns - nt / 2].norm_sqr();
    }

    let total: f64 = src.iter().map(|c| c.norm_sqr()).sum();
    let mut kept = src[0].norm_sqr() + kept_extra;
    for k in 1..keep {
        kept += src[k].norm_sqr() + src[ns - k].norm_sqr();
    }
    let discarded = if total > 0.0 {
        ((total - kept) / total).max(0.0)
    } else {
        0.0
    };

    let values = fft_inverse_real(dst, f.max_abs().max(f64::MIN_POSITIVE));
    (
        GridFunction {
            grid: target,
            values,
        },
        discarded,
    )
}

/// Trigonometric resampling; logs a warning when truncation discards more
/// than 1e-8 of the spectral mass.
pub fn resample(f: &GridFunction, target: PeriodicGrid) -> GridFunction {
    let (out, discarded) = resample_checked(f, target);
    if discarded > 1e-8 {
        log::warn!(
            "resample {} -> {} points discarded {discarded:.3e} of spectral mass (aliasing)",
            f.grid.n(),
            target.n()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l2_norm, quadrature, GridFunction, PeriodicGrid};
    use crate::symbols::{eval_power, SymbolSpec};
    use std::f64::consts::PI;

    fn grid(l: f64, n: usize) -> PeriodicGrid {
        PeriodicGrid::new(l, n).unwrap()
    }

    #[test]
    fn constant_is_eigenfunction_of_whitham() {
        let g = grid(PI, 64);
        let one = GridFunction::constant(g, 1.0);
        let out = apply_multiplier(&one, &SymbolSpec::whitham(), 1.0);
        for v in &out.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_mode_eigenfunction() {
        let g = grid(2.5, 64);
        let l = g.half_length();
        let f = GridFunction::from_fn(g, |x| (PI * x / l).cos());
        for spec in [SymbolSpec::whitham(), SymbolSpec::boussinesq(0.7).unwrap()] {
            for alpha in [1.0, 0.5, -0.5, -1.0] {
                let out = apply_multiplier(&f, &spec, alpha);
                let ev = eval_power(&spec, PI / l, alpha).unwrap();
                let expect = f.scaled(ev);
                let err = l2_norm(&out.add_scaled(-1.0, &expect)) / l2_norm(&expect);
                assert!(err < 1e-12, "alpha={alpha} err={err:.2e}");
            }
        }
    }

    #[test]
    fn half_powers_compose_to_identity() {
        let g = grid(10.0, 128);
        let f = GridFunction::from_fn(g, |x| (-x * x / 3.0).exp() * (1.0 + 0.3 * x.sin()));
        let spec = SymbolSpec::whitham();
        let back = apply_multiplier(&apply_multiplier(&f, &spec, 0.5), &spec, -0.5);
        let err = l2_norm(&back.add_scaled(-1.0, &f)) / l2_norm(&f);
        assert!(err < 1e-12, "round trip err {err:.2e}");
    }

    #[test]
    fn derivative_of_single_mode() {
        let g = grid(PI, 32);
        let f = GridFunction::from_fn(g, |x| x.cos());
        let df = derivative(&f);
        let expect = GridFunction::from_fn(g, |x| -x.sin());
        let err = l2_norm(&df.add_scaled(-1.0, &expect));
        assert!(err < 1e-12);
        let d2 = second_derivative(&f);
        let err2 = l2_norm(&d2.add_scaled(1.0, &f));
        assert!(err2 < 1e-12);
    }

    #[test]
    fn sobolev_examples() {
        let g = grid(PI, 64);
        assert_eq!(sobolev_norm(&GridFunction::zeros(g), 1.3), 0.0);
        let f = GridFunction::from_fn(g, |x| 0.3 * (2.0 * x).cos() - x.sin());
        // r = 0 agrees with the L2 quadrature norm (Plancherel)
        let l2 = quadrature(&f.mul_pointwise(&f)).sqrt();
        assert!((sobolev_norm(&f, 0.0) - l2).abs() < 1e-13 * l2);
        // single mode: ||cos(x)||_{H^1}^2 = 2 * pi on l = pi
        let c = GridFunction::from_fn(g, |x| x.cos());
        let h1 = sobolev_norm(&c, 1.0);
        assert!((h1 - (2.0 * PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    #[should_panic(expected = "r >= 0")]
    fn sobolev_rejects_negative_order() {
        let g = grid(1.0, 8);
        sobolev_norm(&GridFunction::zeros(g), -0.5);
    }

    #[test]
    fn parseval_identity() {
        let g = grid(3.0, 64);
        let f = GridFunction::from_fn(g, |x| (PI * x / 3.0).cos() + 0.2);
        let h = GridFunction::from_fn(g, |x| (2.0 * PI * x / 3.0).sin() - 0.7);
        let direct = quadrature(&f.mul_pointwise(&h));
        let spectral = parseval_inner(&f, &h);
        assert!((direct - spectral).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn resample_identity_is_bitwise() {
        let g = grid(2.0, 32);
        let f = GridFunction::from_fn(g, |x| (x * 1.3).sin());
        let (r, d) = resample_checked(&f, g);
        assert_eq!(r.values, f.values);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn resample_round_trip() {
        let g = grid(5.0, 64);
        let f = GridFunction::from_fn(g, |x| (-x * x / 2.0).exp());
        let fine = grid(5.0, 128);
        let (up, d_up) = resample_checked(&f, fine);
        assert!(d_up == 0.0);
        let (back, _) = resample_checked(&up, g);
        let err = l2_norm(&back.add_scaled(-1.0, &f)) / l2_norm(&f);
        assert!(err < 1e-12, "round trip err {err:.2e}");
    }

    #[test]
    fn resample_single_mode_exact() {
        let g = grid(4.0, 16);
        let l = g.half_length();
        let f = GridFunction::from_fn(g, |x| (PI * x / l).cos());
        let fine = grid(4.0, 64);
        let (up, _) = resample_checked(&f, fine);
        let expect = GridFunction::from_fn(fine, |x| (PI * x / l).cos());
        let err = up
            .values
            .iter()
            .zip(&expect.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-12, "max err {err:.2e}");
    }

    #[test]
    fn resample_reports_aliasing() {
        let g = grid(1.0, 64);
        // broadband: every mode populated
        let f = GridFunction::from_fn(g, |x| 1.0 / (1.1 + x.sin()));
        let coarse = grid(1.0, 16);
        let (_, discarded) = resample_checked(&f, coarse);
        assert!(
            discarded > 1e-8,
            "expected measurable aliasing, got {discarded:.2e}"
        );
    }
}
