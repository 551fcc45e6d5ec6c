//! KdV reference profile, long-wave rescaling, alignment, physical-variable
//! recovery, steady-system residuals, and the asymptotic-law fits.
//!
//! The long-wave scaling is S_KdV(f)(x) = q^{2/3} f(q^{1/3} x). Minimizers at
//! constraint level q approach the fixed profile
//! psi_KdV(x) = -lambda0 sech^2(sqrt(3 lambda0) x / 2), lambda0 = 3/16^{1/3},
//! after applying S_KdV^{-1} and an optimal translation.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{l2_norm, GridFunction, PeriodicGrid};
use crate::solver::MinimizerResult;
use crate::spectral;
use crate::sweep::SweepRecord;
use crate::symbols::SymbolSpec;

/// lambda0 = 3 / 16^{1/3}, the KdV multiplier fixed by Q(psi_KdV) = 1.
pub fn lambda0() -> f64 {
    3.0 / 16f64.cbrt()
}

/// I_KdV = E_KdV(psi_KdV) = -(36/5) 2^{-10/3}.
pub fn i_kdv() -> f64 {
    -(36.0 / 5.0) * (1.0 / 1024.0f64).cbrt()
}

/// psi_KdV(x) = -lambda0 sech^2(sqrt(3 lambda0) x / 2).
pub fn psi_kdv(x: f64) -> f64 {
    let a = 0.5 * (3.0 * lambda0()).sqrt();
    let c = (a * x).cosh();
    -lambda0() / (c * c)
}

/// psi_KdV sampled on a grid. The grid should extend far enough that the
/// boundary values vanish at working precision (|x| >~ 40 suffices).
pub fn kdv_profile(grid: &PeriodicGrid) -> GridFunction {
    GridFunction::from_fn(*grid, psi_kdv)
}

/// Residual of the travelling KdV equation
/// lambda0 psi + (3/2) psi^2 - psi_xx / 3 = 0 in L2.
pub fn kdv_el_residual(psi: &GridFunction) -> f64 {
    let pxx = spectral::second_derivative(psi);
    let mut r = GridFunction::zeros(psi.grid);
    for j in 0..psi.len() {
        let p = psi.values[j];
        r.values[j] = lambda0() * p + 1.5 * p * p - pxx.values[j] / 3.0;
    }
    l2_norm(&r)
}

/// S_KdV^{-1}: values scaled by q^{-2/3}, domain relabeled to the KdV frame.
/// Pure reindexing; errors when the grid was not built as l0 q^{-1/3}.
pub fn rescale_to_kdv(u: &GridFunction, q: f64, l0: f64) -> Result<GridFunction> {
    let implied = u.grid.half_length() * q.cbrt();
    if (implied - l0).abs() > 1e-12 * l0 {
        return Err(Error::GridMismatch(format!(
            "grid half-length {} is not l0 q^{{-1/3}} = {} (implied l0 = {implied})",
            u.grid.half_length(),
            l0 * q.powf(-1.0 / 3.0),
        )));
    }
    let kdv = PeriodicGrid::new(l0, u.grid.n())?;
    let s = q.cbrt();
    let amp = s * s;
    let values = u.values.iter().map(|v| v / amp).collect();
    Ok(GridFunction { grid: kdv, values })
}

/// KdV comparison data for one minimizer.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KdvComparison {
    pub q: f64,
    pub h1_distance: f64,
    pub x0: f64,
    /// h1_distance / q^{1/6}, the quantity the theory bounds.
    pub ratio: f64,
}

/// Surface elevation and velocity recovered from a travelling-wave solution.
#[derive(Clone, Debug)]
pub struct PhysicalWave {
    pub eta: GridFunction,
    pub v: GridFunction,
    pub speed_c: f64,
}

struct AlignmentData {
    fs: Vec<Complex64>,
    gs: Vec<Complex64>,
    coef: Vec<Complex64>,
    norms: f64,
}

fn weighted_spectra(f: &GridFunction, g: &GridFunction, r: f64) -> AlignmentData {
    let n = f.grid.n();
    let fs = spectral::fft_forward(&f.values);
    let gs = spectral::fft_forward(&g.values);
    let scale = f.grid.dx() / n as f64;
    let mut coef = Vec::with_capacity(n);
    let mut norms = 0.0;
    for j in 0..n {
        let xi = f.grid.freq(j);
        let w = (1.0 + xi * xi).powf(r) * scale;
        norms += w * (fs[j].norm_sqr() + gs[j].norm_sqr());
        coef.push(fs[j] * gs[j].conj() * w);
    }
    AlignmentData {
        fs,
        gs,
        coef,
        norms,
    }
}

/// ||f - g(. - x0)||_{H^r} evaluated mode by mode; free of the cancellation
/// that the norms - 2 correlation form suffers at small distances.
fn shifted_distance(data: &AlignmentData, grid: &PeriodicGrid, r: f64, x0: f64) -> f64 {
    let n = grid.n();
    let scale = grid.dx() / n as f64;
    let mut sum = 0.0;
    for j in 0..n {
        let xi = grid.freq(j);
        let w = (1.0 + xi * xi).powf(r);
        let shifted = if j == n / 2 {
            data.gs[j] * (xi * x0).cos()
        } else {
            data.gs[j] * Complex64::from_polar(1.0, -xi * x0)
        };
        sum += w * (data.fs[j] - shifted).norm_sqr();
    }
    (scale * sum).sqrt()
}

/// <f, g(. - x0)>_{H^r} as a trigonometric polynomial in the shift x0.
/// The lone Nyquist mode enters as a cosine so the shifted interpolant
/// stays real.
fn correlation(coef: &[Complex64], grid: &PeriodicGrid, x0: f64) -> f64 {
    let n = grid.n();
    let mut s = coef[0].re;
    for j in 1..n / 2 {
        let (sin, cos) = (grid.freq(j) * x0).sin_cos();
        let a = coef[j];
        let b = coef[n - j];
        s += (a.re + b.re) * cos - (a.im - b.im) * sin;
    }
    s += coef[n / 2].re * (grid.freq(n / 2) * x0).cos();
    s
}

/// First and second derivative of the correlation with respect to the shift.
fn correlation_derivs(coef: &[Complex64], grid: &PeriodicGrid, x0: f64) -> (f64, f64) {
    let n = grid.n();
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for j in 1..n / 2 {
        let xi = grid.freq(j);
        let (sin, cos) = (xi * x0).sin_cos();
        let a = coef[j];
        let b = coef[n - j];
        // d/dx0 of (a.re + b.re) cos - (a.im - b.im) sin
        d1 += -xi * ((a.re + b.re) * sin + (a.im - b.im) * cos);
        d2 += -xi * xi * ((a.re + b.re) * cos - (a.im - b.im) * sin);
    }
    let xin = grid.freq(n / 2);
    let (sin, cos) = (xin * x0).sin_cos();
    d1 += -coef[n / 2].re * xin * sin;
    d2 += -coef[n / 2].re * xin * xin * cos;
    (d1, d2)
}

/// Find the translation x0 minimizing ||f - g(. - x0)||_{H^r}.
///
/// The correlation is evaluated spectrally on every grid shift; the best
/// shift is then refined by quadratic interpolation and a Newton polish on
/// the exact trigonometric polynomial, giving sub-grid x0 at round-off.
pub fn align_shift_sobolev(f: &GridFunction, g: &GridFunction, r: f64) -> (f64, f64) {
    assert_eq!(f.grid, g.grid, "alignment requires a common grid");
    let grid = f.grid;
    let data = weighted_spectra(f, g, r);
    if l2_norm(f) == 0.0 || l2_norm(g) == 0.0 {
        return (0.0, data.norms.max(0.0).sqrt());
    }

    // all-grid-shifts scan via one inverse transform of the coefficients
    let mut buf = data.coef.clone();
    spectral::inverse_in_place(&mut buf);
    let mut best_m = 0usize;
    let mut best = f64::NEG_INFINITY;
    for (m, c) in buf.iter().enumerate() {
        if c.re > best {
            best = c.re;
            best_m = m;
        }
    }

    // quadratic interpolation pulls the grid argmax to sub-grid accuracy ...
    let dx = grid.dx();
    let mut x0 = best_m as f64 * dx;
    let mut h = dx;
    for _ in 0..24 {
        let cm = correlation(&data.coef, &grid, x0 - h);
        let c0 = correlation(&data.coef, &grid, x0);
        let cp = correlation(&data.coef, &grid, x0 + h);
        let denom = cm - 2.0 * c0 + cp;
        if denom != 0.0 {
            let step = (0.5 * (cm - cp) / denom).clamp(-1.0, 1.0);
            x0 += step * h;
        }
        h *= 0.35;
    }
    // ... and Newton on the exact derivative polishes it to round-off
    for _ in 0..40 {
        let (d1, d2) = correlation_derivs(&data.coef, &grid, x0);
        if !(d2 < 0.0) {
            break;
        }
        let step = (-d1 / d2).clamp(-dx, dx);
        x0 += step;
        if step.abs() <= 1e-16 * x0.abs().max(dx) {
            break;
        }
    }

    // wrap the shift into [-l, l); phases only see x0 mod the period
    let period = 2.0 * grid.half_length();
    let wrapped = (x0 + grid.half_length()).rem_euclid(period) - grid.half_length();
    (wrapped, shifted_distance(&data, &grid, r, wrapped))
}

/// H^1 alignment, the frame of the main asymptotic statement.
pub fn align_shift(f: &GridFunction, g: &GridFunction) -> (f64, f64) {
    align_shift_sobolev(f, g, 1.0)
}

/// Rescale a converged minimizer to the KdV frame and measure its aligned
/// H^1 distance to psi_KdV.
pub fn kdv_compare(result: &MinimizerResult) -> Result<KdvComparison> {
    if !result.converged {
        return Err(Error::InvalidConfig(
            "kdv_compare requires a converged minimizer".into(),
        ));
    }
    let q = result.breakdown.q;
    let l0 = result.u.grid.half_length() * q.cbrt();
    let rescaled = rescale_to_kdv(&result.u, q, l0)?;
    let psi = kdv_profile(&rescaled.grid);
    let (x0, h1_distance) = align_shift(&rescaled, &psi);
    Ok(KdvComparison {
        q,
        h1_distance,
        x0,
        ratio: h1_distance / q.powf(1.0 / 6.0),
    })
}

/// Surface elevation and velocity defined by a solution u of the profile
/// equation: eta = -c^2 ((K^{-1/2}u)^2/2 + K^{1/2}u), v = c K^{-1/2}u,
/// with c = (-lambda)^{-1/2} (the positive root).
pub fn recover_physical_from(
    u: &GridFunction,
    lambda: f64,
    spec: &SymbolSpec,
) -> Result<PhysicalWave> {
    if !(lambda < 0.0) {
        return Err(Error::SpeedUndefined(lambda));
    }
    let c = (-lambda).powf(-0.5);
    let kmh = spectral::apply_multiplier(u, spec, -0.5);
    let kh = spectral::apply_multiplier(u, spec, 0.5);
    let mut eta = GridFunction::zeros(u.grid);
    for j in 0..u.len() {
        let p = kmh.values[j];
        eta.values[j] = -c * c * (0.5 * p * p + kh.values[j]);
    }
    Ok(PhysicalWave {
        eta,
        v: kmh.scaled(c),
        speed_c: c,
    })
}

/// Physical variables of a solved minimization point.
pub fn recover_physical(result: &MinimizerResult, spec: &SymbolSpec) -> Result<PhysicalWave> {
    recover_physical_from(&result.u, result.lambda, spec)
}

/// Normalized L2 residuals of the steady system
/// r1 = ||Kv + eta v + c K eta|| / ||v||, r2 = ||eta + v^2/2 + c Kv|| / ||eta||.
/// Zero denominators fall back to the absolute residuals (logged).
pub fn steady_residual(w: &PhysicalWave, spec: &SymbolSpec) -> (f64, f64) {
    let c = w.speed_c;
    let kv = spectral::apply_multiplier(&w.v, spec, 1.0);
    let keta = spectral::apply_multiplier(&w.eta, spec, 1.0);
    let mut r1 = GridFunction::zeros(w.v.grid);
    let mut r2 = GridFunction::zeros(w.v.grid);
    for j in 0..w.v.len() {
        let (eta, v) = (w.eta.values[j], w.v.values[j]);
        r1.values[j] = kv.values[j] + eta * v + c * keta.values[j];
        r2.values[j] = eta + 0.5 * v * v + c * kv.values[j];
    }
    (
        normalized(l2_norm(&r1), l2_norm(&w.v)),
        normalized(l2_norm(&r2), l2_norm(&w.eta)),
    )
}

fn normalized(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        if num > 0.0 {
            log::warn!("steady residual denominator vanished; reporting absolute residual");
        }
        num
    }
}

/// Residuals of the steady (a,b,c,d)-Boussinesq system with
/// (a, b, c, d) = (-b, b, 0, b), assembled independently through spectral
/// derivatives rather than the symbol:
/// r1 = ||c eta + v + eta v - b v'' - b c eta''|| / ||v||,
/// r2 = ||c v + eta + v^2/2 - b c v''|| / ||eta||.
pub fn boussinesq_steady_residual(w: &PhysicalWave, b: f64) -> (f64, f64) {
    let c = w.speed_c;
    let vxx = spectral::second_derivative(&w.v);
    let exx = spectral::second_derivative(&w.eta);
    let mut r1 = GridFunction::zeros(w.v.grid);
    let mut r2 = GridFunction::zeros(w.v.grid);
    for j in 0..w.v.len() {
        let (eta, v) = (w.eta.values[j], w.v.values[j]);
        r1.values[j] = c * eta + v + eta * v - b * vxx.values[j] - b * c * exx.values[j];
        r2.values[j] = c * v + eta + 0.5 * v * v - b * c * vxx.values[j];
    }
    (
        normalized(l2_norm(&r1), l2_norm(&w.v)),
        normalized(l2_norm(&r2), l2_norm(&w.eta)),
    )
}

fn fit_through_origin(points: &[(f64, f64)]) -> (f64, f64) {
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = points.iter().map(|(x, y)| (y - slope * x).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|(_, y)| y * y).sum();
    (slope, (ss_res / ss_tot.max(1e-300)).sqrt())
}

fn converged_points(
    records: &[SweepRecord],
    xy: impl Fn(&SweepRecord) -> (f64, f64),
) -> Result<Vec<(f64, f64)>> {
    let pts: Vec<(f64, f64)> = records.iter().filter(|r| r.converged).map(xy).collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "law fits need at least 4 converged points, got {}",
            pts.len()
        )));
    }
    let qs: Vec<f64> = records
        .iter()
        .filter(|r| r.converged)
        .map(|r| r.q)
        .collect();
    let (lo, hi) = qs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &q| {
        (lo.min(q), hi.max(q))
    });
    if (hi / lo).log10() < 1.5 {
        return Err(Error::InsufficientData(format!(
            "law fits need 1.5 decades of q, got {:.2}",
            (hi / lo).log10()
        )));
    }
    Ok(pts)
}

/// Least-squares slope of (lambda + 1) against q^{2/3} through the origin.
/// Returns (lambda0_hat, normalized fit residual). The slope approaches
/// lambda0 as the sweep moves to smaller q.
pub fn fit_multiplier_law(records: &[SweepRecord]) -> Result<(f64, f64)> {
    let pts = converged_points(records, |r| (r.q.powf(2.0 / 3.0), r.lambda + 1.0))?;
    Ok(fit_through_origin(&pts))
}

/// Least-squares slope of (I_q - q) against q^{5/3} through the origin,
/// approaching I_KdV.
pub fn fit_energy_law(records: &[SweepRecord]) -> Result<(f64, f64)> {
    let pts = converged_points(records, |r| (r.q.powf(5.0 / 3.0), r.i_q - r.q))?;
    Ok(fit_through_origin(&pts))
}

/// KdV-frame distances of the physical variables: eta is compared against
/// -psi_KdV in H^{1/2} and v against sign(c) psi_KdV in H^{3/2}.
///
/// The sign on the v reference follows the branch: v = c K^{-1/2} u flips
/// with c while eta does not, and the asymptotic statement concerns the
/// right-moving branch (c < 0 under the eta(x + ct) ansatz). With the
/// positive-root convention c > 0 used here, the rescaled v approaches
/// +psi_KdV.
pub fn compare_physical_kdv(w: &PhysicalWave, q: f64) -> Result<(f64, f64)> {
    let l0 = w.eta.grid.half_length() * q.cbrt();
    let eta_k = rescale_to_kdv(&w.eta, q, l0)?;
    let v_k = rescale_to_kdv(&w.v, q, l0)?;
    let psi = kdv_profile(&eta_k.grid);
    let (_, dist_eta) = align_shift_sobolev(&eta_k, &psi.scaled(-1.0), 0.5);
    let v_ref = if w.speed_c < 0.0 {
        psi.scaled(-1.0)
    } else {
        psi
    };
    let (_, dist_v) = align_shift_sobolev(&v_k, &v_ref, 1.5);
    Ok((dist_eta, dist_v))
}
