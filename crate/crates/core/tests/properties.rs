//! Property tests for the structural invariants: evenness and power algebra
//! of symbols, real-in/real-out and linearity of multipliers, Parseval,
//! shift equivariance, the energy identities, and gradient consistency.

use proptest::prelude::*;

use whitham_soliton::functionals::{
    compute_breakdown, compute_q, decompose_nc, energy_square_form, grad_e,
};
use whitham_soliton::grid::{inner, l2_norm, quadrature, GridFunction, PeriodicGrid};
use whitham_soliton::spectral::{
    apply_multiplier, imaginary_residue, parseval_inner, sobolev_norm,
};
use whitham_soliton::symbols::{eval_power, SymbolSpec};

const MODES: usize = 9;

/// Smooth periodic function from bounded mode coefficients with geometric
/// decay; broadband but fully resolved on n >= 64.
fn from_modes(grid: PeriodicGrid, coeffs: &[(f64, f64)], amp: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        let t = std::f64::consts::PI * x / grid.half_length();
        let mut v = 0.0;
        for (k, (a, b)) in coeffs.iter().enumerate() {
            let decay = (-(k as f64) * 0.45).exp();
            let kt = k as f64 * t;
            v += decay * (a * kt.cos() + b * kt.sin());
        }
        amp * v
    })
}

fn coeff_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), MODES)
}

fn symbol_strategy() -> impl Strategy<Value = SymbolSpec> {
    prop_oneof![
        Just(SymbolSpec::whitham()),
        (0.05f64..3.0).prop_map(|b| SymbolSpec::boussinesq(b).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_even_and_power_inverse(
        spec in symbol_strategy(),
        xi in -1e6f64..1e6,
        alpha in -2.0f64..2.0,
    ) {
        let m = whitham_soliton::symbols::eval_symbol(&spec, xi).unwrap();
        let m_neg = whitham_soliton::symbols::eval_symbol(&spec, -xi).unwrap();
        prop_assert_eq!(m, m_neg);

        let p = eval_power(&spec, xi, alpha).unwrap();
        let pinv = eval_power(&spec, xi, -alpha).unwrap();
        let prod = p * pinv;
        prop_assert!((prod - 1.0).abs() <= 4.0 * f64::EPSILON, "product {prod}");
    }

    #[test]
    fn multiplier_real_in_real_out(
        spec in symbol_strategy(),
        coeffs in coeff_strategy(),
        l in 1.0f64..20.0,
    ) {
        let grid = PeriodicGrid::new(l, 64).unwrap();
        let f = from_modes(grid, &coeffs, 0.5);
        let sup = f.max_abs();
        prop_assume!(sup > 1e-6);
        for alpha in [1.0, 0.5, -0.5, -1.0] {
            let res = imaginary_residue(&f, &spec, alpha);
            prop_assert!(res < 1e-12 * sup, "alpha {alpha}: residue {res:.2e}");
        }
    }

    #[test]
    fn multiplier_linearity(
        spec in symbol_strategy(),
        cf in coeff_strategy(),
        cg in coeff_strategy(),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let grid = PeriodicGrid::new(10.0, 64).unwrap();
        let f = from_modes(grid, &cf, 1.0);
        let g = from_modes(grid, &cg, 1.0);
        let combo = f.scaled(a).add_scaled(b, &g);
        let lhs = apply_multiplier(&combo, &spec, 0.5);
        let rhs = apply_multiplier(&f, &spec, 0.5)
            .scaled(a)
            .add_scaled(b, &apply_multiplier(&g, &spec, 0.5));
        let scale = l2_norm(&rhs).max(1e-12);
        prop_assert!(l2_norm(&lhs.add_scaled(-1.0, &rhs)) <= 1e-12 * scale);
    }

    #[test]
    fn multiplier_shift_equivariance(
        spec in symbol_strategy(),
        coeffs in coeff_strategy(),
        shift in -64isize..64,
    ) {
        let grid = PeriodicGrid::new(7.0, 64).unwrap();
        let f = from_modes(grid, &coeffs, 1.0);
        let a = apply_multiplier(&f.circular_shift(shift), &spec, 0.5);
        let b = apply_multiplier(&f, &spec, 0.5).circular_shift(shift);
        let scale = l2_norm(&b).max(1e-12);
        prop_assert!(l2_norm(&a.add_scaled(-1.0, &b)) <= 1e-12 * scale);
    }

    #[test]
    fn parseval(
        cf in coeff_strategy(),
        cg in coeff_strategy(),
        l in 1.0f64..20.0,
    ) {
        let grid = PeriodicGrid::new(l, 64).unwrap();
        let f = from_modes(grid, &cf, 1.0);
        let g = from_modes(grid, &cg, 1.0);
        let direct = quadrature(&f.mul_pointwise(&g));
        let spectral = parseval_inner(&f, &g);
        let scale = l2_norm(&f) * l2_norm(&g);
        prop_assert!((direct - spectral).abs() <= 1e-12 * scale.max(1e-12));
    }

    #[test]
    fn half_power_round_trip(
        spec in symbol_strategy(),
        coeffs in coeff_strategy(),
    ) {
        let grid = PeriodicGrid::new(12.0, 128).unwrap();
        let f = from_modes(grid, &coeffs, 0.8);
        prop_assume!(l2_norm(&f) > 1e-6);
        let back = apply_multiplier(&apply_multiplier(&f, &spec, 0.5), &spec, -0.5);
        prop_assert!(l2_norm(&back.add_scaled(-1.0, &f)) <= 1e-12 * l2_norm(&f));
    }

    #[test]
    fn energy_identities(
        spec in symbol_strategy(),
        coeffs in coeff_strategy(),
        amp in 0.01f64..1.0,
    ) {
        let grid = PeriodicGrid::new(9.0, 128).unwrap();
        let u = from_modes(grid, &coeffs, amp);
        prop_assume!(l2_norm(&u) > 1e-8);
        let b = compute_breakdown(&u, &spec);
        // nonnegativity and the two evaluation routes
        let sq = energy_square_form(&u, &spec);
        prop_assert!(sq >= 0.0);
        prop_assert!((sq - b.e).abs() <= 1e-12 * b.e.abs().max(1.0));
        prop_assert!(b.nr >= 0.0);
        prop_assert!(b.q >= 0.0);
        prop_assert!(b.lpart >= spec.m0 * b.q - 1e-12 * b.lpart.abs());
        // scaling in the amplitude
        for a in [0.25f64, 4.0] {
            let e = compute_breakdown(&u.scaled(a.sqrt()), &spec).e;
            let expect = a * b.lpart + a.powf(1.5) * b.nc + a * a * b.nr;
            prop_assert!((e - expect).abs() <= 1e-12 * expect.abs().max(1e-12));
        }
        // cubic-part decomposition
        let d = decompose_nc(&u, &spec);
        prop_assert!((d.total() - b.nc).abs() <= 1e-12 * b.nc.abs().max(1.0));
        // translation invariance under integer shifts
        for shift in [1isize, 37, -11] {
            let es = compute_breakdown(&u.circular_shift(shift), &spec).e;
            prop_assert!((es - b.e).abs() <= 1e-12 * b.e.abs().max(1e-12));
        }
        // Euler homogeneity of the homogeneous pieces at arbitrary u
        let g = grad_e(&u, &spec);
        let lambda = -inner(&g, &u) / (2.0 * b.q);
        let lhs = -2.0 * lambda * b.q;
        let rhs = 2.0 * b.lpart + 3.0 * b.nc + 4.0 * b.nr;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-12));
    }

    #[test]
    fn gradient_directional_derivatives(
        spec in symbol_strategy(),
        cu in coeff_strategy(),
        ch in coeff_strategy(),
    ) {
        let grid = PeriodicGrid::new(9.0, 128).unwrap();
        let u = from_modes(grid, &cu, 0.1);
        let h = from_modes(grid, &ch, 1.0);
        prop_assume!(l2_norm(&h) > 1e-3);
        let g = grad_e(&u, &spec);
        let step = 1e-5;
        let ep = energy_square_form(&u.add_scaled(step, &h), &spec);
        let em = energy_square_form(&u.add_scaled(-step, &h), &spec);
        let fd = (ep - em) / (2.0 * step);
        let dir = inner(&g, &h);
        prop_assume!(dir.abs() > 1e-10);
        prop_assert!((fd - dir).abs() <= 1e-6 * dir.abs(), "fd {fd:.10e} vs {dir:.10e}");
    }

    #[test]
    fn sobolev_zero_order_is_l2(
        coeffs in coeff_strategy(),
        l in 1.0f64..20.0,
    ) {
        let grid = PeriodicGrid::new(l, 64).unwrap();
        let f = from_modes(grid, &coeffs, 1.0);
        let h0 = sobolev_norm(&f, 0.0);
        let q2 = (2.0 * compute_q(&f)).sqrt();
        prop_assert!((h0 - q2).abs() <= 1e-12 * q2.max(1e-12));
    }
}
