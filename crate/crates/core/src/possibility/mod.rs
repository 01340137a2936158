//! Possibility functions and outer probability measures.
//!
//! A possibility function is a `[0, 1]`-valued function with supremum 1 that
//! upper-bounds the probability of every subset through its supremum on that
//! subset. Finite weighted mixtures of them form outer probability measures,
//! which yield lower and upper bounds on probabilities.

mod function;
mod grid;
mod opm;
mod region;

pub use function::{BoxSupport, GaussianPossibility, PossibilityFunction, Trapezoid};
pub use grid::{
    predict_mixture, predict_possibility_grid, update_mixture, update_possibility_grid,
    ConditionalGrid, GridAxes, GridMixture, GridPossibility,
};
pub use opm::{OuterProbabilityMeasure, ProbabilityBounds};
pub use region::{AxisBox, GridMask, Region};

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian_2d() -> impl Strategy<Value = PossibilityFunction> {
        (-5.0..5.0f64, -5.0..5.0f64, 0.1..4.0f64, 0.1..4.0f64, -0.9..0.9f64).prop_map(
            |(m0, m1, s0, s1, rho)| {
                let c = rho * (s0 * s1).sqrt();
                PossibilityFunction::Gaussian(
                    GaussianPossibility::new(
                        nalgebra::DVector::from_vec(vec![m0, m1]),
                        nalgebra::DMatrix::from_row_slice(2, 2, &[s0, c, c, s1]),
                    )
                    .unwrap(),
                )
            },
        )
    }

    fn interval() -> impl Strategy<Value = (f64, f64)> {
        (-8.0..8.0f64, 0.01..6.0f64).prop_map(|(lo, w)| (lo, lo + w))
    }

    proptest! {
        #[test]
        fn evaluation_is_bounded(f in gaussian_2d(), x in -20.0..20.0f64, y in -20.0..20.0f64) {
            let v = f.eval(&[x, y]).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn measure_is_monotone(f in gaussian_2d(), a in interval(), b in interval(), grow in 0.0..3.0f64) {
            let small = AxisBox::new(vec![a.0, b.0], vec![a.1, b.1]).unwrap();
            let big = AxisBox::new(vec![a.0 - grow, b.0 - grow], vec![a.1 + grow, b.1]).unwrap();
            let p = OuterProbabilityMeasure::single(f);
            let s = p.evaluate(&Region::single(small)).unwrap();
            let l = p.evaluate(&Region::single(big)).unwrap();
            prop_assert!(s <= l + 1e-12);
        }

        #[test]
        fn bounds_are_ordered_and_complement_symmetric(
            alpha in 0.0..=1.0f64, a in interval(), b in interval(), q in interval()
        ) {
            let p = OuterProbabilityMeasure::new(vec![
                (alpha, PossibilityFunction::indicator(vec![AxisBox::interval(a.0, a.1).unwrap()]).unwrap()),
                (1.0 - alpha, PossibilityFunction::Trapezoid(Trapezoid::symmetric(b.0, b.1, 1.0).unwrap())),
            ]).unwrap();
            let region = Region::single(AxisBox::interval(q.0, q.1).unwrap());
            let bounds = p.probability_bounds(&region).unwrap();
            prop_assert!(bounds.lower <= bounds.upper + 1e-12);
            let comp = p.probability_bounds(&region.complement(1).unwrap()).unwrap();
            prop_assert!((comp.lower - (1.0 - bounds.upper)).abs() < 1e-12);
            prop_assert!((comp.upper - (1.0 - bounds.lower)).abs() < 1e-12);
        }
    }
}
