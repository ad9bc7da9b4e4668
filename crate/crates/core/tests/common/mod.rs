#![allow(dead_code)]

use coolimit::qmat::{CMatrix, DensityMatrix, C64};
use proptest::prelude::*;

/// Density matrix A A† / tr(A A†) from 2·d² raw entries.
pub fn density_from_raw(raw: &[f64], d: usize) -> DensityMatrix {
    let a = CMatrix::from_rows(
        &(0..d)
            .map(|i| (0..d).map(|j| C64::new(raw[2 * (i * d + j)], raw[2 * (i * d + j) + 1])).collect())
            .collect::<Vec<_>>(),
    );
    let m = &a * &a.dagger();
    let tr = m.trace().re;
    let dims = vec![2; d.trailing_zeros() as usize];
    DensityMatrix::new(m.scale(1.0 / tr).hermitian_part(), dims).unwrap()
}

pub fn arb_density(d: usize) -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d)
        .prop_filter("non-degenerate", |v| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(move |v| density_from_raw(&v, d))
}

/// Single-qubit unitary from three Euler angles.
pub fn unitary2(a: f64, b: f64, c: f64) -> CMatrix {
    let e = |x: f64| C64::from_polar(1.0, x);
    let (s, co) = b.sin_cos();
    CMatrix::from_rows(&[
        vec![e(a) * co, e(c) * s],
        vec![-e(-c) * s, e(-a) * co],
    ])
}

pub fn arb_unitary2() -> impl Strategy<Value = CMatrix> {
    (0.0f64..6.3, 0.0f64..3.2, 0.0f64..6.3).prop_map(|(a, b, c)| unitary2(a, b, c))
}

/// (P_S, P_F, P_L) drawn uniformly from the simplex.
pub fn arb_params() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(u, v)| {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        (a, b - a, 1.0 - b)
    })
}
