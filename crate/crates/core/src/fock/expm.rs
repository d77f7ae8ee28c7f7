//! Matrix exponential by scaling and squaring with a diagonal Padé
//! approximant (degree 13 in double precision, degree 7 in single).

use nalgebra::DMatrix;

use crate::scalar::{cmatmul, creal, lit, CMatrix, Real};

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const PADE7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];

/// Maximum absolute column sum.
pub fn one_norm<T: Real>(a: &CMatrix<T>) -> T {
    a.column_iter()
        .map(|col| col.iter().fold(T::zero(), |acc, z| acc + crate::scalar::cabs(*z)))
        .fold(T::zero(), |acc, s| acc.max(s))
}

/// `exp(a)` for a square complex matrix.
pub fn expm<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return a.clone();
    }
    let (theta, degree) = T::PADE;
    let norm = one_norm(a);
    let squarings = if norm > lit::<T>(theta) {
        let ratio = crate::scalar::to_f64(norm) / theta;
        ratio.log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scaled = if squarings > 0 {
        a * creal(lit::<T>(0.5f64.powi(squarings as i32)))
    } else {
        a.clone()
    };
    let mut result = if degree == 13 {
        pade13(&scaled)
    } else {
        pade7(&scaled)
    };
    for _ in 0..squarings {
        result = cmatmul(&result, &result);
    }
    result
}

fn scaled<T: Real>(m: &CMatrix<T>, b: f64) -> CMatrix<T> {
    m * creal(lit::<T>(b))
}

fn pade13<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.nrows();
    let b = &PADE13;
    let id = DMatrix::identity(n, n);
    let a2 = cmatmul(a, a);
    let a4 = cmatmul(&a2, &a2);
    let a6 = cmatmul(&a4, &a2);
    let u_inner = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u_outer =
        cmatmul(&a6, &u_inner) + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1]);
    let u = cmatmul(a, &u_outer);
    let v_inner = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = cmatmul(&a6, &v_inner) + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);
    solve_pade(u, v)
}

fn pade7<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.nrows();
    let b = &PADE7;
    let id = DMatrix::identity(n, n);
    let a2 = cmatmul(a, a);
    let a4 = cmatmul(&a2, &a2);
    let a6 = cmatmul(&a4, &a2);
    let u = cmatmul(a, &(scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]) + scaled(&id, b[1])));
    let v = scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&id, b[0]);
    solve_pade(u, v)
}

/// `(V - U)^{-1} (V + U)`.
fn solve_pade<T: Real>(u: CMatrix<T>, v: CMatrix<T>) -> CMatrix<T> {
    let numerator = &v + &u;
    let denominator = v - u;
    denominator
        .lu()
        .solve(&numerator)
        .expect("Padé denominator is nonsingular for scaled arguments")
}
