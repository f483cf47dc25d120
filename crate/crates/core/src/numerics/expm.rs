//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! of degree 3, 5, 7, 9 or 13 chosen from the 1-norm.

use nalgebra::{ComplexField, DMatrix};

use crate::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn norm1<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|x| x.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, s: f64) -> DMatrix<T> {
    a.map(|x| x * T::from_real(s))
}

/// e^A for a square real or complex matrix.
pub fn expm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = crate::numerics::ensure_square(a, "expm argument")?;
    if a.iter().any(|x| !x.clone().is_finite()) {
        return Err(Error::InvalidInput("expm argument has non-finite entries".into()));
    }
    let ident = DMatrix::<T>::identity(n, n);
    if n == 0 {
        return Ok(ident);
    }
    let norm = norm1(a);

    for &(m, theta) in THETA.iter() {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            return pade_low(a, coeffs, &ident);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a_s = scaled(a, 0.5f64.powi(s));
    let mut r = pade_13(&a_s, &ident)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    b: &[f64],
    ident: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let a2 = a * a;
    let mut power = ident.clone();
    let mut u_inner = scaled(ident, b[1]);
    let mut v = scaled(ident, b[0]);
    let m = b.len() - 1;
    let mut k = 2;
    while k <= m {
        power = &power * &a2;
        v += scaled(&power, b[k]);
        if k < m {
            u_inner += scaled(&power, b[k + 1]);
        }
        k += 2;
    }
    let u = a * u_inner;
    solve_pade(&u, &v)
}

fn pade_13<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    ident: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let b = &PADE_13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]))
        + scaled(&a6, b[7])
        + scaled(&a4, b[5])
        + scaled(&a2, b[3])
        + scaled(ident, b[1]);
    let u = a * inner_u;
    let v = &a6 * (scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]))
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(ident, b[0]);
    solve_pade(&u, &v)
}

fn solve_pade<T: ComplexField<RealField = f64>>(
    u: &DMatrix<T>,
    v: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let q = v - u;
    let p = v + u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::NumericalFailure("singular Padé denominator in expm".into()))
}
