//! Globally adaptive Gauss-Kronrod (7/15) integration on finite intervals.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 2_000;

#[derive(Clone, Copy, Debug)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

#[derive(Clone, Copy)]
struct Piece<T> {
    lo: T,
    hi: T,
    value: T,
    error: T,
}

fn kronrod<T: Scalar>(f: &impl Fn(T) -> T, lo: T, hi: T) -> Piece<T> {
    let half = T::of(0.5);
    let center = half * (lo + hi);
    let radius = half * (hi - lo);
    let fc = f(center);
    let mut kron = fc * T::of(WGK[7]);
    let mut gauss = fc * T::of(WG[3]);
    for i in 0..7 {
        let dx = radius * T::of(XGK[i]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + pair * T::of(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + pair * T::of(WG[i / 2]);
        }
    }
    Piece {
        lo,
        hi,
        value: kron * radius,
        error: ((kron - gauss) * radius).abs(),
    }
}

/// Integrates `f` over `[lo, hi]`, starting from `initial` equal pieces and
/// bisecting the worst piece until the summed error estimate is at most
/// `abs_tol`.
pub fn integrate<T: Scalar>(
    f: impl Fn(T) -> T,
    lo: T,
    hi: T,
    abs_tol: T,
    initial: usize,
) -> Result<Integral<T>> {
    let initial = initial.max(1);
    let step = (hi - lo) / T::of_usize(initial);
    let mut pieces: Vec<Piece<T>> = (0..initial)
        .map(|i| {
            let a = lo + step * T::of_usize(i);
            let b = if i + 1 == initial { hi } else { a + step };
            kronrod(&f, a, b)
        })
        .collect();

    loop {
        let total_error = pieces.iter().fold(T::zero(), |acc, p| acc + p.error);
        if total_error <= abs_tol {
            break;
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature {
                estimated_error: total_error.as_f64(),
            });
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, p)| {
                if p.error > best.1 {
                    (i, p.error)
                } else {
                    best
                }
            });
        let p = pieces.swap_remove(worst);
        let mid = T::of(0.5) * (p.lo + p.hi);
        pieces.push(kronrod(&f, p.lo, mid));
        pieces.push(kronrod(&f, mid, p.hi));
    }

    pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite endpoints"));
    let value = pieces.iter().fold(T::zero(), |acc, p| acc + p.value);
    let error = pieces.iter().fold(T::zero(), |acc, p| acc + p.error);
    Ok(Integral {
        value,
        error,
        intervals: pieces.len(),
    })
}
