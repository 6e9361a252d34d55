//! Dormand-Prince 5(4) step with embedded error estimate.

use crate::error::Result;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub(crate) type State = [f64; 3];

fn add(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// One step from `(x, y)` of size `h`; returns the fifth-order solution and the
/// error estimate.
pub(crate) fn dopri_step<F>(f: &F, x: f64, y: &State, h: f64) -> Result<(State, State)>
where
    F: Fn(f64, &State) -> Result<State>,
{
    let k1 = f(x, y)?;
    let k2 = f(x + C2 * h, &add(y, h, &[(A21, &k1)]))?;
    let k3 = f(x + C3 * h, &add(y, h, &[(A31, &k1), (A32, &k2)]))?;
    let k4 = f(x + C4 * h, &add(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(
        x + C5 * h,
        &add(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = f(
        x + h,
        &add(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y5 = add(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(x + h, &y5)?;
    let mut err = [0.0; 3];
    for i in 0..3 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok((y5, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_is_fifth_order() {
        let f = |_x: f64, y: &State| -> Result<State> { Ok([y[0], -2.0 * y[1], 0.0]) };
        let run = |h: f64| {
            let mut y = [1.0, 1.0, 0.0];
            let mut x = 0.0;
            let n = (1.0 / h).round() as usize;
            for _ in 0..n {
                y = dopri_step(&f, x, &y, h).unwrap().0;
                x += h;
            }
            (y[0] - 1f64.exp()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 28.0 && ratio < 36.0, "ratio {ratio}");
        let (_, err) = dopri_step(&f, 0.0, &[1.0, 1.0, 0.0], 0.1).unwrap();
        assert!(err[0].abs() > 0.0 && err[0].abs() < 1e-6);
    }
}
