//! Dormand–Prince 5(4) steps for autonomous systems, with Hairer's
//! fourth-order dense output.

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub type State<const N: usize> = [f64; N];

fn combine<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// One explicit step: the fifth-order solution, the derivative there
/// (reused as the next first stage), the embedded error estimate and the
/// stages needed for dense output.
#[derive(Debug, Clone)]
pub struct Step<const N: usize> {
    pub h: f64,
    pub y0: State<N>,
    pub y1: State<N>,
    pub k1: State<N>,
    pub k7: State<N>,
    pub err: State<N>,
    k3: State<N>,
    k4: State<N>,
    k5: State<N>,
    k6: State<N>,
}

pub fn step<const N: usize>(
    f: &mut impl FnMut(&State<N>) -> State<N>,
    y0: &State<N>,
    k1: &State<N>,
    h: f64,
) -> Step<N> {
    let k2 = f(&combine(y0, h, &[(A21, k1)]));
    let k3 = f(&combine(y0, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(&combine(y0, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(&combine(
        y0,
        h,
        &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)],
    ));
    let k6 = f(&combine(
        y0,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
    ));
    let y1 = combine(
        y0,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
    );
    let k7 = f(&y1);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Step {
        h,
        y0: *y0,
        y1,
        k1: *k1,
        k7,
        err,
        k3,
        k4,
        k5,
        k6,
    }
}

impl<const N: usize> Step<N> {
    /// Scaled RMS error norm; a step is acceptable when this is ≤ 1.
    pub fn error_norm(&self, rtol: f64, atol: f64) -> f64 {
        self.error_norm_scaled(rtol, atol, &[0.0; N])
    }

    /// As [`Step::error_norm`], with component `i` measured relative to at
    /// least `scale[i]`.
    pub fn error_norm_scaled(&self, rtol: f64, atol: f64, scale: &[f64; N]) -> f64 {
        let acc: f64 = (self.err.iter().zip(&self.y0))
            .zip(self.y1.iter().zip(scale))
            .map(|((e, a), (b, s))| {
                let sc = atol + rtol * a.abs().max(b.abs()).max(*s);
                let r = e / sc;
                r * r
            })
            .sum();
        (acc / N as f64).sqrt()
    }

    /// Dense-output value of component `i` at `t0 + θ·h`, `θ ∈ [0, 1]`.
    pub fn dense_component(&self, i: usize, theta: f64) -> f64 {
        let h = self.h;
        let ydiff = self.y1[i] - self.y0[i];
        let bspl = h * self.k1[i] - ydiff;
        let r4 = ydiff - h * self.k7[i] - bspl;
        let r5 = h
            * (D1 * self.k1[i]
                + D3 * self.k3[i]
                + D4 * self.k4[i]
                + D5 * self.k5[i]
                + D6 * self.k6[i]
                + D7 * self.k7[i]);
        let t1 = 1.0 - theta;
        self.y0[i] + theta * (ydiff + t1 * (bspl + theta * (r4 + t1 * r5)))
    }

    pub fn dense(&self, theta: f64) -> State<N> {
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.dense_component(i, theta);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn osc(y: &State<2>) -> State<2> {
        [y[1], -y[0]]
    }

    #[test]
    fn fifth_order_convergence() {
        let run = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = [1.0, 0.0];
            let mut f = osc;
            for _ in 0..n {
                let k1 = f(&y);
                y = step(&mut f, &y, &k1, h).y1;
            }
            (y[0] - 1f64.cos()).abs()
        };
        let ratio = run(8) / run(16);
        assert!(ratio > 25.0 && ratio < 45.0, "ratio {ratio}");
    }

    #[test]
    fn dense_output_interpolates_to_fourth_order() {
        let max_err = |h: f64| {
            let mut f = osc;
            let y0 = [1.0, 0.0];
            let k1 = f(&y0);
            let s = step(&mut f, &y0, &k1, h);
            assert_eq!(s.dense(1.0), s.y1);
            assert_eq!(s.dense(0.0), y0);
            (1..10)
                .map(|k| {
                    let theta = k as f64 / 10.0;
                    let y = s.dense(theta);
                    (y[0] - (h * theta).cos())
                        .abs()
                        .max((y[1] + (h * theta).sin()).abs())
                })
                .fold(0.0, f64::max)
        };
        // Local error of a fourth-order interpolant scales as h⁵.
        let ratio = max_err(0.2) / max_err(0.1);
        assert!(ratio > 20.0 && ratio < 45.0, "ratio {ratio}");
    }
}
