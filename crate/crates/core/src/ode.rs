//! Embedded Dormand-Prince 5(4) integrator with adaptive step control,
//! over `Vec<f64>` states (scalars are length-1 vectors).

use crate::error::{Error, Result};

pub struct OdeSolution {
    pub state: Vec<f64>,
    /// Accumulated local-error estimates over accepted steps.
    pub error_estimate: f64,
}

const MAX_STEPS: usize = 5_000_000;

/// Integrate `y' = rhs(y)` (autonomous) from `t0` to `t1`.
pub fn integrate<F>(
    rhs: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    atol: f64,
    rtol: f64,
) -> Result<OdeSolution>
where
    F: Fn(&[f64], &mut [f64]),
{
    let dim = y0.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(OdeSolution { state: y0.to_vec(), error_estimate: 0.0 });
    }
    if span < 0.0 {
        return Err(Error::Domain("backward integration not supported".into()));
    }

    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = (span / 100.0).min(0.1).max(1e-8);
    let mut k1 = vec![0.0; dim];
    rhs(&y, &mut k1);
    let mut ks: Vec<Vec<f64>> = (0..6).map(|_| vec![0.0; dim]).collect();
    let mut ytmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut acc_err = 0.0;
    let mut steps = 0usize;

    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    // 4th-order embedded weights (k1..k6 plus the FSAL stage).
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    loop {
        if t >= t1 {
            break;
        }
        if steps >= MAX_STEPS {
            return Err(Error::Convergence(format!(
                "step budget exhausted at t = {t} (of {t1})"
            )));
        }
        let hs = h.min(t1 - t);

        // Stages k2..k7; the A[5] row is also the 5th-order solution, so the
        // last stage evaluates the RHS at y_new (FSAL).
        for stage in 0..6 {
            for i in 0..dim {
                let mut acc = A[stage][0] * k1[i];
                for (j, kj) in ks.iter().enumerate().take(stage) {
                    acc += A[stage][j + 1] * kj[i];
                }
                ytmp[i] = y[i] + hs * acc;
            }
            if stage == 5 {
                ynew.copy_from_slice(&ytmp);
            }
            rhs(&ytmp, &mut ks[stage]);
        }

        // Error against the embedded 4th-order solution.
        let mut err_norm: f64 = 0.0;
        for i in 0..dim {
            let y4 = y[i]
                + hs * (B4[0] * k1[i]
                    + B4[2] * ks[1][i]
                    + B4[3] * ks[2][i]
                    + B4[4] * ks[3][i]
                    + B4[5] * ks[4][i]
                    + B4[6] * ks[5][i]);
            let scale = atol + rtol * y[i].abs().max(ynew[i].abs());
            let e = (ynew[i] - y4) / scale;
            err_norm += e * e;
        }
        err_norm = (err_norm / dim as f64).sqrt();

        if err_norm <= 1.0 || hs <= 1e-14 * t.abs().max(1.0) {
            t += hs;
            y.copy_from_slice(&ynew);
            k1.copy_from_slice(&ks[5]); // FSAL
            acc_err += err_norm * atol;
            steps += 1;
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (hs * factor).max(1e-300);
    }

    Ok(OdeSolution { state: y, error_estimate: acc_err })
}
