use serde::{Deserialize, Serialize};

use super::config::ConfigError;

/// Indoor temperature model seen by the fridge.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HouseModel {
    /// Indoor temperature equals the supplied ambient trace.
    #[default]
    TraceDriven,
    /// `dT/dt = (T_amb - T)/(R_h C_h)`, advanced by exact ZOH. `R_h` in °C/W,
    /// `C_h` in J/°C.
    FirstOrderRc { r_h: f64, c_h: f64 },
    /// Discrete-time `x' = A x + B T_amb`, `T_house = C x`, one step per
    /// simulation step. Starts from `x0`, or from the steady state for the
    /// first ambient value when `x0` is absent.
    LinearStateSpace {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
        #[serde(default)]
        x0: Option<Vec<f64>>,
    },
}

impl HouseModel {
    /// Six-hour time constant; a plausible unconditioned single-family house.
    pub fn default_rc() -> Self {
        HouseModel::FirstOrderRc {
            r_h: 0.005,
            c_h: 4.32e6,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            HouseModel::TraceDriven => "trace_driven",
            HouseModel::FirstOrderRc { .. } => "first_order_rc",
            HouseModel::LinearStateSpace { .. } => "linear_state_space",
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            HouseModel::TraceDriven => Ok(()),
            HouseModel::FirstOrderRc { r_h, c_h } => {
                if r_h.is_finite() && c_h.is_finite() && *r_h > 0.0 && *c_h > 0.0 {
                    Ok(())
                } else {
                    Err(ConfigError::Invalid("house r_h and c_h must be positive".into()))
                }
            }
            HouseModel::LinearStateSpace { a, b, c, x0 } => {
                let n = a.len();
                let square = n > 0 && a.iter().all(|r| r.len() == n);
                let shapes = square && b.len() == n && c.len() == n && x0.as_ref().is_none_or(|x| x.len() == n);
                let finite = a
                    .iter()
                    .flatten()
                    .chain(b)
                    .chain(c)
                    .chain(x0.iter().flatten())
                    .all(|v| v.is_finite());
                if !shapes || !finite {
                    return Err(ConfigError::Invalid(
                        "state-space house matrices have inconsistent shapes".into(),
                    ));
                }
                if x0.is_none() && steady_state(a, b, 1.0).is_none() {
                    return Err(ConfigError::Invalid(
                        "state-space house model has no steady state; supply x0".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn initial_state(&self, ambient: f64) -> Vec<f64> {
        match self {
            HouseModel::TraceDriven => Vec::new(),
            HouseModel::FirstOrderRc { .. } => vec![ambient],
            HouseModel::LinearStateSpace { a, b, x0, .. } => match x0 {
                Some(x) => x.clone(),
                None => steady_state(a, b, ambient).unwrap_or_else(|| vec![0.0; a.len()]),
            },
        }
    }

    /// Indoor temperature for the current state; `ambient` is this step's input.
    pub fn temperature(&self, state: &[f64], ambient: f64) -> f64 {
        match self {
            HouseModel::TraceDriven => ambient,
            HouseModel::FirstOrderRc { .. } => state[0],
            HouseModel::LinearStateSpace { c, .. } => c.iter().zip(state).map(|(ci, xi)| ci * xi).sum(),
        }
    }

    pub fn advance(&self, state: &[f64], ambient: f64, dt_hours: f64) -> Vec<f64> {
        match self {
            HouseModel::TraceDriven => Vec::new(),
            HouseModel::FirstOrderRc { r_h, c_h } => {
                let a = (-dt_hours * 3600.0 / (r_h * c_h)).exp();
                vec![ambient + (state[0] - ambient) * a]
            }
            HouseModel::LinearStateSpace { a, b, .. } => a
                .iter()
                .zip(b)
                .map(|(row, bi)| row.iter().zip(state).map(|(aij, xj)| aij * xj).sum::<f64>() + bi * ambient)
                .collect(),
        }
    }
}

/// Solves `(I - A) x = B u` by Gaussian elimination with partial pivoting.
fn steady_state(a: &[Vec<f64>], b: &[f64], u: f64) -> Option<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| f64::from(u8::from(i == j)) - a[i][j]).collect();
            row.push(b[i] * u);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..=n {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}
