//! Named four-qubit states, their noisy mixtures and the string catalog
//! used by the command line.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{validation, Error, Result};
use crate::linalg::C64;
use crate::qstate::{DensityOperator, PureState, QuantumState};

/// Parameters of `q·|Υ(α,β)⟩⟨Υ(α,β)| + (1−q)·I₁₆/16`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStateParams {
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
}

impl ChannelStateParams {
    pub fn new(alpha: f64, beta: f64, q: f64) -> Result<Self> {
        check_visibility(q)?;
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(validation("channel angles must be finite"));
        }
        Ok(Self { alpha, beta, q })
    }
}

pub(crate) fn check_visibility(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(validation(format!("visibility q = {q} outside [0, 1]")))
    }
}

fn real_state(n: usize, amps: &[f64]) -> PureState {
    let v = amps.iter().map(|&a| C64::new(a, 0.0)).collect();
    PureState::new(n, v).expect("hard-coded state is normalized")
}

/// The genuinely entangled four-qubit teleportation resource `|χ⟩`.
pub fn chi() -> PureState {
    let a = 1.0 / (2.0 * SQRT_2);
    let mut amps = [0.0; 16];
    for (idx, sign) in [
        (0b0000, 1.0),
        (0b0011, -1.0),
        (0b0101, -1.0),
        (0b0110, 1.0),
        (0b1001, 1.0),
        (0b1010, 1.0),
        (0b1100, 1.0),
        (0b1111, 1.0),
    ] {
        amps[idx] = sign * a;
    }
    real_state(4, &amps)
}

/// `|Υ⁰⁰(θ₁₂, φ₁₂)⟩ = (|ζ⁰⟩ + |ζ¹⟩)/√2`. Normalized for every real pair
/// of angles; `upsilon(π/4, π/4)` is [`chi`].
pub fn upsilon(theta12: f64, phi12: f64) -> PureState {
    let (st, ct) = theta12.sin_cos();
    let (sp, cp) = phi12.sin_cos();
    let mut amps = [0.0; 16];
    amps[0b0000] = ct;
    amps[0b0011] = -st;
    amps[0b0101] = -sp;
    amps[0b0110] = cp;
    amps[0b1001] = cp;
    amps[0b1010] = sp;
    amps[0b1100] = st;
    amps[0b1111] = ct;
    for a in &mut amps {
        *a *= 0.5;
    }
    real_state(4, &amps)
}

/// `(|0000⟩ + |1111⟩)/√2`.
pub fn ghz4() -> PureState {
    let mut amps = [0.0; 16];
    amps[0] = FRAC_1_SQRT_2;
    amps[15] = FRAC_1_SQRT_2;
    real_state(4, &amps)
}

/// `(|1000⟩ + |0100⟩ + |0010⟩ + |0001⟩)/2`.
pub fn w4() -> PureState {
    let mut amps = [0.0; 16];
    for idx in [8, 4, 2, 1] {
        amps[idx] = 0.5;
    }
    real_state(4, &amps)
}

/// Four-qubit cluster state
/// `½(|+0+0⟩ + |+0−1⟩ + |−1−0⟩ + |−1+1⟩)` expanded in the computational basis.
pub fn cluster4() -> PureState {
    const SIGNS: [f64; 16] = [
        1., 1., 1., -1., 1., 1., -1., 1., 1., 1., 1., -1., -1., -1., 1., -1.,
    ];
    let amps: Vec<f64> = SIGNS.iter().map(|s| s * 0.25).collect();
    real_state(4, &amps)
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell_pair() -> PureState {
    real_state(2, &[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])
}

/// Two-qubit Schmidt-form input `cos ε|00⟩ + sin ε|11⟩`.
pub fn schmidt_input(epsilon: f64) -> PureState {
    let (s, c) = epsilon.sin_cos();
    real_state(2, &[c, 0.0, 0.0, s])
}

/// Two-qubit Werner state `q|Ψ_Bell⟩⟨Ψ_Bell| + (1−q)·I₄/4`.
pub fn werner(q: f64) -> Result<DensityOperator> {
    check_visibility(q)?;
    DensityOperator::noisy(&bell_pair(), q)
}

/// `Ξ(α, β) = q|Υ(α,β)⟩⟨Υ(α,β)| + (1−q)·I₁₆/16`.
pub fn xi_channel(params: &ChannelStateParams) -> Result<DensityOperator> {
    check_visibility(params.q)?;
    DensityOperator::noisy(&upsilon(params.alpha, params.beta), params.q)
}

fn parse_f64(field: &str, id: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| validation(format!("cannot parse number '{field}' in state id '{id}'")))
}

/// Resolves a catalog identifier: `chi`, `ghz4`, `w4`, `cluster4`, `bell`,
/// `upsilon:<θ>:<φ>`, `xi:<α>:<β>:<q>`, `werner:<q>`. Angles in radians.
pub fn from_id(id: &str) -> Result<QuantumState> {
    let mut parts = id.split(':');
    let head = parts.next().unwrap_or_default();
    let args: Vec<&str> = parts.collect();
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(validation(format!(
                "state '{head}' takes {n} parameters, got {}",
                args.len()
            )))
        }
    };
    let state = match head {
        "chi" => {
            arity(0)?;
            chi().into()
        }
        "ghz4" => {
            arity(0)?;
            ghz4().into()
        }
        "w4" => {
            arity(0)?;
            w4().into()
        }
        "cluster4" => {
            arity(0)?;
            cluster4().into()
        }
        "bell" => {
            arity(0)?;
            bell_pair().into()
        }
        "upsilon" => {
            arity(2)?;
            upsilon(parse_f64(args[0], id)?, parse_f64(args[1], id)?).into()
        }
        "xi" => {
            arity(3)?;
            let params = ChannelStateParams::new(
                parse_f64(args[0], id)?,
                parse_f64(args[1], id)?,
                parse_f64(args[2], id)?,
            )?;
            xi_channel(&params)?.into()
        }
        "werner" => {
            arity(1)?;
            werner(parse_f64(args[0], id)?)?.into()
        }
        _ => {
            return Err(Error::Unknown {
                kind: "state",
                name: id.to_string(),
            })
        }
    };
    Ok(state)
}
