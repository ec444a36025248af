//! Noisy four-qubit channel states as two-qubit teleportation resources,
//! and the two-qubit Werner baseline.
//!
//! The teleportation channel is modeled at the level of its action on the
//! two-qubit input: the `|χ⟩` component of `ξ = q|χ⟩⟨χ| + (1−q)·I₁₆/16`
//! transmits the input perfectly and the white-noise component returns
//! `I₄/4`, so the output is the depolarized input.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{builtin, classical_bound, evaluate, named_settings};
use crate::error::{validation, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::optimize::{max_violation, multistart_maximize, OptimizationConfig};
use crate::qstate::{
    local_expectation, negativity, DensityOperator, MeasurementDirection, PartySetting, PureState,
    QuantumState,
};
use crate::states::{
    check_visibility, chi, schmidt_input, upsilon, werner, xi_channel, ChannelStateParams,
};

/// Schmidt angle ε of the input `cos ε|00⟩ + sin ε|11⟩`, in `[0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleportInput {
    epsilon: f64,
}

impl TeleportInput {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&epsilon) {
            return Err(validation(format!("epsilon = {epsilon} outside [0, π/2]")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn state(&self) -> PureState {
        schmidt_input(self.epsilon)
    }
}

/// Visibility thresholds of the channel state and of the teleported output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalVisibilities {
    /// Below or at this q the singlet fraction is at most 1/2 (classical teleportation).
    pub q_e0: f64,
    /// Below this q, `ξ` no longer violates `bi1`.
    pub q_bell: f64,
    /// Below this q the output has zero negativity.
    pub q1: f64,
    /// At or below this q the output satisfies CHSH.
    pub q2: f64,
}

/// Generalized singlet fraction of `Ξ`: `(1 + 15q)/16`.
pub fn singlet_fraction_closed(q: f64) -> Result<f64> {
    check_visibility(q)?;
    Ok((1.0 + 15.0 * q) / 16.0)
}

/// Numerically maximized overlap and the angles that reach it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingletFraction {
    pub value: f64,
    pub theta12: f64,
    pub phi12: f64,
    pub converged: bool,
}

/// Maximizes `⟨Υ(θ,φ)|Ξ(α,β)|Υ(θ,φ)⟩` over `(θ, φ)` directly on the
/// density matrix. Angles are reported in the canonical form of
/// [`canonical_angles`].
pub fn singlet_fraction_numeric(
    params: &ChannelStateParams,
    config: &OptimizationConfig,
) -> Result<SingletFraction> {
    let xi = xi_channel(params)?;
    let m = xi.matrix();
    let overlap = |a: &[f64]| -> f64 {
        let psi = upsilon(a[0], a[1]);
        let v = m.apply(psi.amplitudes());
        psi.amplitudes()
            .iter()
            .zip(&v)
            .map(|(x, y)| (x.conj() * y).re)
            .sum()
    };
    let init = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        vec![rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)]
    };
    let best = multistart_maximize(overlap, init, config)?;
    let (theta12, phi12) = canonical_angles(best.x[0], best.x[1]);
    Ok(SingletFraction {
        value: best.value,
        theta12,
        phi12,
        converged: best.converged,
    })
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// `Υ(θ+π, φ+π) = −Υ(θ, φ)` and each angle is 2π-periodic; this picks the
/// representative with both angles in `(−π, π]` and θ in `(−π/2, π/2]`.
pub fn canonical_angles(theta: f64, phi: f64) -> (f64, f64) {
    let (mut t, mut p) = (wrap_pi(theta), wrap_pi(phi));
    if t <= -FRAC_PI_2 || t > FRAC_PI_2 {
        t = wrap_pi(t + PI);
        p = wrap_pi(p + PI);
    }
    (t, p)
}

/// Output of teleporting `input` through `ξ` with visibility `q`:
/// `q|ψ⟩⟨ψ| + (1−q)·I₄/4`.
pub fn output_state(q: f64, input: &PureState) -> Result<DensityOperator> {
    if input.n_qubits() != 2 {
        return Err(validation("teleported input must be a two-qubit state"));
    }
    DensityOperator::noisy(input, q)
}

/// Closed form of the output negativity,
/// `max{0, q·sin 2ε − (1−q)/2}`. Normalized so a Bell state scores 1,
/// i.e. `‖ρ^Γ‖₁ − 1` (twice [`negativity`]).
pub fn output_negativity_closed(q: f64, epsilon: f64) -> f64 {
    (q * (2.0 * epsilon).sin() - 0.5 * (1.0 - q)).max(0.0)
}

/// 3×3 correlation matrix `T_ij = Tr(ρ σ_i⊗σ_j)` of a two-qubit state.
pub fn correlation_matrix(rho: &DensityOperator) -> Result<[[f64; 3]; 3]> {
    if rho.n_qubits() != 2 {
        return Err(validation("correlation matrix needs a two-qubit state"));
    }
    let axes = [
        MeasurementDirection::x(),
        MeasurementDirection::y(),
        MeasurementDirection::z(),
    ];
    let state = QuantumState::Mixed(rho.clone());
    let mut t = [[0.0; 3]; 3];
    for (i, a) in axes.iter().enumerate() {
        for (j, b) in axes.iter().enumerate() {
            t[i][j] = local_expectation(
                &state,
                &[PartySetting::Direction(*a), PartySetting::Direction(*b)],
            )?;
        }
    }
    Ok(t)
}

/// Maximal CHSH value over all settings, `2√(u₁ + u₂)` with `u₁ ≥ u₂` the
/// largest eigenvalues of `TᵀT`.
pub fn chsh_max_two_qubit(rho: &DensityOperator) -> Result<f64> {
    let t = correlation_matrix(rho)?;
    let mut tt = vec![0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            tt[i * 3 + j] = (0..3).map(|k| t[k][i] * t[k][j]).sum();
        }
    }
    let mut u = symmetric_eigenvalues(&mut tt, 3);
    u.sort_by(|a, b| b.total_cmp(a));
    Ok(2.0 * (u[0] + u[1]).max(0.0).sqrt())
}

/// The four thresholds for input angle `epsilon`.
///
/// `q_bell` is the visibility where `q·B(χ)` meets the LHV bound of `bi1`,
/// with `B(χ)` its value at the stabilizer settings; that value already
/// equals the algebraic maximum, so no optimization is needed.
pub fn critical_visibilities(epsilon: f64) -> Result<CriticalVisibilities> {
    let input = TeleportInput::new(epsilon)?;
    let s2e = (2.0 * input.epsilon).sin();
    let bi1 = builtin("bi1")?;
    let chi_value = evaluate(&bi1, &chi().into(), &named_settings("bi1_chi")?)?;
    Ok(CriticalVisibilities {
        // (1 + 15q)/16 = 1/2
        q_e0: 7.0 / 15.0,
        q_bell: classical_bound(&bi1)? / chi_value,
        q1: 1.0 / (1.0 + 2.0 * s2e),
        q2: 1.0 / (1.0 + s2e * s2e).sqrt(),
    })
}

/// Single-qubit teleportation through a Werner state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WernerBaseline {
    pub singlet_fraction: f64,
    pub fidelity: f64,
    pub chsh_max: f64,
}

/// Fully entangled fraction of a Bell-diagonal two-qubit state: the
/// largest overlap with the four Bell states.
fn bell_diagonal_singlet_fraction(rho: &DensityOperator) -> Result<f64> {
    let r = 0.5f64.sqrt();
    let bells = [
        [(0, r), (3, r)],
        [(0, r), (3, -r)],
        [(1, r), (2, r)],
        [(1, r), (2, -r)],
    ];
    let mut best = f64::NEG_INFINITY;
    for terms in bells {
        let b = PureState::from_real_terms(2, &terms)?;
        let v = rho.matrix().apply(b.amplitudes());
        let overlap: f64 = b
            .amplitudes()
            .iter()
            .zip(&v)
            .map(|(x, y)| (x.conj() * y).re)
            .sum();
        best = best.max(overlap);
    }
    Ok(best)
}

/// Average teleportation fidelity `(2f + 1)/3` from the singlet fraction
/// `f` of `werner(q)`, and its maximal CHSH value.
pub fn werner_baseline(q: f64) -> Result<WernerBaseline> {
    let rho = werner(q)?;
    let f = bell_diagonal_singlet_fraction(&rho)?;
    Ok(WernerBaseline {
        singlet_fraction: f,
        fidelity: (2.0 * f + 1.0) / 3.0,
        chsh_max: chsh_max_two_qubit(&rho)?,
    })
}

/// Threshold visibility for `bi1` violation by a noisy pure state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellVisibility {
    /// `2 / max violation`; above 1 means no visibility produces a violation.
    pub visibility: f64,
    pub max_violation: f64,
    pub violates: bool,
}

/// Every `bi1` term is a traceless Pauli product, so white noise scales
/// the Bell value by `q` and the threshold is `bound / max violation`.
pub fn bell_visibility_bi1(
    state: &PureState,
    config: &OptimizationConfig,
) -> Result<BellVisibility> {
    if state.n_qubits() != 4 {
        return Err(validation("bell_visibility_bi1 needs a four-qubit state"));
    }
    let bi1 = builtin("bi1")?;
    let opt = max_violation(&bi1, &state.clone().into(), config)?;
    let bound = classical_bound(&bi1)?;
    let visibility = bound / opt.value;
    Ok(BellVisibility {
        visibility,
        max_violation: opt.value,
        violates: visibility < 1.0 - 1e-9,
    })
}

/// Locates a sign change of `f` in `[lo, hi]` by bisection to `tol`.
pub fn find_crossing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return Err(validation(format!("no sign change of f on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Everything the teleport command reports for one `(q, ε)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeleportAnalysis {
    pub q: f64,
    pub epsilon: f64,
    pub singlet_fraction: f64,
    /// Sum of |negative eigenvalues| of the output's partial transpose.
    pub negativity: f64,
    /// `‖ρ_out^Γ‖₁ − 1`, the normalization of [`output_negativity_closed`].
    pub negativity_trace_norm: f64,
    pub chsh_max: f64,
    pub critical: CriticalVisibilities,
    /// Singlet fraction above 1/2: better than any classical two-qubit protocol.
    pub useful: bool,
    /// The channel state does not violate `bi1`.
    pub bell_local: bool,
    pub entangled: bool,
    pub violates_chsh: bool,
}

pub fn analyze(q: f64, epsilon: f64) -> Result<TeleportAnalysis> {
    check_visibility(q)?;
    let input = TeleportInput::new(epsilon)?;
    let rho = output_state(q, &input.state())?;
    let neg = negativity(&rho, &[1])?;
    let chsh = chsh_max_two_qubit(&rho)?;
    let critical = critical_visibilities(epsilon)?;
    let g = singlet_fraction_closed(q)?;
    Ok(TeleportAnalysis {
        q,
        epsilon,
        singlet_fraction: g,
        negativity: neg,
        negativity_trace_norm: 2.0 * neg,
        chsh_max: chsh,
        critical,
        useful: g > 0.5,
        bell_local: q <= critical.q_bell,
        entangled: neg > 1e-12,
        violates_chsh: chsh > 2.0 + 1e-12,
    })
}
