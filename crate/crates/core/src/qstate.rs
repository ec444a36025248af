//! Dense state-vector and density-matrix algebra for up to four qubits.
//!
//! Basis ordering is lexicographic in the party order A, B, C, D with
//! party A as the most significant bit, so `|0011⟩` is index 3.

use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::linalg::{Matrix, C64, ONE, ZERO};

pub const MAX_QUBITS: usize = 4;

const UNIT_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const IMAG_RESIDUE_TOL: f64 = 1e-10;

fn check_qubits(n: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n) {
        Ok(())
    } else {
        Err(validation(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )))
    }
}

/// Unit vector on the Bloch sphere selecting the spin observable `n̂·σ⃗`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct MeasurementDirection {
    nx: f64,
    ny: f64,
    nz: f64,
}

impl MeasurementDirection {
    pub fn new(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let norm2 = nx * nx + ny * ny + nz * nz;
        if !norm2.is_finite() || (norm2 - 1.0).abs() > UNIT_TOL {
            return Err(validation(format!(
                "direction ({nx}, {ny}, {nz}) is not a unit vector (|n|² = {norm2})"
            )));
        }
        Ok(Self { nx, ny, nz })
    }

    /// Rescales an arbitrary non-zero vector to unit length.
    pub fn normalized(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let norm = (nx * nx + ny * ny + nz * nz).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(validation("cannot normalize a zero or non-finite vector"));
        }
        Ok(Self {
            nx: nx / norm,
            ny: ny / norm,
            nz: nz / norm,
        })
    }

    /// Polar angle `theta` from +z, azimuth `phi` from +x.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            nx: st * cp,
            ny: st * sp,
            nz: ct,
        }
    }

    pub const fn x() -> Self {
        Self {
            nx: 1.0,
            ny: 0.0,
            nz: 0.0,
        }
    }

    pub const fn y() -> Self {
        Self {
            nx: 0.0,
            ny: 1.0,
            nz: 0.0,
        }
    }

    pub const fn z() -> Self {
        Self {
            nx: 0.0,
            ny: 0.0,
            nz: 1.0,
        }
    }

    pub fn components(&self) -> [f64; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// The 2×2 entries of `n̂·σ⃗` as `[[a, b], [c, d]]`, row-major.
    #[inline]
    pub(crate) fn pauli_entries(&self) -> [C64; 4] {
        [
            C64::new(self.nz, 0.0),
            C64::new(self.nx, -self.ny),
            C64::new(self.nx, self.ny),
            C64::new(-self.nz, 0.0),
        ]
    }
}

impl TryFrom<[f64; 3]> for MeasurementDirection {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<MeasurementDirection> for [f64; 3] {
    fn from(d: MeasurementDirection) -> Self {
        d.components()
    }
}

/// What one party does in a correlation measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartySetting {
    Direction(MeasurementDirection),
    /// The party does not measure; its slot carries the identity.
    NoMeasurement,
}

/// `d·σ⃗ = nx·σx + ny·σy + nz·σz`.
pub fn pauli_observable(d: &MeasurementDirection) -> Matrix {
    Matrix::from_rows(d.pauli_entries().to_vec()).expect("2x2")
}

/// Kronecker product of per-party observables in party order.
///
/// Takes between one and four slots; `NoMeasurement` slots become the
/// 2×2 identity.
pub fn tensor_observable(settings: &[PartySetting]) -> Result<Matrix> {
    if settings.is_empty() || settings.len() > MAX_QUBITS {
        return Err(validation(format!(
            "tensor observable needs 1..={MAX_QUBITS} slots, got {}",
            settings.len()
        )));
    }
    let mut out = Matrix::identity(1);
    for slot in settings {
        let factor = match slot {
            PartySetting::Direction(d) => pauli_observable(d),
            PartySetting::NoMeasurement => Matrix::identity(2),
        };
        out = out.kron(&factor);
    }
    Ok(out)
}

/// A normalized pure state of 1–4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(validation(format!(
                "{} amplitudes given for {n_qubits} qubits",
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(validation("non-finite amplitude"));
        }
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(validation(format!(
                "state is not normalized (⟨ψ|ψ⟩ = {norm2})"
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Builds a state from real amplitudes given as `(basis index, value)`
    /// pairs, normalizing the result.
    pub fn from_real_terms(n_qubits: usize, terms: &[(usize, f64)]) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        for &(idx, v) in terms {
            if idx >= amps.len() {
                return Err(validation(format!("basis index {idx} out of range")));
            }
            amps[idx] += C64::new(v, 0.0);
        }
        Self::normalize(n_qubits, amps)
    }

    pub fn normalize(n_qubits: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(validation("cannot normalize a zero or non-finite vector"));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::new(n_qubits, amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn projector(&self) -> Matrix {
        Matrix::outer(&self.amplitudes)
    }

    /// Moves qubit `i` to position `perm[i]`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_qubits)?;
        let n = self.n_qubits;
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let mut new_idx = 0;
            for (q, &target) in perm.iter().enumerate() {
                let bit = (idx >> (n - 1 - q)) & 1;
                new_idx |= bit << (n - 1 - target);
            }
            out[new_idx] = amp;
        }
        Ok(Self {
            n_qubits: n,
            amplitudes: out,
        })
    }

    /// Applies a single-qubit unitary to `qubit`; a non-unitary `op` fails
    /// the normalization check.
    pub fn apply_local(&self, qubit: usize, op: &Matrix) -> Result<Self> {
        if qubit >= self.n_qubits || op.dim() != 2 {
            return Err(validation(
                "apply_local needs a valid qubit and a 2x2 operator",
            ));
        }
        let mut amps = self.amplitudes.clone();
        let e = op.as_slice();
        apply_2x2(&mut amps, self.n_qubits, qubit, [e[0], e[1], e[2], e[3]]);
        Self::new(self.n_qubits, amps)
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = [false; MAX_QUBITS];
    if perm.len() != n
        || perm
            .iter()
            .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
    {
        return Err(validation(format!(
            "{perm:?} is not a permutation of {n} parties"
        )));
    }
    Ok(())
}

#[inline]
fn apply_2x2(amps: &mut [C64], n_qubits: usize, qubit: usize, m: [C64; 4]) {
    let bit = 1 << (n_qubits - 1 - qubit);
    for idx in 0..amps.len() {
        if idx & bit == 0 {
            let a0 = amps[idx];
            let a1 = amps[idx | bit];
            amps[idx] = m[0] * a0 + m[1] * a1;
            amps[idx | bit] = m[2] * a0 + m[3] * a1;
        }
    }
}

/// A valid density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    n_qubits: usize,
    matrix: Matrix,
}

impl DensityOperator {
    pub fn new(n_qubits: usize, matrix: Matrix) -> Result<Self> {
        check_qubits(n_qubits)?;
        if matrix.dim() != 1 << n_qubits {
            return Err(validation(format!(
                "matrix dimension {} does not match {n_qubits} qubits",
                matrix.dim()
            )));
        }
        if !matrix.is_finite() {
            return Err(validation("non-finite matrix entry"));
        }
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(validation("density operator is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(validation(format!("density operator has trace {tr}")));
        }
        let min_ev = matrix.eigenvalues_hermitian()[0];
        if min_ev < -PSD_TOL {
            return Err(validation(format!(
                "density operator has eigenvalue {min_ev}"
            )));
        }
        Ok(Self { n_qubits, matrix })
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self {
            n_qubits: state.n_qubits,
            matrix: state.projector(),
        }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            matrix: Matrix::identity(dim).scale(1.0 / dim as f64),
        })
    }

    /// `q·|ψ⟩⟨ψ| + (1−q)·I/d`, the white-noise mixture of a pure state.
    pub fn noisy(state: &PureState, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(validation(format!("visibility q = {q} outside [0, 1]")));
        }
        let mixed = Self::maximally_mixed(state.n_qubits)?;
        let matrix = state.projector().scale(q).add(&mixed.matrix.scale(1.0 - q));
        Ok(Self {
            n_qubits: state.n_qubits,
            matrix,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.eigenvalues_hermitian()
    }

    /// `U ρ U†` for a per-qubit product unitary `U = ⊗ u_k`.
    pub fn conjugate_local(&self, unitaries: &[Matrix]) -> Result<Self> {
        if unitaries.len() != self.n_qubits {
            return Err(validation("one local unitary per qubit is required"));
        }
        let u = unitaries
            .iter()
            .fold(Matrix::identity(1), |acc, m| acc.kron(m));
        let matrix = u.matmul(&self.matrix).matmul(&u.adjoint());
        Self::new(self.n_qubits, matrix)
    }
}

/// Either kind of state accepted by expectation and Bell evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(PureState),
    Mixed(DensityOperator),
}

impl QuantumState {
    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Pure(s) => s.n_qubits(),
            Self::Mixed(r) => r.n_qubits(),
        }
    }

    pub fn density(&self) -> DensityOperator {
        match self {
            Self::Pure(s) => DensityOperator::from_pure(s),
            Self::Mixed(r) => r.clone(),
        }
    }
}

impl From<PureState> for QuantumState {
    fn from(s: PureState) -> Self {
        Self::Pure(s)
    }
}

impl From<DensityOperator> for QuantumState {
    fn from(r: DensityOperator) -> Self {
        Self::Mixed(r)
    }
}

fn real_part_checked(z: C64) -> Result<f64> {
    if z.im.abs() >= IMAG_RESIDUE_TOL {
        return Err(Error::Consistency(format!(
            "expectation value has imaginary residue {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `⟨ψ|O|ψ⟩` or `Tr(ρ O)` for a Hermitian observable.
pub fn expectation(state: &QuantumState, obs: &Matrix) -> Result<f64> {
    let dim = 1 << state.n_qubits();
    if obs.dim() != dim {
        return Err(validation(format!(
            "observable dimension {} does not match state dimension {dim}",
            obs.dim()
        )));
    }
    let z = match state {
        QuantumState::Pure(s) => {
            let amps = s.amplitudes();
            let o_psi = obs.apply(amps);
            amps.iter().zip(&o_psi).map(|(a, b)| a.conj() * b).sum()
        }
        QuantumState::Mixed(r) => r.matrix().matmul(obs).trace(),
    };
    real_part_checked(z)
}

/// Expectation of a product observable, computed by applying the 2×2
/// factors in place rather than forming the full Kronecker product.
/// Agrees with `expectation(state, &tensor_observable(slots)?)`.
pub fn local_expectation(state: &QuantumState, slots: &[PartySetting]) -> Result<f64> {
    let n = state.n_qubits();
    if slots.len() != n {
        return Err(validation(format!(
            "{} slots given for {n} qubits",
            slots.len()
        )));
    }
    let z = match state {
        QuantumState::Pure(s) => {
            let mut buf = s.amplitudes().to_vec();
            apply_product(&mut buf, n, slots);
            s.amplitudes()
                .iter()
                .zip(&buf)
                .map(|(a, b)| a.conj() * b)
                .sum()
        }
        QuantumState::Mixed(r) => {
            // Tr(ρO) = Σ_j (O ρ)_{jj}; apply O to each column of ρ.
            let dim = 1 << n;
            let m = r.matrix();
            let mut total = ZERO;
            let mut col = vec![ZERO; dim];
            for j in 0..dim {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = m.get(i, j);
                }
                apply_product(&mut col, n, slots);
                total += col[j];
            }
            total
        }
    };
    real_part_checked(z)
}

fn apply_product(buf: &mut [C64], n: usize, slots: &[PartySetting]) {
    for (q, slot) in slots.iter().enumerate() {
        if let PartySetting::Direction(d) = slot {
            apply_2x2(buf, n, q, d.pauli_entries());
        }
    }
}

fn check_mask(mask: &[usize], n: usize) -> Result<usize> {
    let mut bits = 0usize;
    for &q in mask {
        if q >= n {
            return Err(validation(format!("qubit {q} out of range for {n} qubits")));
        }
        bits |= 1 << (n - 1 - q);
    }
    if bits == 0 || bits == (1 << n) - 1 {
        return Err(validation(
            "partial transpose mask must be a non-empty proper subset",
        ));
    }
    Ok(bits)
}

/// Transposes the tensor indices of the qubits listed in `mask`.
pub fn partial_transpose(rho: &DensityOperator, mask: &[usize]) -> Result<Matrix> {
    partial_transpose_matrix(rho.matrix(), rho.n_qubits(), mask)
}

pub fn partial_transpose_matrix(m: &Matrix, n_qubits: usize, mask: &[usize]) -> Result<Matrix> {
    if m.dim() != 1 << n_qubits {
        return Err(validation("matrix dimension does not match qubit count"));
    }
    let bits = check_mask(mask, n_qubits)?;
    let dim = m.dim();
    let mut out = Matrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            // swap the masked bits between row and column index
            let ni = (i & !bits) | (j & bits);
            let nj = (j & !bits) | (i & bits);
            out.set(ni, nj, m.get(i, j));
        }
    }
    Ok(out)
}

/// Sum of the moduli of the negative eigenvalues of the partial transpose,
/// `(‖ρ^Γ‖₁ − 1)/2`.
pub fn negativity(rho: &DensityOperator, mask: &[usize]) -> Result<f64> {
    let pt = partial_transpose(rho, mask)?;
    Ok(pt
        .eigenvalues_hermitian()
        .into_iter()
        .filter(|&e| e < 0.0)
        .fold(0.0, |acc, e| acc - e))
}

/// `‖ρ^Γ‖₁ − 1`, twice [`negativity`]; the normalization under which a
/// maximally entangled two-qubit state scores 1.
pub fn trace_norm_negativity(rho: &DensityOperator, mask: &[usize]) -> Result<f64> {
    Ok(2.0 * negativity(rho, mask)?)
}

/// Single-qubit unitary `exp(-i a/2 n̂·σ⃗)` for random-rotation tests and
/// local-equivalence checks.
pub fn rotation(axis: &MeasurementDirection, angle: f64) -> Matrix {
    let (s, c) = (angle / 2.0).sin_cos();
    let p = axis.pauli_entries();
    let i = C64::new(0.0, 1.0);
    Matrix::from_rows(vec![
        ONE * c - i * s * p[0],
        -i * s * p[1],
        -i * s * p[2],
        ONE * c - i * s * p[3],
    ])
    .expect("2x2")
}

/// Random density operator `G G† / Tr(G G†)` with `G` a complex Ginibre
/// matrix (full rank with probability one).
pub fn random_density_operator<R: rand::Rng + ?Sized>(
    n_qubits: usize,
    rng: &mut R,
) -> Result<DensityOperator> {
    check_qubits(n_qubits)?;
    let dim = 1 << n_qubits;
    let mut g = Matrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            g.set(i, j, C64::new(re, im));
        }
    }
    let gg = g.matmul(&g.adjoint());
    let tr = gg.trace().re;
    let m = gg.scale(1.0 / tr);
    // symmetrize away rounding noise
    DensityOperator::new(n_qubits, m.add(&m.adjoint()).scale(0.5))
}

/// Haar-random single-qubit unitary.
pub fn random_unitary_2x2<R: rand::Rng + ?Sized>(rng: &mut R) -> Matrix {
    let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
    let phi = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
    let angle = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
    rotation(&MeasurementDirection::from_angles(theta, phi), angle)
}
