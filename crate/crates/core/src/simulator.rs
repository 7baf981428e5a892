//! Dense state-vector simulation of the alternating FALQON layers and of
//! measurements in per-qubit Pauli bases.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::graph::{Graph, MAX_DENSE_VERTICES};
use crate::hamiltonian::dense_problem_hamiltonian;
use crate::pauli::{Pauli, PauliString};

pub const MAX_QUBITS: usize = MAX_DENSE_VERTICES;

/// `2^n` amplitudes; qubit 0 is the most significant index bit.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Size(format!("qubit count must be in 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(())
}

impl StateVector {
    /// `|+>^n`, the ground state of `-H_d` and the FALQON starting point.
    pub fn plus_state(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        let a = (dim as f64).sqrt().recip();
        Ok(Self {
            n,
            amps: vec![Complex64::new(a, 0.0); dim],
        })
    }

    pub fn basis_state(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::Domain(format!(
                "basis index {index} out of range for {n} qubits"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Wraps raw amplitudes, normalising them. Fails on a zero vector or a
    /// length that is not a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Size(format!("amplitude count {dim} is not 2^n with n >= 1")));
        }
        let n = dim.trailing_zeros() as usize;
        check_qubits(n)?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::Domain("cannot normalise a zero or non-finite vector".into()));
        }
        Ok(Self {
            n,
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn bit(&self, qubit: usize) -> usize {
        1usize << (self.n - 1 - qubit)
    }

    /// Multiplies amplitude `b` by `exp(-i dt diag[b])`.
    pub fn apply_diagonal_phase(&mut self, diag: &[f64], dt: f64) -> Result<()> {
        if diag.len() != self.amps.len() {
            return Err(Error::Domain(format!(
                "diagonal of length {} does not match state dimension {}",
                diag.len(),
                self.amps.len()
            )));
        }
        for (a, &d) in self.amps.iter_mut().zip(diag) {
            *a *= Complex64::from_polar(1.0, -dt * d);
        }
        Ok(())
    }

    /// `U_p = exp(-i H_p dt)` for the MaxCut Hamiltonian of `g`.
    pub fn apply_problem_unitary(&mut self, g: &Graph, dt: f64) -> Result<()> {
        if g.num_vertices() != self.n {
            return Err(Error::Domain(format!(
                "graph has {} vertices but the state has {} qubits",
                g.num_vertices(),
                self.n
            )));
        }
        let diag = dense_problem_hamiltonian(g)?;
        self.apply_diagonal_phase(&diag, dt)
    }

    /// `U_d = exp(-i beta dt sum_j X_j)`, applied as one `exp(-i beta dt X)` per qubit.
    pub fn apply_driver_unitary(&mut self, beta: f64, dt: f64) {
        let theta = beta * dt;
        if theta == 0.0 {
            return;
        }
        let c = Complex64::new(theta.cos(), 0.0);
        let s = Complex64::new(0.0, -theta.sin());
        for q in 0..self.n {
            self.apply_single_qubit(q, [[c, s], [s, c]]);
        }
    }

    /// Applies a 2x2 unitary `[[a, b], [c, d]]` to `qubit`.
    pub fn apply_single_qubit(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = self.bit(qubit);
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                continue;
            }
            let j = i | bit;
            let (a0, a1) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// `<psi|P|psi>`; the imaginary residue is discarded.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.num_qubits() != self.n {
            return Err(Error::Domain(format!(
                "observable acts on {} qubits, state has {}",
                p.num_qubits(),
                self.n
            )));
        }
        let (flip, phase, ys) = p.masks();
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, a) in self.amps.iter().enumerate() {
            let term = self.amps[b ^ flip].conj() * a;
            if (b & phase).count_ones() % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        let ipow = match ys % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        Ok((acc * ipow).re)
    }

    /// Copy of the state rotated so that a computational-basis readout
    /// measures each qubit in its assigned Pauli basis.
    pub fn rotated(&self, basis: &BasisAssignment) -> Result<Self> {
        if basis.len() != self.n {
            return Err(Error::Domain(format!(
                "basis assignment has {} entries, state has {} qubits",
                basis.len(),
                self.n
            )));
        }
        let mut out = self.clone();
        for (q, &b) in basis.labels().iter().enumerate() {
            match b {
                Pauli::X => out.apply_single_qubit(q, HADAMARD),
                Pauli::Y => out.apply_single_qubit(q, Y_TO_Z),
                _ => {}
            }
        }
        Ok(out)
    }

    /// Born distribution of a readout in `basis`.
    pub fn basis_probabilities(&self, basis: &BasisAssignment) -> Result<Vec<f64>> {
        Ok(self.rotated(basis)?.amps.iter().map(|a| a.norm_sqr()).collect())
    }

    /// Draws `shots` independent readouts in `basis` from the exact Born
    /// distribution. The state itself is left untouched.
    pub fn sample_bitstrings<R: Rng + ?Sized>(
        &self,
        basis: &BasisAssignment,
        shots: u64,
        rng: &mut R,
    ) -> Result<OutcomeCounts> {
        if shots == 0 {
            return Err(Error::Domain("at least one shot is required".into()));
        }
        let probs = self.basis_probabilities(basis)?;
        Ok(sample_multinomial(&probs, shots, rng))
    }
}

const H: f64 = FRAC_1_SQRT_2;

const HADAMARD: [[Complex64; 2]; 2] = [
    [Complex64::new(H, 0.0), Complex64::new(H, 0.0)],
    [Complex64::new(H, 0.0), Complex64::new(-H, 0.0)],
];

/// `H S^dagger`: sends `|+i>` to `|0>` and `|-i>` to `|1>`.
const Y_TO_Z: [[Complex64; 2]; 2] = [
    [Complex64::new(H, 0.0), Complex64::new(0.0, -H)],
    [Complex64::new(H, 0.0), Complex64::new(0.0, H)],
];

/// Multinomial draw over `probs` by sequential conditional binomials.
fn sample_multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> OutcomeCounts {
    let mut remaining_mass: f64 = probs.iter().sum();
    let mut remaining = shots;
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut entries = Vec::new();
    for (idx, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let k = if idx == last || p >= remaining_mass {
            remaining
        } else {
            let ratio = (p / remaining_mass).clamp(0.0, 1.0);
            Binomial::new(remaining, ratio)
                .expect("probability clamped to [0, 1]")
                .sample(rng)
        };
        remaining_mass -= p;
        if k > 0 {
            entries.push((idx, k));
            remaining -= k;
        }
    }
    OutcomeCounts { entries, shots }
}

/// Per-qubit measurement bases, each one of X, Y or Z.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisAssignment(Vec<Pauli>);

impl BasisAssignment {
    pub fn new(labels: Vec<Pauli>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("basis assignment needs at least one qubit".into()));
        }
        if labels.contains(&Pauli::I) {
            return Err(Error::Domain("measurement bases must be X, Y or Z".into()));
        }
        Ok(Self(labels))
    }

    pub fn uniform(n: usize, basis: Pauli) -> Result<Self> {
        Self::new(vec![basis; n])
    }

    /// Measures `p`'s support in `p`'s own bases and every other qubit in Z.
    pub fn for_observable(p: &PauliString) -> Self {
        Self(
            p.axes()
                .iter()
                .map(|&a| if a == Pauli::I { Pauli::Z } else { a })
                .collect(),
        )
    }

    pub fn parse(label: &str) -> Result<Self> {
        let labels = label
            .chars()
            .enumerate()
            .map(|(pos, c)| match Pauli::from_char(c) {
                Some(p) if p != Pauli::I => Ok(p),
                _ => Err(Error::parse(format!("position {pos}"), format!("invalid basis {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[Pauli] {
        &self.0
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.0[qubit]
    }
}

impl fmt::Display for BasisAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Sparse histogram of readouts, keyed by basis-state index in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OutcomeCounts {
    entries: Vec<(usize, u64)>,
    shots: u64,
}

impl OutcomeCounts {
    /// Builds a histogram from `(index, count)` pairs; zero counts are dropped
    /// and repeated indices merged.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut map = std::collections::BTreeMap::new();
        for (idx, c) in pairs {
            if c > 0 {
                *map.entry(idx).or_insert(0) += c;
            }
        }
        let shots = map.values().sum();
        Self {
            entries: map.into_iter().collect(),
            shots,
        }
    }

    pub fn total(&self) -> u64 {
        self.shots
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn count(&self, index: usize) -> u64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0)
    }

    pub fn num_distinct(&self) -> usize {
        self.entries.len()
    }
}

/// Renders index `b` as an `n`-character bitstring, qubit 0 first.
pub fn index_to_bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if (index >> (n - 1 - q)) & 1 == 0 { '0' } else { '1' })
        .collect()
}

pub fn bitstring_to_index(bits: &str) -> Result<usize> {
    if bits.is_empty() || bits.len() > usize::BITS as usize {
        return Err(Error::parse("bitstring", format!("invalid length {}", bits.len())));
    }
    bits.chars().enumerate().try_fold(0usize, |acc, (pos, c)| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        _ => Err(Error::parse(format!("position {pos}"), format!("invalid bit {c:?}"))),
    })
}
