//! Phase-free n-qubit Pauli strings.
//!
//! Qubit 0 is the leftmost label and the most significant bit of every
//! basis-state index used elsewhere in the crate.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest qubit count for which [`PauliString::dense_matrix`] will allocate.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// 2x2 matrix in the computational basis.
    pub fn matrix(self) -> DMatrix<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let entries = match self {
            Pauli::I => [one, o, o, one],
            Pauli::X => [o, one, one, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [one, o, o, -one],
        };
        DMatrix::from_row_slice(2, 2, &entries)
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Tensor product of single-qubit Paulis, without phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    axes: Vec<Pauli>,
}

impl PauliString {
    pub fn new(axes: Vec<Pauli>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Domain("a Pauli string needs at least one qubit".into()));
        }
        Ok(Self { axes })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(vec![Pauli::I; n])
    }

    /// Builds a string acting as `ops` on the given qubits and as identity elsewhere.
    pub fn from_sparse(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut axes = vec![Pauli::I; n];
        for &(q, p) in ops {
            if q >= n {
                return Err(Error::Domain(format!("qubit {q} out of range for n = {n}")));
            }
            axes[q] = p;
        }
        Self::new(axes)
    }

    pub fn from_label(label: &str) -> Result<Self> {
        if label.is_empty() {
            return Err(Error::parse("position 0", "empty Pauli label"));
        }
        let axes = label
            .chars()
            .enumerate()
            .map(|(pos, c)| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::parse(format!("position {pos}"), format!("invalid Pauli character {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    pub fn num_qubits(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Pauli] {
        &self.axes
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        self.axes[qubit]
    }

    pub fn weight(&self) -> usize {
        self.axes.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Qubits carrying a non-identity label, in increasing order.
    pub fn support(&self) -> Vec<usize> {
        self.axes
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn contains(&self, p: Pauli) -> bool {
        self.axes.contains(&p)
    }

    /// True when every non-identity label is Z.
    pub fn is_diagonal(&self) -> bool {
        self.axes.iter().all(|&p| matches!(p, Pauli::I | Pauli::Z))
    }

    pub fn label(&self) -> String {
        self.axes.iter().map(|p| p.as_char()).collect()
    }

    /// Index-space masks `(flip, phase, y_count)`: the string maps `|b>` to
    /// `i^y_count * (-1)^popcount(b & phase) |b ^ flip>`.
    pub fn masks(&self) -> (usize, usize, u32) {
        let n = self.axes.len();
        let mut flip = 0usize;
        let mut phase = 0usize;
        let mut ys = 0u32;
        for (q, &p) in self.axes.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    phase |= bit;
                    ys += 1;
                }
                Pauli::Z => phase |= bit,
            }
        }
        (flip, phase, ys)
    }

    /// Kronecker product of the single-qubit matrices, qubit 0 outermost.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        let n = self.num_qubits();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Size(format!(
                "dense matrix for {n} qubits exceeds the {MAX_DENSE_QUBITS}-qubit limit"
            )));
        }
        let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for p in &self.axes {
            m = m.kronecker(&p.matrix());
        }
        Ok(m)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_label(s)
    }
}
