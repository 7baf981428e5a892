//! MaxCut problem and driver Hamiltonians, and the observable sets needed to
//! evaluate the cost `<H_p>` and the feedback signal `<i[H_d, H_p]>`.
//!
//! With `H_p = -1/2 sum_(i,j) (1 - Z_i Z_j)` and `H_d = sum_j X_j`, the
//! commutator reduces to `i[H_d, H_p] = sum_(i,j) (Y_i Z_j + Z_i Y_j)`, so
//! every observable involved is a 2-local string over {Y, Z}.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{Graph, MAX_DENSE_VERTICES};
use crate::pauli::{Pauli, PauliString};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservableSet {
    num_qubits: usize,
    edge_order: Vec<(usize, usize)>,
    cost_terms: Vec<PauliString>,
    control_terms: Vec<PauliString>,
}

impl ObservableSet {
    /// `cost_terms[e] = Z_i Z_j`, `control_terms[2e] = Y_i Z_j`,
    /// `control_terms[2e + 1] = Z_i Y_j` for the `e`-th edge `(i, j)`, `i < j`.
    pub fn build(g: &Graph) -> Result<Self> {
        if g.num_edges() == 0 {
            return Err(Error::Domain("graph has no edges".into()));
        }
        let n = g.num_vertices();
        let mut cost_terms = Vec::with_capacity(g.num_edges());
        let mut control_terms = Vec::with_capacity(2 * g.num_edges());
        for &(i, j) in g.edges() {
            cost_terms.push(PauliString::from_sparse(n, &[(i, Pauli::Z), (j, Pauli::Z)])?);
            control_terms.push(PauliString::from_sparse(n, &[(i, Pauli::Y), (j, Pauli::Z)])?);
            control_terms.push(PauliString::from_sparse(n, &[(i, Pauli::Z), (j, Pauli::Y)])?);
        }
        Ok(Self {
            num_qubits: n,
            edge_order: g.edges().to_vec(),
            cost_terms,
            control_terms,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn edge_order(&self) -> &[(usize, usize)] {
        &self.edge_order
    }

    pub fn cost_terms(&self) -> &[PauliString] {
        &self.cost_terms
    }

    pub fn control_terms(&self) -> &[PauliString] {
        &self.control_terms
    }

    /// Control terms followed by cost terms; the order estimators receive them in.
    pub fn all_terms(&self) -> Vec<PauliString> {
        self.control_terms
            .iter()
            .chain(self.cost_terms.iter())
            .cloned()
            .collect()
    }

    /// `C = -1/2 sum_e (1 - zz[e])`, constant term included.
    pub fn cost_from_expectations(&self, zz: &[f64]) -> Result<f64> {
        if zz.len() != self.cost_terms.len() {
            return Err(Error::Domain(format!(
                "expected {} ZZ expectations, got {}",
                self.cost_terms.len(),
                zz.len()
            )));
        }
        Ok(-0.5 * zz.iter().map(|v| 1.0 - v).sum::<f64>())
    }

    /// `A = sum` of all control-term expectations.
    pub fn control_from_expectations(&self, yz: &[f64]) -> Result<f64> {
        if yz.len() != self.control_terms.len() {
            return Err(Error::Domain(format!(
                "expected {} control expectations, got {}",
                self.control_terms.len(),
                yz.len()
            )));
        }
        Ok(yz.iter().sum())
    }
}

/// The transverse-field driver `H_d = sum_j X_j` on `n` qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DriverSpec {
    n: usize,
}

impl DriverSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("driver needs at least one qubit".into()));
        }
        Ok(Self { n })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> Vec<PauliString> {
        (0..self.n)
            .map(|q| PauliString::from_sparse(self.n, &[(q, Pauli::X)]).expect("qubit in range"))
            .collect()
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        let dim = 1usize << self.n;
        let mut acc = DMatrix::zeros(dim, dim);
        for term in self.terms() {
            acc += term.dense_matrix()?;
        }
        Ok(acc)
    }
}

/// Diagonal of `H_p` in the computational basis: entry `b` is minus the
/// number of edges cut by bitstring `b`.
pub fn dense_problem_hamiltonian(g: &Graph) -> Result<Vec<f64>> {
    let n = g.num_vertices();
    if n > MAX_DENSE_VERTICES {
        return Err(Error::Size(format!(
            "problem Hamiltonian diagonal limited to {MAX_DENSE_VERTICES} qubits, got {n}"
        )));
    }
    Ok((0..1usize << n).map(|b| -(g.cut_size(b) as f64)).collect())
}
