//! Finite-budget estimation of Pauli expectation values.
//!
//! Two measurement strategies are provided:
//!
//! * **Direct**: one measurement setting per non-diagonal observable, plus one
//!   computational-basis setting shared by all Z-only observables. The shot
//!   budget is split equally across settings.
//! * **Classical shadows**: `M` rounds, each with an independently drawn
//!   per-qubit basis and `K` shots. Every snapshot is an unbiased estimator of
//!   the state; all observables are evaluated from the same data.
//!
//! For an ensemble drawing each qubit's basis uniformly from a set of size
//! `f`, the inverted single-qubit measurement channel gives the snapshot value
//! `prod_{j in supp(P)} f * [basis_j == P_j] * s_j`, with `s_j = +1` for a
//! readout of 0 and `-1` for 1. The uniform {X, Y, Z} ensemble has `f = 3`.
//! The biased {Y, Z} ensemble has `f = 2`; its channel annihilates X, so only
//! observables over {I, Y, Z} can be estimated with it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::simulator::{bitstring_to_index, index_to_bitstring, BasisAssignment, OutcomeCounts, StateVector};

/// Per-qubit basis distribution for randomized measurements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowEnsemble {
    allowed: Vec<Pauli>,
}

impl ShadowEnsemble {
    pub fn new(mut allowed: Vec<Pauli>) -> Result<Self> {
        allowed.sort();
        allowed.dedup();
        if allowed.is_empty() || allowed.contains(&Pauli::I) {
            return Err(Error::Domain(
                "ensemble bases must be a nonempty subset of {X, Y, Z}".into(),
            ));
        }
        Ok(Self { allowed })
    }

    /// Uniform over {X, Y, Z}.
    pub fn uniform() -> Self {
        Self {
            allowed: vec![Pauli::X, Pauli::Y, Pauli::Z],
        }
    }

    /// Uniform over {Y, Z}; sufficient for the MaxCut cost and control terms.
    pub fn biased() -> Self {
        Self {
            allowed: vec![Pauli::Y, Pauli::Z],
        }
    }

    pub fn allowed_bases(&self) -> &[Pauli] {
        &self.allowed
    }

    pub fn inverse_factor(&self) -> f64 {
        self.allowed.len() as f64
    }

    pub fn supports(&self, p: &PauliString) -> bool {
        p.axes().iter().all(|a| *a == Pauli::I || self.allowed.contains(a))
    }

    fn check_supported(&self, p: &PauliString) -> Result<()> {
        if self.supports(p) {
            Ok(())
        } else {
            Err(Error::UnsupportedObservable {
                observable: p.label(),
                allowed: self.allowed.iter().map(|b| b.as_char()).collect(),
            })
        }
    }

    pub fn sample_basis<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> BasisAssignment {
        let labels = (0..n)
            .map(|_| self.allowed[rng.random_range(0..self.allowed.len())])
            .collect();
        BasisAssignment::new(labels).expect("ensemble bases exclude identity")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowRecord {
    pub basis: BasisAssignment,
    pub counts: OutcomeCounts,
}

/// Randomized-measurement data: `M` rounds of `K` shots each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowData {
    num_qubits: usize,
    shots_per_round: u64,
    records: Vec<ShadowRecord>,
}

const SHADOW_FORMAT_TAG: &str = "falqon-shadow v1";

impl ShadowData {
    pub fn new(num_qubits: usize, shots_per_round: u64, records: Vec<ShadowRecord>) -> Result<Self> {
        if shots_per_round == 0 {
            return Err(Error::Domain("shots per round must be positive".into()));
        }
        for (m, r) in records.iter().enumerate() {
            if r.basis.len() != num_qubits {
                return Err(Error::Domain(format!("round {m}: basis length mismatch")));
            }
            if r.counts.total() != shots_per_round {
                return Err(Error::Domain(format!(
                    "round {m}: counts sum to {}, expected {shots_per_round}",
                    r.counts.total()
                )));
            }
        }
        Ok(Self {
            num_qubits,
            shots_per_round,
            records,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn rounds(&self) -> usize {
        self.records.len()
    }

    pub fn shots_per_round(&self) -> u64 {
        self.shots_per_round
    }

    /// `N = M * K`.
    pub fn total_measurements(&self) -> u64 {
        self.records.len() as u64 * self.shots_per_round
    }

    pub fn records(&self) -> &[ShadowRecord] {
        &self.records
    }

    /// Adds `rounds` further independent rounds drawn from `psi`.
    pub fn extend<R: Rng + ?Sized>(
        &mut self,
        psi: &StateVector,
        ensemble: &ShadowEnsemble,
        rounds: usize,
        rng: &mut R,
    ) -> Result<()> {
        if psi.num_qubits() != self.num_qubits {
            return Err(Error::Domain("state size does not match shadow data".into()));
        }
        self.records.reserve(rounds);
        for _ in 0..rounds {
            let basis = ensemble.sample_basis(self.num_qubits, rng);
            let counts = psi.sample_bitstrings(&basis, self.shots_per_round, rng)?;
            self.records.push(ShadowRecord { basis, counts });
        }
        Ok(())
    }

    /// Text serialisation: a tag line, then one line per round holding the
    /// basis labels followed by `bitstring:count` pairs.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{SHADOW_FORMAT_TAG} n={} M={} K={}",
            self.num_qubits,
            self.rounds(),
            self.shots_per_round
        )?;
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            line.push_str(&r.basis.to_string());
            for (idx, c) in r.counts.iter() {
                let _ = write!(line, " {}:{c}", index_to_bitstring(idx, self.num_qubits));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse("line 1", "empty shadow file"))?;
        let header = header.map_err(|e| Error::parse("line 1", e.to_string()))?;
        let rest = header
            .strip_prefix(SHADOW_FORMAT_TAG)
            .ok_or_else(|| Error::parse("line 1", format!("expected `{SHADOW_FORMAT_TAG}` tag")))?;
        let mut fields: HashMap<&str, usize> = HashMap::new();
        for kv in rest.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::parse("line 1", format!("malformed field {kv:?}")))?;
            let v = v
                .parse()
                .map_err(|_| Error::parse("line 1", format!("invalid value in {kv:?}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::parse("line 1", format!("missing field {k}")))
        };
        let (n, m, k) = (get("n")?, get("M")?, get("K")? as u64);

        let mut records = Vec::with_capacity(m);
        for (idx, line) in lines {
            let at = format!("line {}", idx + 1);
            let line = line.map_err(|e| Error::parse(at.clone(), e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let basis = BasisAssignment::parse(parts.next().unwrap_or_default())
                .map_err(|e| Error::parse(at.clone(), e.to_string()))?;
            let mut pairs = Vec::new();
            for p in parts {
                let (bits, c) = p
                    .split_once(':')
                    .ok_or_else(|| Error::parse(at.clone(), format!("malformed outcome {p:?}")))?;
                if bits.len() != n {
                    return Err(Error::parse(at.clone(), format!("bitstring {bits:?} is not {n} bits")));
                }
                let i = bitstring_to_index(bits).map_err(|e| Error::parse(at.clone(), e.to_string()))?;
                let c: u64 = c
                    .parse()
                    .map_err(|_| Error::parse(at.clone(), format!("invalid count in {p:?}")))?;
                pairs.push((i, c));
            }
            records.push(ShadowRecord {
                basis,
                counts: OutcomeCounts::from_pairs(pairs),
            });
        }
        if records.len() != m {
            return Err(Error::parse(
                "end of file",
                format!("header declares {m} rounds, found {}", records.len()),
            ));
        }
        Self::new(n, k, records)
    }
}

/// Estimates for a list of observables, in request order.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub estimates: Vec<f64>,
    /// Shots that informed each estimate: the setting's shots for direct
    /// measurement, or the number of basis-matching snapshots for shadows.
    pub samples: Vec<u64>,
    /// Total measurements consumed.
    pub budget: u64,
}

/// Draws `rounds` random bases from `ensemble` and `shots_per_round` readouts for each.
pub fn collect_shadow<R: Rng + ?Sized>(
    psi: &StateVector,
    ensemble: &ShadowEnsemble,
    rounds: usize,
    shots_per_round: u64,
    rng: &mut R,
) -> Result<ShadowData> {
    if rounds == 0 || shots_per_round == 0 {
        return Err(Error::Domain("shadow collection needs M >= 1 and K >= 1".into()));
    }
    let mut data = ShadowData::new(psi.num_qubits(), shots_per_round, Vec::new())?;
    data.extend(psi, ensemble, rounds, rng)?;
    Ok(data)
}

/// Value of a single snapshot for observable `p`: `f^w * prod s_j` when the
/// round's bases match `p` on its support, else zero.
pub fn snapshot_value(ensemble: &ShadowEnsemble, basis: &BasisAssignment, outcome: usize, p: &PauliString) -> f64 {
    let n = p.num_qubits();
    let f = ensemble.inverse_factor();
    let mut v = 1.0;
    for q in p.support() {
        if basis.get(q) != p.get(q) {
            return 0.0;
        }
        let bit = (outcome >> (n - 1 - q)) & 1;
        v *= if bit == 0 { f } else { -f };
    }
    v
}

struct Matcher {
    support: Vec<(usize, Pauli)>,
    mask: usize,
    scale: f64,
}

impl Matcher {
    fn new(ensemble: &ShadowEnsemble, p: &PauliString) -> Self {
        let n = p.num_qubits();
        let support: Vec<(usize, Pauli)> = p.support().into_iter().map(|q| (q, p.get(q))).collect();
        let mask = support.iter().fold(0, |m, &(q, _)| m | (1usize << (n - 1 - q)));
        let scale = ensemble.inverse_factor().powi(support.len() as i32);
        Self { support, mask, scale }
    }

    fn matches(&self, basis: &BasisAssignment) -> bool {
        self.support.iter().all(|&(q, b)| basis.get(q) == b)
    }

    /// Sum of +-1 parities over a round's outcomes.
    fn parity_sum(&self, counts: &OutcomeCounts) -> i64 {
        counts
            .iter()
            .map(|(idx, c)| {
                if (idx & self.mask).count_ones().is_multiple_of(2) {
                    c as i64
                } else {
                    -(c as i64)
                }
            })
            .sum()
    }
}

fn check_data(data: &ShadowData, p: &PauliString) -> Result<()> {
    if p.num_qubits() != data.num_qubits {
        return Err(Error::Domain(format!(
            "observable acts on {} qubits, data has {}",
            p.num_qubits(),
            data.num_qubits
        )));
    }
    if data.records.is_empty() {
        return Err(Error::Domain("shadow data has no rounds".into()));
    }
    Ok(())
}

/// Mean snapshot value of `p` over all `M * K` snapshots.
pub fn shadow_expectation(data: &ShadowData, ensemble: &ShadowEnsemble, p: &PauliString) -> Result<f64> {
    Ok(shadow_expectation_counted(data, ensemble, p)?.0)
}

fn shadow_expectation_counted(data: &ShadowData, ensemble: &ShadowEnsemble, p: &PauliString) -> Result<(f64, u64)> {
    ensemble.check_supported(p)?;
    check_data(data, p)?;
    let m = Matcher::new(ensemble, p);
    let mut sum: i64 = 0;
    let mut matched = 0u64;
    for r in &data.records {
        if m.matches(&r.basis) {
            sum += m.parity_sum(&r.counts);
            matched += r.counts.total();
        }
    }
    Ok((m.scale * sum as f64 / data.total_measurements() as f64, matched))
}

/// Evaluates every observable from the same data; the budget is `M * K`
/// whatever the number of observables.
pub fn shadow_expectations(
    data: &ShadowData,
    ensemble: &ShadowEnsemble,
    observables: &[PauliString],
) -> Result<EstimateReport> {
    let mut estimates = Vec::with_capacity(observables.len());
    let mut samples = Vec::with_capacity(observables.len());
    for p in observables {
        let (e, s) = shadow_expectation_counted(data, ensemble, p)?;
        estimates.push(e);
        samples.push(s);
    }
    Ok(EstimateReport {
        estimates,
        samples,
        budget: data.total_measurements(),
    })
}

/// A direct-measurement setting and the observables it serves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementSetting {
    pub basis: BasisAssignment,
    pub observables: Vec<usize>,
}

/// Groups observables into settings: all diagonal (Z-only) observables share
/// one computational-basis setting, every other distinct observable gets its
/// own. Settings appear in order of first use.
pub fn measurement_settings(observables: &[PauliString]) -> Result<Vec<MeasurementSetting>> {
    let n = match observables.first() {
        Some(p) => p.num_qubits(),
        None => return Ok(Vec::new()),
    };
    let mut settings: Vec<MeasurementSetting> = Vec::new();
    let mut z_setting: Option<usize> = None;
    let mut by_label: HashMap<&PauliString, usize> = HashMap::new();
    for (i, p) in observables.iter().enumerate() {
        if p.num_qubits() != n {
            return Err(Error::Domain("observables act on different qubit counts".into()));
        }
        let slot = if p.is_diagonal() {
            *z_setting.get_or_insert_with(|| {
                settings.push(MeasurementSetting {
                    basis: BasisAssignment::uniform(n, Pauli::Z).expect("n >= 1"),
                    observables: Vec::new(),
                });
                settings.len() - 1
            })
        } else {
            *by_label.entry(p).or_insert_with(|| {
                settings.push(MeasurementSetting {
                    basis: BasisAssignment::for_observable(p),
                    observables: Vec::new(),
                });
                settings.len() - 1
            })
        };
        settings[slot].observables.push(i);
    }
    Ok(settings)
}

/// Splits `budget` equally across `parts`, remainder to the earliest parts.
pub fn split_budget(budget: u64, parts: usize) -> Vec<u64> {
    let parts64 = parts as u64;
    let (base, rem) = (budget / parts64, budget % parts64);
    (0..parts64).map(|i| base + u64::from(i < rem)).collect()
}

/// Direct per-observable estimation with an equal shot split across settings.
pub fn direct_estimate<R: Rng + ?Sized>(
    psi: &StateVector,
    observables: &[PauliString],
    total_budget: u64,
    rng: &mut R,
) -> Result<EstimateReport> {
    for p in observables {
        if p.num_qubits() != psi.num_qubits() {
            return Err(Error::Domain(format!(
                "observable {p} does not match the {}-qubit state",
                psi.num_qubits()
            )));
        }
    }
    let settings = measurement_settings(observables)?;
    if total_budget < settings.len() as u64 {
        return Err(Error::Budget {
            budget: total_budget,
            settings: settings.len(),
        });
    }
    let n = psi.num_qubits();
    let mut estimates = vec![0.0; observables.len()];
    let mut samples = vec![0u64; observables.len()];
    for (setting, shots) in settings.iter().zip(split_budget(total_budget, settings.len())) {
        let counts = psi.sample_bitstrings(&setting.basis, shots, rng)?;
        for &i in &setting.observables {
            let mask = observables[i]
                .support()
                .iter()
                .fold(0usize, |m, &q| m | (1usize << (n - 1 - q)));
            let sum: i64 = counts
                .iter()
                .map(|(idx, c)| {
                    if (idx & mask).count_ones() % 2 == 0 {
                        c as i64
                    } else {
                        -(c as i64)
                    }
                })
                .sum();
            estimates[i] = sum as f64 / shots as f64;
            samples[i] = shots;
        }
    }
    Ok(EstimateReport {
        estimates,
        samples,
        budget: total_budget,
    })
}

/// A pluggable source of expectation values for FALQON's feedback loop.
pub trait ObservableEstimator: Send + Sync {
    fn estimate(&self, psi: &StateVector, observables: &[PauliString], rng: &mut dyn RngCore)
        -> Result<EstimateReport>;

    /// Measurements consumed per call (zero for exact evaluation).
    fn budget(&self) -> u64;
}

/// Noise-free expectations straight from the state vector.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactEstimator;

impl ObservableEstimator for ExactEstimator {
    fn estimate(
        &self,
        psi: &StateVector,
        observables: &[PauliString],
        _rng: &mut dyn RngCore,
    ) -> Result<EstimateReport> {
        let estimates = observables
            .iter()
            .map(|p| psi.expectation(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(EstimateReport {
            samples: vec![0; estimates.len()],
            estimates,
            budget: 0,
        })
    }

    fn budget(&self) -> u64 {
        0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DirectEstimator {
    pub shots: u64,
}

impl ObservableEstimator for DirectEstimator {
    fn estimate(
        &self,
        psi: &StateVector,
        observables: &[PauliString],
        rng: &mut dyn RngCore,
    ) -> Result<EstimateReport> {
        direct_estimate(psi, observables, self.shots, rng)
    }

    fn budget(&self) -> u64 {
        self.shots
    }
}

#[derive(Clone, Debug)]
pub struct ShadowEstimator {
    pub ensemble: ShadowEnsemble,
    pub rounds: usize,
    pub shots_per_round: u64,
}

impl ObservableEstimator for ShadowEstimator {
    fn estimate(
        &self,
        psi: &StateVector,
        observables: &[PauliString],
        rng: &mut dyn RngCore,
    ) -> Result<EstimateReport> {
        for p in observables {
            self.ensemble.check_supported(p)?;
        }
        let data = collect_shadow(psi, &self.ensemble, self.rounds, self.shots_per_round, rng)?;
        shadow_expectations(&data, &self.ensemble, observables)
    }

    fn budget(&self) -> u64 {
        self.rounds as u64 * self.shots_per_round
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let amps = (0..1 << n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn random_supported(n: usize, ens: &ShadowEnsemble, rng: &mut ChaCha8Rng) -> PauliString {
        let mut choices = vec![Pauli::I];
        choices.extend_from_slice(ens.allowed_bases());
        PauliString::new((0..n).map(|_| choices[rng.random_range(0..choices.len())]).collect()).unwrap()
    }

    fn record(basis: &str, pairs: &[(&str, u64)]) -> ShadowRecord {
        ShadowRecord {
            basis: BasisAssignment::parse(basis).unwrap(),
            counts: OutcomeCounts::from_pairs(pairs.iter().map(|(b, c)| (bitstring_to_index(b).unwrap(), *c))),
        }
    }

    #[test]
    fn ensembles() {
        assert_eq!(ShadowEnsemble::uniform().inverse_factor(), 3.0);
        let b = ShadowEnsemble::biased();
        assert_eq!(b.inverse_factor(), 2.0);
        assert!(!b.allowed_bases().contains(&Pauli::X));
        assert!(ShadowEnsemble::new(vec![]).is_err());
        assert!(ShadowEnsemble::new(vec![Pauli::I]).is_err());
        assert_eq!(ShadowEnsemble::new(vec![Pauli::Z, Pauli::Y, Pauli::Z]).unwrap(), b);
    }

    #[test]
    fn single_snapshot_values() {
        let u = ShadowEnsemble::uniform();
        let z = PauliString::from_label("Z").unwrap();
        let data = ShadowData::new(1, 1, vec![record("Z", &[("0", 1)])]).unwrap();
        assert_eq!(shadow_expectation(&data, &u, &z).unwrap(), 3.0);

        let data = ShadowData::new(1, 1, vec![record("X", &[("0", 1)])]).unwrap();
        assert_eq!(shadow_expectation(&data, &u, &z).unwrap(), 0.0);

        let b = ShadowEnsemble::biased();
        let data = ShadowData::new(1, 1, vec![record("Z", &[("1", 1)])]).unwrap();
        assert_eq!(shadow_expectation(&data, &b, &z).unwrap(), -2.0);
    }

    #[test]
    fn biased_channel_inverse_factor_is_two() {
        // The {Y, Z} measurement channel M(rho) = 1/2 sum_b sum_s P_b,s rho P_b,s
        // acts on the Pauli basis as I -> I, X -> 0, Y -> Y/2, Z -> Z/2.
        let proj = |b: Pauli, s: f64| {
            let id = Pauli::I.matrix();
            (id + b.matrix() * Complex64::new(s, 0.0)) * Complex64::new(0.5, 0.0)
        };
        for (p, expected) in [(Pauli::I, 1.0), (Pauli::X, 0.0), (Pauli::Y, 0.5), (Pauli::Z, 0.5)] {
            let mut out = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
            for b in [Pauli::Y, Pauli::Z] {
                for s in [1.0, -1.0] {
                    let pr = proj(b, s);
                    out += &pr * p.matrix() * &pr * Complex64::new(0.5, 0.0);
                }
            }
            let target = p.matrix() * Complex64::new(expected, 0.0);
            assert!((out - target).iter().all(|z| z.norm() < 1e-15), "{p}");
        }
    }

    #[test]
    fn collection_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(4, &mut rng);
        let data = collect_shadow(&psi, &ShadowEnsemble::biased(), 200, 4, &mut rng).unwrap();
        assert!(data.records().iter().all(|r| !r.basis.labels().contains(&Pauli::X)));

        let data = collect_shadow(&psi, &ShadowEnsemble::uniform(), 1, 128, &mut rng).unwrap();
        assert_eq!(data.rounds(), 1);
        assert_eq!(data.records()[0].counts.total(), 128);

        let data = collect_shadow(&psi, &ShadowEnsemble::uniform(), 3, 1, &mut rng).unwrap();
        assert_eq!(data.rounds(), 3);
        assert_eq!(data.total_measurements(), 3);

        assert!(collect_shadow(&psi, &ShadowEnsemble::uniform(), 0, 1, &mut rng).is_err());
    }

    #[test]
    fn biased_ensemble_rejects_x() {
        let data = ShadowData::new(2, 1, vec![record("ZZ", &[("00", 1)])]).unwrap();
        let err = shadow_expectation(&data, &ShadowEnsemble::biased(), &"XZ".parse().unwrap());
        assert!(matches!(err, Err(Error::UnsupportedObservable { .. })));
    }

    #[test]
    fn multi_observable_reuse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = crate::graph::Graph::cycle(4).unwrap();
        let obs = crate::hamiltonian::ObservableSet::build(&g).unwrap().all_terms();
        let psi = random_state(4, &mut rng);
        let ens = ShadowEnsemble::biased();
        let data = collect_shadow(&psi, &ens, 16, 128, &mut rng).unwrap();

        let report = shadow_expectations(&data, &ens, &obs).unwrap();
        assert_eq!(report.estimates.len(), 12);
        assert_eq!(report.budget, 16 * 128);

        let empty = shadow_expectations(&data, &ens, &[]).unwrap();
        assert!(empty.estimates.is_empty());
        assert_eq!(empty.budget, 16 * 128);

        let doubled: Vec<_> = obs.iter().chain(obs.iter()).cloned().collect();
        let r2 = shadow_expectations(&data, &ens, &doubled).unwrap();
        assert_eq!(r2.budget, report.budget);
        assert_eq!(r2.estimates[..12], r2.estimates[12..]);
    }

    /// Exhaustive expectation of the snapshot estimator: every basis
    /// assignment, every outcome, weighted by ensemble and Born probability.
    /// Born probabilities come from dense rotation matrices.
    fn exhaustive_mean(psi: &StateVector, ens: &ShadowEnsemble, p: &PauliString) -> f64 {
        use nalgebra::{DMatrix, DVector};
        let n = psi.num_qubits();
        let k = ens.allowed_bases().len();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rot = |b: Pauli| -> DMatrix<Complex64> {
            let c = |re: f64, im: f64| Complex64::new(re, im);
            match b {
                Pauli::X => DMatrix::from_row_slice(2, 2, &[c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)]),
                Pauli::Y => DMatrix::from_row_slice(2, 2, &[c(h, 0.), c(0., -h), c(h, 0.), c(0., h)]),
                _ => DMatrix::identity(2, 2),
            }
        };
        let v = DVector::from_vec(psi.amplitudes().to_vec());
        let mut total = 0.0;
        for code in 0..k.pow(n as u32) {
            let mut c = code;
            let labels: Vec<Pauli> = (0..n)
                .map(|_| {
                    let b = ens.allowed_bases()[c % k];
                    c /= k;
                    b
                })
                .collect();
            let mut u = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
            for &b in &labels {
                u = u.kronecker(&rot(b));
            }
            let rotated = &u * &v;
            let basis = BasisAssignment::new(labels).unwrap();
            for (outcome, a) in rotated.iter().enumerate() {
                total += a.norm_sqr() * snapshot_value(ens, &basis, outcome, p);
            }
        }
        total / (k.pow(n as u32) as f64)
    }

    #[test]
    fn snapshot_estimator_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for ens in [ShadowEnsemble::uniform(), ShadowEnsemble::biased()] {
            for n in 1..=3 {
                for _ in 0..8 {
                    let psi = random_state(n, &mut rng);
                    let p = random_supported(n, &ens, &mut rng);
                    let exact = psi.expectation(&p).unwrap();
                    let mean = exhaustive_mean(&psi, &ens, &p);
                    assert!((mean - exact).abs() <= 1e-12, "{p}: {mean} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn estimates_in_snapshot_range_and_converge() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ens = ShadowEnsemble::biased();
        let psi = random_state(4, &mut rng);
        let p = PauliString::from_label("IYZI").unwrap();
        let exact = psi.expectation(&p).unwrap();
        let (m, k) = (500usize, 8u64);
        let n_total = (m as u64 * k) as f64;
        let bound = 5.0 * (4.0 / n_total).sqrt();
        let mut within = 0;
        for _ in 0..100 {
            let data = collect_shadow(&psi, &ens, m, k, &mut rng).unwrap();
            let e = shadow_expectation(&data, &ens, &p).unwrap();
            assert!(e.abs() <= 4.0);
            if (e - exact).abs() <= bound {
                within += 1;
            }
        }
        assert!(within >= 99, "{within}/100 within bound");
    }

    #[test]
    fn per_round_averaging_matches_global_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ens = ShadowEnsemble::uniform();
        let psi = random_state(3, &mut rng);
        let data = collect_shadow(&psi, &ens, 50, 16, &mut rng).unwrap();
        let p = PauliString::from_label("XIZ").unwrap();
        let global = shadow_expectation(&data, &ens, &p).unwrap();
        let per_round: f64 = data
            .records()
            .iter()
            .map(|r| {
                r.counts
                    .iter()
                    .map(|(o, c)| c as f64 * snapshot_value(&ens, &r.basis, o, &p))
                    .sum::<f64>()
                    / data.shots_per_round() as f64
            })
            .sum::<f64>()
            / data.rounds() as f64;
        assert!((global - per_round).abs() <= 1e-12);
    }

    #[test]
    fn direct_settings_grouping() {
        let g = crate::graph::Graph::cycle(4).unwrap();
        let obs = crate::hamiltonian::ObservableSet::build(&g).unwrap().all_terms();
        let settings = measurement_settings(&obs).unwrap();
        assert_eq!(settings.len(), 9);
        assert_eq!(settings[8].basis.to_string(), "ZZZZ");
        assert_eq!(settings[8].observables, vec![8, 9, 10, 11]);
        assert_eq!(settings[0].basis.to_string(), "YZZZ");

        assert_eq!(split_budget(10, 3), vec![4, 3, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let psi = StateVector::plus_state(4).unwrap();
        assert!(matches!(
            direct_estimate(&psi, &obs, 8, &mut rng),
            Err(Error::Budget { budget: 8, settings: 9 })
        ));
    }

    #[test]
    fn direct_on_eigenstates_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let psi = StateVector::basis_state(2, 0b01).unwrap();
        let zz = PauliString::from_label("ZZ").unwrap();
        for budget in [1, 2, 17, 1000] {
            let r = direct_estimate(&psi, std::slice::from_ref(&zz), budget, &mut rng).unwrap();
            assert_eq!(r.estimates, vec![-1.0]);
            assert_eq!(r.budget, budget);
        }
        // Y eigenstate on qubit 0 and Z eigenstate on qubit 1: Y_0 Z_1 = +1 * -1
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::from_amplitudes(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, h),
        ])
        .unwrap();
        let yz = PauliString::from_label("YZ").unwrap();
        assert!((psi.expectation(&yz).unwrap() + 1.0).abs() < 1e-15);
        let r = direct_estimate(&psi, &[yz], 333, &mut rng).unwrap();
        assert_eq!(r.estimates, vec![-1.0]);
    }

    #[test]
    fn shadow_file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = random_state(3, &mut rng);
        let data = collect_shadow(&psi, &ShadowEnsemble::uniform(), 20, 32, &mut rng).unwrap();
        let mut buf = Vec::new();
        data.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("falqon-shadow v1 n=3 M=20 K=32\n"));
        let back = ShadowData::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, data);

        assert!(ShadowData::read_from("bogus\n".as_bytes()).is_err());
        assert!(ShadowData::read_from("falqon-shadow v1 n=2 M=1 K=2\nZZ 00:1\n".as_bytes()).is_err());
        assert!(ShadowData::read_from("falqon-shadow v1 n=2 M=2 K=1\nZZ 00:1\n".as_bytes()).is_err());
    }
}
