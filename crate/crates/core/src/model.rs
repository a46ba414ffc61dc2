//! Chain specifications, static disorder, and the single-excitation
//! Hamiltonian with its boundary control operators.
//!
//! Units: ħ = 1, couplings in units of the bulk exchange J, time in 1/J.
//! Sites are indexed from 0 in code; site 0 is the sender and site N−1 the
//! receiver.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};

/// A clean boundary-controlled XX chain: couplings (α, J, …, J, α).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    n_sites: usize,
    alpha: f64,
    bulk_coupling: f64,
}

impl ChainSpec {
    pub fn new(n_sites: usize, alpha: f64) -> Result<Self> {
        Self::with_bulk(n_sites, alpha, 1.0)
    }

    pub fn with_bulk(n_sites: usize, alpha: f64, bulk_coupling: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::TooFewSites(n_sites));
        }
        require(alpha.is_finite() && alpha >= 0.0, "alpha", "finite and >= 0", alpha)?;
        require(
            bulk_coupling.is_finite(),
            "bulk_coupling",
            "finite",
            bulk_coupling,
        )?;
        Ok(Self {
            n_sites,
            alpha,
            bulk_coupling,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bulk_coupling(&self) -> f64 {
        self.bulk_coupling
    }

    /// Same chain with a different boundary coupling.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::with_bulk(self.n_sites, alpha, self.bulk_coupling)
    }

    /// The N−1 bond couplings. Both boundary bonds carry α; for N = 2 the
    /// single bond is α.
    pub fn couplings(&self) -> Vec<f64> {
        let n_bonds = self.n_sites - 1;
        let mut j = vec![self.bulk_coupling; n_bonds];
        j[0] = self.alpha;
        j[n_bonds - 1] = self.alpha;
        j
    }

    pub fn hamiltonian(&self) -> SingleExcHamiltonian {
        SingleExcHamiltonian {
            off_diagonal: self.couplings().iter().map(|j| -j).collect(),
        }
    }
}

/// Free-function form of [`ChainSpec::couplings`].
pub fn couplings_from_spec(spec: &ChainSpec) -> Vec<f64> {
    spec.couplings()
}

/// Multiplicative static disorder `J_i -> J_i (1 + δ_i)` with δ_i uniform
/// on [−A, A].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    deltas: Vec<f64>,
    amplitude: f64,
    seed: u64,
}

impl DisorderRealization {
    /// Draws `n_couplings` offsets from a ChaCha8 stream keyed by `seed`.
    /// Each offset is `A·u` with `u` uniform on [−1, 1], so realizations that
    /// share a seed differ across amplitudes only by scale.
    pub fn sample(n_couplings: usize, amplitude: f64, seed: u64) -> Result<Self> {
        require(
            amplitude.is_finite() && amplitude >= 0.0,
            "disorder amplitude",
            "finite and >= 0",
            amplitude,
        )?;
        let deltas = if amplitude == 0.0 {
            vec![0.0; n_couplings]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_couplings)
                .map(|_| amplitude * rng.gen_range(-1.0..=1.0))
                .collect()
        };
        Ok(Self {
            deltas,
            amplitude,
            seed,
        })
    }

    /// Realization `index` of a study keyed by `master_seed`. The seed depends
    /// only on the pair, never on the order in which realizations are drawn.
    pub fn for_realization(
        n_couplings: usize,
        amplitude: f64,
        master_seed: u64,
        index: u64,
    ) -> Result<Self> {
        Self::sample(n_couplings, amplitude, realization_seed(master_seed, index))
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Counter-based seed split: SplitMix64 finalizer applied to
/// `master ^ (index+1)·φ64`.
pub fn realization_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Convenience wrapper around [`DisorderRealization::sample`].
pub fn sample_disorder(n_couplings: usize, amplitude: f64, seed: u64) -> Result<DisorderRealization> {
    DisorderRealization::sample(n_couplings, amplitude, seed)
}

/// Element-wise `J_i (1 + δ_i)`. Negative results are kept as is.
pub fn apply_disorder(couplings: &[f64], realization: &DisorderRealization) -> Result<Vec<f64>> {
    apply_disorder_in(couplings, realization, DisorderScope::AllCouplings)
}

/// Which couplings a disorder realization perturbs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisorderScope {
    #[default]
    AllCouplings,
    /// Leaves the two boundary couplings at their engineered value.
    BulkOnly,
}

/// Like [`apply_disorder`], restricted to `scope`. Deltas are drawn for every
/// coupling either way, so both scopes see the same bulk perturbations.
pub fn apply_disorder_in(
    couplings: &[f64],
    realization: &DisorderRealization,
    scope: DisorderScope,
) -> Result<Vec<f64>> {
    if couplings.len() != realization.deltas.len() {
        return Err(Error::LengthMismatch {
            expected: couplings.len(),
            actual: realization.deltas.len(),
        });
    }
    let last = couplings.len() - 1;
    Ok(couplings
        .iter()
        .zip(&realization.deltas)
        .enumerate()
        .map(|(i, (j, d))| match scope {
            DisorderScope::BulkOnly if i == 0 || i == last => *j,
            _ => j * (1.0 + d),
        })
        .collect())
}

/// Real symmetric tridiagonal Hamiltonian of the one-excitation sector.
/// The diagonal is zero; `off_diagonal[i]` couples sites i and i+1.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcHamiltonian {
    off_diagonal: Vec<f64>,
}

impl SingleExcHamiltonian {
    pub fn from_couplings(couplings: &[f64]) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::TooFewSites(1));
        }
        if let Some(bad) = couplings.iter().find(|j| !j.is_finite()) {
            return Err(Error::NonFinite(format!("coupling {bad}")));
        }
        Ok(Self {
            off_diagonal: couplings.iter().map(|j| -j).collect(),
        })
    }

    pub fn n_sites(&self) -> usize {
        self.off_diagonal.len() + 1
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diagonal
    }

    /// `H − c·ĥ` for a static control amplitude `c` on one boundary bond.
    pub fn with_static_control(&self, side: Side, amplitude: f64) -> Self {
        let mut off = self.off_diagonal.clone();
        let bond = side.bond(self.n_sites());
        off[bond] -= amplitude;
        Self { off_diagonal: off }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n_sites();
        let mut m = DMatrix::zeros(n, n);
        for (i, &h) in self.off_diagonal.iter().enumerate() {
            m[(i, i + 1)] = h;
            m[(i + 1, i)] = h;
        }
        m
    }

    /// Eigenvalues and eigenvectors (columns). Eigenvalues are not sorted.
    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.to_dense())
    }

    pub fn spectrum(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.eigen().eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Which boundary bond an actuator drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Bond index: 0 for the (1,2) bond, N−2 for the (N−1,N) bond.
    pub fn bond(self, n_sites: usize) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => n_sites - 2,
        }
    }
}

/// Flip-flop operator on one boundary bond. In the one-excitation basis it
/// has +1 at the two off-diagonal positions of that bond and zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlOperator {
    side: Side,
    n_sites: usize,
}

impl ControlOperator {
    pub fn new(side: Side, n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::TooFewSites(n_sites));
        }
        Ok(Self { side, n_sites })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn bond(&self) -> usize {
        self.side.bond(self.n_sites)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_sites, self.n_sites);
        let b = self.bond();
        m[(b, b + 1)] = 1.0;
        m[(b + 1, b)] = 1.0;
        m
    }

    /// `⟨bra|ĥ|ket⟩`.
    pub fn matrix_element(&self, bra: &[C64], ket: &[C64]) -> C64 {
        let b = self.bond();
        bra[b].conj() * ket[b + 1] + bra[b + 1].conj() * ket[b]
    }
}

/// Free-function form of [`ControlOperator::new`].
pub fn control_operator(side: Side, n_sites: usize) -> Result<ControlOperator> {
    ControlOperator::new(side, n_sites)
}

/// Amplitudes of a one-excitation state in the site basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }

    /// Excitation localized on `site` (0-based).
    pub fn site(n_sites: usize, site: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); n_sites];
        amplitudes[site] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn zeros(n_sites: usize) -> Self {
        Self {
            amplitudes: vec![C64::new(0.0, 0.0); n_sites],
        }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn population(&self, site: usize) -> f64 {
        self.amplitudes[site].norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}
