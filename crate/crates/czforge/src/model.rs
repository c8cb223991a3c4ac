//! Truncated multi-mode bosonic Hamiltonians: assembly, diagonalization, and
//! dressed-state labeling.
//!
//! H/hbar = sum_i [omega_i n_i + (alpha_i/2) n_i (n_i - 1)]
//!        + sum_{i<j} g_ij (a_i^dag a_j + a_i a_j^dag)
//!        [ - g_ij (a_i a_j + a_i^dag a_j^dag)  when the form is `Full` ]
//!
//! Inputs are linear frequencies in GHz; matrices are in angular units
//! (rad/ns). All couplings are real, so every Hamiltonian here is a real
//! symmetric matrix.

use crate::{CzError, Result, TWO_PI};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// One bosonic mode of the device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Mode frequency (GHz).
    pub omega: f64,
    /// Anharmonicity (GHz, signed).
    pub alpha: f64,
    /// Truncation; number of retained levels, in [2, 6].
    pub levels: usize,
}

/// Exchange coupling between two modes (GHz, magnitude).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub g: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingForm {
    /// Excitation-conserving exchange only.
    Rwa,
    /// Exchange plus counter-rotating pair terms.
    Full,
}

/// Assembled truncated Hamiltonian over an occupation-number basis.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    modes: Vec<Mode>,
    form: CouplingForm,
    basis: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// Occupation number of each mode in each basis state.
    occupations: Vec<Vec<f64>>,
    /// Diagonal anharmonicity part, angular units.
    anharmonic_diag: Vec<f64>,
    /// Off-diagonal coupling entries (row, col, value), angular units,
    /// both triangle halves present.
    coupling_entries: Vec<(usize, usize, f64)>,
}

impl HamiltonianModel {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn form(&self) -> CouplingForm {
        self.form
    }

    pub fn basis(&self) -> &[Vec<u8>] {
        &self.basis
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Occupation of `mode` across the basis.
    pub fn occupations(&self, mode: usize) -> &[f64] {
        &self.occupations[mode]
    }

    pub fn coupling_entries(&self) -> &[(usize, usize, f64)] {
        &self.coupling_entries
    }

    /// Diagonal (angular units) with the given per-mode frequencies (GHz).
    pub fn diagonal_with_omegas(&self, omegas: &[f64]) -> Vec<f64> {
        let mut d = self.anharmonic_diag.clone();
        for (m, &w) in omegas.iter().enumerate() {
            let w = TWO_PI * w;
            for (dk, nk) in d.iter_mut().zip(&self.occupations[m]) {
                *dk += w * nk;
            }
        }
        d
    }

    /// Dense matrix at the built mode frequencies.
    pub fn matrix(&self) -> DMatrix<f64> {
        let omegas: Vec<f64> = self.modes.iter().map(|m| m.omega).collect();
        self.matrix_with_omegas(&omegas)
    }

    /// Dense matrix with substituted per-mode frequencies (GHz).
    pub fn matrix_with_omegas(&self, omegas: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for (k, d) in self.diagonal_with_omegas(omegas).into_iter().enumerate() {
            h[(k, k)] = d;
        }
        for &(r, c, v) in &self.coupling_entries {
            h[(r, c)] += v;
        }
        h
    }

    /// Project onto an explicitly listed bare-state basis; entries outside the
    /// listed subspace are dropped.
    pub fn project(&self, states: &[Vec<u8>]) -> Result<DMatrix<f64>> {
        let idx: Vec<usize> = states
            .iter()
            .map(|s| {
                self.index_of(s).ok_or_else(|| {
                    CzError::Config(format!("state {s:?} not in the truncated basis"))
                })
            })
            .collect::<Result<_>>()?;
        let h = self.matrix();
        let m = idx.len();
        let mut out = DMatrix::zeros(m, m);
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate() {
                out[(a, b)] = h[(ia, ib)];
            }
        }
        Ok(out)
    }

    /// Diagonalize and label eigenstates by their dominant bare component.
    pub fn dressed_spectrum(&self) -> DressedBasis {
        dressed_spectrum(self, &self.matrix())
    }

    /// Dressed spectrum at substituted mode frequencies (GHz).
    pub fn dressed_spectrum_at(&self, omegas: &[f64]) -> DressedBasis {
        dressed_spectrum(self, &self.matrix_with_omegas(omegas))
    }
}

/// Build the truncated Hamiltonian. `excitation_cutoff` restricts the basis
/// to total occupation <= cutoff (used for the lattice).
pub fn build_with_cutoff(
    modes: &[Mode],
    couplings: &[Coupling],
    form: CouplingForm,
    excitation_cutoff: Option<usize>,
) -> Result<HamiltonianModel> {
    if modes.is_empty() {
        return Err(CzError::Config("no modes given".into()));
    }
    for (k, m) in modes.iter().enumerate() {
        if !(2..=6).contains(&m.levels) {
            return Err(CzError::Config(format!(
                "mode {k}: levels must be in [2, 6], got {}",
                m.levels
            )));
        }
        if m.omega <= 0.0 {
            return Err(CzError::Config(format!(
                "mode {k}: frequency must be positive, got {}",
                m.omega
            )));
        }
    }
    for c in couplings {
        if c.a >= modes.len() || c.b >= modes.len() || c.a == c.b {
            return Err(CzError::Config(format!(
                "coupling ({}, {}) references an unknown or identical mode",
                c.a, c.b
            )));
        }
    }

    // Lexicographic basis enumeration, first mode most significant.
    let mut basis: Vec<Vec<u8>> = Vec::new();
    let mut occ = vec![0u8; modes.len()];
    loop {
        let total: usize = occ.iter().map(|&n| n as usize).sum();
        if excitation_cutoff.map_or(true, |c| total <= c) {
            basis.push(occ.clone());
        }
        let mut k = modes.len();
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            occ[k] += 1;
            if (occ[k] as usize) < modes[k].levels {
                break;
            }
            occ[k] = 0;
        }
        if occ.iter().all(|&n| n == 0) {
            break;
        }
    }
    let index: HashMap<Vec<u8>, usize> = basis
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();

    let occupations: Vec<Vec<f64>> = (0..modes.len())
        .map(|m| basis.iter().map(|s| s[m] as f64).collect())
        .collect();
    let anharmonic_diag: Vec<f64> = basis
        .iter()
        .map(|s| {
            s.iter()
                .zip(modes)
                .map(|(&n, m)| {
                    let n = n as f64;
                    TWO_PI * 0.5 * m.alpha * n * (n - 1.0)
                })
                .sum()
        })
        .collect();

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let push_hop = |entries: &mut Vec<(usize, usize, f64)>,
                    basis: &[Vec<u8>],
                    index: &HashMap<Vec<u8>, usize>,
                    s: usize,
                    raise: usize,
                    lower: usize,
                    g2pi: f64| {
        let state = &basis[s];
        if state[lower] == 0 {
            return;
        }
        if (state[raise] as usize) + 1 >= modes[raise].levels {
            return;
        }
        let mut t = state.clone();
        t[lower] -= 1;
        t[raise] += 1;
        if let Some(&ti) = index.get(&t) {
            let amp = ((state[lower] as f64).sqrt()) * (((state[raise] + 1) as f64).sqrt());
            entries.push((ti, s, g2pi * amp));
        }
    };
    let push_pair = |entries: &mut Vec<(usize, usize, f64)>,
                     basis: &[Vec<u8>],
                     index: &HashMap<Vec<u8>, usize>,
                     s: usize,
                     a: usize,
                     b: usize,
                     g2pi: f64,
                     raise_both: bool| {
        let state = &basis[s];
        let mut t = state.clone();
        let amp;
        if raise_both {
            if (state[a] as usize) + 1 >= modes[a].levels || (state[b] as usize) + 1 >= modes[b].levels
            {
                return;
            }
            t[a] += 1;
            t[b] += 1;
            amp = (((state[a] + 1) as f64).sqrt()) * (((state[b] + 1) as f64).sqrt());
        } else {
            if state[a] == 0 || state[b] == 0 {
                return;
            }
            t[a] -= 1;
            t[b] -= 1;
            amp = ((state[a] as f64).sqrt()) * ((state[b] as f64).sqrt());
        }
        if let Some(&ti) = index.get(&t) {
            entries.push((ti, s, -g2pi * amp));
        }
    };

    for s in 0..basis.len() {
        for c in couplings {
            let g2pi = TWO_PI * c.g;
            push_hop(&mut entries, &basis, &index, s, c.a, c.b, g2pi);
            push_hop(&mut entries, &basis, &index, s, c.b, c.a, g2pi);
            if form == CouplingForm::Full {
                push_pair(&mut entries, &basis, &index, s, c.a, c.b, g2pi, false);
                push_pair(&mut entries, &basis, &index, s, c.a, c.b, g2pi, true);
            }
        }
    }

    Ok(HamiltonianModel {
        modes: modes.to_vec(),
        form,
        basis,
        index,
        occupations,
        anharmonic_diag,
        coupling_entries: entries,
    })
}

/// Build over the full product basis (no excitation cutoff).
pub fn build(modes: &[Mode], couplings: &[Coupling], form: CouplingForm) -> Result<HamiltonianModel> {
    build_with_cutoff(modes, couplings, form, None)
}

/// An eigenstate labeled by its dominant bare component; `label` is `None`
/// when the maximum overlap does not exceed 0.5 in probability (hybridized).
#[derive(Debug, Clone)]
pub struct DressedState {
    pub eigenindex: usize,
    /// Eigenvalue in angular units (rad/ns).
    pub energy: f64,
    pub label: Option<(Vec<u8>, f64)>,
    pub vector: DVector<f64>,
}

impl DressedState {
    /// Eigenvalue as a linear frequency (GHz).
    pub fn energy_ghz(&self) -> f64 {
        self.energy / TWO_PI
    }
}

/// Ascending-ordered dressed spectrum with bare-state labels.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub states: Vec<DressedState>,
    by_label: HashMap<Vec<u8>, usize>,
}

impl DressedBasis {
    /// The dressed state labeled by the given bare occupation, if unambiguous.
    pub fn find(&self, occ: &[u8]) -> Option<&DressedState> {
        self.by_label.get(occ).map(|&i| &self.states[i])
    }

    pub fn require(&self, occ: &[u8]) -> Result<&DressedState> {
        self.find(occ).ok_or_else(|| {
            CzError::Labeling(format!(
                "no unambiguous dressed state labeled {occ:?} (hybridized or absent)"
            ))
        })
    }
}

fn dressed_spectrum(model: &HamiltonianModel, h: &DMatrix<f64>) -> DressedBasis {
    let (values, vectors) = crate::eigh::symmetric_eigh(h.clone());

    let mut states = Vec::with_capacity(model.dim());
    let mut by_label = HashMap::new();
    for (rank, energy) in values.iter().enumerate() {
        let v = vectors.column(rank).clone_owned();
        let (best, amp) = v
            .iter()
            .enumerate()
            .map(|(i, x)| (i, x.abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let label = if amp * amp > 0.5 {
            Some((model.basis[best].clone(), amp))
        } else {
            None
        };
        if let Some((occ, _)) = &label {
            by_label.insert(occ.clone(), rank);
        }
        // fix a sign convention so dressed vectors are reproducible
        let v = if v[best] < 0.0 { -v } else { v };
        states.push(DressedState {
            eigenindex: rank,
            energy: *energy,
            label,
            vector: v,
        });
    }
    DressedBasis { states, by_label }
}

/// Target of an effective-coupling matrix element.
#[derive(Debug, Clone)]
pub enum TargetState {
    Bare(Vec<u8>),
    /// (|a> + |b>)/sqrt(2), e.g. the |B> = (|200> + |020>)/sqrt(2) state.
    Superposition(Vec<u8>, Vec<u8>),
}

/// |<a|H|b>| / 2pi in GHz between a bare state and a bare state or a
/// two-state symmetric superposition.
pub fn effective_coupling(
    model: &HamiltonianModel,
    state_a: &[u8],
    state_b: &TargetState,
) -> Result<f64> {
    let h = model.matrix();
    let ia = model
        .index_of(state_a)
        .ok_or_else(|| CzError::Config(format!("state {state_a:?} not in the truncated basis")))?;
    let elem = match state_b {
        TargetState::Bare(b) => {
            let ib = model
                .index_of(b)
                .ok_or_else(|| CzError::Config(format!("state {b:?} not in the truncated basis")))?;
            h[(ia, ib)]
        }
        TargetState::Superposition(b1, b2) => {
            let i1 = model.index_of(b1).ok_or_else(|| {
                CzError::Config(format!("superposition component {b1:?} not in the basis"))
            })?;
            let i2 = model.index_of(b2).ok_or_else(|| {
                CzError::Config(format!("superposition component {b2:?} not in the basis"))
            })?;
            (h[(ia, i1)] + h[(ia, i2)]) / std::f64::consts::SQRT_2
        }
    };
    Ok(elem.abs() / TWO_PI)
}
