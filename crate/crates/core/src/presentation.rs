//! Semidirect presentations `H ⋊_ψ ⟨t⟩` and their homological constants.
//!
//! `H` is generated by `S = S0 ⊔ S1`, where `S0` maps to a basis of the free
//! part of `H_1(H, ℤ)` and `S1` maps to torsion. From the images `ψ(s)` we
//! read off the monodromy matrix `A` (row `j` holds the `S0` exponent sums of
//! `ψ(s_j)`), the correction words `τ_j`, the torsion exponent `K`, the
//! balanced-length bound `k0` and `k = k0 + d‖A‖`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::snf::{smith_normal_form, torsion_exponent, SmithForm};
use crate::words::{Alphabet, GroupClass, Word};

/// Reserved name of the stable letter.
pub const STABLE_LETTER: &str = "t";

/// User-facing description, as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresentationSpec {
    pub group_class: GroupClass,
    #[serde(rename = "S0")]
    pub s0: Vec<String>,
    #[serde(rename = "S1", default)]
    pub s1: Vec<String>,
    pub psi: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub torsion_relators: Vec<String>,
    #[serde(rename = "K_override", default, skip_serializing_if = "Option::is_none")]
    pub k_override: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    #[serde(rename = "A")]
    pub a: DMatrix<i64>,
    pub tau: Vec<Word>,
    #[serde(rename = "K")]
    pub k_torsion: i64,
    pub k0: i64,
    pub k: i64,
    /// Smith form of the torsion relator matrix (free-abelian inputs only);
    /// its `right` factor is the change of basis to the splitting basis.
    pub torsion_basis: Option<SmithForm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelatorKind {
    Conjugation,
    Commutator,
    Torsion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relator {
    pub name: String,
    pub kind: RelatorKind,
    /// Over the extended alphabet `S ∪ {t}`, `t` last.
    pub word: Word,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemidirectPresentation {
    pub group_class: GroupClass,
    /// `S0` followed by `S1`.
    pub alphabet: Alphabet,
    pub d: usize,
    pub psi: Vec<Word>,
    pub torsion_relators: Vec<Word>,
    pub derived: DerivedConstants,
    k_override: Option<i64>,
}

impl SemidirectPresentation {
    pub fn from_spec(spec: &PresentationSpec) -> Result<Self> {
        let d = spec.s0.len();
        if d == 0 {
            return Err(LabError::InvalidPresentation("S0 must be non-empty".into()));
        }
        let mut names = spec.s0.clone();
        names.extend(spec.s1.iter().cloned());
        if names.iter().any(|n| n == STABLE_LETTER) {
            return Err(LabError::InvalidPresentation(format!(
                "`{STABLE_LETTER}` is reserved for the stable letter"
            )));
        }
        let alphabet = Alphabet::new(names)?;
        for key in spec.psi.keys() {
            alphabet.index_of(key)?;
        }
        let psi = alphabet
            .names()
            .iter()
            .map(|n| {
                let text = spec.psi.get(n).ok_or_else(|| {
                    LabError::InvalidPresentation(format!("psi is not defined on `{n}`"))
                })?;
                alphabet.parse(text)
            })
            .collect::<Result<Vec<_>>>()?;
        let torsion_relators = spec
            .torsion_relators
            .iter()
            .map(|r| alphabet.parse(r))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(spec.group_class, alphabet, d, psi, torsion_relators, spec.k_override)
    }

    /// Free-abelian `ℤ^d` with `ψ(s_j) = ∏ s_i^{a[j][i]}`.
    pub fn free_abelian_from_matrix(a: &DMatrix<i64>) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d {
            return Err(LabError::DimensionMismatch {
                expected: format!("{d}x{d}"),
                got: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
        let alphabet = Alphabet::new((1..=d).map(|i| format!("s{i}")).collect())?;
        let psi = (0..d)
            .map(|j| Word::from_syllables((0..d).map(|i| (i, a[(j, i)])).collect()))
            .collect();
        Self::assemble(GroupClass::FreeAbelian, alphabet, d, psi, vec![], None)
    }

    fn assemble(
        group_class: GroupClass,
        alphabet: Alphabet,
        d: usize,
        psi: Vec<Word>,
        torsion_relators: Vec<Word>,
        k_override: Option<i64>,
    ) -> Result<Self> {
        let n = alphabet.len();
        let psi: Vec<Word> = psi.iter().map(|w| w.reduced(group_class)).collect();

        let torsion_basis = match group_class {
            GroupClass::Free => {
                if n > d {
                    return Err(LabError::InvalidPresentation(
                        "S1 generators of a free group are not torsion in homology".into(),
                    ));
                }
                if !torsion_relators.is_empty() {
                    return Err(LabError::InvalidPresentation(
                        "torsion relators are only meaningful for free_abelian groups".into(),
                    ));
                }
                None
            }
            GroupClass::FreeAbelian => Some(check_torsion_split(&alphabet, d, &torsion_relators)?),
        };

        let a = DMatrix::from_fn(d, d, |j, i| psi[j].exponent_vector(n)[i]);
        if integer_rank(&a) < d {
            return Err(LabError::SingularMonodromy);
        }

        let tau: Vec<Word> = (0..d)
            .map(|j| {
                let linear = Word::from_syllables((0..d).map(|i| (i, a[(j, i)])).collect());
                linear.inverse().concat(&psi[j]).reduced(group_class)
            })
            .collect();

        let minimal_k = torsion_basis.as_ref().map_or(2, torsion_exponent);
        let k_torsion = match k_override {
            Some(k) if k < minimal_k => {
                return Err(LabError::InvalidPresentation(format!(
                    "K_override {k} is below the minimal torsion exponent {minimal_k}"
                )))
            }
            Some(k) => k,
            None => minimal_k,
        };

        let longest = (d..n)
            .map(Word::generator)
            .chain(tau.iter().cloned())
            .map(|u| u.pow(k_torsion).reduced(group_class).letter_length() as i64)
            .max()
            .unwrap_or(0);
        let k0 = k_torsion.max(longest);
        let a_norm = a.iter().map(|x| x.abs()).max().unwrap_or(0);
        let k = k0 + d as i64 * a_norm;

        Ok(Self {
            group_class,
            alphabet,
            d,
            psi,
            torsion_relators,
            derived: DerivedConstants { a, tau, k_torsion, k0, k, torsion_basis },
            k_override,
        })
    }

    pub fn n_generators(&self) -> usize {
        self.alphabet.len()
    }

    pub fn s0(&self) -> std::ops::Range<usize> {
        0..self.d
    }

    pub fn s1(&self) -> std::ops::Range<usize> {
        self.d..self.alphabet.len()
    }

    /// Index of `t` in the extended alphabet used by relators.
    pub fn stable_index(&self) -> usize {
        self.alphabet.len()
    }

    pub fn monodromy(&self) -> &DMatrix<i64> {
        &self.derived.a
    }

    pub fn a_norm(&self) -> i64 {
        self.derived.a.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// `S' = {u^K : u ∈ S1 ∪ {τ_j}}`, reduced, tagged with a readable name.
    pub fn s_prime(&self) -> Vec<(String, Word)> {
        let kk = self.derived.k_torsion;
        self.s1()
            .map(|g| (format!("{}^{kk}", self.alphabet.name(g)), Word::generator(g)))
            .chain(
                self.derived
                    .tau
                    .iter()
                    .enumerate()
                    .map(|(j, t)| (format!("tau{}^{kk}", j + 1), t.clone())),
            )
            .map(|(name, u)| (name, u.pow(kk).reduced(self.group_class)))
            .collect()
    }

    /// The presentation of `H ⋊_{ψ^p} ⟨t^p⟩`, constants recomputed.
    pub fn power(&self, p: u32) -> Result<Self> {
        if p == 0 {
            return Err(LabError::Parameter("power must be at least 1".into()));
        }
        let mut images: Vec<Word> = (0..self.n_generators()).map(Word::generator).collect();
        for _ in 0..p {
            images = images
                .iter()
                .map(|w| w.substitute(&self.psi).reduced(self.group_class))
                .collect();
        }
        Self::assemble(
            self.group_class,
            self.alphabet.clone(),
            self.d,
            images,
            self.torsion_relators.clone(),
            self.k_override,
        )
    }

    /// Defining relators of `G` over `S ∪ {t}`: `t s t⁻¹ ψ(s)⁻¹` for every
    /// `s ∈ S`, plus commutators and torsion relators when `H` is abelian.
    pub fn relators(&self) -> Vec<Relator> {
        let t = self.stable_index();
        let mut out: Vec<Relator> = (0..self.n_generators())
            .map(|g| Relator {
                name: format!("conj_{}", self.alphabet.name(g)),
                kind: RelatorKind::Conjugation,
                word: Word::generator(t)
                    .concat(&Word::generator(g))
                    .concat(&Word::power_of(t, -1))
                    .concat(&self.psi[g].inverse()),
            })
            .collect();
        if self.group_class == GroupClass::FreeAbelian {
            let n = self.n_generators();
            for i in 0..n {
                for j in i + 1..n {
                    out.push(Relator {
                        name: format!(
                            "comm_{}_{}",
                            self.alphabet.name(i),
                            self.alphabet.name(j)
                        ),
                        kind: RelatorKind::Commutator,
                        word: Word::from_syllables(vec![(i, 1), (j, 1), (i, -1), (j, -1)]),
                    });
                }
            }
            for (r, w) in self.torsion_relators.iter().enumerate() {
                out.push(Relator {
                    name: format!("torsion_{}", r + 1),
                    kind: RelatorKind::Torsion,
                    word: w.clone(),
                });
            }
        }
        out
    }

    /// Formats a word of the extended alphabet (with `t`).
    pub fn format_extended(&self, w: &Word) -> String {
        let mut names = self.alphabet.names().to_vec();
        names.push(STABLE_LETTER.to_string());
        Alphabet::new(names)
            .expect("extended alphabet is valid")
            .format(w)
    }
}

fn check_torsion_split(alphabet: &Alphabet, d: usize, relators: &[Word]) -> Result<SmithForm> {
    let n = alphabet.len();
    let rows: Vec<Vec<i64>> = relators.iter().map(|w| w.exponent_vector(n)).collect();
    let r = matrix_from_rows(&rows, n);
    let form = smith_normal_form(&r);
    let base_rank = form.rank();
    for g in d..n {
        let mut extended = rows.clone();
        let mut e = vec![0; n];
        e[g] = 1;
        extended.push(e);
        if integer_rank(&matrix_from_rows(&extended, n)) != base_rank {
            return Err(LabError::InvalidPresentation(format!(
                "S1 generator `{}` is not torsion modulo the relators",
                alphabet.name(g)
            )));
        }
    }
    let mut extended = rows;
    for g in 0..d {
        let mut e = vec![0; n];
        e[g] = 1;
        extended.push(e);
    }
    if integer_rank(&matrix_from_rows(&extended, n)) != base_rank + d || n - base_rank != d {
        return Err(LabError::InvalidPresentation(
            "S0 does not map to a basis of the free part of H_1".into(),
        ));
    }
    Ok(form)
}

fn matrix_from_rows(rows: &[Vec<i64>], n: usize) -> DMatrix<i64> {
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

fn integer_rank(m: &DMatrix<i64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    smith_normal_form(m).rank()
}
