//! Vocabularies, body vectors and translation matrices between agent
//! languages.
//!
//! A body in vocabulary `α` is a vector of nonnegative word multiplicities.
//! A translation matrix has one row per word of the target vocabulary and
//! one column per word of the source vocabulary. Rank and invertibility are
//! computed in exact rational arithmetic.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LanguageError {
    #[error("vocabulary `{0}` is empty")]
    EmptyVocabulary(String),
    #[error("vocabulary `{vocab}` lists `{word}` more than once")]
    DuplicateSymbol { vocab: String, word: String },
    #[error("`{word}` is not a word of vocabulary `{vocab}`")]
    UnknownWord { vocab: String, word: String },
    #[error("body is in vocabulary `{found}`, matrix translates from `{expected}`")]
    VocabMismatch { expected: String, found: String },
    #[error("matrix is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("matrices `{0}` and `{1}` do not compose into a round trip")]
    NotARoundTrip(String, String),
    #[error("no translation matrix from `{from}` to `{to}`")]
    MissingTranslation { from: String, to: String },
    #[error("coefficient overflow during translation")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawVocabulary")]
pub struct Vocabulary {
    id: String,
    symbols: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVocabulary {
    id: String,
    symbols: Vec<String>,
}

impl TryFrom<RawVocabulary> for Vocabulary {
    type Error = LanguageError;
    fn try_from(raw: RawVocabulary) -> Result<Self, LanguageError> {
        Vocabulary::new(raw.id, raw.symbols)
    }
}

impl Vocabulary {
    pub fn new<S: Into<String>>(
        id: impl Into<String>,
        symbols: impl IntoIterator<Item = S>,
    ) -> Result<Self, LanguageError> {
        let id = id.into();
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(LanguageError::EmptyVocabulary(id));
        }
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if !seen.insert(s) {
                return Err(LanguageError::DuplicateSymbol {
                    vocab: id,
                    word: s.clone(),
                });
            }
        }
        Ok(Vocabulary { id, symbols })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn dimension(&self) -> usize {
        self.symbols.len()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == word)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index_of(word).is_some()
    }

    /// Body vector counting each word's multiplicity.
    pub fn vector<S: AsRef<str>>(&self, words: impl IntoIterator<Item = S>) -> Result<BodyVector, LanguageError> {
        let mut coeffs = vec![0u64; self.dimension()];
        for w in words {
            let w = w.as_ref();
            let i = self.index_of(w).ok_or_else(|| LanguageError::UnknownWord {
                vocab: self.id.clone(),
                word: w.to_string(),
            })?;
            coeffs[i] += 1;
        }
        Ok(BodyVector {
            vocab: self.id.clone(),
            coeffs,
        })
    }

    /// Unit vector for a single word.
    pub fn unit(&self, word: &str) -> Result<BodyVector, LanguageError> {
        self.vector([word])
    }

    /// Renders a vector as `2*seek+send`, omitting zero terms. The zero
    /// vector renders as `0`.
    pub fn render(&self, v: &BodyVector) -> String {
        let terms: Vec<String> = self
            .symbols
            .iter()
            .zip(&v.coeffs)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| if c == 1 { s.clone() } else { format!("{c}*{s}") })
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join("+")
        }
    }
}

/// Co-language of two agents: the words both vocabularies contain.
pub fn colanguage(a: &Vocabulary, b: &Vocabulary) -> BTreeSet<String> {
    let theirs: BTreeSet<&String> = b.symbols.iter().collect();
    a.symbols
        .iter()
        .filter(|s| theirs.contains(s))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyVector {
    pub vocab: String,
    pub coeffs: Vec<u64>,
}

impl BodyVector {
    pub fn zero(vocab: &Vocabulary) -> Self {
        BodyVector {
            vocab: vocab.id.clone(),
            coeffs: vec![0; vocab.dimension()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Componentwise sum of two vectors over the same vocabulary.
    pub fn checked_add(&self, other: &BodyVector) -> Result<BodyVector, LanguageError> {
        if self.vocab != other.vocab || self.coeffs.len() != other.coeffs.len() {
            return Err(LanguageError::VocabMismatch {
                expected: self.vocab.clone(),
                found: other.vocab.clone(),
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.checked_add(*b).ok_or(LanguageError::Overflow))
            .collect::<Result<_, _>>()?;
        Ok(BodyVector {
            vocab: self.vocab.clone(),
            coeffs,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationMatrix {
    pub from: String,
    pub to: String,
    /// `entries[r][c]`: multiplicity of target word `r` in source word `c`.
    pub entries: Vec<Vec<u64>>,
}

impl TranslationMatrix {
    /// Checks the matrix shape against both vocabularies.
    pub fn new(from: &Vocabulary, to: &Vocabulary, entries: Vec<Vec<u64>>) -> Result<Self, LanguageError> {
        let m = TranslationMatrix {
            from: from.id.clone(),
            to: to.id.clone(),
            entries,
        };
        m.check_shape(to.dimension(), from.dimension())?;
        Ok(m)
    }

    pub fn check_shape(&self, want_rows: usize, want_cols: usize) -> Result<(), LanguageError> {
        let rows = self.entries.len();
        let ragged = self.entries.iter().find(|r| r.len() != want_cols);
        if rows != want_rows || ragged.is_some() {
            return Err(LanguageError::ShapeMismatch {
                rows,
                cols: ragged.map_or(want_cols, Vec::len),
                want_rows,
                want_cols,
            });
        }
        Ok(())
    }

    pub fn identity(v: &Vocabulary) -> Self {
        let n = v.dimension();
        TranslationMatrix {
            from: v.id.clone(),
            to: v.id.clone(),
            entries: (0..n)
                .map(|r| (0..n).map(|c| u64::from(r == c)).collect())
                .collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        TranslationMatrix {
            from: self.to.clone(),
            to: self.from.clone(),
            entries: (0..c).map(|j| (0..r).map(|i| self.entries[i][j]).collect()).collect(),
        }
    }
}

/// Word-for-word translation of a body vector.
pub fn translate(v: &BodyVector, l: &TranslationMatrix) -> Result<BodyVector, LanguageError> {
    if v.vocab != l.from {
        return Err(LanguageError::VocabMismatch {
            expected: l.from.clone(),
            found: v.vocab.clone(),
        });
    }
    l.check_shape(l.rows(), v.coeffs.len())?;
    let coeffs = l
        .entries
        .iter()
        .map(|row| {
            row.iter().zip(&v.coeffs).try_fold(0u64, |acc, (a, b)| {
                a.checked_mul(*b)
                    .and_then(|p| acc.checked_add(p))
                    .ok_or(LanguageError::Overflow)
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(BodyVector {
        vocab: l.to.clone(),
        coeffs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TranslationClass {
    /// Square with an integer two-sided inverse.
    Bijective,
    /// Full rank but not bijective: faithful in one direction only.
    OneWay,
    /// Rank deficient.
    Lossy,
}

impl fmt::Display for TranslationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TranslationClass::Bijective => "bijective",
            TranslationClass::OneWay => "one-way",
            TranslationClass::Lossy => "lossy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub class: TranslationClass,
    pub rank: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Rank and determinant (when square) by exact Gaussian elimination.
fn rank_and_det(entries: &[Vec<u64>]) -> (usize, Option<BigRational>) {
    let rows = entries.len();
    let cols = entries.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<BigRational>> = entries
        .iter()
        .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
        .collect();
    let mut det = BigRational::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            det = BigRational::zero();
            continue;
        };
        if pivot != rank {
            m.swap(pivot, rank);
            det = -det;
        }
        let p = m[rank][col].clone();
        det *= &p;
        for r in rank + 1..rows {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &p;
            let (top, bottom) = m.split_at_mut(r);
            for (x, pivot) in bottom[0][col..cols].iter_mut().zip(&top[rank][col..cols]) {
                *x -= &factor * pivot;
            }
        }
        rank += 1;
    }
    let det = (rows == cols).then(|| if rank < rows { BigRational::zero() } else { det });
    (rank, det)
}

pub fn rank(l: &TranslationMatrix) -> usize {
    rank_and_det(&l.entries).0
}

/// Bijective iff square with determinant ±1 (so the inverse is integral);
/// OneWay iff otherwise of full rank in at least one direction; Lossy
/// otherwise.
pub fn classify(l: &TranslationMatrix) -> Classification {
    let (rows, cols) = (l.rows(), l.cols());
    let (rank, det) = rank_and_det(&l.entries);
    let unimodular = det.is_some_and(|d| d.abs().is_one());
    let class = if rows == 0 || cols == 0 {
        TranslationClass::Lossy
    } else if unimodular {
        TranslationClass::Bijective
    } else if rank == rows.min(cols) {
        TranslationClass::OneWay
    } else {
        TranslationClass::Lossy
    };
    Classification {
        class,
        rank,
        rows,
        cols,
    }
}

/// Whether translating forth and back is the identity on the source
/// vocabulary: `back · forth = I`.
pub fn unitarity_check(forth: &TranslationMatrix, back: &TranslationMatrix) -> Result<bool, LanguageError> {
    let n = forth.cols();
    let m = forth.rows();
    if forth.from != back.to || forth.to != back.from {
        return Err(LanguageError::NotARoundTrip(
            format!("{}->{}", forth.from, forth.to),
            format!("{}->{}", back.from, back.to),
        ));
    }
    back.check_shape(n, m)?;
    forth.check_shape(m, n)?;
    for i in 0..n {
        for j in 0..n {
            let mut acc: u128 = 0;
            for k in 0..m {
                let term = u128::from(back.entries[i][k]) * u128::from(forth.entries[k][j]);
                acc = match acc.checked_add(term) {
                    Some(a) => a,
                    None => return Ok(false),
                };
            }
            if acc != u128::from(i == j) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
