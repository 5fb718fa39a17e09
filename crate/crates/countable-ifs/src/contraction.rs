//! Contracting similarities of the form F(x) = r*x + b on R^d.
//!
//! The signed scalar ratio r (|r| < 1) and the translation b are exact
//! rationals, so compositions and fixed points are exact. f64 views are
//! cached for geometry on point clouds.

use num::rational::BigRational;
use num::One;

use crate::error::{Error, Result};
use crate::rational;

/// One contracting similarity. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDescriptor {
    ratio: BigRational,
    translation: Vec<BigRational>,
    ratio_f: f64,
    translation_f: Vec<f64>,
}

impl MapDescriptor {
    /// Validates |ratio| < 1 exactly. `branch`/`index` only label errors.
    pub fn new(ratio: BigRational, translation: Vec<BigRational>) -> Result<Self> {
        Self::labeled(ratio, translation, 0, 0)
    }

    pub(crate) fn labeled(
        ratio: BigRational,
        translation: Vec<BigRational>,
        branch: usize,
        index: u32,
    ) -> Result<Self> {
        if translation.is_empty() {
            return Err(Error::InvalidFamily("translation must have dimension >= 1".into()));
        }
        if rational::abs(&ratio) >= BigRational::one() {
            return Err(Error::NotContractive { branch, index, ratio: rational::to_f64(&ratio) });
        }
        let ratio_f = rational::to_f64(&ratio);
        let translation_f = translation.iter().map(rational::to_f64).collect();
        Ok(MapDescriptor { ratio, translation, ratio_f, translation_f })
    }

    pub fn dimension(&self) -> usize {
        self.translation.len()
    }

    pub fn ratio(&self) -> &BigRational {
        &self.ratio
    }

    pub fn ratio_f64(&self) -> f64 {
        self.ratio_f
    }

    pub fn translation(&self) -> &[BigRational] {
        &self.translation
    }

    pub fn translation_f64(&self) -> &[f64] {
        &self.translation_f
    }

    /// Applies the map to an f64 point, writing into `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.translation_f.len());
        for j in 0..x.len() {
            out[j] = self.ratio_f * x[j] + self.translation_f[j];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    pub fn apply_exact(&self, x: &[BigRational]) -> Vec<BigRational> {
        x.iter()
            .zip(&self.translation)
            .map(|(xj, bj)| &self.ratio * xj + bj)
            .collect()
    }

    /// The unique fixed point b/(1 - r), componentwise and exact.
    pub fn fixed_point(&self) -> Vec<BigRational> {
        let denom = BigRational::one() - &self.ratio;
        self.translation.iter().map(|bj| bj / &denom).collect()
    }

    pub fn fixed_point_f64(&self) -> Vec<f64> {
        self.fixed_point().iter().map(rational::to_f64).collect()
    }
}

/// A nonempty word of 1-based letters indexing some map alphabet.
/// Letter order is outermost-first: (1, 2) denotes F_1 after F_2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionWord(Vec<u32>);

impl CompositionWord {
    pub fn new(letters: Vec<u32>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidWord("got an empty word".into()));
        }
        if let Some(&bad) = letters.iter().find(|&&l| l == 0) {
            return Err(Error::InvalidWord(format!("letter {bad} is not positive")));
        }
        Ok(CompositionWord(letters))
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Composition `outer . inner`: x -> outer(inner(x)).
/// Ratios multiply, so the result is again a contracting similarity.
pub fn compose(outer: &MapDescriptor, inner: &MapDescriptor) -> Result<MapDescriptor> {
    if outer.dimension() != inner.dimension() {
        return Err(Error::DimensionMismatch { expected: outer.dimension(), got: inner.dimension() });
    }
    let ratio = &outer.ratio * &inner.ratio;
    let translation = inner
        .translation
        .iter()
        .zip(&outer.translation)
        .map(|(bi, bo)| &outer.ratio * bi + bo)
        .collect();
    MapDescriptor::new(ratio, translation)
}

/// k-fold self-composition, k >= 1.
pub fn power_compose(map: &MapDescriptor, k: u32) -> Result<MapDescriptor> {
    if k == 0 {
        return Err(Error::InvalidWord("power_compose needs k >= 1".into()));
    }
    let mut acc = map.clone();
    for _ in 1..k {
        acc = compose(&acc, map)?;
    }
    Ok(acc)
}

/// Composes alphabet maps along a word, outermost letter first.
pub fn compose_word(alphabet: &[MapDescriptor], word: &CompositionWord) -> Result<MapDescriptor> {
    let fetch = |letter: u32| -> Result<&MapDescriptor> {
        alphabet
            .get(letter as usize - 1)
            .ok_or_else(|| Error::InvalidWord(format!("letter {letter} exceeds alphabet size {}", alphabet.len())))
    };
    let mut iter = word.letters().iter();
    let mut acc = fetch(*iter.next().expect("word is nonempty"))?.clone();
    for &letter in iter {
        acc = compose(&acc, fetch(letter)?)?;
    }
    Ok(acc)
}
