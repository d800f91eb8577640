//! Word vectors and IDF-weighted title averaging.
//!
//! Word vectors are unit vectors derived deterministically from the world
//! seed and word index. Category words are drawn around a per-category
//! anchor direction, standing in for corpus-trained vectors where words of
//! one domain share a neighborhood; shared stop words are isotropic.

use rand::Rng;
use rand_xoshiro::Xoshiro256StarStar;

use ecgan_autodiff::stream::derived_rng;
use ecgan_marketsim::MarketplaceWorld;

use crate::{EmbedError, Result};

/// Mixing weights between the category anchor and the word's own direction.
const ANCHOR_WEIGHT: f64 = 0.75;
const NOISE_WEIGHT: f64 = 0.45;

#[derive(Clone, Debug)]
pub struct WordVectors {
    pub dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl WordVectors {
    /// Unit vector per vocabulary word, fixed by (seed, word index). The
    /// vocabulary layout (stop words first, then per-category blocks) comes
    /// from the world configuration.
    pub fn for_world(world: &MarketplaceWorld, dim: usize) -> Self {
        let cfg = &world.config;
        let anchors: Vec<Vec<f64>> = (0..cfg.categories)
            .map(|k| {
                let mut rng = derived_rng(world.seed(), "wordvec-anchor", k as u64);
                normalize(gaussian(&mut rng, dim))
            })
            .collect();
        let vectors = (0..world.vocab.len())
            .map(|i| {
                let mut rng = derived_rng(world.seed(), "wordvec", i as u64);
                let own = gaussian(&mut rng, dim);
                if i < cfg.stop_words {
                    normalize(own)
                } else {
                    let cat = (i - cfg.stop_words) / cfg.category_words.max(1);
                    let anchor = &anchors[cat.min(anchors.len() - 1)];
                    let own = normalize(own);
                    let mixed = anchor
                        .iter()
                        .zip(own.iter())
                        .map(|(a, n)| ANCHOR_WEIGHT * a + NOISE_WEIGHT * n)
                        .collect();
                    normalize(mixed)
                }
            })
            .collect();
        Self { dim, vectors }
    }

    pub fn get(&self, word: u32) -> Option<&[f64]> {
        self.vectors.get(word as usize).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn gaussian(rng: &mut Xoshiro256StarStar, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            // Box-Muller keeps this independent of distribution crates.
            let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos() as f64
        })
        .collect()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    } else {
        v[0] = 1.0;
    }
    v
}

/// Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1.
pub fn idf_weights(world: &MarketplaceWorld) -> Vec<f64> {
    let n = world.products.len() as f64;
    world
        .vocab
        .iter()
        .map(|e| ((1.0 + n) / (1.0 + e.df as f64)).ln() + 1.0)
        .collect()
}

/// IDF-weighted mean of the title's word vectors, clamped to [-1, 1].
/// Out-of-vocabulary tokens are skipped; a title with no known tokens is an
/// error. A zero total IDF weight falls back to the uniform average.
pub fn embed_product(title: &[u32], vectors: &WordVectors, idf: &[f64]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; vectors.dim];
    let mut total = 0.0;
    let mut known = 0usize;
    for &w in title {
        let Some(vec) = vectors.get(w) else { continue };
        let weight = idf.get(w as usize).copied().unwrap_or(0.0);
        known += 1;
        total += weight;
        for (a, &x) in acc.iter_mut().zip(vec.iter()) {
            *a += weight * x;
        }
    }
    if known == 0 {
        return Err(EmbedError::UnembeddableTitle);
    }
    if total > 0.0 {
        for a in &mut acc {
            *a /= total;
        }
    } else {
        // Uniform fallback; unreachable with smoothed IDF but kept explicit.
        acc = vec![0.0; vectors.dim];
        for &w in title {
            if let Some(vec) = vectors.get(w) {
                for (a, &x) in acc.iter_mut().zip(vec.iter()) {
                    *a += x / known as f64;
                }
            }
        }
    }
    for a in &mut acc {
        *a = a.clamp(-1.0, 1.0);
    }
    Ok(acc)
}

/// Embeds every product of the world once; row i is product i.
pub fn embed_all_products(
    world: &MarketplaceWorld,
    vectors: &WordVectors,
    idf: &[f64],
) -> Result<Vec<Vec<f64>>> {
    world
        .products
        .iter()
        .map(|p| embed_product(&p.title, vectors, idf))
        .collect()
}

/// Maps title tokens to vocabulary indices; unknown words are dropped.
pub fn tokens_to_indices(world: &MarketplaceWorld, tokens: &[&str]) -> Vec<u32> {
    tokens
        .iter()
        .filter_map(|t| world.word_index(t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_vectors() -> WordVectors {
        WordVectors {
            dim: 2,
            vectors: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
        }
    }

    #[test]
    fn single_word_title_is_that_vector() {
        let v = toy_vectors();
        let idf = vec![1.7, 2.3, 3.1];
        let e = embed_product(&[1], &v, &idf).unwrap();
        assert_eq!(e, vec![0.0, 1.0]);
    }

    #[test]
    fn repeated_word_equals_single_occurrence() {
        let v = toy_vectors();
        let idf = vec![1.7, 2.3, 3.1];
        let once = embed_product(&[2], &v, &idf).unwrap();
        let thrice = embed_product(&[2, 2, 2], &v, &idf).unwrap();
        assert_eq!(once, thrice);
    }

    #[test]
    fn three_word_weighted_mean_matches_hand_computation() {
        let v = toy_vectors();
        let idf = vec![2.0, 3.0, 5.0];
        let e = embed_product(&[0, 1, 2], &v, &idf).unwrap();
        // (2*[1,0] + 3*[0,1] + 5*[-1,0]) / 10 = [-0.3, 0.3]
        assert!((e[0] - (-0.3)).abs() < 1e-15);
        assert!((e[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn all_oov_title_is_an_error() {
        let v = toy_vectors();
        let idf = vec![1.0; 3];
        assert!(matches!(
            embed_product(&[9, 10], &v, &idf),
            Err(EmbedError::UnembeddableTitle)
        ));
    }

    #[test]
    fn oov_tokens_are_skipped() {
        let v = toy_vectors();
        let idf = vec![2.0, 3.0, 5.0];
        let with_oov = embed_product(&[0, 99, 1], &v, &idf).unwrap();
        let without = embed_product(&[0, 1], &v, &idf).unwrap();
        assert_eq!(with_oov, without);
    }
}
