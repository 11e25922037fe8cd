use std::hash::Hasher;

use fnv::FnvHasher;

use super::LiteratureError;

pub const DEFAULT_DIM: usize = 256;

/// Text to fixed-dimension, unit-norm vector.
pub trait Embedder: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, LiteratureError>;
}

/// Signed feature hashing of lowercase alphanumeric tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    dim: usize,
}

impl HashingEmbedder {
    pub const NAME: &'static str = "hashing-fnv1a";

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashingEmbedder { dim }
    }

    fn add_token(&self, v: &mut [f64], token: &str) {
        let mut h = FnvHasher::default();
        h.write(token.as_bytes());
        let h = h.finish();
        let bucket = (h % self.dim as u64) as usize;
        v[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder::new(DEFAULT_DIM)
    }
}

impl Embedder for HashingEmbedder {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, LiteratureError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(LiteratureError::EmptyText);
        }
        let lower = trimmed.to_lowercase();
        let mut v = vec![0.0; self.dim];
        for token in lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            self.add_token(&mut v, token);
        }
        let mut norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // Punctuation-only text, or tokens whose signs cancelled out.
            v.iter_mut().for_each(|x| *x = 0.0);
            self.add_token(&mut v, &lower);
            norm = 1.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(v)
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_unit_norm() {
        let e = HashingEmbedder::default();
        let a = e
            .embed("Which materials are topological insulators?")
            .unwrap();
        assert_eq!(
            a,
            e.embed("Which materials are topological insulators?")
                .unwrap()
        );
        let n: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn case_and_punctuation_insensitive() {
        let e = HashingEmbedder::default();
        assert_eq!(
            e.embed("Bi2Se3, gap?").unwrap(),
            e.embed("  bi2se3 GAP ").unwrap()
        );
    }

    #[test]
    fn punctuation_only_text_still_embeds() {
        let e = HashingEmbedder::default();
        let v = e.embed("???").unwrap();
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(e.embed("   "), Err(LiteratureError::EmptyText)));
    }
}
