//! Linear-scan reference for top-k retrieval.

use topokg_core::literature::VectorIndex;

/// (id, squared distance) of the `k` nearest stored questions, found by
/// scoring every entry and fully sorting.
pub fn scan(ix: &VectorIndex, query: &str, k: usize) -> Vec<(u64, f64)> {
    let q = ix.embedder().embed(query).unwrap();
    let mut all: Vec<(u64, f64)> = ix
        .pairs()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d = 0.0;
            for (x, y) in q.iter().zip(ix.vector(i)) {
                d += (x - y) * (x - y);
            }
            (p.id, d)
        })
        .collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Compare index hits against the scan, bit for bit.
pub fn agrees(ix: &VectorIndex, query: &str, k: usize) -> Result<(), String> {
    let got: Vec<(u64, u64)> = ix
        .search(query, k)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|h| (h.pair.id, h.distance.to_bits()))
        .collect();
    let want: Vec<(u64, u64)> = scan(ix, query, k)
        .into_iter()
        .map(|(id, d)| (id, d.to_bits()))
        .collect();
    if got == want {
        Ok(())
    } else {
        Err(format!("{query:?}: index {got:?} != scan {want:?}"))
    }
}
