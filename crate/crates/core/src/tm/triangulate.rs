use std::collections::BTreeMap;

use super::PhraseTable;

pub const DEFAULT_TRIANGULATION_FLOOR: f64 = 1e-6;
pub const DEFAULT_TOP_K: usize = 20;

/// Composes source→pivot and pivot→target tables by marginalising over the
/// pivot phrases both tables share:
///
/// φ(t|s) = Σ_p φ(t|p) · φ(p|s)
///
/// Pivot phrases are visited in lexicographic order. Entries whose mass falls
/// below `floor` are dropped.
pub fn triangulate(src_pivot: &PhraseTable, pivot_tgt: &PhraseTable, floor: f64) -> PhraseTable {
    let mut out = PhraseTable::new(src_pivot.max_phrase_len());
    for (src, pivots) in src_pivot.rows() {
        let mut acc: BTreeMap<&str, f64> = BTreeMap::new();
        for (pivot, &p_sp) in pivots {
            if p_sp <= 0.0 {
                continue;
            }
            let Some(targets) = pivot_tgt.get(pivot) else {
                continue;
            };
            for (tgt, &p_pt) in targets {
                *acc.entry(tgt.as_str()).or_insert(0.0) += p_pt * p_sp;
            }
        }
        for (tgt, mass) in acc {
            if mass >= floor && mass > 0.0 {
                out.insert(src, tgt, mass);
            }
        }
    }
    out
}

/// Keeps at most `top_k` targets per source phrase and drops those below
/// `floor`. Ranking is by φ descending, then target phrase ascending.
/// Probabilities are not renormalised.
pub fn prune(table: &PhraseTable, top_k: usize, floor: f64) -> PhraseTable {
    let mut out = PhraseTable::new(table.max_phrase_len());
    for (src, row) in table.rows() {
        let mut ranked: Vec<(&String, f64)> = row
            .iter()
            .filter(|(_, &p)| p >= floor)
            .map(|(t, &p)| (t, p))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        for (tgt, p) in ranked.into_iter().take(top_k.max(1)) {
            out.insert(src, tgt, p);
        }
    }
    out
}
