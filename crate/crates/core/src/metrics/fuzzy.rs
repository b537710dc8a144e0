//! Graded versions of B-Cubed and NMI.
//!
//! Fuzzy B-Cubed: for instances `i`, `j` let `G(i,j) = Σ_s min(g_i(s), g_j(s))`
//! be the gold agreement mass and `C(i,j) = Σ_c min(c_i(c), c_j(c))` the system
//! agreement mass. Then
//!
//! ```text
//! P_i = mean over { j : C(i,j) > 0 } of min(G(i,j), C(i,j)) / C(i,j)
//! R_i = mean over { j : G(i,j) > 0 } of min(G(i,j), C(i,j)) / G(i,j)
//! ```
//!
//! with `j` ranging over all instances including `i`; precision and recall are
//! averaged uniformly over instances and combined harmonically.
//!
//! Fuzzy NMI: each instance spreads one unit of mass over the cells
//! `(s, c)` in proportion to `g_i(s) / Σ g_i · c_i(c) / Σ c_i`; NMI is computed on
//! that weighted contingency table.
//!
//! With one label of weight 1 per instance on both sides, both reduce bit-for-bit
//! to the hard metrics.

use std::collections::BTreeMap;

use super::hard::{BCubed, Contingency};
use super::{align_graded, harmonic, GradedClustering};
use crate::error::Result;

fn agreement(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                total += a[i].1.min(b[j].1);
                i += 1;
                j += 1;
            }
        }
    }
    total
}

pub fn fuzzy_b_cubed_detail(gold: &GradedClustering, system: &GradedClustering) -> Result<BCubed> {
    let (g, s) = align_graded(gold, system)?;
    let n = g.len();
    let mut p_total = 0.0;
    let mut r_total = 0.0;
    for i in 0..n {
        let (mut p_num, mut p_cnt, mut r_num, mut r_cnt) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            let c = agreement(&s[i], &s[j]);
            let gm = agreement(&g[i], &g[j]);
            let both = gm.min(c);
            if c > 0.0 {
                p_num += both / c;
                p_cnt += 1.0;
            }
            if gm > 0.0 {
                r_num += both / gm;
                r_cnt += 1.0;
            }
        }
        p_total += p_num / p_cnt;
        r_total += r_num / r_cnt;
    }
    let precision = p_total / n as f64;
    let recall = r_total / n as f64;
    Ok(BCubed {
        precision,
        recall,
        f: harmonic(precision, recall),
    })
}

pub fn fuzzy_b_cubed(gold: &GradedClustering, system: &GradedClustering) -> Result<f64> {
    Ok(fuzzy_b_cubed_detail(gold, system)?.f)
}

pub fn fuzzy_nmi(gold: &GradedClustering, system: &GradedClustering) -> Result<f64> {
    let (g, s) = align_graded(gold, system)?;
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (gi, si) in g.iter().zip(&s) {
        let g_norm: f64 = gi.iter().map(|x| x.1).sum();
        let s_norm: f64 = si.iter().map(|x| x.1).sum();
        for &(gl, gw) in gi {
            for &(sl, sw) in si {
                *cells.entry((gl, sl)).or_insert(0.0) += (gw / g_norm) * (sw / s_norm);
            }
        }
    }
    Ok(Contingency::from_cells(cells).nmi())
}

#[cfg(test)]
mod tests {
    use super::super::{b_cubed, nmi, HardClustering, Membership};
    use super::*;

    fn graded(items: &[(&str, &[(&str, f64)])]) -> GradedClustering {
        let mut g = GradedClustering::default();
        for (id, ms) in items {
            g.assign(*id, ms.iter().map(|(c, w)| Membership::new(*c, *w)).collect());
        }
        g
    }

    #[test]
    fn hard_inputs_reduce_exactly() {
        let gold: HardClustering = [("a", "1"), ("b", "1"), ("c", "2"), ("d", "2"), ("e", "3")]
            .into_iter()
            .collect();
        let sys: HardClustering = [("a", "x"), ("b", "y"), ("c", "y"), ("d", "y"), ("e", "x")]
            .into_iter()
            .collect();
        let hard = b_cubed(&gold, &sys).unwrap();
        let fuzzy = fuzzy_b_cubed_detail(&gold.to_graded(), &sys.to_graded()).unwrap();
        assert_eq!(hard.f.to_bits(), fuzzy.f.to_bits());
        assert_eq!(
            nmi(&gold, &sys).unwrap().to_bits(),
            fuzzy_nmi(&gold.to_graded(), &sys.to_graded()).unwrap().to_bits()
        );
    }

    #[test]
    fn shared_label_everywhere_is_perfect() {
        let gold = graded(&[("a", &[("s", 1.0)]), ("b", &[("s", 1.0)])]);
        let sys = graded(&[("a", &[("c", 1.0)]), ("b", &[("c", 1.0)])]);
        assert_eq!(fuzzy_b_cubed(&gold, &sys).unwrap(), 1.0);
    }

    #[test]
    fn two_instance_graded_case() {
        // G(x,x)=1, G(y,y)=1, G(x,y)=0.5; C = 1 everywhere.
        // P_x = P_y = (1 + 0.5) / 2; R_x = R_y = (1 + 1) / 2.
        let gold = graded(&[("x", &[("s1", 1.0)]), ("y", &[("s1", 0.5), ("s2", 0.5)])]);
        let sys = graded(&[("x", &[("c", 1.0)]), ("y", &[("c", 1.0)])]);
        let b = fuzzy_b_cubed_detail(&gold, &sys).unwrap();
        assert_eq!(b.precision, 0.75);
        assert_eq!(b.recall, 1.0);
        assert!((b.f - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(fuzzy_nmi(&gold, &sys).unwrap(), 0.0);
    }

    #[test]
    fn graded_nmi_against_hand_contingency() {
        // x: gold s1, system {c1:0.5, c2:0.5}; y: gold s2, system c2.
        // cells: (s1,c1)=0.25 (s1,c2)=0.25 (s2,c2)=0.5; rows 0.5/0.5; cols 0.25/0.75.
        let gold = graded(&[("x", &[("s1", 1.0)]), ("y", &[("s2", 1.0)])]);
        let sys = graded(&[("x", &[("c1", 0.5), ("c2", 0.5)]), ("y", &[("c2", 1.0)])]);
        let ln = |x: f64| x.ln();
        let mi = 0.25 * ln(0.25 / (0.5 * 0.25)) + 0.25 * ln(0.25 / (0.5 * 0.75)) + 0.5 * ln(0.5 / (0.5 * 0.75));
        let h_gold = -(0.5 * ln(0.5)) * 2.0;
        let h_sys = -(0.25 * ln(0.25) + 0.75 * ln(0.75));
        let expected = mi / h_gold.max(h_sys);
        assert!((fuzzy_nmi(&gold, &sys).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_graded_is_zero() {
        let gold = graded(&[("a", &[("s1", 1.0)]), ("b", &[("s2", 1.0)])]);
        let sys = graded(&[("a", &[("c", 1.0)]), ("b", &[("c", 1.0)])]);
        assert_eq!(fuzzy_nmi(&gold, &sys).unwrap(), 0.0);
    }

    #[test]
    fn zero_weight_is_rejected() {
        let gold = graded(&[("a", &[("s1", 0.0)])]);
        let sys = graded(&[("a", &[("c", 1.0)])]);
        assert!(fuzzy_b_cubed(&gold, &sys).is_err());
    }
}
