use serde::{Deserialize, Serialize};

use crate::attribution::Attribution;
use crate::error::{check_dim, Error, Result};
use crate::pixel::{descending_order, Ranking};

/// Top-k agreement between an explanation and a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopKAgreement {
    pub fa: f64,
    pub ra: f64,
    pub sa: f64,
    pub sra: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankAgreement {
    pub rc: f64,
    pub pra: f64,
}

/// All six agreement scores, averaged over samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementScores {
    pub fa: f64,
    pub ra: f64,
    pub sa: f64,
    pub sra: f64,
    pub rc: f64,
    pub pra: f64,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "FA")]
    Fa,
    #[serde(rename = "RA")]
    Ra,
    #[serde(rename = "SA")]
    Sa,
    #[serde(rename = "SRA")]
    Sra,
    #[serde(rename = "RC")]
    Rc,
    #[serde(rename = "PRA")]
    Pra,
}

impl Metric {
    pub const ALL: [Metric; 6] = [Metric::Fa, Metric::Ra, Metric::Sa, Metric::Sra, Metric::Rc, Metric::Pra];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Fa => "FA",
            Metric::Ra => "RA",
            Metric::Sa => "SA",
            Metric::Sra => "SRA",
            Metric::Rc => "RC",
            Metric::Pra => "PRA",
        }
    }
}

impl AgreementScores {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Fa => self.fa,
            Metric::Ra => self.ra,
            Metric::Sa => self.sa,
            Metric::Sra => self.sra,
            Metric::Rc => self.rc,
            Metric::Pra => self.pra,
        }
    }
}

fn check_pair(v: &[f64], v_gt: &[f64]) -> Result<()> {
    check_dim("reference explanation", v.len(), v_gt.len())?;
    if v.is_empty() {
        return Err(Error::invalid("explanations must have at least one feature"));
    }
    if v.iter().chain(v_gt).any(|x| !x.is_finite()) {
        return Err(Error::non_finite("explanation"));
    }
    Ok(())
}

fn same_sign(a: f64, b: f64) -> bool {
    (a > 0.0) == (b > 0.0) && (a < 0.0) == (b < 0.0)
}

/// Feature, rank, sign and signed-rank agreement of the top `k` features.
///
/// Rank agreement compares position by position: the feature in rank `r` of
/// `v` must be the feature in rank `r` of `v_gt`.
pub fn topk_agreement(v: &[f64], v_gt: &[f64], k: usize, ranking: Ranking) -> Result<TopKAgreement> {
    check_pair(v, v_gt)?;
    if k == 0 || k > v.len() {
        return Err(Error::invalid(format!("k must lie in [1, {}], got {k}", v.len())));
    }
    let top = &descending_order(v, ranking)[..k];
    let top_gt = &descending_order(v_gt, ranking)[..k];
    let mut in_gt = vec![false; v.len()];
    for &j in top_gt {
        in_gt[j] = true;
    }
    let (mut fa, mut ra, mut sa, mut sra) = (0usize, 0usize, 0usize, 0usize);
    for (r, &j) in top.iter().enumerate() {
        let signs = same_sign(v[j], v_gt[j]);
        if in_gt[j] {
            fa += 1;
            if signs {
                sa += 1;
            }
        }
        if top_gt[r] == j {
            ra += 1;
            if signs {
                sra += 1;
            }
        }
    }
    let k = k as f64;
    Ok(TopKAgreement {
        fa: fa as f64 / k,
        ra: ra as f64 / k,
        sa: sa as f64 / k,
        sra: sra as f64 / k,
    })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).expect("finite"));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation and pairwise rank agreement.
///
/// A constant vector has no ranking; its rank correlation is reported as 0.
pub fn rank_metrics(v: &[f64], v_gt: &[f64]) -> Result<RankAgreement> {
    check_pair(v, v_gt)?;
    let rc = crate::evaluation::pearson(&average_ranks(v), &average_ranks(v_gt)).unwrap_or(0.0);
    let d = v.len();
    let pairs = d * (d - 1) / 2;
    let pra = if pairs == 0 {
        1.0
    } else {
        let mut agree = 0usize;
        for i in 0..d {
            for j in (i + 1)..d {
                if v[i].partial_cmp(&v[j]) == v_gt[i].partial_cmp(&v_gt[j]) {
                    agree += 1;
                }
            }
        }
        agree as f64 / pairs as f64
    };
    Ok(RankAgreement { rc, pra })
}

/// Default top-k size: a quarter of the features, at least one.
pub fn default_k(dim: usize) -> usize {
    ((dim as f64 * 0.25).round() as usize).clamp(1, dim.max(1))
}

/// Mean of all six scores over paired per-sample explanations.
pub fn agreement_scores(
    attr: &Attribution,
    ground_truth: &Attribution,
    k: usize,
    ranking: Ranking,
) -> Result<AgreementScores> {
    check_dim("ground-truth count", attr.len(), ground_truth.len())?;
    if attr.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = [0.0; 6];
    for (v, gt) in attr.vectors.iter().zip(&ground_truth.vectors) {
        let t = topk_agreement(v, gt, k, ranking)?;
        let r = rank_metrics(v, gt)?;
        for (s, x) in sum.iter_mut().zip([t.fa, t.ra, t.sa, t.sra, r.rc, r.pra]) {
            *s += x;
        }
    }
    let n = attr.len() as f64;
    Ok(AgreementScores {
        fa: sum[0] / n,
        ra: sum[1] / n,
        sa: sum[2] / n,
        sra: sum[3] / n,
        rc: sum[4] / n,
        pra: sum[5] / n,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_identity_and_disjoint() {
        let v = [0.5, -1.0, 2.0, 0.1];
        let t = topk_agreement(&v, &v, 2, Ranking::Value).unwrap();
        assert_eq!((t.fa, t.ra, t.sa, t.sra), (1.0, 1.0, 1.0, 1.0));
        let t = topk_agreement(&[4.0, 3.0, 0.0, 0.0], &[0.0, 0.0, 4.0, 3.0], 2, Ranking::Value).unwrap();
        assert_eq!((t.fa, t.ra, t.sa, t.sra), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn topk_swapped_ranks() {
        let t = topk_agreement(&[3.0, 2.0, 1.0, 0.0], &[2.0, 3.0, 1.0, 0.0], 2, Ranking::Value).unwrap();
        assert_eq!((t.fa, t.ra, t.sa, t.sra), (1.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn topk_sign_disagreement() {
        // Magnitude ranking puts both features first, but signs differ on one.
        let t = topk_agreement(&[-3.0, 2.0, 0.1], &[3.0, 2.0, 0.0], 2, Ranking::Magnitude).unwrap();
        assert_eq!((t.fa, t.ra, t.sa, t.sra), (1.0, 1.0, 0.5, 0.5));
    }

    #[test]
    fn topk_rejects_bad_k() {
        assert!(topk_agreement(&[1.0, 2.0], &[1.0, 2.0], 0, Ranking::Value).is_err());
        assert!(topk_agreement(&[1.0, 2.0], &[1.0, 2.0], 3, Ranking::Value).is_err());
        assert!(topk_agreement(&[1.0, 2.0], &[1.0], 1, Ranking::Value).is_err());
    }

    #[test]
    fn rank_examples() {
        let r = rank_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r.rc - 1.0).abs() < 1e-15);
        assert_eq!(r.pra, 1.0);
        let r = rank_metrics(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap();
        assert!((r.rc + 1.0).abs() < 1e-15);
        assert_eq!(r.pra, 0.0);
        let r = rank_metrics(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r.rc - 0.5).abs() < 1e-15);
        assert!((r.pra - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_match_only_when_tied_on_both_sides() {
        let r = rank_metrics(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.pra, 1.0);
        let r = rank_metrics(&[1.0, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.pra, 0.0);
        assert_eq!(r.rc, 0.0);
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn default_k_is_a_quarter() {
        assert_eq!(default_k(20), 5);
        assert_eq!(default_k(64), 16);
        assert_eq!(default_k(2), 1);
        assert_eq!(default_k(1), 1);
    }
}
