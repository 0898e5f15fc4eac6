use super::{euclidean, ClassPosterior, LabeledSet};
use crate::error::{Error, Result};

/// k-nearest-neighbour vote under the Euclidean metric.
///
/// Equidistant neighbours are taken in training-set order. The posterior holds
/// vote fractions over every class in the set (lexicographic order). A tied
/// vote goes to the class with the smaller summed neighbour distance, then to
/// the lexicographically smaller label.
pub fn knn_classify(set: &LabeledSet, query: &[f64], k: usize) -> Result<(String, ClassPosterior)> {
    if set.is_empty() {
        return Err(Error::insufficient("k-NN over an empty training set"));
    }
    if query.len() != set.input_dim() {
        return Err(Error::Schema(format!(
            "query has {} dims, training set has {}",
            query.len(),
            set.input_dim()
        )));
    }
    if k == 0 || k > set.len() {
        return Err(Error::param(format!("k = {k} outside 1..={}", set.len())));
    }
    let mut order: Vec<(f64, usize)> = set
        .inputs()
        .iter()
        .enumerate()
        .map(|(i, x)| (euclidean(x, query), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let labels = set.classes();
    let mut votes = vec![0usize; labels.len()];
    let mut dist = vec![0.0; labels.len()];
    for &(d, i) in &order[..k] {
        let c = labels.binary_search(&set.targets()[i]).unwrap();
        votes[c] += 1;
        dist[c] += d;
    }
    let mut best = 0;
    for c in 1..labels.len() {
        let better = votes[c] > votes[best] || (votes[c] == votes[best] && dist[c] < dist[best]);
        if better {
            best = c;
        }
    }
    let probabilities = votes.iter().map(|v| *v as f64 / k as f64).collect();
    let winner = labels[best].clone();
    Ok((
        winner,
        ClassPosterior {
            labels,
            probabilities,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[(&[f64], &str)]) -> LabeledSet {
        LabeledSet::labeled(
            points.iter().map(|p| p.0.to_vec()).collect(),
            points.iter().map(|p| p.1.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn nearest_point() {
        let s = set(&[(&[0.0, 0.0], "A"), (&[1.0, 1.0], "B")]);
        assert_eq!(knn_classify(&s, &[0.1, 0.1], 1).unwrap().0, "A");
        assert_eq!(knn_classify(&s, &[1.0, 1.0], 1).unwrap().0, "B");
    }

    #[test]
    fn vote_tie_uses_distance_then_label() {
        let s = set(&[(&[0.0], "B"), (&[0.3], "A"), (&[-0.1], "A"), (&[0.25], "B")]);
        // k=2: B at 0.0, A at -0.1 → tie 1:1, B closer
        let (label, post) = knn_classify(&s, &[0.0], 2).unwrap();
        assert_eq!(label, "B");
        assert_eq!(post.probabilities, vec![0.5, 0.5]);
        let s = set(&[(&[1.0], "B"), (&[-1.0], "A")]);
        assert_eq!(knn_classify(&s, &[0.0], 2).unwrap().0, "A");
    }

    #[test]
    fn bad_k_and_dims() {
        let s = set(&[(&[0.0], "A")]);
        assert!(knn_classify(&s, &[0.0], 0).is_err());
        assert!(knn_classify(&s, &[0.0], 2).is_err());
        assert!(matches!(
            knn_classify(&s, &[0.0, 1.0], 1),
            Err(Error::Schema(_))
        ));
    }
}
