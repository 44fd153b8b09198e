use super::{play_all, MetricError, OpponentSet};
use crate::microlang::{print, syntax_set, Program};
use crate::sim::SimError;

/// Index into `pool` of the program sharing the most normalized lines with `pi`.
/// Ties go to the lowest index.
pub fn closest_syntax(pi: &Program, pool: &[Program]) -> Result<usize, MetricError> {
    if pool.is_empty() {
        return Err(MetricError::EmptyPool);
    }
    let target = syntax_set(&print(pi));
    let mut best = (0usize, 0usize);
    for (i, q) in pool.iter().enumerate() {
        let n = target.intersection_size(&syntax_set(&print(q)));
        if i == 0 || n > best.1 {
            best = (i, n);
        }
    }
    Ok(best.0)
}

/// Mean feature vector of `p` over the opponent set.
pub fn mean_features(p: &Program, set: &OpponentSet) -> Result<[f64; 7], SimError> {
    let recs = play_all(p, set)?;
    let mut m = [0.0; 7];
    for r in &recs {
        for (acc, v) in m.iter_mut().zip(r.features.as_f64()) {
            *acc += v;
        }
    }
    if !recs.is_empty() {
        for v in &mut m {
            *v /= recs.len() as f64;
        }
    }
    Ok(m)
}

fn l2(a: &[f64; 7], b: &[f64; 7]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Index into `pool` whose mean feature vector is nearest to that of `pi` in L2.
pub fn closest_feature(pi: &Program, pool: &[Program], set: &OpponentSet) -> Result<usize, MetricError> {
    if pool.is_empty() {
        return Err(MetricError::EmptyPool);
    }
    let target = mean_features(pi, set)?;
    let mut dists = Vec::with_capacity(pool.len());
    for q in pool {
        dists.push(l2(&target, &mean_features(q, set)?));
    }
    Ok(argmin(&dists))
}

pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// `count` indices spread uniformly over `0..m`, always including both ends.
pub fn select_policy_indices(m: usize, count: usize) -> Result<Vec<usize>, MetricError> {
    if count == 0 || m < count {
        return Err(MetricError::InvalidArgs(format!("need m >= count >= 1, got m={m}, count={count}")));
    }
    if count == 1 {
        return Ok(vec![0]);
    }
    Ok((0..count).map(|i| i * (m - 1) / (count - 1)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microlang::parse;
    use proptest::prelude::*;

    #[test]
    fn indices_examples() {
        let v = select_policy_indices(1000, 20).unwrap();
        assert_eq!((v[0], v[7], v[19]), (0, 368, 999));
        assert_eq!(select_policy_indices(20, 20).unwrap(), (0..20).collect::<Vec<_>>());
        assert_eq!(select_policy_indices(5, 1).unwrap(), vec![0]);
        assert!(select_policy_indices(3, 4).is_err());
        assert!(select_policy_indices(3, 0).is_err());
    }

    #[test]
    fn closest_syntax_examples() {
        let pi = parse("for(Unit u){ u.harvest(2) u.idle() u.attack(Closest) }").unwrap();
        let pool = vec![
            parse("for(Unit u){ u.moveAway() }").unwrap(),
            parse("for(Unit u){ u.harvest(2) u.idle() u.attack(Weakest) }").unwrap(),
            parse("for(Unit u){ u.harvest(2) }").unwrap(),
        ];
        assert_eq!(closest_syntax(&pi, &pool).unwrap(), 1);
        let disjoint = vec![parse("u.idle()").unwrap(), parse("u.moveAway()").unwrap()];
        assert_eq!(closest_syntax(&pi, &disjoint).unwrap(), 0);
        assert!(matches!(closest_syntax(&pi, &[]), Err(MetricError::EmptyPool)));
    }

    #[test]
    fn argmin_takes_first_minimum() {
        assert_eq!(argmin(&[3.2, 1.1, 7.0]), 1);
        assert_eq!(argmin(&[1.0, 1.0]), 0);
        assert_eq!(argmin(&[5.0]), 0);
    }

    proptest! {
        #[test]
        fn indices_are_monotone_with_fixed_ends(count in 1usize..40, extra in 0usize..2000) {
            let m = count + extra;
            let v = select_policy_indices(m, count).unwrap();
            prop_assert_eq!(v.len(), count);
            prop_assert_eq!(v[0], 0);
            if count > 1 {
                prop_assert_eq!(v[count - 1], m - 1);
            }
            prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
            // brute-force floor check
            for (i, &x) in v.iter().enumerate() {
                if count > 1 {
                    prop_assert!(x * (count - 1) <= i * (m - 1) && i * (m - 1) < (x + 1) * (count - 1));
                }
            }
        }
    }
}
