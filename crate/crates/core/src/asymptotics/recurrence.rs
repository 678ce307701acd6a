use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

fn checked_step<A: Fn(f64) -> f64>(increment: &A, a: f64, t: u64) -> Result<f64> {
    let d = increment(a);
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Numerical(format!("increment is {d} at a_{t} = {a}; must be positive")))
    }
}

/// a_1 = a0, a_{t+1} = a_t + increment(a_t), for t up to `horizon`.
/// Returns a_1..=a_horizon.
pub fn iterate_recurrence<A: Fn(f64) -> f64>(increment: A, a0: f64, horizon: u64) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::validation("horizon", "must be at least 1"));
    }
    let mut out = Vec::with_capacity(horizon as usize);
    let mut a = CompensatedSum::new(a0);
    out.push(a0);
    for t in 1..horizon {
        a.add(checked_step(&increment, a.value(), t)?);
        out.push(a.value());
    }
    Ok(out)
}

/// The same recurrence, reporting a_t only at increasing `times`.
pub fn iterate_recurrence_at<A: Fn(f64) -> f64>(increment: A, a0: f64, times: &[u64]) -> Result<Vec<(u64, f64)>> {
    if times.first() == Some(&0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("checkpoints", "must be strictly increasing times >= 1"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut a = CompensatedSum::new(a0);
    let mut t = 1;
    for &target in times {
        while t < target {
            a.add(checked_step(&increment, a.value(), t)?);
            t += 1;
        }
        out.push((target, a.value()));
    }
    Ok(out)
}

/// (t, a_t / b_t) at each sample time; sequences are 1-based.
pub fn ratio_curve(seq_a: &[f64], seq_b: &[f64], sample_times: &[u64]) -> Result<Vec<(u64, f64)>> {
    sample_times
        .iter()
        .map(|&t| {
            let i = t.checked_sub(1).map(|i| i as usize);
            match i {
                Some(i) if i < seq_a.len() && i < seq_b.len() => Ok((t, seq_a[i] / seq_b[i])),
                _ => Err(Error::validation("sample_times", format!("time {t} not covered by both sequences"))),
            }
        })
        .collect()
}

/// Powers of ten in [lo, hi].
pub fn log_spaced_times(lo: u64, hi: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut t = 1u64;
    while t <= hi {
        if t >= lo {
            out.push(t);
        }
        match t.checked_mul(10) {
            Some(n) => t = n,
            None => break,
        }
    }
    out
}

/// Index of the first entry after the last sign change in `values`, so that
/// values[i..] share one strict sign. `None` when the final entry is zero,
/// not a number, or the slice is empty.
pub fn last_sign_change(values: &[f64]) -> Option<usize> {
    let last = *values.last()?;
    if !(last > 0.0 || last < 0.0) {
        return None;
    }
    let positive = last > 0.0;
    let mut i = values.len() - 1;
    while i > 0 {
        let v = values[i - 1];
        let same = if positive { v > 0.0 } else { v < 0.0 };
        if !same {
            break;
        }
        i -= 1;
    }
    Some(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_increment() {
        let a = iterate_recurrence(|x| 1.0 / x, 1.0, 3).unwrap();
        assert_eq!(a, vec![1.0, 2.0, 2.5]);
        assert!(iterate_recurrence(|x| -x, 1.0, 3).is_err());
        assert!(iterate_recurrence(|x| x, 1.0, 0).is_err());
    }

    #[test]
    fn sparse_matches_dense() {
        let dense = iterate_recurrence(|x| (-x).exp(), 0.0, 1000).unwrap();
        let sparse = iterate_recurrence_at(|x| (-x).exp(), 0.0, &[1, 10, 1000]).unwrap();
        for (t, v) in sparse {
            assert_eq!(v, dense[t as usize - 1]);
        }
    }

    #[test]
    fn ratios() {
        let a = vec![1.0, 2.0, 3.0];
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        assert_eq!(ratio_curve(&a, &a, &[1, 2, 3]).unwrap(), vec![(1, 1.0), (2, 1.0), (3, 1.0)]);
        assert!(ratio_curve(&a, &b, &[1, 3]).unwrap().iter().all(|&(_, r)| r == 0.5));
        assert!(ratio_curve(&a, &b, &[4]).is_err());
        assert!(ratio_curve(&a, &b, &[0]).is_err());
    }

    #[test]
    fn decades_and_signs() {
        assert_eq!(log_spaced_times(100, 1_000_000), vec![100, 1000, 10_000, 100_000, 1_000_000]);
        assert_eq!(last_sign_change(&[1.0, -1.0, 2.0, 3.0]), Some(2));
        assert_eq!(last_sign_change(&[1.0, 2.0]), Some(0));
        assert_eq!(last_sign_change(&[1.0, 0.0]), None);
        assert_eq!(last_sign_change(&[-1.0, 1.0, -0.5]), Some(2));
    }
}
