use crate::error::{Error, Result};
use crate::experiments::config::ErrorNorm;
use crate::geometry::Continuum;
use crate::macro_solver::MacroSolution;

/// Relative error from `(macro average, reference average)` pairs.
pub fn relative_error_from_pairs(pairs: &[(f64, f64)], norm: ErrorNorm) -> Option<f64> {
    let num: f64 = pairs.iter().map(|(u, r)| (u - r) * (u - r)).sum();
    let den: f64 = pairs.iter().map(|(_, r)| r * r).sum();
    if den == 0.0 {
        return None;
    }
    let ratio = num / den;
    Some(match norm {
        ErrorNorm::Sqrt => ratio.sqrt(),
        ErrorNorm::Ratio => ratio,
    })
}

/// e₂⁽ⁱ⁾ between coarse-cell means of U_i and continuum-i averages of the
/// reference, over blocks where continuum i is present.
pub fn relative_error(
    u: &MacroSolution,
    ref_averages: &[[Option<f64>; 2]],
    i: Continuum,
    norm: ErrorNorm,
) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = ref_averages
        .iter()
        .enumerate()
        .filter_map(|(p, avg)| avg[i.index()].map(|r| (u.block_mean(p, i.index()), r)))
        .collect();
    relative_error_from_pairs(&pairs, norm).ok_or(Error::ZeroReference { continuum: i.label() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_averages_give_zero() {
        let p = [(1.0, 1.0), (-2.0, -2.0)];
        assert_eq!(relative_error_from_pairs(&p, ErrorNorm::Sqrt), Some(0.0));
    }

    #[test]
    fn zero_macro_gives_one() {
        let p = [(0.0, 1.5), (0.0, -0.2)];
        assert_eq!(relative_error_from_pairs(&p, ErrorNorm::Sqrt), Some(1.0));
    }

    #[test]
    fn two_block_arithmetic() {
        // references (1, 2), macro (1.1, 1.9): 0.02 / 5
        let p = [(1.1, 1.0), (1.9, 2.0)];
        let e = relative_error_from_pairs(&p, ErrorNorm::Sqrt).unwrap();
        assert!((e - (0.02f64 / 5.0).sqrt()).abs() < 1e-15);
        assert!((e - 0.0632).abs() < 1e-4);
        let r = relative_error_from_pairs(&p, ErrorNorm::Ratio).unwrap();
        assert!((r - 0.004).abs() < 1e-15);
    }

    #[test]
    fn zero_reference_is_an_error() {
        let u = MacroSolution { n_coarse: 2, u: [vec![1.0; 9], vec![1.0; 9]] };
        let refs = vec![[Some(0.0), None]; 4];
        assert!(matches!(
            relative_error(&u, &refs, Continuum::One, ErrorNorm::Sqrt),
            Err(Error::ZeroReference { continuum: 1 })
        ));
    }

    #[test]
    fn shifting_macro_changes_error_by_formula() {
        let refs = [0.4, -1.3, 2.2, 0.7];
        let macro_ = [0.5, -1.1, 2.0, 0.75];
        let delta = 0.05;
        let pairs: Vec<_> = macro_.iter().zip(&refs).map(|(u, r)| (u + delta, *r)).collect();
        let shifted = relative_error_from_pairs(&pairs, ErrorNorm::Ratio).unwrap();
        // Σ(d + δ)² = Σd² + 2δΣd + nδ²
        let d: Vec<f64> = macro_.iter().zip(&refs).map(|(u, r)| u - r).collect();
        let den: f64 = refs.iter().map(|r| r * r).sum();
        let expected = (d.iter().map(|x| x * x).sum::<f64>()
            + 2.0 * delta * d.iter().sum::<f64>()
            + refs.len() as f64 * delta * delta)
            / den;
        assert!((shifted - expected).abs() < 1e-15);
        let unshifted: Vec<_> = macro_.iter().zip(&refs).map(|(u, r)| (*u, *r)).collect();
        assert_ne!(relative_error_from_pairs(&unshifted, ErrorNorm::Ratio).unwrap(), shifted);
    }
}
