//! Polarity-driven laminar pattern analysis on bilayer cell-connectivity graphs.
//!
//! The library builds weighted bilayer graphs, assembles the interwoven
//! multi-signal interconnection matrix, reduces it through equitable
//! partitions, evaluates homogeneous-steady-state instability and monotone
//! polarity conditions, and simulates the full interconnected ODE system to
//! classify laminar patterning.
//!
//! # Example
//!
//! Decide whether a polarity weight point produces layer-contrasting patterns
//! in the shipped two-signal system, then watch the tissue do it:
//!
//! ```
//! use laminar::graph::{build_semi_regular_ring, weighted_adjacency, DegreeProfile, PolarityWeights};
//! use laminar::interwoven::interweave;
//! use laminar::kinetics::{linearize, solve_hss, HillCrosstalk};
//! use laminar::quotient::QuotientAdjacency;
//! use laminar::simulate::{classify_pattern, integrate, perturb_hss, PatternKind, Tolerances};
//! use laminar::stability::instability_condition;
//!
//! let kinetics = HillCrosstalk::default();
//! let hss = solve_hss(&kinetics)?;
//! let lin = linearize(&kinetics, &hss.x, &hss.u)?;
//!
//! // a diffusion-like and a contact-like bilayer ring, strongly polarised
//! let diffusion = build_semi_regular_ring(30, DegreeProfile::uniform(2, 4))?;
//! let contact = build_semi_regular_ring(30, DegreeProfile::uniform(2, 2))?;
//! let w_diff = PolarityWeights::new(0.6, 1.0)?;
//! let w_cont = PolarityWeights::new(0.02, 1.0)?;
//!
//! // quotient route: the 2x2 reductions decide instability analytically
//! let q1 = QuotientAdjacency::from_profile(diffusion.profile(), w_diff);
//! let q2 = QuotientAdjacency::from_profile(contact.profile(), w_cont);
//! let mode = instability_condition(&lin.dt, &[q1.lambda2(), q2.lambda2()])?;
//! assert!(mode.unstable);
//!
//! // large-scale route: integrate all 60 cells and classify the outcome
//! let p = interweave(vec![
//!     weighted_adjacency(&diffusion, w_diff)?.matrix().clone(),
//!     weighted_adjacency(&contact, w_cont)?.matrix().clone(),
//! ])?;
//! let init = perturb_hss(&hss.x, 60, 0.01, 1)?;
//! let traj = integrate(&kinetics, &p, &init, 1000.0, &Tolerances::default())?;
//! let class = classify_pattern(traj.final_state(), 3, 30, &hss.x, 0);
//! assert_eq!(class.class, PatternKind::Laminar);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod config;
pub mod graph;
pub mod interwoven;
pub mod kinetics;
pub mod numerics;
pub mod quotient;
pub mod simulate;
pub mod stability;
pub mod svg;
pub mod verify;

pub use numerics::{DenseMatrix, EigenDecomposition, NumericsError};

/// Formats a value with 12 significant digits, the precision used by every
/// text artifact this library emits.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let formatted = format!("{x:.11e}");
    // trim trailing zeros in the mantissa so output stays diff-friendly
    if let Some((mantissa, exp)) = formatted.split_once('e') {
        let trimmed = mantissa.trim_end_matches('0').trim_end_matches('.');
        let exp: i32 = exp.parse().unwrap_or(0);
        if exp == 0 {
            trimmed.to_string()
        } else {
            format!("{trimmed}e{exp}")
        }
    } else {
        formatted
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_sig12;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig12(1.0), "1");
        assert_eq!(fmt_sig12(0.5), "5e-1");
        assert_eq!(fmt_sig12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_sig12(-123456.789), "-1.23456789e5");
        assert_eq!(fmt_sig12(0.0), "0");
    }
}
