use std::io::{Read, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{LooEnsemble, LooIndex};
use crate::error::{Error, Result};
use crate::linalg::{norm2, operator_norm, procrustes, OrthogonalMatrix};
use crate::problem::GroundTruth;
use crate::solver::FactorPair;

/// Alignments of one leave-one-out sequence.
#[derive(Debug, Clone)]
pub struct LooAlignment {
    pub index: LooIndex,
    /// `R^{t,(l)} = argmin_R ‖[X^{t,(l)};Y^{t,(l)}]R − [U;V]‖_F`.
    pub to_truth: OrthogonalMatrix,
    /// `T^{t,(l)} = argmin_T ‖[X^t;Y^t]R^t − [X^{t,(l)};Y^{t,(l)}]T‖_F`.
    pub to_main: OrthogonalMatrix,
}

#[derive(Debug, Clone)]
pub struct LooAlignments {
    /// `R^t = argmin_R ‖[X^t;Y^t]R − [U;V]‖_F`.
    pub main: OrthogonalMatrix,
    pub members: Vec<LooAlignment>,
}

fn check_shapes(main: &FactorPair, ensemble: &LooEnsemble, gt: &GroundTruth) -> Result<()> {
    let (n1, n2, r) = ensemble.shape();
    if (main.n1(), main.n2(), main.rank()) != (n1, n2, r) || (gt.n1, gt.n2, gt.r) != (n1, n2, r) {
        return Err(Error::Dimension(format!(
            "main iterate {}x{}x{}, ensemble {n1}x{n2}x{r}, truth {}x{}x{}",
            main.n1(),
            main.n2(),
            main.rank(),
            gt.n1,
            gt.n2,
            gt.r
        )));
    }
    Ok(())
}

/// Computes `R^t`, and `R^{t,(l)}`, `T^{t,(l)}` for every tracked `l`.
///
/// `T^{t,(l)}` is evaluated as `sgn(Z_lᵀZ)·R^t` (with `Z`, `Z_l` the stacked
/// main and leave-one-out iterates), which equals `sgn(Z_lᵀ Z R^t)` since
/// the polar factor commutes with right multiplication by an orthogonal
/// matrix. When `Z_l = Z` this gives exactly `T = R^t`.
pub fn loo_alignments(
    main: &FactorPair,
    ensemble: &LooEnsemble,
    gt: &GroundTruth,
) -> Result<LooAlignments> {
    check_shapes(main, ensemble, gt)?;
    let truth = gt.stacked();
    let z = main.stacked();
    let r_main = procrustes(&z, &truth)?;
    let align = |member: &super::ensemble::LooMember| -> Result<LooAlignment> {
        let zl = member.pair.stacked();
        Ok(LooAlignment {
            index: member.index,
            to_truth: procrustes(&zl, &truth)?,
            to_main: procrustes(&zl, &z)?.compose(&r_main),
        })
    };
    #[cfg(feature = "parallel")]
    let members = ensemble.members().par_iter().map(align).collect::<Result<Vec<_>>>()?;
    #[cfg(not(feature = "parallel"))]
    let members = ensemble.members().iter().map(align).collect::<Result<Vec<_>>>()?;
    Ok(LooAlignments {
        main: r_main,
        members,
    })
}

/// The four quantities controlled along the induction:
///
/// * `main_err_spec = ‖Z R^t − Z*‖`
/// * `max_rowwise_err = max_l ‖(Z_l R^{t,(l)} − Z*)_{l,·}‖₂`
/// * `max_pair_dist_frob = max_l ‖Z R^t − Z_l T^{t,(l)}‖_F`
/// * `main_err_2inf = ‖Z R^t − Z*‖_{2,∞}`
///
/// with `Z = [X^t;Y^t]`, `Z_l` the `l`-th leave-one-out iterate and
/// `Z* = [U;V]`. When the ensemble is subsampled the maxima run over the
/// tracked indices only and `subsampled` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LooDiagnostics {
    #[serde(rename = "iter")]
    pub t: usize,
    #[serde(rename = "spec_err")]
    pub main_err_spec: f64,
    #[serde(rename = "max_rowwise")]
    pub max_rowwise_err: f64,
    #[serde(rename = "max_pairdist")]
    pub max_pair_dist_frob: f64,
    #[serde(rename = "two_inf_err")]
    pub main_err_2inf: f64,
    #[serde(skip)]
    pub subsampled: bool,
}

pub const LOO_HEADER: &str = "iter,spec_err,max_rowwise,max_pairdist,two_inf_err";

pub fn loo_diagnostics(
    main: &FactorPair,
    ensemble: &LooEnsemble,
    gt: &GroundTruth,
) -> Result<LooDiagnostics> {
    let alignments = loo_alignments(main, ensemble, gt)?;
    let (n1, _, _) = ensemble.shape();
    let truth = gt.stacked();
    let aligned_main = main.stacked().matmul(&alignments.main)?;
    let main_diff = aligned_main.try_sub(&truth)?;

    let per_member = |(member, al): (&super::ensemble::LooMember, &LooAlignment)| -> Result<(f64, f64)> {
        let zl = member.pair.stacked();
        let row = member.index.stacked_row(n1);
        let to_truth = zl.matmul(&al.to_truth)?;
        let rowwise: Vec<f64> = to_truth
            .row(row)
            .iter()
            .zip(truth.row(row))
            .map(|(a, b)| a - b)
            .collect();
        let pair = aligned_main.try_sub(&zl.matmul(&al.to_main)?)?.frobenius_norm();
        Ok((norm2(&rowwise), pair))
    };
    let zipped: Vec<_> = ensemble.members().iter().zip(&alignments.members).collect();
    #[cfg(feature = "parallel")]
    let stats = zipped.into_par_iter().map(per_member).collect::<Result<Vec<_>>>()?;
    #[cfg(not(feature = "parallel"))]
    let stats = zipped.into_iter().map(per_member).collect::<Result<Vec<_>>>()?;

    Ok(LooDiagnostics {
        t: ensemble.t(),
        main_err_spec: operator_norm(&main_diff),
        max_rowwise_err: stats.iter().map(|s| s.0).fold(0.0, f64::max),
        max_pair_dist_frob: stats.iter().map(|s| s.1).fold(0.0, f64::max),
        main_err_2inf: main_diff.norm_2inf(),
        subsampled: ensemble.is_subsampled(),
    })
}

/// Writes diagnostics with header [`LOO_HEADER`].
pub fn write_loo_csv<W: Write>(rows: &[LooDiagnostics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(LOO_HEADER.split(','))
            .map_err(|e| Error::Input(e.to_string()))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| Error::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))
}

pub fn read_loo_csv<R: Read>(input: R) -> Result<Vec<LooDiagnostics>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| Error::Input(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.join(",") != LOO_HEADER {
        return Err(Error::Input(format!("unexpected diagnostics header {header:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Input(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sign_matrix, DenseMatrix};
    use crate::problem::{generate_ground_truth, project_omega, sample_mask, SamplingMask};
    use crate::rng;
    use crate::solver::{gd_step, spectral_init};

    fn setup(p: f64) -> (GroundTruth, SamplingMask, DenseMatrix) {
        let gt = generate_ground_truth(14, 11, 2, 2.0, 3).unwrap();
        let mask = sample_mask(14, 11, p, 4).unwrap();
        let m = gt.matrix();
        (gt, mask, m)
    }

    #[test]
    fn all_at_truth() {
        // Under full observation every sequence starts at the truth up to a
        // rotation.
        let (gt, _, m) = setup(1.0);
        let truth = FactorPair::new(gt.u.clone(), gt.v.clone()).unwrap();
        let e = LooEnsemble::new(&m, &SamplingMask::full(14, 11), 2).unwrap();
        let al = loo_alignments(&truth, &e, &gt).unwrap();
        assert_eq!(*al.main, DenseMatrix::identity(2));
        let d = loo_diagnostics(&truth, &e, &gt).unwrap();
        assert!(d.main_err_spec == 0.0 && d.main_err_2inf == 0.0);
        assert!(d.max_rowwise_err < 1e-12 && d.max_pair_dist_frob < 1e-12);
    }

    #[test]
    fn identical_pairs_give_trivial_alignment() {
        let (gt, mask, m) = setup(1.0);
        let e = LooEnsemble::new(&m, &mask, 2).unwrap();
        let main = spectral_init(&m, &mask, 2).unwrap();
        let al = loo_alignments(&main, &e, &gt).unwrap();
        for a in &al.members {
            assert_eq!(a.to_truth, al.main);
            assert_eq!(a.to_main, al.main);
        }
        let d = loo_diagnostics(&main, &e, &gt).unwrap();
        assert_eq!(d.max_pair_dist_frob, 0.0);
        // A rotated copy is the same point of the quotient space.
        let q = sign_matrix(&rng::gaussian_matrix(&mut rng::seeded(1), 2, 2)).unwrap();
        let rotated = FactorPair::new(&main.x * &q, &main.y * &q).unwrap();
        let d_rot = loo_diagnostics(&rotated, &e, &gt).unwrap();
        assert!(d_rot.max_pair_dist_frob < 1e-12);
    }

    #[test]
    fn alignments_are_optimal() {
        let (gt, mask, m) = setup(0.5);
        let obs = project_omega(&m, &mask).unwrap();
        let mut main = spectral_init(&obs, &mask, 2).unwrap();
        let mut e = LooEnsemble::new(&m, &mask, 2).unwrap();
        for _ in 0..3 {
            main = gd_step(&main, &obs, &mask, 0.05).unwrap();
            e.advance(0.05).unwrap();
        }
        let al = loo_alignments(&main, &e, &gt).unwrap();
        let truth = gt.stacked();
        let z = main.stacked();
        let zr = z.matmul(&al.main).unwrap();
        let mut g = rng::seeded(99);
        let competitors: Vec<_> = (0..50)
            .map(|_| sign_matrix(&rng::gaussian_matrix(&mut g, 2, 2)).unwrap())
            .collect();
        let cost = |a: &DenseMatrix, q: &DenseMatrix, b: &DenseMatrix| {
            (&a.matmul(q).unwrap() - b).frobenius_norm()
        };
        for q in &competitors {
            assert!(cost(&z, &al.main, &truth) <= cost(&z, q, &truth) + 1e-12);
        }
        for (member, a) in e.members().iter().zip(&al.members) {
            let zl = member.pair.stacked();
            for q in &competitors {
                assert!(cost(&zl, &a.to_truth, &truth) <= cost(&zl, q, &truth) + 1e-12);
                assert!(cost(&zl, &a.to_main, &zr) <= cost(&zl, q, &zr) + 1e-12);
            }
        }
    }

    #[test]
    fn norm_ordering_and_csv() {
        let (gt, mask, m) = setup(0.5);
        let obs = project_omega(&m, &mask).unwrap();
        let mut main = spectral_init(&obs, &mask, 2).unwrap();
        let mut e = LooEnsemble::new(&m, &mask, 2).unwrap();
        let mut rows = Vec::new();
        for _ in 0..4 {
            let d = loo_diagnostics(&main, &e, &gt).unwrap();
            assert!(d.main_err_2inf <= d.main_err_spec + 1e-15);
            rows.push(d);
            main = gd_step(&main, &obs, &mask, 0.05).unwrap();
            e.advance(0.05).unwrap();
        }
        let mut buf = Vec::new();
        write_loo_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("{LOO_HEADER}\n")));
        assert_eq!(read_loo_csv(text.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn shape_mismatch() {
        let (gt, mask, m) = setup(0.5);
        let e = LooEnsemble::new(&m, &mask, 2).unwrap();
        assert!(loo_diagnostics(&FactorPair::zeros(14, 11, 1), &e, &gt).is_err());
    }
}
