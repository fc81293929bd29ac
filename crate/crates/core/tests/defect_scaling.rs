use nalgebra::DMatrix;
use rigidity_core::diffeo::Manifold;
use rigidity_core::presentation::{RelatorKind, SemidirectPresentation};
use rigidity_core::representation::{distance_to_trivial, scale_family, ScaleBuilder};

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).unzip();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

// the flows commute exactly, and the conjugation relators carry a defect
// linear in ε
#[test]
fn commuting_flow_defect_is_first_order() {
    let eps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    for a in [[2i64, 1, 1, 1], [0, 1, 1, 1]] {
        let p = SemidirectPresentation::free_abelian_from_matrix(&DMatrix::from_row_slice(2, 2, &a)).unwrap();
        let builder = ScaleBuilder::CommutingFlow { c: Some(vec![1.0, 0.5]) };
        let reps: Vec<_> =
            eps.iter().map(|&e| scale_family(&builder, p.clone(), Manifold::interval(), e).unwrap()).collect();
        for r in &reps {
            assert!(r.defect.max_of(RelatorKind::Commutator) <= 1e-12);
        }
        let defects: Vec<f64> = reps.iter().map(|r| r.defect.aggregate).collect();
        let s = slope(&eps, &defects);
        assert!((s - 1.0).abs() < 0.1, "defect slope {s} for {a:?}: {defects:?}");
        let distances: Vec<f64> = reps.iter().map(distance_to_trivial).collect();
        let s = slope(&eps, &distances);
        assert!((s - 1.0).abs() < 0.1, "distance slope {s}");
    }
}
