//! Randomized audits of the graph kernel and of the Jensen inequality for the
//! operator resolvent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::monotone_graph::{Extended, MonotoneGraph};
use crate::spatial_operator::{jensen_check, DiscreteOperator};

/// Violation counts per property over `samples` random `(family, lambda, x)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KernelAudit {
    pub samples: usize,
    pub resolvent_contraction: usize,
    pub yosida_lipschitz: usize,
    pub membership: usize,
    pub moreau_order: usize,
    pub young_sign: usize,
    pub young_equality: usize,
    pub duality: usize,
    pub max_duality_gap: f64,
}

impl KernelAudit {
    pub fn violations(&self) -> usize {
        self.resolvent_contraction
            + self.yosida_lipschitz
            + self.membership
            + self.moreau_order
            + self.young_sign
            + self.young_equality
            + self.duality
    }
}

/// Cycles through `graphs`, drawing `lambda` log-uniform in `[1e-3, 10]` and
/// `x, y` uniform in `[-5, 5]`. Identity-type properties use the absolute
/// tolerance `gap_tol`; inequalities allow rounding relative to the magnitudes
/// involved.
pub fn graph_kernel_audit(
    graphs: &[MonotoneGraph<f64>],
    samples: usize,
    seed: u64,
    gap_tol: f64,
) -> Result<KernelAudit> {
    if graphs.is_empty() {
        return Err(crate::error::Error::InvalidParameter("kernel audit needs at least one graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = KernelAudit { samples, ..Default::default() };
    let round = 1e-12;
    for s in 0..samples {
        let g = &graphs[s % graphs.len()];
        let lambda = 10f64.powf(rng.random_range(-3.0..1.0));
        let lambda2 = lambda * rng.random_range(0.1..1.0);
        let x: f64 = rng.random_range(-5.0..5.0);
        let y: f64 = rng.random_range(-5.0..5.0);
        let ex = g.eval(lambda, x)?;
        let ey = g.eval(lambda, y)?;
        let scale = 1.0 + x.abs() + y.abs();
        if (ex.resolvent - ey.resolvent).abs() > (x - y).abs() + round * scale {
            a.resolvent_contraction += 1;
        }
        let yscale = 1.0 + ex.yosida.abs() + ey.yosida.abs();
        if (ex.yosida - ey.yosida).abs() > (x - y).abs() / lambda + round * yscale {
            a.yosida_lipschitz += 1;
        }
        if !g.contains(ex.resolvent, ex.yosida, 1e-9) {
            a.membership += 1;
        }
        let jx = g.j(x);
        let m2 = g.moreau(lambda2, x)?;
        if ex.moreau > jx + round * (1.0 + jx) || ex.moreau > m2 + round * (1.0 + m2) {
            a.moreau_order += 1;
        }
        let r = ex.yosida + rng.random_range(-1.0..1.0);
        if let Extended::Finite(gap) = g.young_gap(y, r) {
            if gap < -gap_tol * (1.0 + g.j(y)) {
                a.young_sign += 1;
            }
        }
        match g.young_gap(x, g.beta_min(x)) {
            Extended::Finite(gap) if gap.abs() <= gap_tol => {}
            _ => a.young_equality += 1,
        }
        let (gap, _) = g.duality_gap_at_resolvent(lambda, x)?;
        a.max_duality_gap = a.max_duality_gap.max(gap.abs());
        if gap.abs() > gap_tol {
            a.duality += 1;
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JensenAudit {
    pub samples: usize,
    pub violations: usize,
    pub max_excess: f64,
}

/// `j((I + delta A)^{-1} f) <= (I + delta A)^{-1} j(f)` entrywise for every graph
/// in `graphs`, every delta in `deltas` and `samples` random `f` uniform in
/// `[-2, 2]^n`. A sample is one `(graph, delta, f)` triple.
pub fn jensen_audit(
    op: &DiscreteOperator<f64>,
    graphs: &[MonotoneGraph<f64>],
    deltas: &[f64],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<JensenAudit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = JensenAudit::default();
    for _ in 0..samples {
        let f: Vec<f64> = (0..op.n()).map(|_| rng.random_range(-2.0..2.0)).collect();
        for g in graphs {
            for &d in deltas {
                let excess = jensen_check(op, d, g, &f)?;
                a.samples += 1;
                a.max_excess = a.max_excess.max(excess);
                if excess > tol {
                    a.violations += 1;
                }
            }
        }
    }
    Ok(a)
}
