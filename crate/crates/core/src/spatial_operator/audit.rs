//! Audits of the structural conditions on `A`: coercivity, L1-accretivity,
//! sub-Markovianity and L1 -> L-infinity ultracontractivity of resolvent powers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::DiscreteOperator;
use crate::error::Result;
use crate::linalg::Dense;
use crate::monotone_graph::MonotoneGraph;
use crate::scalar::{lit, to_f64, Real, Tolerances};

const AUDIT_SEED: u64 = 0x6d6f_6e6f_6175_6469;
/// Deltas used by the resolvent-based checks (ii) and (iii).
pub const AUDIT_DELTAS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
/// Deltas used by the ultracontractivity fit.
pub const FIT_DELTAS: [f64; 2] = [1.0, 0.25];
pub const M_MAX: usize = 4;
/// Maximal log-log slope of the kernel bound against `n` accepted as "uniform in n".
pub const FLAT_SLOPE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub condition: &'static str,
    pub pass: bool,
    pub constant: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub operator: &'static str,
    pub rows: Vec<AuditRow>,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub m_star: Option<usize>,
}

impl AuditReport {
    pub fn row(&self, condition: &str) -> Option<&AuditRow> {
        self.rows.iter().find(|r| r.condition == condition)
    }

    pub fn passes(&self, condition: &str) -> bool {
        self.row(condition).is_some_and(|r| r.pass)
    }
}

/// One point of the ultracontractivity sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBound {
    pub delta: f64,
    pub m: usize,
    pub n: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UltracontractivityFit {
    pub m_star: Option<usize>,
    pub bound: Option<f64>,
    pub table: Vec<KernelBound>,
    /// `(delta, m, slope)` of `log bound` against `log (n + 1)`.
    pub slopes: Vec<(f64, usize, f64)>,
}

/// Runs all audits with `probes` random probe vectors per check.
pub fn audit_assumption_a<T: Real>(op: &DiscreteOperator<T>, probes: usize) -> Result<AuditReport> {
    let tol = Tolerances::<T>::default();
    let n = op.n();
    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    let coer = op.coercivity();
    let mut rows = Vec::new();

    let c = to_f64(coer.c);
    rows.push(AuditRow {
        condition: "i",
        pass: coer.c > tol.mark,
        constant: c,
        detail: format!("largest C with <Av,v> >= C |v|_V^2: {c:.6e}"),
    });

    let mut violations = 0;
    for _ in 0..probes.max(1) {
        let v: Vec<T> = (0..n).map(|_| lit(rng.sample::<f64, _>(StandardNormal))).collect();
        let lhs = op.form(&v);
        let rhs = coer.c1 * op.norm_v_sq(&v) - coer.c2 * op.norm_h_sq(&v);
        if lhs < rhs - tol.lin * lit::<T>(1e3) * (lhs.abs() + rhs.abs()) {
            violations += 1;
        }
    }
    let coercive = coer.c1 > T::zero();
    rows.push(AuditRow {
        condition: "i'",
        pass: coercive && violations == 0,
        constant: to_f64(coer.c2),
        detail: if coercive {
            format!(
                "C1 = {:.6e}, C2 = {:.6e}, probe violations {violations}/{}",
                to_f64(coer.c1),
                to_f64(coer.c2),
                probes.max(1)
            )
        } else {
            format!("non-coercive: C1 = {:.6e} does not control the V-seminorm", to_f64(coer.c1))
        },
    });

    let mut worst = T::zero();
    for &d in &AUDIT_DELTAS {
        let r = resolvent_matrix(op, lit(d), 1)?;
        worst = worst.max(r.max_col_abs_sum());
    }
    rows.push(AuditRow {
        condition: "ii",
        pass: worst <= T::one() + tol.mark,
        constant: to_f64(worst),
        detail: format!("max L1->L1 norm of (I+dA)^-1 over d in {AUDIT_DELTAS:?}"),
    });

    let mut count = 0usize;
    let mut max_violation = T::zero();
    let mut total = 0usize;
    for &d in &AUDIT_DELTAS {
        let fac = op.resolvent_factor(lit(d))?;
        for p in 0..probes.max(1) + 1 {
            let f: Vec<T> = if p == 0 { vec![T::one(); n] } else { (0..n).map(|_| lit(rng.random::<f64>())).collect() };
            let u = fac.solve(&f);
            total += 1;
            let v = u.iter().fold(T::zero(), |m, &x| m.max(-x).max(x - T::one()));
            if v > tol.mark {
                count += 1;
            }
            max_violation = max_violation.max(v);
        }
    }
    rows.push(AuditRow {
        condition: "iii",
        pass: count == 0,
        constant: to_f64(max_violation),
        detail: format!("{count}/{total} probes left [0,1] by more than tol_mark"),
    });

    let deltas: Vec<T> = FIT_DELTAS.iter().map(|&d| lit(d)).collect();
    let fit = ultracontractivity_fit(op, &deltas)?;
    rows.push(AuditRow {
        condition: "iv",
        pass: fit.m_star.is_some(),
        constant: fit.bound.unwrap_or(0.0),
        detail: match fit.m_star {
            Some(m) => format!("m_star = {m}; kernel bound uniform across n-refinement"),
            None => format!("no m <= {M_MAX} with a refinement-uniform L1->Linf bound"),
        },
    });

    Ok(AuditReport {
        operator: op.kind().name(),
        rows,
        c,
        c1: to_f64(coer.c1),
        c2: to_f64(coer.c2),
        m_star: fit.m_star,
    })
}

/// Dense `(I + delta A)^{-m}` built column by column.
fn resolvent_matrix<T: Real>(op: &DiscreteOperator<T>, delta: T, m: usize) -> Result<Dense<T>> {
    let n = op.n();
    let fac = op.resolvent_factor(delta)?;
    let mut out = Dense::zeros(n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let mut col = e.clone();
        for _ in 0..m {
            col = fac.solve(&col);
        }
        for (i, &v) in col.iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// L1 -> L-infinity norm of `(I + delta A)^{-m}`: the largest kernel entry after
/// dividing by the quadrature weight.
pub fn kernel_bound<T: Real>(op: &DiscreteOperator<T>, delta: T, m: usize) -> Result<T> {
    Ok(resolvent_matrix(op, delta, m)?.max_abs() / op.grid().h())
}

/// Fits the smallest resolvent power whose L1 -> L-infinity bound stays flat
/// under grid refinement `n -> 2n + 1 -> 4n + 3` for every delta.
pub fn ultracontractivity_fit<T: Real>(op: &DiscreteOperator<T>, deltas: &[T]) -> Result<UltracontractivityFit> {
    let g1 = *op.grid();
    let g2 = g1.refined();
    let g3 = g2.refined();
    let ladder = [op.clone(), op.reassemble(g2)?, op.reassemble(g3)?];
    let mut table = Vec::new();
    let mut slopes = Vec::new();
    let mut m_star = None;
    let mut bound = None;
    for m in 1..=M_MAX {
        let mut flat = !deltas.is_empty();
        let mut worst = 0.0f64;
        for &d in deltas {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for o in &ladder {
                let b = to_f64(kernel_bound(o, d, m)?);
                table.push(KernelBound { delta: to_f64(d), m, n: o.n(), bound: b });
                xs.push(((o.n() + 1) as f64).ln());
                ys.push(b.ln());
                worst = worst.max(b);
            }
            let s = slope(&xs, &ys);
            slopes.push((to_f64(d), m, s));
            if !(s <= FLAT_SLOPE) {
                flat = false;
            }
        }
        if flat && m_star.is_none() {
            m_star = Some(m);
            bound = Some(worst);
        }
    }
    Ok(UltracontractivityFit { m_star, bound, table, slopes })
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest entrywise excess `j((I + delta A)^{-1} f) - (I + delta A)^{-1} j(f)`.
pub fn jensen_check<T: Real>(op: &DiscreteOperator<T>, delta: T, g: &MonotoneGraph<T>, f: &[T]) -> Result<T> {
    let fac = op.resolvent_factor(delta)?;
    let tf = fac.solve(f);
    let jf: Vec<T> = f.iter().map(|&x| g.j(x)).collect();
    let tjf = fac.solve(&jf);
    let start = if f.is_empty() { T::zero() } else { -T::infinity() };
    Ok(tf.iter().zip(&tjf).fold(start, |m, (&a, &b)| m.max(g.j(a) - b)))
}
