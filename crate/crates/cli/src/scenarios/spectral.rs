//! Scenarios on kernel spectra and distribution mismatch.

use rand::seq::index::sample;
use rlfa_core::kernel::{mercer_spectrum, power_squared_on_support, tail_sum, Kernel};
use rlfa_core::mismatch::{
    delta_complexity, dual_norm_bound, write_response_csv, CurseMdp, DistributionSet, ResponseRow,
};
use rlfa_core::rng::{simplex_point, stream, unit_sphere, Stream};
use rlfa_core::mismatch::from_cartesian;

use super::{median, require, sphere_points, support_weights, Outcome, ASSERT_TOL};
use crate::artifact::{Assertions, Summary, Table};
use crate::config::{CurseDemoParams, PerturbationParams, PowerFunctionParams, SpectrumParams};
use crate::error::Result;

pub(crate) fn spectrum(p: &SpectrumParams, seed: u64) -> Result<Outcome> {
    require(p.support > 0, "support must be positive")?;
    let kernel = p.kernel.build(&mut stream(seed, Stream::Custom(0)))?;
    let mut rng = stream(seed, Stream::Instance);
    let pts = sphere_points(&mut rng, p.support, kernel.dim());
    let rho = support_weights(&mut rng, p.support, p.weights);
    let spec = mercer_spectrum(&kernel, &pts, &rho)?;
    let mut bytes = Vec::new();
    spec.write_csv(&mut bytes)?;
    let summary = Summary::new("tail_sum", tail_sum(&spec, p.tail_n))
        .with("tail_n", p.tail_n)
        .with("trace", spec.trace())
        .with("reconstruction_error", spec.reconstruction_error());
    Ok(Outcome {
        summary,
        tables: vec![Table::from_csv("spectrum", &bytes)?],
        assertions: None,
    })
}

pub(crate) fn power_function(p: &PowerFunctionParams, seed: u64) -> Result<Outcome> {
    require(p.support > 0, "support must be positive")?;
    require(!p.centers.is_empty(), "centers must be nonempty")?;
    require(
        p.centers.iter().all(|&m| m >= 1 && m <= p.support),
        "every center count must lie in 1..=support",
    )?;
    let kernel = p.kernel.build(&mut stream(seed, Stream::Custom(0)))?;
    let mut rng = stream(seed, Stream::Instance);
    let pts = sphere_points(&mut rng, p.support, kernel.dim());
    let rho = support_weights(&mut rng, p.support, p.weights);
    let spec = mercer_spectrum(&kernel, &pts, &rho)?;
    let trace: f64 = (0..p.support).map(|i| rho[i] * spec.gram[(i, i)]).sum();
    let mut table = Table::new(
        "power",
        &["centers", "expected_power_sq", "tail_sum", "projected_mass", "head_sum", "pass"],
    );
    let mut passed = 0;
    let mut min_slack = f64::INFINITY;
    let mut picks = stream(seed, Stream::Algorithm);
    for &m in &p.centers {
        let centers = sample(&mut picks, p.support, m).into_vec();
        let p2 = power_squared_on_support(&spec.gram, &centers)?;
        let expected: f64 = p2.iter().zip(&rho).map(|(a, b)| a * b).sum();
        let tail = tail_sum(&spec, m);
        let mass = trace - expected;
        let head: f64 = spec.eigenvalues.iter().take(m).sum();
        let slack = (expected - tail).min(head - mass);
        let pass = slack >= -ASSERT_TOL;
        passed += pass as usize;
        min_slack = min_slack.min(slack);
        table.push([
            m.to_string(),
            expected.to_string(),
            tail.to_string(),
            mass.to_string(),
            head.to_string(),
            pass.to_string(),
        ]);
    }
    Ok(Outcome {
        summary: Summary::new("min_slack", min_slack).with("trace", trace),
        tables: vec![table],
        assertions: Some(Assertions {
            passed,
            total: p.centers.len(),
        }),
    })
}

pub(crate) fn perturbation(p: &PerturbationParams, seed: u64) -> Result<Outcome> {
    require(p.support > 0, "support must be positive")?;
    require(p.pi_members > 0, "pi_members must be positive")?;
    require(!p.epsilons.is_empty(), "epsilons must be nonempty")?;
    let kernel = p.kernel.build(&mut stream(seed, Stream::Custom(0)))?;
    let mut rng = stream(seed, Stream::Instance);
    let pts = sphere_points(&mut rng, p.support, kernel.dim());
    let spec = mercer_spectrum(&kernel, &pts, &vec![1.0 / p.support as f64; p.support])?;
    let members = (0..p.pi_members).map(|_| simplex_point(&mut rng, p.support)).collect();
    let pis = DistributionSet::new(p.support, members)?;
    let mut rows = Vec::new();
    let mut delta = Table::new("delta", &["epsilon", "upper_bound", "argmin_candidate"]);
    let mut last = f64::NAN;
    let mut candidates = 0;
    for &eps in &p.epsilons {
        let dc = delta_complexity(&spec, &pis, eps, None)?;
        candidates = dc.per_candidate.len();
        for (i, resp) in dc.per_candidate.iter().enumerate() {
            rows.extend(ResponseRow::from_response(eps, i, resp));
        }
        delta.push([eps.to_string(), dc.upper_bound.to_string(), dc.argmin.to_string()]);
        last = dc.upper_bound;
    }
    let mut bytes = Vec::new();
    write_response_csv(&mut bytes, &rows)?;
    let summary = Summary::new("delta_upper_bound", last)
        .with("epsilon", *p.epsilons.last().expect("nonempty"))
        .with("dual_norm_bound", dual_norm_bound(&spec.gram, &pis))
        .with("candidates", candidates);
    Ok(Outcome {
        summary,
        tables: vec![Table::from_csv("response", &bytes)?, delta],
        assertions: None,
    })
}

/// Tail sums should grow with dimension: the assertion checks the medians
/// are strictly increasing in the order `dims` lists them.
pub(crate) fn curse_demo(p: &CurseDemoParams, seed: u64) -> Result<Outcome> {
    require(!p.dims.is_empty(), "dims must be nonempty")?;
    require(p.dims.iter().all(|&d| d >= 2), "every dimension must be at least 2")?;
    require(p.support > 0 && p.repeats > 0, "support and repeats must be positive")?;
    require(p.alpha > 0.0, "alpha must be positive")?;
    let mut tails = Table::new("tails", &["dim", "repeat", "tail_sum"]);
    let mut returns = Table::new("returns", &["dim", "delta", "mean_return_uniform", "mean_return_static"]);
    let mut medians = Vec::with_capacity(p.dims.len());
    for &d in &p.dims {
        let kernel = Kernel::laplacian(p.alpha, d);
        let mut values = Vec::with_capacity(p.repeats);
        for r in 0..p.repeats {
            let mut rng = stream(seed.wrapping_add(r as u64), Stream::Instance);
            let pts = sphere_points(&mut rng, p.support, d);
            let spec = mercer_spectrum(&kernel, &pts, &vec![1.0 / p.support as f64; p.support])?;
            let t = tail_sum(&spec, p.tail_n);
            tails.push([d.to_string(), r.to_string(), t.to_string()]);
            values.push(t);
        }
        medians.push(median(&values));

        let mut rng = stream(seed, Stream::Custom(d as u32));
        let mdp = CurseMdp::random(&mut rng, d, p.horizon, p.delta, p.centers)?;
        let frozen = CurseMdp::new(d, 0.0, mdp.rewards().to_vec())?;
        let starts: Vec<Vec<f64>> = (0..p.starts).map(|_| from_cartesian(&unit_sphere(&mut rng, d))).collect();
        let mean = |m: &CurseMdp| {
            starts.iter().map(|s| m.expected_return(s, &|_, _| 0.5)).sum::<f64>() / starts.len().max(1) as f64
        };
        returns.push([d.to_string(), p.delta.to_string(), mean(&mdp).to_string(), mean(&frozen).to_string()]);
    }
    let comparisons = p.dims.len() - 1;
    let passed = medians.windows(2).filter(|w| w[0] < w[1]).count();
    let mut summary = Summary::new("median_tail_last_dim", *medians.last().expect("nonempty"));
    for (d, m) in p.dims.iter().zip(&medians) {
        summary = summary.with(&format!("median_tail_d{d}"), *m);
    }
    Ok(Outcome {
        summary,
        tables: vec![tails, returns],
        assertions: Some(Assertions {
            passed,
            total: comparisons,
        }),
    })
}
