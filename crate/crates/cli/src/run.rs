use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use tangentscope_core::counterexamples::{
    alternating_set, blaschke_product, fraction, l1_divergent_function, littlewood_set, sample_points, BuildOptions,
};
use tangentscope_core::dyadic::{
    lemma_l4_function, quasi_cover_check, sample_rects, saks_function, tx2_cover, validate_certificate, DyadicRect,
    QuasiCoverOutcome, RareSequence,
};
use tangentscope_core::kernels::{dyadic_sequence, KernelRef, Radius};
use tangentscope_core::operators::{
    curve_oscillation, default_t_grid, fejer_shift_check, lambda_maximal, pointwise_domination_check,
    weak_type_check, CircleSignal,
};
use tangentscope_core::regions::{carlsson_bound, default_deltas, pi_infty, pi_p, pi_plain, pi_star, LimsupEstimate};
use tangentscope_core::{ArcSet, GridFunction};

use crate::config::*;

pub fn run(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    write_json(&cfg.out.join("run.json"), cfg)?;
    let out = cfg.out.as_path();
    match &cfg.command {
        Command::Pi(a) => pi(a, out),
        Command::Converge(a) => converge(a, out),
        Command::Maximal(a) => maximal(a, out),
        Command::Osc(a) => osc(a, out),
        Command::Counterexample(c) => counterexample(c, out),
        Command::Dyadic(DyadicCommand::L4(a)) => l4(a, out),
        Command::Dyadic(DyadicCommand::Saks(a)) => saks(a, out),
        Command::Dyadic(DyadicCommand::Cover(a)) => cover(a, out),
        Command::Dyadic(DyadicCommand::Quasi(a)) => quasi(a, out),
    }
}

pub fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn kernel(m: &ModelArgs) -> Result<KernelRef> {
    if m.grid < 2 {
        bail!("--grid must be at least 2");
    }
    Ok(m.kernel.build()?)
}

fn radii(kmin: u32, kmax: u32) -> Result<Vec<Radius>> {
    if kmin == 0 || kmin > kmax {
        bail!("radius exponents must satisfy 1 ≤ min ≤ max (got {kmin}..={kmax})");
    }
    Ok(dyadic_sequence(kmin, kmax))
}

fn context(m: &ModelArgs, radii: &[Radius]) -> serde_json::Value {
    json!({
        "kernel": m.kernel,
        "curve": m.curve.to_string(),
        "grid": m.grid,
        "eps": radii.iter().map(|r| r.eps()).collect::<Vec<_>>(),
    })
}

fn pi(a: &PiArgs, out: &Path) -> Result<()> {
    let k = kernel(&a.model)?;
    let rs = radii(1, a.rmax_exponent)?;
    let mut w = csv::Writer::from_writer(create(&out.join("table.csv"))?);
    w.write_record(["delta", "r", "value"])?;
    let summary = match a.functional {
        Functional::Infty | Functional::Star => {
            let deltas = default_deltas(a.deltas);
            let t = if a.functional == Functional::Infty {
                pi_infty(k.as_ref(), &a.model.curve, &deltas, &rs)?
            } else {
                pi_star(k.as_ref(), &a.model.curve, &deltas, &rs)?
            };
            for (d, row) in t.deltas.iter().zip(&t.cells) {
                for (r, v) in t.radii.iter().zip(row) {
                    w.write_record([d.to_string(), r.r().to_string(), v.to_string()])?;
                }
            }
            json!({
                "functional": a.functional,
                "estimate": t.estimate,
                "deltas": t.deltas,
                "rows": t.rows.iter().map(row_summary).collect::<Vec<_>>(),
                "context": context(&a.model, &rs),
            })
        }
        f => {
            let est = match f {
                Functional::Plain => pi_plain(k.as_ref(), &a.model.curve, &rs, a.model.grid)?,
                Functional::Carlsson => carlsson_bound(k.as_ref(), &a.model.curve, a.p, &rs, a.model.grid)?,
                _ => pi_p(k.as_ref(), &a.model.curve, a.p, &rs, a.model.grid)?,
            };
            for (r, v) in est.radii.iter().zip(&est.samples) {
                w.write_record([String::new(), r.r().to_string(), v.to_string()])?;
            }
            // Π̃_p is a supremum over all radii, the others are limsups
            let estimate = if f == Functional::TildeP { est.sup } else { est.tail_max };
            json!({
                "functional": f,
                "p": a.p,
                "estimate": estimate,
                "tail": row_summary(&est),
                "context": context(&a.model, &rs),
            })
        }
    };
    w.flush()?;
    write_json(&out.join("summary.json"), &summary)
}

fn row_summary(e: &LimsupEstimate) -> serde_json::Value {
    json!({ "tail_max": e.tail_max, "tail_min": e.tail_min, "sup": e.sup, "trend": e.trend })
}

enum Signal {
    Grid(GridFunction),
    Arcs(ArcSet),
}

impl Signal {
    fn load(s: &SignalArgs, n: usize) -> Result<Self> {
        if let Some(p) = &s.file {
            let f = File::open(p).with_context(|| format!("--f {}", p.display()))?;
            return Ok(Signal::Grid(GridFunction::read_csv(f).with_context(|| format!("--f {}", p.display()))?));
        }
        if let Some(p) = &s.arcs {
            let f = File::open(p).with_context(|| format!("--arcs {}", p.display()))?;
            return Ok(Signal::Arcs(ArcSet::read_csv(f).with_context(|| format!("--arcs {}", p.display()))?));
        }
        let preset = s.preset.context("one of --f, --arcs, --preset is required")?;
        Ok(match preset {
            Preset::Const => Signal::Grid(GridFunction::constant(n, 1.0)?),
            Preset::Step => Signal::Arcs(ArcSet::arc(0.0, PI)),
            Preset::Cos => Signal::Grid(GridFunction::from_fn(n, f64::cos)?),
            Preset::Bump => {
                let h = std::f64::consts::TAU / n as f64;
                let mut v = vec![0.0; n];
                for k in -3i64..=3 {
                    v[k.rem_euclid(n as i64) as usize] = 1.0 / (7.0 * h);
                }
                Signal::Grid(GridFunction::new(v)?)
            }
        })
    }

    fn as_signal(&self) -> &dyn CircleSignal {
        match self {
            Signal::Grid(g) => g,
            Signal::Arcs(a) => a,
        }
    }

    fn to_grid(&self, n: usize) -> Result<GridFunction> {
        Ok(match self {
            Signal::Grid(g) => g.clone(),
            Signal::Arcs(a) => GridFunction::indicator(a, n)?,
        })
    }
}

fn converge(a: &ConvergeArgs, out: &Path) -> Result<()> {
    let k = kernel(&a.model)?;
    let sig = Signal::load(&a.signal, a.model.grid)?;
    let f = sig.as_signal();
    let rs = radii(1, a.rmax_exponent)?;
    if a.offsets == 0 {
        bail!("--offsets must be positive");
    }
    let fx = f.value_at(a.x);
    let mut w = csv::Writer::from_writer(create(&out.join("conv.csv"))?);
    w.write_record(["r", "theta", "value", "error"])?;
    let mut per_radius = Vec::with_capacity(rs.len());
    for &r in &rs {
        let lam = a.model.curve.eval(r)?;
        let mut worst = 0.0f64;
        for i in 0..a.offsets {
            // open interval (−λ, λ)
            let theta = lam * (2.0 * (i + 1) as f64 / (a.offsets + 1) as f64 - 1.0);
            let v = f.convolve_at(k.as_ref(), r, a.x + theta)?;
            let err = (v - fx).abs();
            worst = worst.max(err);
            w.write_record([r.r().to_string(), theta.to_string(), v.to_string(), err.to_string()])?;
        }
        per_radius.push(json!({ "eps": r.eps(), "lambda": lam, "max_error": worst }));
    }
    w.flush()?;
    let fejer = if a.fejer_orders.is_empty() {
        serde_json::Value::Null
    } else {
        let errs = fejer_shift_check(f, a.x, &a.fejer_orders, a.fejer_shift)?;
        json!({ "orders": a.fejer_orders, "shift": a.fejer_shift, "errors": errs })
    };
    write_json(
        &out.join("summary.json"),
        &json!({
            "x": a.x,
            "f_x": fx,
            "radii": per_radius,
            "final_max_error": per_radius.last().map(|v| v["max_error"].clone()),
            "fejer": fejer,
            "context": context(&a.model, &rs),
        }),
    )
}

fn maximal(a: &MaximalArgs, out: &Path) -> Result<()> {
    let k = kernel(&a.model)?;
    let f = Signal::load(&a.signal, a.model.grid)?.to_grid(a.model.grid)?;
    let rs = radii(1, a.rmax_exponent)?;
    let mut rep = lambda_maximal(k.as_ref(), &a.model.curve, &f, &rs)?;
    let t = default_t_grid(&rep.values, a.t_points);
    let weak = weak_type_check(&mut rep, &f, a.p, &t)?;
    let dom = pointwise_domination_check(k.as_ref(), &a.model.curve, &f, a.p, &rs)?;
    rep.values.write_csv(create(&out.join("values.csv"))?)?;
    dom.ratios.write_csv(create(&out.join("ratios.csv"))?)?;
    write_json(
        &out.join("summary.json"),
        &json!({
            "p": a.p,
            "best_constant": rep.best_constant,
            "witness_t": weak.witness_t,
            "max_ratio": dom.max_ratio,
            "max_ratio_at": f.theta(dom.argmax),
            "level_set_measures": rep.level_set_measures,
            "warnings": rep.warnings,
            "signal_grid": f.n(),
            "context": context(&a.model, &rs),
        }),
    )
}

/// Linear-interpolated quantiles of an unsorted sample.
fn quantiles(v: &[f64]) -> serde_json::Value {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| {
        if s.is_empty() {
            return f64::NAN;
        }
        let x = p * (s.len() - 1) as f64;
        let (lo, hi) = (x.floor() as usize, x.ceil() as usize);
        s[lo] + (s[hi] - s[lo]) * (x - lo as f64)
    };
    let mean = s.iter().sum::<f64>() / s.len().max(1) as f64;
    json!({
        "min": q(0.0), "q10": q(0.1), "q25": q(0.25), "median": q(0.5),
        "q75": q(0.75), "q90": q(0.9), "max": q(1.0), "mean": mean,
    })
}

fn osc(a: &OscArgs, out: &Path) -> Result<()> {
    let k = kernel(&a.model)?;
    let sig = Signal::load(&a.signal, a.model.grid)?;
    let rs = radii(a.rmin_exponent, a.rmax_exponent)?;
    let xs = sample_points(a.samples, a.seed);
    let o = curve_oscillation(k.as_ref(), &a.model.curve, sig.as_signal(), &xs, &rs)?;
    let mut w = csv::Writer::from_writer(create(&out.join("osc.csv"))?);
    w.write_record(["x", "oscillation"])?;
    for (x, v) in xs.iter().zip(&o) {
        w.write_record([x.to_string(), v.to_string()])?;
    }
    w.flush()?;
    write_json(
        &out.join("summary.json"),
        &json!({ "samples": a.samples, "seed": a.seed, "quantiles": quantiles(&o), "context": context(&a.model, &rs) }),
    )
}

fn counterexample(c: &CounterexampleCommand, out: &Path) -> Result<()> {
    let (CounterexampleCommand::Littlewood(a)
    | CounterexampleCommand::Alternating(a)
    | CounterexampleCommand::L1div(a)
    | CounterexampleCommand::Blaschke(a)) = c;
    let k = kernel(&a.model)?;
    let opts = BuildOptions { samples: a.samples, seed: a.seed, ..BuildOptions::default() };
    let (k, curve, n) = (k.as_ref(), &a.model.curve, a.model.grid);
    let ctx = json!({
        "kernel": a.model.kernel,
        "curve": curve.to_string(),
        "grid": n,
        "depth": a.depth,
        "samples": a.samples,
        "seed": a.seed,
    });
    let stages = match c {
        CounterexampleCommand::Littlewood(_) => {
            let b = littlewood_set(k, curve, a.depth, n, opts)?;
            b.set.write_csv(create(&out.join("E.csv"))?)?;
            let osc = b.oscillations();
            json!({
                "context": ctx,
                "pi_star": b.pi_star,
                "measure": b.set.measure(),
                "arcs": b.set.len(),
                "stages": b.stages,
                "samples": b.samples,
                "witnesses": b.witnesses,
                "oscillations": osc,
                "fraction_oscillation_at_least_half": fraction(osc.iter().map(|&o| o >= 0.5)),
            })
        }
        CounterexampleCommand::Alternating(_) => {
            let b = alternating_set(k, curve, a.depth, n, opts)?;
            b.set.write_csv(create(&out.join("E.csv"))?)?;
            let last = b.witnesses.iter().filter(|w| w.stage == a.depth);
            json!({
                "context": ctx,
                "pi_infty": b.pi_infty,
                "measure": b.set.measure(),
                "arcs": b.set.len(),
                "stages": b.stages,
                "samples": b.samples,
                "witnesses": b.witnesses,
                "fraction_above_bound_last_stage": fraction(last.map(|w| w.oscillation >= w.bound)),
            })
        }
        CounterexampleCommand::L1div(_) => {
            let (f, b) = l1_divergent_function(k, curve, a.depth, n, opts)?;
            f.write_csv(create(&out.join("f.csv"))?)?;
            json!({
                "context": ctx,
                "l1_norm": b.l1_norm(),
                "stages": b.stages,
                "parts": b.parts,
                "samples": b.samples,
                "witnesses": b.witnesses,
            })
        }
        CounterexampleCommand::Blaschke(_) => {
            let (bv, b) = blaschke_product(k, curve, a.depth, n, opts)?;
            bv.write_csv(create(&out.join("B.csv"))?)?;
            let per_sample: Vec<f64> = b
                .samples
                .iter()
                .map(|&x| b.witnesses.iter().filter(|w| w.x == x).map(|w| w.oscillation).fold(0.0, f64::max))
                .collect();
            json!({
                "context": ctx,
                "pi_star": b.pi_star,
                "factors": b.spec,
                "unimodularity_drift": bv.unimodularity_drift(),
                "stages": b.stages,
                "samples": b.samples,
                "witnesses": b.witnesses,
                "oscillations": per_sample,
                "fraction_oscillation_at_least_half": fraction(per_sample.iter().map(|&o| o >= 0.5)),
            })
        }
    };
    write_json(&out.join("stages.json"), &stages)
}

fn l4(a: &L4Args, out: &Path) -> Result<()> {
    let b = lemma_l4_function(a.big_l, &a.square, a.cap)?;
    b.f.write_node_csv(create(&out.join("f.csv"))?)?;
    let audit = b.audit(a.exterior, a.seed)?;
    write_json(
        &out.join("witnesses.json"),
        &json!({
            "holds": audit.holds(),
            "checks": {
                "support": audit.support_ok(),
                "sup_norm": audit.sup_ok(),
                "width": audit.width_ok(),
                "exterior": audit.exterior_ok(),
                "witnesses": audit.witnesses_ok(),
                "marginals": audit.marginals_vanish,
            },
            "resolution": b.f.resolution(),
            "nodes": b.f.node_count(),
            "audit": audit,
        }),
    )
}

fn saks(a: &SaksArgs, out: &Path) -> Result<()> {
    let s = saks_function(&a.delta, a.stages, a.cap)?;
    s.f.write_node_csv(create(&out.join("F.csv"))?)?;
    let audit = s.audit(a.samples, a.seed)?;
    write_json(
        &out.join("stages.json"),
        &json!({
            "holds": audit.holds(),
            "delta": s.delta,
            "schedule": s.stages,
            "resolution": s.f.resolution(),
            "nodes": s.f.node_count(),
            "audit": audit,
        }),
    )
}

/// Random rectangles whose exponents can be rounded up into Δ: from `γ`
/// below its first term up to its last.
fn random_rects(delta: &RareSequence, count: usize, seed: u64) -> Vec<DyadicRect> {
    let lo = delta.terms()[0].saturating_sub(delta.gamma().max(1));
    sample_rects(lo, delta.last(), count, seed)
}

fn cover(a: &CoverArgs, out: &Path) -> Result<()> {
    let rects = match &a.rect {
        Some(r) => vec![r.clone()],
        None => random_rects(&a.delta, a.count, a.seed),
    };
    let mut w = csv::Writer::from_writer(create(&out.join("covers.csv"))?);
    w.write_record(["i", "j", "m1", "m2", "ri", "rj", "rm1", "rm2", "ratio", "bound", "holds"])?;
    let mut failures = 0usize;
    let mut min_ratio: Option<tangentscope_core::dyadic::Dyadic> = None;
    for r in &rects {
        let c = tx2_cover(r, &a.delta)?;
        if !c.holds() {
            failures += 1;
        }
        min_ratio = Some(match min_ratio {
            Some(m) => m.min(c.ratio.clone()),
            None => c.ratio.clone(),
        });
        w.write_record([
            r.i.to_string(),
            r.j.to_string(),
            r.m1.to_string(),
            r.m2.to_string(),
            c.refined.i.to_string(),
            c.refined.j.to_string(),
            c.refined.m1.to_string(),
            c.refined.m2.to_string(),
            c.ratio.to_string(),
            c.bound.to_string(),
            c.holds().to_string(),
        ])?;
    }
    w.flush()?;
    write_json(
        &out.join("summary.json"),
        &json!({
            "delta": a.delta,
            "gamma": a.delta.gamma(),
            "rectangles": rects.len(),
            "failures": failures,
            "min_ratio": min_ratio,
            "seed": a.seed,
        }),
    )
}

fn quasi(a: &QuasiArgs, out: &Path) -> Result<()> {
    let outcome = quasi_cover_check(&a.rect, &a.pieces, &a.ambient, &a.c, a.search_resolution)?;
    let validated = match &outcome {
        QuasiCoverOutcome::Found(certificate) => {
            Some(validate_certificate(&a.rect, certificate, &a.pieces, &a.ambient, &a.c).is_ok())
        }
        _ => None,
    };
    write_json(
        &out.join("certificate.json"),
        &json!({
            "rect": a.rect,
            "c": a.c,
            "pieces_basis": a.pieces,
            "ambient_basis": a.ambient,
            "result": outcome,
            "validated": validated,
        }),
    )
}
