use crate::config::{config_hash, select, ExperimentConfig, Mode, Precision};
use mwl::ainfty::{product_value, Family};
use mwl::asymptotics::{hbar_sweep, verify_theorem, write_sweep_csv, Tolerances};
use mwl::derham::{build_d, witten_d, witten_laplacian, CircleGrid, WittenData};
use mwl::morse::{
    agmon_distance, critical_points, find_gradient_trees, morse_differential, morse_product, CriticalPoint, PeriodicFunction,
    Sequence,
};
use mwl::real::Real;
use mwl::spectral::{fit_decay_rates, green_decay_probe, small_spectrum, write_decay_csv};
use mwl::trees::enumerate_topologies;
use mwl::wkb::{line_norm, transport_iterate, transport_leading, FlowLineProblem, LaplaceProblem};
use mwl::{Dd, Error};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Why a run stopped early, mapped to an exit code by `main`.
#[derive(Debug)]
pub enum Failure {
    Schema(String),
    Regime(String),
    Verdict(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Verdict(_) => 1,
            Failure::Schema(_) => 2,
            Failure::Regime(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Schema(m) | Failure::Regime(m) | Failure::Verdict(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Schema { .. }
            | Error::NonMorse { .. }
            | Error::NonGeneric(_)
            | Error::InvalidArity(_)
            | Error::Degree(_)
            | Error::NotAMinimum(_)
            | Error::Json(_) => Failure::Schema(msg),
            Error::Io(_) => Failure::Io(msg),
            _ => Failure::Regime(msg),
        }
    }
}

impl From<crate::config::SchemaError> for Failure {
    fn from(e: crate::config::SchemaError) -> Self {
        Failure::Schema(e.to_string())
    }
}

/// What a mode produced: the report body, an optional table, and a failure
/// to raise once both are written.
struct Outcome {
    result: Value,
    verdict: Option<&'static str>,
    csv: Option<Vec<u8>>,
    after: Option<Failure>,
}

impl Outcome {
    fn plain(result: Value) -> Self {
        Outcome { result, verdict: None, csv: None, after: None }
    }
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn sequence(cfg: &ExperimentConfig) -> Result<Sequence, Failure> {
    Ok(Sequence::new(cfg.functions.iter().map(|f| f.to_function()).collect())?)
}

/// `f_1 - f_0`, or the single function.
fn target(cfg: &ExperimentConfig) -> PeriodicFunction {
    match cfg.functions.as_slice() {
        [f] => f.to_function(),
        [a, b, ..] => a.to_function().to(&b.to_function()),
        [] => unreachable!("validated"),
    }
}

fn resolve_q(cfg: &ExperimentConfig, seq: &Sequence) -> Result<Vec<CriticalPoint>, Failure> {
    cfg.q
        .iter()
        .enumerate()
        .map(|(l, sel)| {
            let (i, j) = cfg.pair_of(l);
            Ok(select(seq.f(i, j), sel, &format!("q[{l}]"))?)
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig, base: &Path) -> Result<(), Failure> {
    let hash = config_hash(cfg);
    let out = match cfg.mode {
        Mode::Spectrum => dispatch(cfg.grid.precision, || spectrum::<f64>(cfg), || spectrum::<Dd>(cfg))?,
        Mode::Morse => morse(cfg)?,
        Mode::Trees => trees(cfg)?,
        Mode::Product => dispatch(cfg.grid.precision, || product::<f64>(cfg), || product::<Dd>(cfg))?,
        Mode::Sweep | Mode::Verify => dispatch(cfg.grid.precision, || sweep::<f64>(cfg), || sweep::<Dd>(cfg))?,
        Mode::Wkb => wkb(cfg, base)?,
    };
    let mut report = json!({
        "tool_version": TOOL_VERSION,
        "config_hash": hash,
        "mode": cfg.mode,
        "config": cfg,
        "result": out.result,
    });
    if let Some(v) = out.verdict {
        report["verdict"] = json!(v);
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &cfg.output.json {
        Some(p) => write_file(&base.join(p), text.as_bytes())?,
        None => print!("{text}"),
    }
    if let (Some(csv), Some(p)) = (&out.csv, &cfg.output.csv) {
        let mut bytes = format!("# tool_version={TOOL_VERSION} config_hash={hash}\n").into_bytes();
        bytes.extend_from_slice(csv);
        write_file(&base.join(p), &bytes)?;
    }
    match out.after {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn dispatch<R>(p: Precision, f64_run: impl FnOnce() -> R, dd_run: impl FnOnce() -> R) -> R {
    match p {
        Precision::F64 => f64_run(),
        Precision::Dd => dd_run(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn spectrum<T: Real>(cfg: &ExperimentConfig) -> Result<Outcome, Failure> {
    let f = target(cfg);
    let crit = critical_points(&f)?;
    let grid = CircleGrid::new(cfg.grid.n)?;
    let d = build_d::<T>(&grid);
    let mut reports = Vec::new();
    let mut mismatch = Vec::new();
    for hbar in cfg.hbar.values() {
        let data = WittenData::<T>::new(grid, &f, hbar)?;
        let df = witten_d(&data, &d);
        for deg in [0u8, 1] {
            let want = crit.iter().filter(|c| c.index == deg as usize).count();
            let s = small_spectrum(&witten_laplacian(&df, deg), hbar, None)?;
            let mut r = s.report();
            r.expected_dim = Some(want);
            if r.dim != want {
                mismatch.push(format!("hbar = {hbar}, degree {deg}: dimension {} but {want} critical points", r.dim));
            }
            reports.push(r);
        }
    }
    let mut result = json!({ "critical_points": crit, "eigen": reports });
    let mut csv = None;
    if !cfg.green_pairs.is_empty() {
        let pairs: Vec<(f64, f64)> = cfg.green_pairs.iter().map(|p| (p[0], p[1])).collect();
        let rows = green_decay_probe::<T>(grid, &f, &cfg.hbar.values(), &pairs, 0)?;
        let fits = fit_decay_rates(&rows)?;
        let mut buf = Vec::new();
        write_decay_csv(&rows, &fits, &mut buf)?;
        csv = Some(buf);
        result["green_decay"] = to_value(&fits);
    }
    let after = (!mismatch.is_empty()).then(|| Failure::Regime(mismatch.join("; ")));
    Ok(Outcome { result, verdict: None, csv, after })
}

fn morse(cfg: &ExperimentConfig) -> Result<Outcome, Failure> {
    let f = target(cfg);
    let crit = critical_points(&f)?;
    let complex = morse_differential(&f)?;
    let agmon: Vec<Vec<f64>> =
        crit.iter().map(|a| crit.iter().map(|b| agmon_distance(&f, &crit, a.theta, b.theta)).collect()).collect();
    Ok(Outcome::plain(json!({ "critical_points": crit, "complex": complex, "agmon": agmon })))
}

fn trees(cfg: &ExperimentConfig) -> Result<Outcome, Failure> {
    let k = cfg.k.unwrap_or(cfg.functions.len().saturating_sub(1));
    let topo = enumerate_topologies(k)?;
    let mut result = json!({ "k": k, "topologies": topo.iter().map(|t| t.to_json()).collect::<Vec<_>>() });
    if cfg.functions.len() >= 2 && cfg.q.len() == cfg.functions.len() {
        let seq = sequence(cfg)?;
        let q = resolve_q(cfg, &seq)?;
        let mut found = Vec::new();
        for t in &topo {
            found.extend(find_gradient_trees(t, &seq, &q)?.iter().map(|g| g.to_json()));
        }
        let m = morse_product(&seq, &q)?;
        result["q"] = to_value(&q);
        result["gradient_trees"] = to_value(&found);
        result["coefficient"] = json!(m.coefficient);
        result["per_topology"] = to_value(&m.per_topology);
        result["action"] = json!(m.action);
    }
    Ok(Outcome::plain(result))
}

fn product<T: Real>(cfg: &ExperimentConfig) -> Result<Outcome, Failure> {
    let seq = sequence(cfg)?;
    let q = resolve_q(cfg, &seq)?;
    let hbar = cfg.hbar.values()[0];
    let fam = Family::<T>::new(&seq, CircleGrid::new(cfg.grid.n)?, hbar)?;
    let v = product_value(&fam, &q)?;
    let m = morse_product(&seq, &q)?;
    Ok(Outcome::plain(json!({
        "product": v,
        "morse_coefficient": m.coefficient,
        "homotopy_residual": fam.homotopy_residual(),
        "warnings": fam.warnings(),
    })))
}

fn sweep<T: Real>(cfg: &ExperimentConfig) -> Result<Outcome, Failure> {
    let seq = sequence(cfg)?;
    let q = resolve_q(cfg, &seq)?;
    let s = hbar_sweep::<T>(&seq, &q, &cfg.hbar.values(), CircleGrid::new(cfg.grid.n)?)?;
    let mut csv = Vec::new();
    write_sweep_csv(&s, &mut csv)?;
    let after = (!s.dropped.is_empty()).then(|| {
        let why: Vec<String> = s.dropped.iter().map(|d| format!("hbar = {}: {}", d.hbar, d.reason)).collect();
        Failure::Regime(why.join("; "))
    });
    let mut out = Outcome { result: json!({ "sweep": s }), verdict: None, csv: Some(csv), after };
    if cfg.mode == Mode::Verify {
        let tol = Tolerances { action: cfg.tolerances.action, power: cfg.tolerances.power };
        let r = verify_theorem(&seq, &s, tol, cfg.tree_resolved)?;
        let verdict = match r.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "NO VERDICT",
        };
        out.verdict = Some(verdict);
        if out.after.is_none() && r.pass != Some(true) {
            let why = r.fit_error.clone().unwrap_or_else(|| r.notes.join("; "));
            out.after = Some(Failure::Verdict(format!("verdict {verdict} {why}")));
        }
        out.result["fit"] = to_value(&r);
    }
    Ok(out)
}

fn wkb(cfg: &ExperimentConfig, base: &Path) -> Result<Outcome, Failure> {
    let w = cfg.wkb.as_ref().expect("validated");
    let hs = cfg.hbar.values();
    let mut result = json!({});
    if let Some(l) = &w.laplace {
        let mut rows = Vec::new();
        for &hbar in &hs {
            for &order in &l.orders {
                let p = LaplaceProblem { phase: l.phase.clone(), amplitude: l.amplitude.clone(), order, hbar };
                rows.push(p.expand()?);
            }
        }
        result["laplace"] = to_value(&rows);
    }
    let mut csv = None;
    if let Some(path) = &w.flow_line {
        let full = base.join(path);
        let text = std::fs::read_to_string(&full).map_err(|e| Failure::Io(format!("{}: {e}", full.display())))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let fp: FlowLineProblem = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| Failure::Schema(format!("flow line {} at `{}`: {}", full.display(), e.path(), e.inner())))?;
        let line = fp.line()?;
        let mut steps = Vec::new();
        let mut buf = b"hbar,order,t,mu\n".to_vec();
        for &hbar in &hs {
            let mut mu = transport_leading(&fp, hbar)?;
            let mut norms = vec![line_norm(&fp, &mu.mu)];
            let mut residuals = vec![mu.residual];
            for (i, &t) in fp.t.iter().enumerate() {
                buf.extend(format!("{hbar},0,{t},{:.17e}\n", mu.mu[i]).bytes());
            }
            for l in 1..=w.iterations {
                mu = transport_iterate(&fp, &mu.mu, hbar)?;
                norms.push(line_norm(&fp, &mu.mu));
                residuals.push(mu.residual);
                for (i, &t) in fp.t.iter().enumerate() {
                    buf.extend(format!("{hbar},{l},{t},{:.17e}\n", mu.mu[i]).bytes());
                }
            }
            steps.push(json!({ "hbar": hbar, "norms": norms, "residuals": residuals }));
        }
        result["transport"] = json!({
            "vertex": fp.t[line.vertex],
            "psi_e_consistency": fp.psi_e_consistency()?,
            "steps": steps,
        });
        csv = Some(buf);
    }
    Ok(Outcome { result, verdict: None, csv, after: None })
}
