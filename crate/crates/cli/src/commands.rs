use std::fs;
use std::path::Path;
use std::time::Instant;

use scatlip::bounds::{
    deformation_probe, exact_output_lower_bound, lipschitz_backprop_l1, lipschitz_bessel_product,
    lipschitz_monte_carlo, BoundReport, McConfig, Method, ProbeConfig,
};
use scatlip::builtin::{builtin, published, NAMES};
use scatlip::network::{network_to_json, parse_network, validate_network, NetworkGraph};
use scatlip::signal::{Grid, SampledSignal};
use serde_json::json;

use crate::args::{Cli, Command, ComputeArgs, Example, ExportArgs, ProbeArgs, ReproduceArgs, Source};
use crate::error::CliError;
use crate::report::{
    out_dir, print_rows, within_abs, within_band, within_rel, write_csv, write_json, Manifest, ReportDoc, Row,
};

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Compute(a) => compute(&a),
        Command::Reproduce(a) => reproduce(&a),
        Command::ProbeDeformation(a) => probe(&a),
        Command::ExportBuiltin(a) => export(&a),
    }
}

struct Loaded {
    graph: NetworkGraph,
    /// Echoed in manifests.
    origin: String,
    /// Stem for output file names.
    stem: String,
}

fn load_builtin(name: &str) -> Result<NetworkGraph, CliError> {
    match builtin(name, Grid::default()) {
        Some(g) => Ok(g?),
        None => Err(CliError::Usage(format!("unknown builtin '{name}'; expected one of {}", NAMES.join(", ")))),
    }
}

fn load(source: &Source) -> Result<Loaded, CliError> {
    if let Some(name) = &source.builtin {
        return Ok(Loaded {
            graph: load_builtin(name)?,
            origin: format!("builtin:{name}"),
            stem: name.clone(),
        });
    }
    let path = source.network.as_ref().expect("clap requires a source");
    let text = fs::read_to_string(path).map_err(|e| CliError::Read { path: path.clone(), source: e })?;
    let origin = path.display().to_string();
    let graph = parse_network(&text).map_err(|e| CliError::Network { origin: origin.clone(), source: e })?;
    for v in validate_network(&graph) {
        eprintln!("{origin}: {v}");
    }
    let stem = path.file_stem().map_or("network".into(), |s| s.to_string_lossy().into_owned());
    Ok(Loaded { graph, origin, stem })
}

fn run_method(g: &NetworkGraph, m: Method, refine: usize, mc: &McConfig) -> Result<BoundReport, CliError> {
    Ok(match m {
        Method::BesselProduct => lipschitz_bessel_product(g, refine)?,
        Method::BackpropL1 => lipschitz_backprop_l1(g)?,
        Method::MonteCarloLower => lipschitz_monte_carlo(g, mc)?,
    })
}

fn report_hard_failures(r: &BoundReport) {
    for a in r.assumptions.iter().filter(|a| a.hard && !a.satisfied) {
        eprintln!("{}: unmet precondition: {} ({})", r.method.as_str(), a.condition, a.detail);
    }
}

fn compute(a: &ComputeArgs) -> Result<u8, CliError> {
    if a.methods.is_empty() {
        return Err(CliError::Usage("no methods given".into()));
    }
    let net = load(&a.source)?;
    let dir = out_dir(&a.out)?;
    let methods: Vec<Method> = a.methods.iter().map(|&m| m.into()).collect();
    let mc = a.mc.config(McConfig::default().iterations);
    let mut code = 0;
    for &m in &methods {
        let start = Instant::now();
        let r = run_method(&net.graph, m, a.refine, &mc)?;
        let manifest = Manifest {
            command: "compute".into(),
            network: net.origin.clone(),
            methods: vec![m.as_str().into()],
            monte_carlo: (m == Method::MonteCarloLower).then(|| mc.clone()),
            grid: net.graph.grid,
            tool_version: env!("CARGO_PKG_VERSION"),
            wall_time_s: a.record_timing.then(|| start.elapsed().as_secs_f64()),
        };
        let path = dir.join(format!("{}.{}.json", net.stem, m.as_str()));
        write_json(&path, &ReportDoc { report: &r, manifest: &manifest })?;
        let flag = if r.valid { "valid" } else { "INVALID" };
        println!("{:<18} {:>12.6}  {flag}  {}", m.as_str(), r.value, path.display());
        if !r.valid {
            report_hard_failures(&r);
            code = 3;
        }
    }
    Ok(code)
}

fn example_rows(ex: Example, g: &NetworkGraph, reports: &[BoundReport]) -> Result<Vec<Row>, CliError> {
    let value = |m: Method| reports.iter().find(|r| r.method == m).map(|r| r.value).unwrap_or(f64::NAN);
    let bessel = value(Method::BesselProduct);
    let backprop = value(Method::BackpropL1);
    let mc = value(Method::MonteCarloLower);
    let exact = exact_output_lower_bound(g)?;
    let mut rows = Vec::new();
    match ex {
        Example::Haar => {
            rows.push(within_abs("bessel_product", bessel, published::HAAR_BESSEL, 1e-3));
            rows.push(within_abs("backprop_l1", backprop, published::haar_backprop(), 1e-3));
            rows.push(within_band("monte_carlo_lower", mc, None, 0.5, 1.0 + 1e-3, true));
            rows.push(within_abs("exact_output_lower_bound", exact, published::HAAR_EXACT, 1e-3));
        }
        Example::Bump => {
            for (name, want) in published::BUMP_L1 {
                let f = g.filter(name).expect("bump filters are builtin");
                rows.push(within_rel(&format!("l1_norm {name}"), f.l1, want, 0.01));
            }
            rows.push(within_rel("backprop_squared_constant", backprop * backprop, published::BUMP_BACKPROP_SQUARED, 0.02));
            rows.push(within_rel("backprop_l1 (gamma_1)", backprop, published::BUMP_GAMMA1, 0.02));
            rows.push(within_abs("bessel_product (gamma_2)", bessel, published::bump_gamma2(), 1e-3));
            let ledger = &reports.iter().find(|r| r.method == Method::BesselProduct).expect("bessel ran").per_layer;
            for (e, want) in ledger.iter().zip(published::BUMP_B_TILDE) {
                rows.push(within_abs(&format!("B_tilde_{}", e.m), e.b_tilde, want, 1e-3));
            }
            rows.push(within_band(
                "monte_carlo_lower (gamma_3)",
                mc,
                Some(published::BUMP_GAMMA3),
                1.0,
                published::bump_gamma2(),
                false,
            ));
            rows.push(within_abs("exact_output_lower_bound", exact, 1.0, 1e-3));
        }
    }
    Ok(rows)
}

fn reproduce(a: &ReproduceArgs) -> Result<u8, CliError> {
    let name = a.example.name();
    let g = load_builtin(name)?;
    let dir = out_dir(&a.out)?;
    let default_iterations = match a.example {
        Example::Haar => 10_000,
        Example::Bump => 100_000,
    };
    let mc = a.mc.config(default_iterations);
    let start = Instant::now();
    let methods = [Method::BesselProduct, Method::BackpropL1, Method::MonteCarloLower];
    let reports = methods
        .iter()
        .map(|&m| run_method(&g, m, a.refine, &mc))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = example_rows(a.example, &g, &reports)?;
    let manifest = Manifest {
        command: "reproduce".into(),
        network: format!("builtin:{name}"),
        methods: methods.iter().map(|m| m.as_str().into()).collect(),
        monte_carlo: Some(mc),
        grid: g.grid,
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_time_s: a.record_timing.then(|| start.elapsed().as_secs_f64()),
    };
    print_rows(&rows);
    write_csv(&dir.join(format!("reproduce_{name}.csv")), &rows)?;
    write_json(
        &dir.join(format!("reproduce_{name}.json")),
        &json!({"example": name, "rows": rows, "reports": reports, "manifest": manifest}),
    )?;
    let failed = rows.iter().filter(|r| r.status == "FAIL").count();
    println!("{} of {} rows within tolerance", rows.len() - failed, rows.len());
    Ok(0)
}

fn probe_signal(spec: &str, grid: Grid) -> Result<SampledSignal, CliError> {
    let (kind, arg) = spec.split_once(':').map_or((spec, None), |(k, v)| (k, Some(v)));
    match (kind, arg) {
        ("gaussian", arg) => {
            let sigma: f64 = match arg {
                None => 2.0,
                Some(s) => s.parse().map_err(|_| CliError::Usage(format!("bad gaussian width '{s}'")))?,
            };
            if !(sigma > 0.0) {
                return Err(CliError::Usage(format!("gaussian width must be positive, got {sigma}")));
            }
            Ok(SampledSignal::from_real_fn(grid, |x| (-x * x / (2.0 * sigma * sigma)).exp()))
        }
        ("box", None) => Ok(SampledSignal::from_real_fn(grid, |x| if (0.0..8.0).contains(&x) { 1.0 } else { 0.0 })),
        _ => Err(CliError::Usage(format!("unknown signal '{spec}'; expected gaussian[:sigma] or box"))),
    }
}

fn probe(a: &ProbeArgs) -> Result<u8, CliError> {
    let net = load(&a.source)?;
    let f = probe_signal(&a.signal, net.graph.grid)?;
    let mut cfg = ProbeConfig::smooth(net.graph.grid, a.band_limit);
    cfg.interpolation = a.interpolation.into();
    let rows = deformation_probe(&net.graph, &f, &a.scales, &cfg)?;
    let dir = out_dir(&a.out)?;
    let path = dir.join(format!("probe_{}.csv", net.stem));
    write_csv(&path, &rows)?;
    println!("{:>10} {:>14} {:>14}", "scale", "size", "ratio");
    for r in &rows {
        println!("{:>10} {:>14.6e} {:>14.6e}", r.scale, r.size, r.ratio);
    }
    println!("{}", path.display());
    Ok(0)
}

fn export(a: &ExportArgs) -> Result<u8, CliError> {
    let g = load_builtin(a.example.name())?;
    let text = serde_json::to_string_pretty(&network_to_json(&g)).expect("network serializes");
    match &a.out {
        Some(p) => write_text(p, &text)?,
        None => println!("{text}"),
    }
    Ok(0)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, format!("{text}\n")).map_err(|source| CliError::Write { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_specs() {
        let g = Grid::default();
        let f = probe_signal("gaussian", g).unwrap();
        let h = probe_signal("gaussian:2", g).unwrap();
        assert_eq!(f, h);
        assert!((f.linf_norm() - 1.0).abs() < 1e-12);
        let b = probe_signal("box", g).unwrap();
        assert!((b.l1_norm() - 8.0).abs() < 1e-9);
        for bad in ["gaussian:x", "gaussian:0", "box:3", "sine"] {
            assert!(matches!(probe_signal(bad, g), Err(CliError::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn unknown_builtin_is_a_usage_error() {
        let e = load_builtin("nope").unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("haar, bump"));
    }
}
