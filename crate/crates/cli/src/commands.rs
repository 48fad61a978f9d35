use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use triplebin_core::audit::{build_report, leakage_sweep, write_sweep_csv, SweepRow};
use triplebin_core::binning::{pareto_hull, rate_region};
use triplebin_core::simulation::channel::{ChannelModel, ChannelSpec, FadingKind};
use triplebin_core::simulation::fec::FecCode;
use triplebin_core::simulation::trace::write_csv;
use triplebin_core::simulation::{self, run_with_traces, IndexPipeline, SimConfig, SimSummary};
use triplebin_core::{plan_bins_by_node, Error, Labeling, Modulation, Result, WrapCodebook};

use crate::config::{AuditFile, DumpWrapFile, FileConfig, RatesFile};
use crate::{
    AuditArgs, Cli, Command, DumpWrapArgs, FadingArg, Family, Format, ModulationArg, PipelineArg,
    RatesArgs, SimulateArgs,
};

pub const SCHEMA_VERSION: u32 = 1;

pub struct Output {
    pub path: Option<PathBuf>,
    pub bytes: Vec<u8>,
}

pub fn run(cli: &Cli) -> Result<Output> {
    let mut file = FileConfig::load(cli.config.as_deref())?;
    let format = cli.format.or(file.format);
    let path = cli.out.clone().or(file.out.take());
    let bytes = match &cli.command {
        Command::Rates(a) => rates(a, &file, format.unwrap_or(Format::Csv))?,
        Command::Audit(a) => audit(a, &file, format.unwrap_or(Format::Json))?,
        Command::Simulate(a) => simulate(a, &mut file, cli.seed, format.unwrap_or(Format::Json))?,
        Command::DumpWrap(a) => dump_wrap(a, &file, format.unwrap_or(Format::Csv))?,
    };
    Ok(Output { path, bytes })
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn pick<T: Clone>(cli: &[T], file: Option<Vec<T>>, default: &[T]) -> Vec<T> {
    if !cli.is_empty() {
        cli.to_vec()
    } else {
        file.unwrap_or_else(|| default.to_vec())
    }
}

fn required<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing parameter {name}")))
}

// ---------------------------------------------------------------- rates

#[derive(Debug, Serialize)]
struct RateRow {
    family: Family,
    modulation: Modulation,
    #[serde(rename = "M_A")]
    m_a: u32,
    #[serde(rename = "M_B")]
    m_b: u32,
    /// `corner` for an integer index split, `hull` for a sample on the
    /// Pareto boundary of the convex hull.
    kind: &'static str,
    #[serde(rename = "K_A")]
    k_a: Option<u32>,
    #[serde(rename = "K_B")]
    k_b: Option<u32>,
    #[serde(rename = "R_A")]
    r_a: f64,
    #[serde(rename = "R_B")]
    r_b: f64,
}

#[derive(Serialize)]
struct RatesDoc<'a> {
    schema_version: u32,
    rows: &'a [RateRow],
}

fn family_defaults(family: Family) -> (Modulation, Vec<u32>, Vec<u32>) {
    match family {
        Family::Fig4 => (Modulation::Pam, vec![2], vec![4, 8, 16, 32, 64]),
        Family::Fig5 => (
            Modulation::Pam,
            vec![2, 4, 8, 16, 32, 64, 128, 256],
            vec![64],
        ),
        Family::Fig6 => (Modulation::Qam, vec![4], vec![16, 64, 256]),
    }
}

fn hull_samples(corners: &[(f64, f64)], per_edge: usize) -> Vec<(f64, f64)> {
    let hull = pareto_hull(corners);
    let mut out = Vec::new();
    for pair in hull.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        for i in 0..per_edge {
            let t = i as f64 / per_edge as f64;
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out.extend(hull.last());
    out
}

fn rates(args: &RatesArgs, file: &FileConfig, format: Format) -> Result<Vec<u8>> {
    let f: RatesFile = file.parse()?;
    let family = args.family.or(f.family).unwrap_or(Family::Fig4);
    let (modulation, def_a, def_b) = family_defaults(family);
    let orders_a = pick(&args.ma, f.order_a, &def_a);
    let orders_b = pick(&args.mb, f.order_b, &def_b);
    let per_edge = args.hull_samples.or(f.hull_samples).unwrap_or(8);
    if per_edge == 0 {
        return Err(Error::Config("hull_samples must be positive".into()));
    }
    let mut rows = Vec::new();
    for &m_a in &orders_a {
        for &m_b in &orders_b {
            let region = rate_region(m_a, m_b, modulation)?;
            let row = |kind, k: Option<(u32, u32)>, (r_a, r_b): (f64, f64)| RateRow {
                family,
                modulation,
                m_a,
                m_b,
                kind,
                k_a: k.map(|k| k.0),
                k_b: k.map(|k| k.1),
                r_a,
                r_b,
            };
            rows.extend(
                region
                    .iter()
                    .map(|p| row("corner", Some((p.k_a, p.k_b)), (p.rate_a, p.rate_b))),
            );
            let corners: Vec<(f64, f64)> = region.iter().map(|p| (p.rate_a, p.rate_b)).collect();
            rows.extend(
                hull_samples(&corners, per_edge)
                    .into_iter()
                    .map(|p| row("hull", None, p)),
            );
        }
    }
    match format {
        Format::Csv => csv_rows(&rows),
        Format::Json => json(&RatesDoc {
            schema_version: SCHEMA_VERSION,
            rows: &rows,
        }),
    }
}

// ---------------------------------------------------------------- audit

#[derive(Serialize)]
struct SweepDoc<'a> {
    schema_version: u32,
    rows: &'a [SweepRow],
}

fn audit(args: &AuditArgs, file: &FileConfig, format: Format) -> Result<Vec<u8>> {
    let f: AuditFile = file.parse()?;
    let order_a = required(args.ma.or(f.order_a), "ma")?;
    let orders_b = pick(&args.mb, f.order_b, &[]);
    if orders_b.is_empty() {
        return Err(Error::Config("missing parameter mb".into()));
    }
    let k_a = required(args.ka.or(f.k_a), "ka")?;
    let k_b = required(args.kb.or(f.k_b), "kb")?;
    let windows = pick(&args.window, f.windows, &[1]);
    if windows.contains(&0) {
        return Err(Error::Config("windows must be positive".into()));
    }
    if orders_b.len() == 1 && format == Format::Json {
        let layout = plan_bins_by_node(order_a, orders_b[0], k_a, k_b, &Labeling::GrayTable1)?;
        return json(&build_report(&layout, &windows)?);
    }
    let rows = leakage_sweep(order_a, &orders_b, (k_a, k_b), &windows)?;
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            Ok(buf)
        }
        Format::Json => json(&SweepDoc {
            schema_version: SCHEMA_VERSION,
            rows: &rows,
        }),
    }
}

// ---------------------------------------------------------------- simulate

/// One flattened summary per noise level.
#[derive(Debug, Serialize)]
struct SimRow {
    sigma2: f64,
    slots: u64,
    outage_rate: f64,
    relay_ser: f64,
    ser_at_a: f64,
    ser_at_b: f64,
    guest_type_desync: u64,
    host_type_misread: u64,
    ber_a_to_b_secret: f64,
    ber_a_to_b_common: f64,
    ber_a_to_b_index: Option<f64>,
    ber_b_to_a_secret: f64,
    ber_b_to_a_common: f64,
    ber_b_to_a_index: Option<f64>,
}

impl From<&SimSummary> for SimRow {
    fn from(s: &SimSummary) -> Self {
        SimRow {
            sigma2: s.config.channel.sigma2,
            slots: s.slots,
            outage_rate: s.outage_rate,
            relay_ser: s.relay_symbol_error_rate,
            ser_at_a: s.symbol_error_rate_at_a,
            ser_at_b: s.symbol_error_rate_at_b,
            guest_type_desync: s.guest_type_desync,
            host_type_misread: s.host_type_misread,
            ber_a_to_b_secret: s.ber.a_to_b.secret.ber,
            ber_a_to_b_common: s.ber.a_to_b.common.ber,
            ber_a_to_b_index: s.ber.a_to_b.index.map(|i| i.ber),
            ber_b_to_a_secret: s.ber.b_to_a.secret.ber,
            ber_b_to_a_common: s.ber.b_to_a.common.ber,
            ber_b_to_a_index: s.ber.b_to_a.index.map(|i| i.ber),
        }
    }
}

#[derive(Serialize)]
struct SimSweepDoc<'a> {
    schema_version: u32,
    runs: &'a [SimSummary],
}

fn apply_fec(cfg: &mut SimConfig, spec: &str) -> Result<()> {
    let (stream, code) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--fec expects stream=code, got {spec:?}")))?;
    let code: FecCode = code.trim().parse()?;
    code.validate()?;
    match stream.trim() {
        "common" => cfg.fec.common = code,
        "secret" => cfg.fec.secret = code,
        "index" => cfg.fec.index = code,
        "all" => {
            cfg.fec.common = code;
            cfg.fec.secret = code;
            cfg.fec.index = code;
        }
        other => return Err(Error::Config(format!("unknown stream {other:?}"))),
    }
    Ok(())
}

fn simulate(
    args: &SimulateArgs,
    file: &mut FileConfig,
    seed: Option<u64>,
    format: Format,
) -> Result<Vec<u8>> {
    let file_sweep: Option<Vec<f64>> = file.take("sigma2_sweep")?;
    let file_trace: Option<PathBuf> = file.take("trace")?;
    let mut cfg: SimConfig = file.parse_over(&SimConfig::default())?;
    if let Some(v) = args.ma {
        cfg.order_a = v;
    }
    if let Some(v) = args.mb {
        cfg.order_b = v;
    }
    if let Some(v) = args.ka {
        cfg.k_a = v;
    }
    if let Some(v) = args.kb {
        cfg.k_b = v;
    }
    if let Some(m) = args.modulation {
        cfg.modulation = match m {
            ModulationArg::Pam => Modulation::Pam,
            ModulationArg::Qam => Modulation::Qam,
        };
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.frames {
        cfg.frames = v;
    }
    if let Some(p) = args.index_pipeline {
        cfg.index_pipeline = match p {
            PipelineArg::Slot => IndexPipeline::Slot,
            PipelineArg::Frame => IndexPipeline::Frame,
        };
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    if args.fading.is_some() || args.k_factor.is_some() || args.nakagami_m.is_some() {
        let mut spec = ChannelSpec::from(cfg.channel);
        if let Some(f) = args.fading {
            spec.fading = match f {
                FadingArg::Unit => FadingKind::Unit,
                FadingArg::Rayleigh => FadingKind::Rayleigh,
                FadingArg::Rician => FadingKind::Rician,
                FadingArg::Nakagami => FadingKind::Nakagami,
            };
        }
        spec.k_factor = args.k_factor.or(spec.k_factor);
        spec.m = args.nakagami_m.or(spec.m);
        cfg.channel = ChannelModel::try_from(spec)?;
    }
    for spec in &args.fec {
        apply_fec(&mut cfg, spec)?;
    }
    let sweep = pick(&args.sigma2, file_sweep, &[cfg.channel.sigma2]);
    let trace = args.trace.clone().or(file_trace);
    if trace.is_some() && sweep.len() != 1 {
        return Err(Error::Config("a trace needs a single sigma2".into()));
    }
    let configs: Vec<SimConfig> = sweep
        .iter()
        .map(|&s| {
            let mut c = cfg.clone();
            c.channel.sigma2 = s;
            c.channel.validate()?;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<_>>()?;

    let summaries: Vec<SimSummary> = if let Some(path) = &trace {
        let (summary, frames) = run_with_traces(&configs[0])?;
        let records: Vec<_> = frames.into_iter().flat_map(|f| f.records).collect();
        let mut buf = Vec::new();
        write_csv(&records, &mut buf)?;
        std::fs::write(path, buf)?;
        vec![summary]
    } else {
        configs
            .par_iter()
            .map(simulation::run)
            .collect::<Result<_>>()?
    };

    match format {
        Format::Csv => csv_rows(&summaries.iter().map(SimRow::from).collect::<Vec<_>>()),
        Format::Json if summaries.len() == 1 => json(&summaries[0]),
        Format::Json => json(&SimSweepDoc {
            schema_version: SCHEMA_VERSION,
            runs: &summaries,
        }),
    }
}

// ---------------------------------------------------------------- dump-wrap

fn signed(v: i32) -> String {
    if v > 0 {
        format!("+{v}")
    } else {
        v.to_string()
    }
}

#[derive(Serialize)]
struct WrapDoc<'a> {
    schema_version: u32,
    order_a: u32,
    order_b: u32,
    rows: &'a [triplebin_core::pnc::WrapRow],
}

fn dump_wrap(args: &DumpWrapArgs, file: &FileConfig, format: Format) -> Result<Vec<u8>> {
    let f: DumpWrapFile = file.parse()?;
    let order_a = required(args.ma.or(f.order_a), "ma")?;
    let order_b = required(args.mb.or(f.order_b), "mb")?;
    let rows = WrapCodebook::gray(order_a, order_b)?.rows();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["y", "pairs", "s"])?;
            for r in &rows {
                let pairs: Vec<String> = r
                    .pairs
                    .iter()
                    .map(|&(a, b)| format!("({},{})", signed(a), signed(b)))
                    .collect();
                w.write_record([signed(r.y), pairs.join(" "), signed(r.s)])?;
            }
            w.into_inner().map_err(|e| Error::Io(e.to_string()))
        }
        Format::Json => json(&WrapDoc {
            schema_version: SCHEMA_VERSION,
            order_a,
            order_b,
            rows: &rows,
        }),
    }
}
