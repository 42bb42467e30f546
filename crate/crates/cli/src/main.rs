//! `skelred` — command-line calculus of semi-stable reduction.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 wild refusal, 4 no template
//! match. With `--json`, every command emits a single machine-readable
//! object with a `"schema": "skelred/1"` field; output ordering is
//! deterministic either way.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use skelred::annuli::{self, AnnulusError, BlowupDirection, FractionalAnnulus};
use skelred::elliptic::{self, EllipticError, KodairaType};
use skelred::exactmath::{cf_expand, is_prime, unimodular_det, Rational};
use skelred::galois::GaloisSkeleton;
use skelred::sncgraph::{Severity, SncGraph};
use skelred::triangulate::{self, TriangulateError};

#[derive(Parser)]
#[command(name = "skelred", version, about = "Combinatorics of semi-stable reduction: dual graphs, triangulations, quotient skeletons, Kodaira types, and regular fractional annuli")]
struct Cli {
    /// Emit one machine-readable JSON object instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Treat each file argument as a list of input files, one per line.
    #[arg(long, global = true)]
    batch: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Euclidean continued fraction expansion of a rational.
    Cf { rational: String },
    /// Fractional annulus operations.
    #[command(subcommand)]
    Annulus(AnnulusCmd),
    /// Validate a dual-graph file (intersection calculus + structure).
    Validate { file: String },
    /// Genus of a semi-stable dual graph.
    Genus { file: String },
    /// Minimal strong triangulation of a tame dual graph.
    Triangulate {
        file: String,
        #[command(flatten)]
        p: CharExp,
    },
    /// Principal vertices and the Saito degree report.
    Saito {
        file: String,
        #[command(flatten)]
        p: CharExp,
    },
    /// Tame base change: multiplicity transform m -> m / gcd(m, d).
    Basechange {
        file: String,
        #[arg(long)]
        degree: u64,
        #[command(flatten)]
        p: CharExp,
    },
    /// Quotient of a skeleton with group action.
    Quotient { file: String },
    /// Nodes, bending points, and the marked minimal triangulation.
    Mintr { file: String },
    /// Kodaira dictionary operations.
    #[command(subcommand)]
    Elliptic(EllipticCmd),
    /// DOT rendering of a dual graph, principal vertices highlighted.
    Dot { file: String },
}

#[derive(Subcommand)]
enum AnnulusCmd {
    /// Regularity of the annulus with the two radius exponents.
    Regular { exp1: String, exp2: String },
    /// Minimal subdivision into regular pieces.
    Resolve { exp1: String, exp2: String },
    /// Blowup sequence creating the exponent on the line.
    Blowups { exponent: String },
}

#[derive(Subcommand)]
enum EllipticCmd {
    /// Recognize the reduction type of a marked dual-graph file.
    Type { file: String },
    /// Emit the dual graph of a reduction type.
    Graph {
        kodaira: String,
        #[arg(long)]
        n: Option<u64>,
    },
    /// The (m, alpha) invariants of a potentially good type.
    Invariants { kodaira: String },
    /// Gluing exponent of a multiplicity chain `m0,m1,...,1`.
    Alpha { chain: String },
}

#[derive(Args)]
struct CharExp {
    /// Residue characteristic exponent: 1 (characteristic zero) or a prime.
    #[arg(long)]
    p: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    InvalidInput,
    WildRefusal,
    NoMatch,
}

impl Status {
    fn exit_code(self) -> ExitCode {
        match self {
            Status::Ok => ExitCode::SUCCESS,
            Status::InvalidInput => ExitCode::from(2),
            Status::WildRefusal => ExitCode::from(3),
            Status::NoMatch => ExitCode::from(4),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::InvalidInput => "invalid_input",
            Status::WildRefusal => "wild_refusal",
            Status::NoMatch => "no_match",
        }
    }
}

struct Failure {
    status: Status,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure { status: Status::InvalidInput, message: message.into() }
    }
}

impl From<TriangulateError> for Failure {
    fn from(e: TriangulateError) -> Self {
        let status = match e {
            TriangulateError::Wild { .. } | TriangulateError::WildBaseChange { .. } => {
                Status::WildRefusal
            }
            _ => Status::InvalidInput,
        };
        Failure { status, message: e.to_string() }
    }
}

impl From<AnnulusError> for Failure {
    fn from(e: AnnulusError) -> Self {
        let status = match e {
            AnnulusError::WildFormalFiber { .. } => Status::WildRefusal,
            _ => Status::InvalidInput,
        };
        Failure { status, message: e.to_string() }
    }
}

impl From<EllipticError> for Failure {
    fn from(e: EllipticError) -> Self {
        let status = match e {
            EllipticError::NoMatch { .. } => Status::NoMatch,
            _ => Status::InvalidInput,
        };
        Failure { status, message: e.to_string() }
    }
}

impl From<skelred::sncgraph::GraphError> for Failure {
    fn from(e: skelred::sncgraph::GraphError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<skelred::galois::GaloisError> for Failure {
    fn from(e: skelred::galois::GaloisError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<skelred::exactmath::ExactError> for Failure {
    fn from(e: skelred::exactmath::ExactError) -> Self {
        Failure::invalid(e.to_string())
    }
}

/// Successful command output: human text plus the JSON payload.
struct Output {
    text: String,
    payload: Value,
}

fn color_enabled() -> bool {
    matches!(
        std::env::var("SKELRED_COLOR").as_deref(),
        Ok("1") | Ok("true") | Ok("always")
    )
}

fn paint(s: &str, code: &str) -> String {
    if color_enabled() {
        format!("\x1b[{code}m{s}\x1b[0m")
    } else {
        s.to_string()
    }
}

fn green(s: &str) -> String {
    paint(s, "32")
}

fn red(s: &str) -> String {
    paint(s, "31")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    let (command_name, result) = run(&cli.command, cli.batch);
    match result {
        Ok(out) => {
            if json {
                let mut obj = json!({
                    "schema": "skelred/1",
                    "command": command_name,
                    "status": "ok",
                });
                merge(&mut obj, out.payload);
                println!("{}", serde_json::to_string_pretty(&obj).expect("serializable"));
            } else {
                print!("{}", out.text);
            }
            Status::Ok.exit_code()
        }
        Err(f) => {
            if json {
                let obj = json!({
                    "schema": "skelred/1",
                    "command": command_name,
                    "status": f.status.name(),
                    "error": f.message,
                });
                println!("{}", serde_json::to_string_pretty(&obj).expect("serializable"));
            } else {
                eprintln!("error ({}): {}", f.status.name(), red(&f.message));
            }
            f.status.exit_code()
        }
    }
}

fn merge(base: &mut Value, extra: Value) {
    if let (Value::Object(b), Value::Object(e)) = (base, extra) {
        for (k, v) in e {
            b.insert(k, v);
        }
    }
}

fn run(cmd: &Command, batch: bool) -> (&'static str, Result<Output, Failure>) {
    match cmd {
        Command::Cf { rational } => ("cf", cmd_cf(rational)),
        Command::Annulus(sub) => match sub {
            AnnulusCmd::Regular { exp1, exp2 } => ("annulus regular", cmd_regular(exp1, exp2)),
            AnnulusCmd::Resolve { exp1, exp2 } => ("annulus resolve", cmd_resolve(exp1, exp2)),
            AnnulusCmd::Blowups { exponent } => ("annulus blowups", cmd_blowups(exponent)),
        },
        Command::Validate { file } => ("validate", for_each(file, batch, cmd_validate)),
        Command::Genus { file } => ("genus", for_each(file, batch, cmd_genus)),
        Command::Triangulate { file, p } => {
            ("triangulate", for_each(file, batch, |f| cmd_triangulate(f, p.p)))
        }
        Command::Saito { file, p } => ("saito", for_each(file, batch, |f| cmd_saito(f, p.p))),
        Command::Basechange { file, degree, p } => (
            "basechange",
            for_each(file, batch, |f| cmd_basechange(f, *degree, p.p)),
        ),
        Command::Quotient { file } => ("quotient", for_each(file, batch, cmd_quotient)),
        Command::Mintr { file } => ("mintr", for_each(file, batch, cmd_mintr)),
        Command::Elliptic(sub) => match sub {
            EllipticCmd::Type { file } => {
                ("elliptic type", for_each(file, batch, cmd_elliptic_type))
            }
            EllipticCmd::Graph { kodaira, n } => ("elliptic graph", cmd_elliptic_graph(kodaira, *n)),
            EllipticCmd::Invariants { kodaira } => {
                ("elliptic invariants", cmd_elliptic_invariants(kodaira))
            }
            EllipticCmd::Alpha { chain } => ("elliptic alpha", cmd_elliptic_alpha(chain)),
        },
        Command::Dot { file } => ("dot", for_each(file, batch, cmd_dot)),
    }
}

/// Runs a file command on one file, or on each file of a list when
/// `--batch` is given. Batch results are concatenated in list order; the
/// first failure aborts with its status.
fn for_each(
    file: &str,
    batch: bool,
    f: impl Fn(&str) -> Result<Output, Failure>,
) -> Result<Output, Failure> {
    if !batch {
        return f(file);
    }
    let list = std::fs::read_to_string(file)
        .map_err(|e| Failure::invalid(format!("cannot read batch list `{file}`: {e}")))?;
    let mut text = String::new();
    let mut items = Vec::new();
    for path in list.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let out = f(path)?;
        let _ = writeln!(text, "== {path}");
        text.push_str(&out.text);
        items.push(json!({ "file": path, "result": out.payload }));
    }
    Ok(Output { text, payload: json!({ "batch": items }) })
}

fn read_file(path: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read `{path}`: {e}")))
}

fn load_graph(path: &str) -> Result<SncGraph, Failure> {
    Ok(SncGraph::from_text(&read_file(path)?)?)
}

fn load_skeleton(path: &str) -> Result<GaloisSkeleton, Failure> {
    Ok(GaloisSkeleton::from_text(&read_file(path)?)?)
}

fn parse_rational(s: &str) -> Result<Rational, Failure> {
    s.parse::<Rational>().map_err(|e| Failure::invalid(e.to_string()))
}

fn check_char_exp(p: u64) -> Result<(), Failure> {
    if p == 1 || is_prime(p) {
        Ok(())
    } else {
        Err(Failure::invalid(format!(
            "--p must be 1 (characteristic zero) or a prime, got {p}"
        )))
    }
}

fn rational_json(q: &Rational) -> Value {
    json!({ "num": q.numer(), "den": q.denom(), "display": q.to_string() })
}

fn cmd_cf(input: &str) -> Result<Output, Failure> {
    let q = parse_rational(input)?;
    let cf = cf_expand(&q);
    Ok(Output {
        text: format!("{cf}\n"),
        payload: json!({
            "input": rational_json(&q),
            "terms": cf.terms(),
            "display": cf.to_string(),
        }),
    })
}

fn cmd_regular(e1: &str, e2: &str) -> Result<Output, Failure> {
    let (q1, q2) = (parse_rational(e1)?, parse_rational(e2)?);
    let ann = FractionalAnnulus::new(q1, q2)?;
    let det = unimodular_det(&ann.inner_exp(), &ann.outer_exp());
    let regular = ann.is_regular();
    let (m1, m2) = ann.end_multiplicities();
    let verdict = if regular { green("regular") } else { red("not regular") };
    Ok(Output {
        text: format!(
            "{{|pi|^{} < |T| < |pi|^{}}}: {verdict} (det = {det}, end multiplicities {m1}, {m2})\n",
            ann.inner_exp(),
            ann.outer_exp()
        ),
        payload: json!({
            "inner_exp": rational_json(&ann.inner_exp()),
            "outer_exp": rational_json(&ann.outer_exp()),
            "det": det.to_string(),
            "regular": regular,
            "end_multiplicities": [m1, m2],
        }),
    })
}

fn cmd_resolve(e1: &str, e2: &str) -> Result<Output, Failure> {
    let (q1, q2) = (parse_rational(e1)?, parse_rational(e2)?);
    let ann = FractionalAnnulus::new(q1, q2)?;
    let cuts = annuli::minimal_regular_subdivision(&ann)?;
    let mut text = format!(
        "{} cut(s), {} regular piece(s)\n",
        cuts.len(),
        cuts.len() + 1
    );
    for c in &cuts {
        let _ = writeln!(text, "cut at |pi|^{c}");
    }
    Ok(Output {
        text,
        payload: json!({
            "inner_exp": rational_json(&ann.inner_exp()),
            "outer_exp": rational_json(&ann.outer_exp()),
            "cuts": cuts.iter().map(rational_json).collect::<Vec<_>>(),
            "pieces": cuts.len() + 1,
        }),
    })
}

fn cmd_blowups(exponent: &str) -> Result<Output, Failure> {
    let target = parse_rational(exponent)?;
    let steps = annuli::blowup_resolution(&target)?;
    let mut text = String::new();
    for s in &steps {
        let dir = match s.direction {
            BlowupDirection::Downward => "down",
            BlowupDirection::Upward => "up",
        };
        let _ = writeln!(text, "{dir:<4} -> |pi|^{}", s.new_exp);
    }
    let _ = writeln!(text, "{} step(s)", steps.len());
    Ok(Output {
        text,
        payload: json!({
            "target": rational_json(&target),
            "steps": steps.iter().map(|s| json!({
                "direction": match s.direction {
                    BlowupDirection::Downward => "down",
                    BlowupDirection::Upward => "up",
                },
                "exp": rational_json(&s.new_exp),
            })).collect::<Vec<_>>(),
        }),
    })
}

fn cmd_validate(file: &str) -> Result<Output, Failure> {
    let g = load_graph(file)?;
    let diags = g.validate()?;
    let violations: Vec<_> = diags
        .iter()
        .filter(|d| d.severity == Severity::Violation)
        .collect();
    let mut text = String::new();
    for d in &diags {
        let tag = match d.severity {
            Severity::Violation => red("violation"),
            Severity::Warning => paint("warning", "33"),
        };
        let _ = writeln!(text, "{tag} at `{}`: {}", d.vertex, d.message);
    }
    if violations.is_empty() {
        let _ = writeln!(text, "{}", green("ok"));
    }
    let payload = json!({
        "file": file,
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "diagnostics": diags,
        "valid": violations.is_empty(),
    });
    if violations.is_empty() {
        Ok(Output { text, payload })
    } else {
        Err(Failure::invalid(format!(
            "{} intersection-calculus violation(s) in `{file}`",
            violations.len()
        )))
    }
}

fn cmd_genus(file: &str) -> Result<Output, Failure> {
    let g = load_graph(file)?;
    let genus = g.genus_semistable()?;
    Ok(Output {
        text: format!("genus {genus}\n"),
        payload: json!({ "file": file, "genus": genus }),
    })
}

fn cmd_saito(file: &str, p: u64) -> Result<Output, Failure> {
    check_char_exp(p)?;
    let g = load_graph(file)?;
    let principal = triangulate::principalize(&g)?;
    let mults: Vec<u64> = principal
        .iter()
        .map(|id| g.vertex(id).expect("principal vertex").multiplicity)
        .collect();
    let report = triangulate::saito_report(&mults, p)?;
    let ids: Vec<&str> = principal.iter().map(String::as_str).collect();
    let mut text = format!("principal: {{{}}}\n", ids.join(", "));
    let _ = writeln!(text, "lcm of principal multiplicities: {}", report.lcm);
    match report.degree {
        Some(d) => {
            let _ = writeln!(text, "{}: degree {}", green("tame"), d);
        }
        None => {
            let _ = writeln!(
                text,
                "{}: p = {} divides the lcm; no tame degree",
                red("wild"),
                p
            );
        }
    }
    Ok(Output {
        text,
        payload: json!({
            "file": file,
            "principal": principal,
            "report": report,
        }),
    })
}

fn cmd_triangulate(file: &str, p: u64) -> Result<Output, Failure> {
    check_char_exp(p)?;
    let g = load_graph(file)?;
    let t = triangulate::minimal_strong_triangulation_tame(&g, p)?;
    let ids: Vec<&str> = t.vertices.iter().map(String::as_str).collect();
    let mut text = format!("minimal strong triangulation: {{{}}}\n", ids.join(", "));
    let _ = writeln!(
        text,
        "Saito degree: {} (lcm {}, p = {})",
        t.report.degree.expect("tame"),
        t.report.lcm,
        p
    );
    let _ = writeln!(text, "components:");
    for c in &t.components {
        let kind = match c.kind {
            skelred::triangulate::ComponentKind::VirtualDisc => "virtual disc",
            skelred::triangulate::ComponentKind::VirtualAnnulusTwoEnds => {
                "virtual annulus (two ends)"
            }
            skelred::triangulate::ComponentKind::VirtualAnnulusOneEnd => {
                "virtual annulus (one end)"
            }
        };
        let _ = writeln!(
            text,
            "  {kind:<27} boundary {{{}}} interior [{}]",
            c.boundary.join(", "),
            c.interior.join(", ")
        );
    }
    Ok(Output {
        text,
        payload: json!({
            "file": file,
            "triangulation": t.vertices,
            "components": t.components,
            "report": t.report,
        }),
    })
}

fn cmd_basechange(file: &str, degree: u64, p: u64) -> Result<Output, Failure> {
    check_char_exp(p)?;
    if degree == 0 {
        return Err(Failure::invalid("--degree must be positive"));
    }
    let g = load_graph(file)?;
    let new_mults = triangulate::base_change_tame(&g, None, degree, p)?;
    let mut text = String::new();
    for (id, m) in &new_mults {
        let old = g.vertex(id).expect("vertex").multiplicity;
        let _ = writeln!(text, "{id:<12} m = {old:>3} -> {m}");
    }
    Ok(Output {
        text,
        payload: json!({
            "file": file,
            "degree": degree,
            "p": p,
            "multiplicities": new_mults,
        }),
    })
}

fn cmd_quotient(file: &str) -> Result<Output, Failure> {
    let sk = load_skeleton(file)?;
    let notes = sk.validate()?;
    let q = sk.quotient()?;
    let profile = q.splitting_profile();
    let mut text = String::new();
    for n in &notes {
        let _ = writeln!(text, "{}: {n}", paint("note", "33"));
    }
    let _ = writeln!(text, "quotient vertices:");
    for v in q.vertices.values() {
        let fold = match &v.fold {
            Some(_) => " fold",
            None => "",
        };
        let marks = if v.marks.is_empty() {
            String::new()
        } else {
            format!(" marks={}", v.marks.iter().cloned().collect::<Vec<_>>().join(","))
        };
        let _ = writeln!(
            text,
            "  {:<10} g={} s={}{}{}",
            v.id, v.genus, v.splitting, fold, marks
        );
    }
    let _ = writeln!(text, "quotient edges:");
    for e in &q.edges {
        let _ = writeln!(text, "  {} -- {}  s={}", e.a, e.b, e.splitting);
    }
    if !profile.discontinuities.is_empty() {
        let ids: Vec<&str> = profile.discontinuities.iter().map(String::as_str).collect();
        let _ = writeln!(text, "splitting jumps at: {{{}}}", ids.join(", "));
    }
    Ok(Output {
        text,
        payload: json!({
            "file": file,
            "notes": notes,
            "quotient": q,
            "profile": profile,
        }),
    })
}

fn cmd_mintr(file: &str) -> Result<Output, Failure> {
    let sk = load_skeleton(file)?;
    sk.validate()?;
    let q = sk.quotient()?;
    let nodes = q.nodes()?;
    let bending = q.bending_points();
    let mintr = q.minimal_triangulation_marked()?;
    let fmt_set = |s: &BTreeSet<String>| {
        let ids: Vec<&str> = s.iter().map(String::as_str).collect();
        format!("{{{}}}", ids.join(", "))
    };
    let text = format!(
        "nodes: {}\nbending points: {}\nminimal triangulation: {}\n",
        fmt_set(&nodes),
        fmt_set(&bending),
        fmt_set(&mintr)
    );
    Ok(Output {
        text,
        payload: json!({
            "file": file,
            "nodes": nodes,
            "bending_points": bending,
            "minimal_triangulation": mintr,
        }),
    })
}

fn cmd_elliptic_type(file: &str) -> Result<Output, Failure> {
    let g = load_graph(file)?;
    let m = elliptic::type_from_graph(&g)?;
    Ok(Output {
        text: format!("reduction type {}\n", m.kodaira),
        payload: json!({
            "file": file,
            "kodaira": m.kodaira.to_string(),
            "witness": m.witness,
        }),
    })
}

fn parse_type(label: &str, n: Option<u64>) -> Result<KodairaType, Failure> {
    // `In --n 5` and `In* --n 5` spell the parameterized families
    match (label, n) {
        ("In", Some(n)) => return Ok(KodairaType::In(n)),
        ("In*" | "Instar", Some(n)) => return Ok(KodairaType::Instar(n)),
        _ => {}
    }
    let t = KodairaType::parse(label)?;
    match (t, n) {
        (KodairaType::In(_), Some(n)) => Ok(KodairaType::In(n)),
        (KodairaType::Instar(_), Some(n)) => Ok(KodairaType::Instar(n)),
        (other, _) => Ok(other),
    }
}

fn cmd_elliptic_graph(label: &str, n: Option<u64>) -> Result<Output, Failure> {
    let t = parse_type(label, n)?;
    let g = elliptic::graph_from_type(&t)?;
    Ok(Output {
        text: g.to_text(),
        payload: json!({
            "kodaira": t.to_string(),
            "graph": g.to_text(),
        }),
    })
}

fn cmd_elliptic_invariants(label: &str) -> Result<Output, Failure> {
    let t = KodairaType::parse(label)?;
    if t.is_multiplicative() {
        let r = elliptic::multiplicative_report(&t)?;
        let text = format!(
            "type {}: #V_min-str = {}, #V_min-tr = {}, annulus {} (trivialized in degree {})\n",
            r.kodaira, r.min_strong_size, r.min_triangulation_size, r.annulus, r.trivializing_degree
        );
        return Ok(Output {
            text,
            payload: json!({ "kodaira": t.to_string(), "multiplicative": r }),
        });
    }
    let inv = elliptic::invariants_from_type(&t)?;
    Ok(Output {
        text: format!(
            "type {}: m = {}, alpha = {} (mod Z, canonical {})\n",
            t,
            inv.m,
            inv.alpha_display(),
            inv.alpha
        ),
        payload: json!({
            "kodaira": t.to_string(),
            "m": inv.m,
            "alpha": rational_json(&inv.alpha),
            "alpha_display": inv.alpha_display().to_string(),
        }),
    })
}

fn cmd_elliptic_alpha(chain: &str) -> Result<Output, Failure> {
    let mults: Vec<u64> = chain
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::invalid(format!("bad multiplicity chain `{chain}`")))?;
    let exps = elliptic::exponent_walk(&mults)?;
    let alpha = exps[0].mod_one();
    let mut text = String::new();
    for (m, e) in mults.iter().zip(&exps) {
        let _ = writeln!(text, "m = {m:<3} exponent |pi|^{e}");
    }
    let _ = writeln!(text, "alpha = {alpha} (mod Z)");
    Ok(Output {
        text,
        payload: json!({
            "chain": mults,
            "exponents": exps.iter().map(rational_json).collect::<Vec<_>>(),
            "alpha": rational_json(&alpha),
        }),
    })
}

fn cmd_dot(file: &str) -> Result<Output, Failure> {
    let g = load_graph(file)?;
    // best effort: highlight the principal set when it exists
    let highlight = triangulate::principalize(&g).unwrap_or_default();
    let dot = g.to_dot(&highlight);
    Ok(Output {
        text: dot.clone(),
        payload: json!({ "file": file, "dot": dot, "highlight": highlight }),
    })
}
