use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ebcert_core::certify::{
    certify, ppt_check, recognize_cited, schur_normal_form, CitedRank, EbCertificate, PptReport,
    SchurNormalForm,
};
use ebcert_core::channel::{ChoiClass, ComplementAdjointClass};
use ebcert_core::format::{matrix_to_json, read_channel, CertificateFile, JsonMatrix, NormalFormDump};
use ebcert_core::{multiplicative_domain, Error, KrausChannel, ToleranceConfig};
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_REFUTED: i32 = 4;
pub const EXIT_OUT_OF_SCOPE: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Format(_)
        | Error::DimensionMismatch(_)
        | Error::NotTracePreserving { .. }
        | Error::NotAChannel
        | Error::EmptyKraus
        | Error::NonFinite
        | Error::InvalidTolerance(_)
        | Error::NotUnitVector(_)
        | Error::InvalidCorrelation(_) => EXIT_INPUT,
        Error::NotEntanglementBreaking(_) => EXIT_REFUTED,
        Error::OutOfScope(_) => EXIT_OUT_OF_SCOPE,
        _ => EXIT_NUMERICAL,
    }
}

/// A number together with the threshold it was compared against.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Judged<T> {
    pub value: T,
    pub tolerance: f64,
}

fn judged<T>(value: T, tolerance: f64) -> Judged<T> {
    Judged { value, tolerance }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub n: usize,
    pub m: usize,
    pub kraus_count: usize,
    pub tp_residual: Judged<f64>,
    pub unital_residual: Judged<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChoiSummary {
    /// Relative singular-value cutoff.
    pub rank: Judged<usize>,
    pub classification: ChoiClass,
    /// Clustering radius for the nonzero spectrum.
    pub alpha: Option<Judged<f64>>,
    pub eigenvalues: Judged<Vec<f64>>,
    /// `J(Φ)/n`.
    pub normalized_state: JsonMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplementSummary {
    pub d: usize,
    pub adjoint_class: ComplementAdjointClass,
    /// `‖Φ^C(I_n) − I_d‖_F`.
    pub identity_residual: Judged<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSummary {
    pub dim: Judged<usize>,
    /// `[i_k, j_k]`.
    pub structure: Vec<[usize; 2]>,
    pub multiplicity_free: bool,
    pub rejected_fixed_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Certified {
        eb_rank: usize,
        choi_rank: usize,
        max_residual: Judged<f64>,
        certificate: CertificateFile,
    },
    Refused {
        reason: RefusalReason,
        classification: ChoiClass,
        /// Block data of the multiplicative domain witnessing the refutation.
        structure: Option<Vec<[usize; 2]>>,
        /// Smallest eigenvalue of the partial transpose of `J(Φ)`.
        ppt_min_eigenvalue: Option<Judged<f64>>,
        cited: Option<CitedRank>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum RefusalReason {
    NotEntanglementBreaking,
    OutOfScope,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub exit_code: i32,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub file: String,
    pub channel: Option<ChannelSummary>,
    pub choi: Option<ChoiSummary>,
    pub complement: Option<ComplementSummary>,
    pub domain: Option<DomainSummary>,
    pub verdict: Option<Verdict>,
    pub normal_form: Option<NormalFormDump>,
    pub error: Option<Failure>,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Analyze,
    Certify,
    NormalForm,
}

/// Result of processing one input file.
pub struct Processed {
    pub report: AnalysisReport,
    pub exit_code: i32,
    pub certificate: Option<EbCertificate>,
}

struct Timer<'a>(&'a mut BTreeMap<String, f64>);

impl Timer<'_> {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }
}

pub fn process(
    path: &Path,
    stage: Stage,
    prior: Option<&EbCertificate>,
    tol: &ToleranceConfig,
) -> Processed {
    let mut report = AnalysisReport {
        file: path.display().to_string(),
        channel: None,
        choi: None,
        complement: None,
        domain: None,
        verdict: None,
        normal_form: None,
        error: None,
        timings_ms: BTreeMap::new(),
    };
    let mut certificate = None;
    let outcome = run(path, stage, prior, tol, &mut report, &mut certificate);
    let exit_code = match outcome {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            report.error = Some(Failure { exit_code: code, message: e.to_string() });
            code
        }
    };
    Processed { report, exit_code, certificate }
}

fn run(
    path: &Path,
    stage: Stage,
    prior: Option<&EbCertificate>,
    tol: &ToleranceConfig,
    report: &mut AnalysisReport,
    certificate: &mut Option<EbCertificate>,
) -> Result<i32, Error> {
    let mut timings = BTreeMap::new();
    let mut timer = Timer(&mut timings);
    let result = (|| {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
        let channel = timer.time("read", || read_channel(&text, tol))?;
        report.channel = Some(ChannelSummary {
            n: channel.input_dim(),
            m: channel.output_dim(),
            kraus_count: channel.kraus().len(),
            tp_residual: judged(channel.tp_residual(), tol.eps_verify),
            unital_residual: judged(channel.unital_residual(), tol.eps_verify),
        });

        let choi = timer.time("choi", || channel.choi(tol))?;
        report.choi = Some(ChoiSummary {
            rank: judged(choi.choi_rank, tol.eps_rank),
            classification: choi.classification,
            alpha: choi.alpha().map(|a| judged(a, tol.eps_eig)),
            eigenvalues: judged(choi.eigenvalues.clone(), tol.eps_eig),
            normalized_state: matrix_to_json(&choi.normalized_state()),
        });

        let (adjoint_class, comp) = timer.time("complement", || {
            let class = channel.classify_complement_adjoint(tol)?;
            Ok::<_, Error>((class, channel.complement(tol)?))
        })?;
        report.complement = Some(ComplementSummary {
            d: comp.d,
            adjoint_class,
            identity_residual: judged(comp.identity_residual(), tol.eps_verify),
        });

        if choi.classification == ChoiClass::Projection {
            let (alg, structure) = timer.time("domain", || {
                let alg = multiplicative_domain(&comp.adjoint(), tol)?;
                let s = alg.structure(tol)?;
                Ok::<_, Error>((alg, s))
            })?;
            report.domain = Some(DomainSummary {
                dim: judged(alg.dim(), tol.eps_rank),
                structure: structure.pairs().into_iter().map(|(i, j)| [i, j]).collect(),
                multiplicity_free: structure.multiplicity_free,
                rejected_fixed_points: alg.rejected_fixed_points,
            });
        }
        if stage == Stage::Analyze {
            return Ok(EXIT_OK);
        }

        let cert = match prior {
            Some(c) => timer.time("verify", || {
                let mut c = c.clone();
                c.residuals = c.verify(&channel, tol)?;
                Ok::<_, Error>(c)
            })?,
            None => match timer.time("certify", || certify(&channel, tol)) {
                Ok(c) => c,
                Err(Error::NotEntanglementBreaking(s)) => {
                    let ppt = ppt_check(&channel, tol)?;
                    report.verdict = Some(refusal(
                        RefusalReason::NotEntanglementBreaking,
                        choi.classification,
                        Some(s.pairs().into_iter().map(|(i, j)| [i, j]).collect()),
                        Some(ppt),
                        None,
                        tol,
                    ));
                    return Ok(EXIT_REFUTED);
                }
                Err(Error::OutOfScope(class)) => {
                    report.verdict = Some(refusal(
                        RefusalReason::OutOfScope,
                        class,
                        None,
                        None,
                        recognize_cited(&channel, tol),
                        tol,
                    ));
                    return Ok(EXIT_OUT_OF_SCOPE);
                }
                Err(e) => return Err(e),
            },
        };
        report.verdict = Some(Verdict::Certified {
            eb_rank: cert.eb_rank,
            choi_rank: cert.choi_rank,
            max_residual: judged(cert.residuals.max(), tol.eps_verify),
            certificate: CertificateFile::from_certificate(&cert),
        });
        if stage == Stage::NormalForm {
            let nf: SchurNormalForm = timer.time("normal_form", || schur_normal_form(&cert, &channel, tol))?;
            report.normal_form = Some(NormalFormDump::new(&nf));
        }
        *certificate = Some(cert);
        Ok(EXIT_OK)
    })();
    report.timings_ms = timings;
    result
}

fn refusal(
    reason: RefusalReason,
    classification: ChoiClass,
    structure: Option<Vec<[usize; 2]>>,
    ppt: Option<PptReport>,
    cited: Option<CitedRank>,
    tol: &ToleranceConfig,
) -> Verdict {
    Verdict::Refused {
        reason,
        classification,
        structure,
        ppt_min_eigenvalue: ppt.map(|p| judged(p.min_eigenvalue, tol.eps_verify)),
        cited,
    }
}

fn blocks(pairs: &[[usize; 2]]) -> String {
    pairs
        .iter()
        .map(|[i, j]| format!("I_{i} (x) M_{j}"))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn matrix_text(rows: &JsonMatrix, indent: &str) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|[re, im]| {
                let (re, im) = (clean(*re), clean(*im));
                if im == 0.0 {
                    format!("{re:>9.4}")
                } else {
                    format!("{re:>9.4}{im:+.4}i")
                }
            })
            .collect();
        let _ = writeln!(out, "{indent}[{}]", cells.join(" "));
    }
    out
}

fn clean(x: f64) -> f64 {
    if x.abs() < 5e-13 {
        0.0
    } else {
        x
    }
}

pub fn render_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "== {}", r.file);
    if let Some(c) = &r.channel {
        let _ = writeln!(
            s,
            "channel: M_{} -> M_{}, {} Kraus operators, trace-preservation residual {:.2e} (tol {:.0e}), unitality residual {:.2e}",
            c.n, c.m, c.kraus_count, c.tp_residual.value, c.tp_residual.tolerance, c.unital_residual.value
        );
    }
    if let Some(c) = &r.choi {
        let _ = writeln!(
            s,
            "Choi-Jamiolkowski matrix: rank {} (cutoff {:.0e}), {}",
            c.rank.value, c.rank.tolerance, c.classification
        );
        let _ = writeln!(s, "normalized Choi state J/n:");
        s.push_str(&matrix_text(&c.normalized_state, "  "));
    }
    if let Some(c) = &r.complement {
        let _ = writeln!(
            s,
            "complementary channel (Stinespring): d = {}, adjoint is {}, |Phi^C(I) - I| = {:.2e} (tol {:.0e})",
            c.d, c.adjoint_class, c.identity_residual.value, c.identity_residual.tolerance
        );
        let unital = matches!(c.adjoint_class, ComplementAdjointClass::TracePreserving);
        let _ = writeln!(
            s,
            "projection criterion: the Choi matrix is a projection exactly when the complement is unital; here it is {}",
            if unital { "unital" } else { "not unital" }
        );
    }
    if let Some(d) = &r.domain {
        let _ = writeln!(
            s,
            "multiplicative domain of the complement adjoint: dimension {}, {} ({}){}",
            d.dim.value,
            blocks(&d.structure),
            if d.multiplicity_free { "multiplicity-free" } else { "has multiplicity" },
            if d.rejected_fixed_points > 0 {
                format!(", {} fixed points rejected", d.rejected_fixed_points)
            } else {
                String::new()
            }
        );
    }
    match &r.verdict {
        Some(Verdict::Certified { eb_rank, choi_rank, max_residual, .. }) => {
            let _ = writeln!(
                s,
                "entanglement breaking: certified, EB rank = Choi rank = {eb_rank} (Choi rank {choi_rank}), max certificate residual {:.2e} (tol {:.0e})",
                max_residual.value, max_residual.tolerance
            );
        }
        Some(Verdict::Refused { reason: RefusalReason::NotEntanglementBreaking, structure, ppt_min_eigenvalue, .. }) => {
            let _ = writeln!(
                s,
                "entanglement breaking: refuted, multiplicative domain {} is not multiplicity-free",
                structure.as_deref().map(blocks).unwrap_or_default()
            );
            if let Some(p) = ppt_min_eigenvalue {
                let verdict = if p.value < -p.tolerance { "negative, independently confirms entanglement" } else { "inconclusive" };
                let _ = writeln!(s, "Peres-Horodecki check: min eigenvalue of partial transpose {:.3e} ({verdict})", p.value);
            }
        }
        Some(Verdict::Refused { reason: RefusalReason::OutOfScope, classification, cited, .. }) => {
            let _ = writeln!(
                s,
                "entanglement breaking: out of scope, Choi matrix is a {classification}; certification needs a projection"
            );
            if let Some(c) = cited {
                let _ = writeln!(s, "known family {}: {}", c.family, c.note);
            }
        }
        None => {}
    }
    if let Some(nf) = &r.normal_form {
        let _ = writeln!(s, "Schur normal form: residual {:.2e}", nf.residual);
        let _ = writeln!(s, "V (columns v_i):");
        s.push_str(&matrix_text(&nf.v, "  "));
        let _ = writeln!(s, "C (c_ij = <u_i, u_j>):");
        s.push_str(&matrix_text(&nf.c, "  "));
    }
    if let Some(e) = &r.error {
        let _ = writeln!(s, "error (exit {}): {}", e.exit_code, e.message);
    }
    let timings: Vec<String> = r.timings_ms.iter().map(|(k, v)| format!("{k} {v:.2}ms")).collect();
    if !timings.is_empty() {
        let _ = writeln!(s, "timings: {}", timings.join(", "));
    }
    s
}

pub fn kraus_summary(ch: &KrausChannel) -> String {
    format!(
        "M_{} -> M_{} with {} Kraus operators",
        ch.input_dim(),
        ch.output_dim(),
        ch.kraus().len()
    )
}
