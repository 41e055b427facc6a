"""Command-line front end: YAML configs in, JSON summary and CSV series out.

Usage::

    ctxresponse <certify|engine|metrology|zeno|om-oracle|selftest> --config PATH
                [--out-dir DIR] [--threads N]

Exit status is 0 on success, 2 for bad input (config, validation) and 3 for a
numerical failure.
"""
import argparse
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import certify, channels, dynamics, engine, metrology, numkit, ontomodel
from .errors import CtxError, InputError, NumericalError, ParseError, ValidationError

KINDS = ("certify", "engine", "metrology", "zeno", "om_oracle")
PULSES = ("constant", "half_sine")
FLOAT_FMT = "%.17g"


@dataclass
class ExperimentConfig:
    kind: str
    raw: dict
    matrices: dict
    source: str = "<config>"
    lines: dict = field(default_factory=dict)

    def line_of(self, path: str) -> str:
        line = self.lines.get(path)
        return f"{self.source}:{line}" if line else self.source


@dataclass
class ReportBundle:
    summary: dict
    series: dict  # name -> (header, rows)


# ---------------------------------------------------------------- loading


def _index_lines(node, prefix="", out=None):
    """Map dotted key paths to 1-based line numbers from a composed YAML tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            out[path] = key.start_mark.line + 1
            _index_lines(value, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            out.setdefault(f"{prefix}[{i}]", item.start_mark.line + 1)
            _index_lines(item, f"{prefix}[{i}]", out)
    return out


class _Validator:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg

    def fail(self, path: str, msg: str):
        raise ValidationError(f"{self.cfg.line_of(path)}: field '{path}': {msg}")

    def get(self, path: str, default=..., section=None):
        node = self.cfg.raw if section is None else section
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                if default is ...:
                    self.fail(path, "is required")
                return default
            node = node[part]
        return node

    def number(self, path, default=..., positive=False, integer=False):
        val = self.get(path, default)
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.fail(path, f"must be a number, got {val!r}")
        if integer and int(val) != val:
            self.fail(path, f"must be an integer, got {val!r}")
        if positive and not val > 0:
            self.fail(path, f"must be > 0, got {val!r}")
        return int(val) if integer else float(val)

    def grid(self, path, positive=True):
        val = self.get(path)
        if isinstance(val, dict) and set(val) == {"logspace"}:
            spec = val["logspace"]
            if not (isinstance(spec, list) and len(spec) == 3):
                self.fail(path, "logspace needs [start_exponent, stop_exponent, count]")
            pts = np.logspace(float(spec[0]), float(spec[1]), int(spec[2]))
        elif isinstance(val, dict) and set(val) == {"linspace"}:
            spec = val["linspace"]
            if not (isinstance(spec, list) and len(spec) == 3):
                self.fail(path, "linspace needs [start, stop, count]")
            pts = np.linspace(float(spec[0]), float(spec[1]), int(spec[2]))
        elif isinstance(val, list):
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
                self.fail(path, "entries must be numbers")
            pts = np.asarray(val, dtype=float)
        else:
            self.fail(path, "must be a list of numbers or {logspace: [a, b, n]}")
        if pts.size == 0:
            self.fail(path, "must be nonempty")
        if positive and np.any(pts <= 0):
            self.fail(path, "entries must be > 0 (log-log fits need g > 0)")
        return [float(p) for p in pts]

    def matrix(self, path, hermitian=False, dim=None):
        name = self.get(path)
        if not isinstance(name, str) or name not in self.cfg.matrices:
            self.fail(path, f"refers to unknown matrix {name!r}")
        m = self.cfg.matrices[name]
        if dim is not None and m.shape != (dim, dim):
            self.fail(path, f"matrix {name!r} is {m.shape[0]}x{m.shape[1]}, expected {dim}x{dim}")
        if hermitian and not numkit.is_hermitian(m):
            where = self.cfg.line_of(f"matrices.{name}")
            self.fail(path, f"matrix {name!r} (defined at {where}) is not Hermitian")
        return m


def _parse_matrix(value, path, cfg):
    v = _Validator(cfg)
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        v.fail(path, "must be a nonempty list of rows")
    n = len(value)
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(value):
        if len(row) != n:
            v.fail(path, f"row {i} has {len(row)} entries, matrix must be square ({n}x{n})")
        for j, entry in enumerate(row):
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                out[i, j] = entry
            elif (isinstance(entry, list) and len(entry) == 2
                  and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)):
                out[i, j] = complex(entry[0], entry[1])
            else:
                v.fail(path, f"entry ({i}, {j}) must be a number or a [re, im] pair, got {entry!r}")
    return out


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        tree = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark else source
        raise ParseError(f"{where}: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError(f"{source}: top level must be a mapping")
    cfg = ExperimentConfig("", raw, {}, source, _index_lines(tree) if tree else {})
    v = _Validator(cfg)
    kind = v.get("kind")
    if kind not in KINDS:
        v.fail("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
    cfg.kind = kind
    mats = raw.get("matrices", {}) or {}
    if not isinstance(mats, dict):
        v.fail("matrices", "must be a mapping of name -> matrix")
    cfg.matrices = {name: _parse_matrix(m, f"matrices.{name}", cfg) for name, m in mats.items()}
    _VALIDATORS[kind](v)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


# ---------------------------------------------------------------- per-kind validation


def _system(v: _Validator, cyclic: bool):
    h0 = v.matrix("system.h0", hermitian=True)
    d = h0.shape[0]
    shape = v.get("system.pulse.shape")
    if shape not in PULSES:
        v.fail("system.pulse.shape", f"must be one of {', '.join(PULSES)}, got {shape!r}")
    amp = v.matrix("system.pulse.amplitude", hermitian=True, dim=d)
    tau = v.number("system.tau", positive=True)
    if cyclic and shape != "half_sine":
        v.fail("system.pulse.shape", "engine protocols need a cyclic pulse (half_sine)")
    pulse = dynamics.half_sine_pulse(amp, tau) if shape == "half_sine" else dynamics.constant_pulse(amp)
    return h0, pulse, tau


def _common_numeric(v):
    v.number("n_steps", dynamics.DEFAULT_STEPS, positive=True, integer=True)
    n_panels = v.number("n_panels", dynamics.DEFAULT_PANELS, positive=True, integer=True)
    if n_panels % 2:
        v.fail("n_panels", "must be even for Simpson integration")
    s = v.number("s", 0.0)
    if not 0 <= s <= 1:
        v.fail("s", f"depolarising weight must lie in [0, 1], got {s}")


def _check_state(v, path, d):
    rho = v.matrix(path, dim=d)
    try:
        return dynamics.check_density_matrix(rho, name=path)
    except InputError as exc:
        v.fail(path, str(exc))


def _validate_certify(v):
    h0, _, tau = _system(v, cyclic=False)
    d = h0.shape[0]
    _check_state(v, "state", d)
    v.matrix("observable", hermitian=True, dim=d)
    v.number("t", tau, positive=True)
    v.grid("g_grid")
    _common_numeric(v)


def _validate_engine(v):
    h0, _, _ = _system(v, cyclic=True)
    _check_state(v, "state", h0.shape[0])
    v.grid("g_grid")
    _common_numeric(v)


def _validate_metrology(v):
    h = v.matrix("h", hermitian=True)
    d = h.shape[0]
    _check_state(v, "state", d)
    povm = v.get("povm")
    if not isinstance(povm, list) or not povm:
        v.fail("povm", "must be a nonempty list of matrix names")
    for i in range(len(povm)):
        if povm[i] not in v.cfg.matrices:
            v.fail("povm", f"element {i} refers to unknown matrix {povm[i]!r}")
        if v.cfg.matrices[povm[i]].shape != (d, d):
            v.fail("povm", f"element {i} is not {d}x{d}")
    v.number("eta")
    v.grid("delta_grid")
    v.number("d_eta", metrology.DEFAULT_D_ETA, positive=True)


def _validate_zeno(v):
    c = v.number("c")
    if c < 0:
        v.fail("c", "must be >= 0")
    v.number("tau", positive=True)
    ns = v.get("N")
    if not isinstance(ns, list) or not ns or not all(isinstance(n, int) and n >= 1 for n in ns):
        v.fail("N", "must be a nonempty list of integers >= 1")
    v.number("omega", None)


def _validate_om_oracle(v):
    v.number("seed", integer=True)
    v.number("sample_count", positive=True, integer=True)
    v.number("n_lambda_max", 6, positive=True, integer=True)
    v.number("n_outcomes_max", 4, positive=True, integer=True)
    pd_max = v.number("pd_max", 0.2)
    if not 0 <= pd_max <= 1:
        v.fail("pd_max", "must lie in [0, 1]")


_VALIDATORS = {
    "certify": _validate_certify,
    "engine": _validate_engine,
    "metrology": _validate_metrology,
    "zeno": _validate_zeno,
    "om_oracle": _validate_om_oracle,
}


# ---------------------------------------------------------------- pipelines


def _opt(x):
    return None if x is None else float(x)


def _report_summary(rep: certify.CertificationReport) -> dict:
    return {
        "verdict": rep.verdict,
        "response_slope": _opt(rep.response_slope),
        "bound_slope": _opt(rep.bound_slope),
        "noisy_bound_slope": _opt(rep.noisy_bound_slope),
        "g_star": _opt(rep.g_star),
        "g_gap_min": _opt(rep.g_gap_min),
        "g_gap_max": _opt(rep.g_gap_max),
        "o_max": rep.o_max,
        "o_shift": rep.o_shift + 0.0,
        "noise": rep.noise,
        "lemma": {
            "verdict": rep.lemma.verdict,
            "C_used": rep.lemma.C_used,
            "min_eigenvalue": rep.lemma.min_eigenvalue_over_C,
            "kernel_dim": rep.lemma.kernel_dim,
            "alpha": [float(a) for a in rep.lemma.alpha],
        },
        "notes": list(rep.notes),
    }


def _run_certify(cfg, v, threads):
    h0, pulse, tau = _system(v, cyclic=False)
    sys0 = dynamics.DrivenSystem(h0, pulse, 0.0, tau)
    rep = certify.certify_gap(
        sys0.with_g, v.matrix("state"), v.matrix("observable"), v.number("t", tau), v.grid("g_grid"),
        n_steps=v.number("n_steps", dynamics.DEFAULT_STEPS, integer=True),
        n_panels=v.number("n_panels", dynamics.DEFAULT_PANELS, integer=True),
        s=v.number("s", 0.0), threads=threads,
    )
    header = ["g", "delta_o_exact", "delta_o_linear", "p_tilde", "p_d", "nc_bound", "gap_flag"]
    rows = [list(r) for r in zip(rep.g_grid, rep.quantum_response, rep.linear_response,
                                 rep.p_tilde, rep.p_d, rep.nc_bound, map(int, rep.gap_flags))]
    return ReportBundle({"kind": "certify", **_report_summary(rep)}, {"series": (header, rows)})


def _run_engine(cfg, v, threads):
    h0, pulse, tau = _system(v, cyclic=True)
    spec = engine.EngineSpec(dynamics.DrivenSystem(h0, pulse, 0.0, tau, cyclic=True), v.matrix("state"))
    n_steps = v.number("n_steps", dynamics.DEFAULT_STEPS, integer=True)
    n_panels = v.number("n_panels", dynamics.DEFAULT_PANELS, integer=True)
    sw = engine.engine_gap(spec, v.grid("g_grid"), n_steps, n_panels, v.number("s", 0.0), threads)
    header = ["g", "w_exact", "w_linear", "power", "p_tilde", "p_d", "w_nc_bound", "gap_flag"]
    rows = [list(r) for r in zip(sw.g_grid, sw.w_exact, sw.w_linear, sw.power, sw.report.p_tilde,
                                 sw.p_d, sw.w_nc_bound, map(int, sw.gap_flags))]
    summary = {"kind": "engine", "e_max": spec.e_max, "e_shift": spec.e_shift + 0.0, **_report_summary(sw.report)}
    return ReportBundle(summary, {"series": (header, rows)})


def _run_metrology(cfg, v, threads):
    scheme = metrology.EstimationScheme(
        v.matrix("state"), v.matrix("h"), [cfg.matrices[n] for n in v.get("povm")], v.number("eta")
    )
    deltas = v.grid("delta_grid")
    rep = metrology.fisher_report(scheme, deltas, v.number("d_eta", metrology.DEFAULT_D_ETA))
    summary = {
        "kind": "metrology",
        "fisher": rep.fisher,
        "qfi_benchmark": rep.qfi_benchmark,
        "pd_constant": rep.pd_constant,
        "probabilities": rep.probabilities,
        "excluded_outcomes": rep.excluded,
    }
    series = {
        "series": (["delta", "nc_fisher_upper", "fisher"], [[d, u, rep.fisher] for d, u in zip(deltas, rep.nc_upper)]),
        "probabilities": (["outcome", "probability"], [[i, p] for i, p in enumerate(rep.probabilities)]),
    }
    return ReportBundle(summary, series)


def _run_zeno(cfg, v, threads):
    c, tau, omega = v.number("c"), v.number("tau"), v.number("omega", None)
    header = ["N", "nc_survival"] + (["quantum_survival"] if omega is not None else [])
    rows = []
    for n in v.get("N"):
        row = [n, ontomodel.zeno_nc_survival(c, tau, n)]
        if omega is not None:
            row.append(ontomodel.zeno_quantum_survival(omega, tau, n))
        rows.append(row)
    return ReportBundle({"kind": "zeno", "c": c, "tau": tau, "omega": omega}, {"series": (header, rows)})


def _run_om_oracle(cfg, v, threads):
    res = ontomodel.theorem_oracle(
        v.number("seed", integer=True), v.number("sample_count", integer=True),
        v.number("n_lambda_max", 6, integer=True), v.number("n_outcomes_max", 4, integer=True),
        v.number("pd_max", 0.2), keep_rows=True,
    )
    summary = {
        "kind": "om_oracle",
        "n_samples": res.n_samples,
        "violations": res.violations,
        "symmetric_violations": res.symmetric_violations,
        "chain_violations": res.chain_violations,
        "max_ratio": res.max_ratio,
    }
    header = ["sample", "n_lambda", "n_outcomes", "p_d", "o_max", "delta_o", "delta_o_star", "ratio"]
    return ReportBundle(summary, {"series": (header, [list(r) for r in res.rows])})


_RUNNERS = {
    "certify": _run_certify,
    "engine": _run_engine,
    "metrology": _run_metrology,
    "zeno": _run_zeno,
    "om_oracle": _run_om_oracle,
}


def run(cfg: ExperimentConfig, threads: int | None = None) -> ReportBundle:
    """Dispatch to the pipeline named by ``cfg.kind``.

    Library errors are re-raised with the stage name prefixed to the message.
    """
    try:
        return _RUNNERS[cfg.kind](cfg, _Validator(cfg), threads)
    except ValidationError:
        raise
    except CtxError as exc:
        raise type(exc)(f"[{cfg.kind}] {exc.args[0] if exc.args else exc}") from exc


# ---------------------------------------------------------------- selftest


def selftest() -> ReportBundle:
    """Small fixed checks of the core invariants, one row per check."""
    rows = []

    def check(name, value, expected, tol):
        rows.append([name, float(value), float(expected), float(abs(value - expected)), int(abs(value - expected) <= tol)])

    x, y = numkit.PAULI_X, numkit.PAULI_Y
    u = numkit.expm_i_hermitian(x, 0.3)
    check("unitary_log_roundtrip", numkit.opnorm(numkit.unitary_log(u) - 0.3 * x), 0.0, 1e-10)
    check("simpson_sin", numkit.simpson_integrate(lambda t: np.array([[np.sin(t)]]), 0.0, np.pi, 64)[0, 0].real, 2.0, 1e-6)

    rabi = dynamics.DrivenSystem(np.zeros((2, 2)), dynamics.constant_pulse(x), 0.5, 1.0)
    u_num = dynamics.propagate_exact(rabi, 1.0)
    check("rabi_propagator", numkit.opnorm(u_num - numkit.expm_i_hermitian(x, 0.5)), 0.0, 1e-10)

    for theta in (1e-3, 0.1, 0.4):
        check(f"p_d_sin2_theta_{theta:g}", channels.minimal_pd(numkit.expm_i_hermitian(x, theta)).p_d,
              np.sin(theta) ** 2, 1e-8)
    check("p_d_identity", channels.minimal_pd(np.eye(3)).p_d, 0.0, 0.0)

    jt = certify.build_jtilde([0.0, 1.0], 2.0).jtilde_eigenvalues
    check("jtilde_qubit_low", jt[0], 0.5, 1e-12)
    check("jtilde_qubit_high", jt[1], 1.5, 1e-12)

    spec = engine.EngineSpec(
        dynamics.DrivenSystem(np.diag([0.0, 1.0]), dynamics.half_sine_pulse(y, 1.0), 0.01, 1.0, cyclic=True),
        engine.qubit_state(1, 0, 0),
    )
    wr = engine.weak_value_decomposition(spec, n_steps=None)
    check("kd_reconstruction", wr.w_from_kd, wr.w_linear, 1e-12)
    check("weak_value_reconstruction", wr.w_from_weak_values, wr.w_linear, 1e-12)
    check("correlation_form", wr.w_correlation, wr.w_linear, 1e-8)

    scheme = metrology.EstimationScheme(
        np.full((2, 2), 0.5), numkit.PAULI_Z / 2, [np.full((2, 2), 0.5), np.array([[0.5, -0.5], [-0.5, 0.5]])], np.pi / 3
    )
    check("fisher_reference", metrology.fisher_information(scheme), 1.0, 1e-6)

    res = ontomodel.theorem_oracle(0, 500)
    check("om_oracle_violations", res.violations + res.symmetric_violations + res.chain_violations, 0, 0)
    check("zeno_nc", ontomodel.zeno_nc_survival(1.0, 1.0, 10), 0.99**10, 1e-12)

    failed = [r[0] for r in rows if not r[4]]
    summary = {"kind": "selftest", "checks": len(rows), "failed": failed, "ok": not failed}
    return ReportBundle(summary, {"series": (["check", "value", "expected", "abs_error", "passed"], rows)})


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % v
    return str(v)


def series_to_csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary sibling file and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_bundle(bundle: ReportBundle, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for name, (header, rows) in bundle.series.items():
        p = out_dir / f"{name}.csv"
        write_atomic(p, series_to_csv(header, rows))
        written.append(p)
    p = out_dir / "summary.json"
    write_atomic(p, json.dumps(bundle.summary, indent=2, sort_keys=True) + "\n")
    written.append(p)
    return written


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (``certify``, ``engine`` ...)."""
    return Path(str(resources.files("ctxresponse") / "configs" / f"{name}.yaml"))


# ---------------------------------------------------------------- entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ctxresponse", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=["certify", "engine", "metrology", "zeno", "om-oracle", "selftest"])
    ap.add_argument("--config", help="YAML experiment config (optional for selftest)")
    ap.add_argument("--out-dir", default=".", help="directory for summary.json and series CSV files")
    ap.add_argument("--threads", type=int, default=None, help="worker threads for g sweeps")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "selftest":
            bundle = selftest()
        else:
            if not args.config:
                raise ValidationError("--config is required for this command")
            cfg = load_config(args.config)
            kind = args.command.replace("-", "_")
            if cfg.kind != kind:
                raise ValidationError(f"{cfg.source}: config kind {cfg.kind!r} does not match command {args.command!r}")
            bundle = run(cfg, args.threads)
        for p in write_bundle(bundle, args.out_dir):
            print(p)
        if args.command == "selftest" and not bundle.summary["ok"]:
            print(f"selftest failed: {', '.join(bundle.summary['failed'])}", file=sys.stderr)
            return 3
        return 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
