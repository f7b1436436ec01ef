"""Job documents: parsing, validation and execution.

A job is one JSON object::

    {
      "analysis": "frame_3_3",
      "spaces": {"X": {"dim": 2, "p": 2}, "Xd": {"dim": 3, "q": 2}},
      "matrices": {"G": [[1, 0], [0, 1], [1, 1]], "Phi": [[...], ...]},
      "constants": {"mu": 0.1, "lambda1": 0.0, "lambda2": 0.0},
      "options": {},
      "sweep": {"parameter": "mu", "from": 0.0, "to": 0.5, "steps": 6},
      "tolerances": {"residual": 1e-8},
      "seed": 0
    }

Matrices are row-major nested lists.  ``G, Phi, F, Psi, E`` are ``m x n``
(one family element per row), ``S, S_tilde`` are ``n x m`` and ``P`` is
``m x m``.  Validation errors name the offending field.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import equivalence as eq
from . import oracles
from . import perturbation as pt
from .errors import FrameLabError, OracleLimitError
from .operators import (
    FrameSystem,
    bessel_bound,
    check_neumann_invertibility,
    frame_bounds,
    op_norm,
    riesz_bounds,
    synthesis_matrix,
)
from .spaces import SpaceSpec, format_exponent, parse_exponent

JOB_SCHEMA = "framelab.job/1"

THEOREMS = {
    # analysis: (required matrices, optional matrices, base, perturbed)
    "bessel_3_1": (("G", "Phi"), (), "G", "Phi"),
    "frame_3_3": (("G", "Phi"), (), "G", "Phi"),
    "banach_frame_3_6": (("G", "Phi"), ("S",), "G", "Phi"),
    "banach_frame_proj_3_7": (("G", "Phi", "P"), (), "G", "Phi"),
    "riesz_3_8": (("F", "Psi"), (), "F", "Psi"),
    "atomic_3_9": (("G", "F", "Psi"), (), "F", "Psi"),
    "atomic_3_10": (("G", "F", "Psi"), (), "F", "Psi"),
    "operator_pert_cc": (("G", "S", "S_tilde"), (), "S", "S_tilde"),
    "hilbert_1_1": (("G", "Phi"), (), "G", "Phi"),
}
CHECKS = {
    "bessel_bound": (("G",), ()),
    "frame_bounds": (("G",), ()),
    "riesz_bounds": (("F",), ()),
    "check_neumann_invertibility": (("G",), ()),
    "check_equivalence": ((), ("G", "Phi", "F", "Psi", "S")),
    "check_frame_mu_threshold": (("F", "Psi"), ()),
}
# the verify_* operation names are accepted as aliases of the theorem ids
ALIASES = {
    "verify_bessel_perturbation": "bessel_3_1",
    "verify_frame_perturbation": "frame_3_3",
    "verify_banach_frame_perturbation": "banach_frame_3_6",
    "verify_banach_frame_projection": "banach_frame_proj_3_7",
    "verify_riesz_perturbation": "riesz_3_8",
    "verify_atomic_decomposition_perturbation": "atomic_3_9",
    "verify_operator_perturbation_cc": "operator_pert_cc",
    "verify_hilbert_perturbation": "hilbert_1_1",
}
ANALYSES = tuple(THEOREMS) + tuple(CHECKS) + ("sweep",)


def canonical_analysis(name, options: dict | None = None, field_name: str = "analysis") -> str:
    """Map an analysis name (theorem id or operation name) to its id."""
    if name == "verify_atomic_decomposition_perturbation":
        mode = (options or {}).get("mode", "full_A9")
        if mode not in ("full_A9", "truncated_A10"):
            raise JobError("options.mode", f"expected full_A9 or truncated_A10, got {mode!r}")
        return "atomic_3_9" if mode == "full_A9" else "atomic_3_10"
    name = ALIASES.get(name, name)
    if name not in ANALYSES:
        choices = ", ".join(ANALYSES + tuple(ALIASES))
        raise JobError(field_name, f"unknown analysis {name!r}; choose one of {choices}")
    return name


SWEEP_PARAMETERS = ("mu", "lambda1", "lambda2", "scale")
MATRIX_NAMES = ("G", "Phi", "F", "Psi", "S", "S_tilde", "P", "E")


class JobError(FrameLabError):
    """The job document is malformed; ``field`` names the culprit."""

    code = "invalid_job"

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}", field=field_name)
        self.field = field_name


@dataclass
class SweepSpec:
    analysis: str
    parameter: str
    start: float
    stop: float
    steps: int
    match_perturbation: bool = False

    def values(self) -> list[float]:
        if self.steps == 1:
            return [self.start]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]

    def to_dict(self) -> dict:
        return {
            "analysis": self.analysis,
            "parameter": self.parameter,
            "from": self.start,
            "to": self.stop,
            "steps": self.steps,
            "match_perturbation": self.match_perturbation,
        }


@dataclass
class JobSpec:
    analysis: str
    space_X: SpaceSpec
    space_Xd: SpaceSpec | None
    matrices: dict
    constants: pt.PerturbationConstants
    options: dict = field(default_factory=dict)
    sweep: SweepSpec | None = None
    tolerances: pt.Tolerances = pt.DEFAULT_TOL
    max_delta: float | None = None
    seed: int = 0

    @property
    def theorem(self) -> str | None:
        name = self.sweep.analysis if self.sweep else self.analysis
        return name if name in THEOREMS else None

    def family(self, name: str) -> FrameSystem:
        return FrameSystem(self.matrices[name], self.space_X, self.space_Xd)

    def to_dict(self) -> dict:
        return {
            "analysis": self.analysis,
            "spaces": {
                "X": {"dim": self.space_X.dim, "p": format_exponent(self.space_X.p)},
                "Xd": None
                if self.space_Xd is None
                else {"dim": self.space_Xd.dim, "q": format_exponent(self.space_Xd.p)},
            },
            "matrices": {k: v.tolist() for k, v in sorted(self.matrices.items())},
            "constants": self.constants.to_dict(),
            "options": dict(self.options),
            "sweep": None if self.sweep is None else self.sweep.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "max_delta": self.max_delta,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# parsing


def _number(value, name: str, minimum: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise JobError(name, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise JobError(name, "must be finite")
    if minimum is not None and value < minimum:
        raise JobError(name, f"must be >= {minimum}, got {value}")
    return value


def _space(doc, name: str, exp_keys: tuple) -> SpaceSpec:
    if not isinstance(doc, dict):
        raise JobError(name, "expected an object with 'dim' and an exponent")
    if "dim" not in doc:
        raise JobError(f"{name}.dim", "missing")
    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise JobError(f"{name}.dim", f"expected a positive integer, got {dim!r}")
    key = next((k for k in exp_keys if k in doc), None)
    if key is None:
        raise JobError(f"{name}.{exp_keys[0]}", "missing exponent")
    try:
        p = parse_exponent(doc[key])
    except FrameLabError as exc:
        raise JobError(f"{name}.{key}", str(exc)) from None
    return SpaceSpec(dim, p)


def _matrix(rows, name: str, shape: tuple[int, int]) -> np.ndarray:
    field_name = f"matrices.{name}"
    if not isinstance(rows, list) or not rows:
        raise JobError(field_name, "expected a non-empty list of rows")
    if len(rows) != shape[0]:
        raise JobError(field_name, f"has {len(rows)} rows, expected {shape[0]}")
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise JobError(f"{field_name}[{i}]", "row is not a list")
        if len(row) != shape[1]:
            raise JobError(f"{field_name}[{i}]", f"row {i} has length {len(row)}, expected {shape[1]}")
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise JobError(f"{field_name}[{i}][{j}]", f"entry must be a finite number, got {v!r}")
    return np.array(rows, dtype=float)


def _shape(name: str, n: int, m: int) -> tuple[int, int]:
    if name in ("S", "S_tilde"):
        return (n, m)
    if name == "P":
        return (m, m)
    return (m, n)


def parse_job(doc, overrides: dict | None = None) -> JobSpec:
    """Validate a job document (already decoded from JSON)."""
    overrides = overrides or {}
    if not isinstance(doc, dict):
        raise JobError("<root>", "a job must be a JSON object")
    schema = doc.get("schema", JOB_SCHEMA)
    if schema != JOB_SCHEMA:
        raise JobError("schema", f"unsupported schema {schema!r}, expected {JOB_SCHEMA!r}")
    options = doc.get("options", {})
    if not isinstance(options, dict):
        raise JobError("options", "expected an object")
    analysis = canonical_analysis(doc.get("analysis"), options)

    spaces = doc.get("spaces")
    if not isinstance(spaces, dict) or "X" not in spaces:
        raise JobError("spaces.X", "missing")
    space_X = _space(spaces["X"], "spaces.X", ("p",))
    space_Xd = _space(spaces["Xd"], "spaces.Xd", ("q", "p")) if spaces.get("Xd") is not None else None

    sweep = None
    target = analysis
    if analysis == "sweep":
        sweep = _sweep(doc.get("sweep"), options)
        target = sweep.analysis
    if target == "check_neumann_invertibility":
        space_Xd = space_Xd or SpaceSpec(space_X.dim, space_X.p)
    elif space_Xd is None:
        raise JobError("spaces.Xd", "missing")
    n, m = space_X.dim, space_Xd.dim

    raw = doc.get("matrices", {})
    if not isinstance(raw, dict):
        raise JobError("matrices", "expected an object of named matrices")
    for name in raw:
        if name not in MATRIX_NAMES:
            raise JobError(f"matrices.{name}", f"unknown matrix; allowed names are {', '.join(MATRIX_NAMES)}")
    if target == "check_neumann_invertibility":
        matrices = {k: _matrix(v, k, (n, n)) for k, v in raw.items()}
    else:
        matrices = {k: _matrix(v, k, _shape(k, n, m)) for k, v in raw.items()}
    required = THEOREMS[target][0] if target in THEOREMS else CHECKS[target][0]
    for name in required:
        if name not in matrices:
            raise JobError(f"matrices.{name}", f"required by analysis {target!r}")

    constants_doc = doc.get("constants", {})
    if not isinstance(constants_doc, dict):
        raise JobError("constants", "expected an object")
    for key, value in constants_doc.items():
        if key not in ("mu", "lambda1", "lambda2", "nu", "beta1", "beta2"):
            raise JobError(f"constants.{key}", "unknown constant")
        _number(value, f"constants.{key}", minimum=0.0)
    constants = pt.PerturbationConstants.from_dict(constants_doc)

    if target in ("atomic_3_9", "atomic_3_10"):
        options = {**options, "mode": "full_A9" if target == "atomic_3_9" else "truncated_A10"}
    if target == "check_equivalence":
        for key in ("cond_a", "cond_b"):
            if key not in options:
                raise JobError(f"options.{key}", "required by check_equivalence")
            try:
                eq.ConditionId.parse(options[key])
            except FrameLabError:
                raise JobError(f"options.{key}", f"unknown condition {options[key]!r}") from None

    tol_doc = doc.get("tolerances", {})
    if not isinstance(tol_doc, dict):
        raise JobError("tolerances", "expected an object")
    tol_fields = {f.name for f in dataclasses.fields(pt.Tolerances)}
    tol_kw = {}
    for key, value in tol_doc.items():
        if key not in tol_fields:
            raise JobError(f"tolerances.{key}", f"unknown tolerance; allowed: {', '.join(sorted(tol_fields))}")
        tol_kw[key] = _number(value, f"tolerances.{key}", minimum=0.0)
    if overrides.get("tol_residual") is not None:
        tol_kw["residual"] = float(overrides["tol_residual"])
    tolerances = pt.Tolerances(**tol_kw)

    max_delta = doc.get("max_delta")
    if max_delta is not None:
        max_delta = _number(max_delta, "max_delta", minimum=0.0)
    if overrides.get("max_delta") is not None:
        max_delta = float(overrides["max_delta"])

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise JobError("seed", f"expected a non-negative integer, got {seed!r}")
    if overrides.get("seed") is not None:
        seed = int(overrides["seed"])

    if sweep is not None and sweep.match_perturbation and "E" not in matrices:
        raise JobError("matrices.E", "match_perturbation needs a direction matrix E")

    return JobSpec(
        analysis=analysis,
        space_X=space_X,
        space_Xd=space_Xd,
        matrices=matrices,
        constants=constants,
        options=options,
        sweep=sweep,
        tolerances=tolerances,
        max_delta=max_delta,
        seed=seed,
    )


def _sweep(doc, options: dict) -> SweepSpec:
    if not isinstance(doc, dict):
        raise JobError("sweep", "analysis 'sweep' needs a 'sweep' object")
    analysis = canonical_analysis(doc.get("analysis"), options, "sweep.analysis")
    if analysis not in THEOREMS:
        raise JobError("sweep.analysis", f"must name a theorem check, one of {', '.join(THEOREMS)}")
    parameter = doc.get("parameter")
    if parameter not in SWEEP_PARAMETERS:
        raise JobError("sweep.parameter", f"must be one of {', '.join(SWEEP_PARAMETERS)}")
    for key in ("from", "to", "steps"):
        if key not in doc:
            raise JobError(f"sweep.{key}", "missing")
    start = _number(doc["from"], "sweep.from", minimum=0.0)
    stop = _number(doc["to"], "sweep.to", minimum=0.0)
    steps = doc["steps"]
    if isinstance(steps, bool) or not isinstance(steps, int) or not 1 <= steps <= 1000:
        raise JobError("sweep.steps", "expected an integer in [1, 1000]")
    match = doc.get("match_perturbation", False)
    if not isinstance(match, bool):
        raise JobError("sweep.match_perturbation", "expected true or false")
    if match and parameter != "mu":
        raise JobError("sweep.match_perturbation", "only meaningful when sweeping mu")
    return SweepSpec(analysis, parameter, start, stop, steps, match)


# ---------------------------------------------------------------------------
# execution


def run_theorem(job: JobSpec, analysis: str, matrices: dict, k: pt.PerturbationConstants) -> pt.TheoremReport:
    fam = lambda name: FrameSystem(matrices[name], job.space_X, job.space_Xd)  # noqa: E731
    common = {"seed": job.seed, "tol": job.tolerances, "max_delta": job.max_delta}
    if analysis == "bessel_3_1":
        return pt.verify_bessel_perturbation(fam("G"), fam("Phi"), k, **common)
    if analysis == "frame_3_3":
        return pt.verify_frame_perturbation(fam("G"), fam("Phi"), k, **common)
    if analysis == "banach_frame_3_6":
        return pt.verify_banach_frame_perturbation(fam("G"), fam("Phi"), k, S=matrices.get("S"), **common)
    if analysis == "banach_frame_proj_3_7":
        return pt.verify_banach_frame_projection(fam("G"), fam("Phi"), k, matrices["P"], **common)
    if analysis == "riesz_3_8":
        return pt.verify_riesz_perturbation(fam("F"), fam("Psi"), k, **common)
    if analysis in ("atomic_3_9", "atomic_3_10"):
        mode = "full_A9" if analysis == "atomic_3_9" else "truncated_A10"
        return pt.verify_atomic_decomposition_perturbation(fam("G"), fam("F"), fam("Psi"), k, mode=mode, **common)
    if analysis == "operator_pert_cc":
        return pt.verify_operator_perturbation_cc(fam("G"), matrices["S"], matrices["S_tilde"], k, **common)
    if analysis == "hilbert_1_1":
        return pt.verify_hilbert_perturbation(fam("G"), fam("Phi"), k, **common)
    raise JobError("analysis", f"{analysis!r} is not a theorem check")


def _run_check(job: JobSpec) -> dict:
    a = job.analysis
    if a == "bessel_bound":
        return {"B": bessel_bound(job.family("G"), seed=job.seed).to_dict()}
    if a == "frame_bounds":
        fb = frame_bounds(job.family("G"), seed=job.seed)
        return {"A": fb.lower.to_dict(), "B": fb.upper.to_dict(), "status": fb.status}
    if a == "riesz_bounds":
        rb = riesz_bounds(job.family("F"), seed=job.seed)
        return {"A": rb.lower.to_dict(), "B": rb.upper.to_dict(), "complete": rb.complete, "status": rb.status}
    if a == "check_neumann_invertibility":
        cert = check_neumann_invertibility(job.matrices["G"], job.space_X, seed=job.seed)
        return {"certificate": None if cert is None else cert.to_dict(), "invertible_certified": cert is not None}
    if a == "check_frame_mu_threshold":
        return eq.check_frame_mu_threshold(job.family("F"), job.family("Psi"), seed=job.seed, tol=job.tolerances).to_dict()
    if a == "check_equivalence":
        cond_a = eq.ConditionId.parse(job.options["cond_a"])
        dual = eq.FORMS[cond_a] == "dual"
        base, pert = ("G", "Phi") if dual else ("F", "Psi")
        for name in (base, pert):
            if name not in job.matrices:
                raise JobError(f"matrices.{name}", f"required by condition {cond_a.value}")
        coeff = None
        if eq.FORMS[cond_a] == "restricted":
            if "G" not in job.matrices:
                raise JobError("matrices.G", f"required by condition {cond_a.value}")
            coeff = job.family("G")
        inst = eq.EquivalenceInstance(job.family(base), job.family(pert), coefficients=coeff, S=job.matrices.get("S"))
        rep = eq.check_equivalence(inst, cond_a, job.constants, job.options["cond_b"], seed=job.seed, tol=job.tolerances)
        return rep.to_dict()
    raise JobError("analysis", f"unknown analysis {a!r}")


def _oracle_resolution(dim: int) -> int:
    return {1: 2, 2: 720, 3: 180, 4: 40}[dim]


def oracle_section(job: JobSpec, report: pt.TheoremReport, matrices: dict, mode: str) -> dict | None:
    """Brute-force reference values for the actual bounds and the residual."""
    if mode == "off":
        return None
    out: dict = {}
    analysis = report.theorem_id
    perturbed = {
        "riesz_3_8": ("synthesis", "Psi"),
        "atomic_3_9": ("analysis", "Theta"),
        "atomic_3_10": ("analysis", "Theta"),
        "operator_pert_cc": ("analysis", "Theta"),
    }.get(analysis, ("analysis", "Phi"))
    kind, name = perturbed
    if name == "Theta":
        M = report.details.get("Theta")
        M = None if M is None else np.asarray(M, dtype=float)
    else:
        M = matrices.get(name)
    if M is not None:
        if kind == "synthesis":
            M, src, dst = M.T, job.space_Xd, job.space_X
        else:
            src, dst = job.space_X, job.space_Xd
        try:
            res = _oracle_resolution(src.dim) if src.dim <= oracles.MAX_DIM else 0
            if src.dim > oracles.MAX_DIM and mode == "auto":
                raise OracleLimitError("dimension above the oracle limit")
            lo = oracles.brute_lower_bound(M, src, dst, res)
            hi = oracles.brute_op_norm(M, src, dst, res)
            out["lower"] = lo._asdict() | {"resolution": res}
            out["upper"] = hi._asdict() | {"resolution": res}
            if analysis == "hilbert_1_1":
                out["squared_convention"] = True
                out["lower"]["value"] = lo.value**2
                out["upper"]["value"] = hi.value**2
        except OracleLimitError as exc:
            out["bounds_skipped"] = str(exc)
    if analysis in ("bessel_3_1", "frame_3_3", "banach_frame_3_6", "banach_frame_proj_3_7", "hilbert_1_1"):
        space = job.space_Xd.dual()
        if space.dim <= oracles.MAX_DIM:
            res = _oracle_resolution(space.dim)
            G = FrameSystem(matrices["G"], job.space_X, job.space_Xd)
            Phi = FrameSystem(matrices["Phi"], job.space_X, job.space_Xd)
            r = oracles.brute_residual(G, Phi, report.constants, res)
            out["residual"] = r._asdict() | {"resolution": res}
        else:
            out["residual_skipped"] = f"dual space dim {space.dim} above the oracle limit"
    return out


def _sweep_matrices(job: JobSpec, value: float) -> tuple[dict, pt.PerturbationConstants]:
    sweep = job.sweep
    base_name, pert_name = THEOREMS[sweep.analysis][2:]
    matrices = dict(job.matrices)
    k = job.constants
    if sweep.parameter == "scale":
        base = matrices[base_name]
        matrices[pert_name] = base + value * (matrices[pert_name] - base)
        return matrices, k
    k = k.replace(**{sweep.parameter: value})
    if sweep.match_perturbation:
        # perturbation of size exactly mu along E (dual-form synthesis norm)
        E = matrices["E"]
        norm = op_norm(E.T, job.space_Xd.dual(), job.space_X.dual(), seed=job.seed).certified_high
        direction = E / norm if norm > 0 else E
        matrices[pert_name] = matrices[base_name] + value * direction
    return matrices, k


def execute(job: JobSpec, oracle: str = "auto") -> dict:
    """Run a job; returns the JSON-ready result (no timestamps)."""
    result: dict = {"analysis": job.analysis, "seed": job.seed, "tolerances": job.tolerances.to_dict()}
    if job.analysis == "sweep":
        rows = []
        for step, value in enumerate(job.sweep.values()):
            matrices, k = _sweep_matrices(job, value)
            rep = run_theorem(job, job.sweep.analysis, matrices, k)
            row = {
                "step": step,
                "param": value,
                "pred_lower": rep.predicted_lower,
                "pred_upper": rep.predicted_upper,
                "act_lower": None if rep.actual_lower is None else rep.actual_lower.value,
                "act_upper": None if rep.actual_upper is None else rep.actual_upper.certified_high,
                "verdict": rep.verdict,
                "report": rep.to_dict(),
            }
            rows.append(row)
        result["sweep"] = job.sweep.to_dict()
        result["rows"] = rows
        return result
    if job.analysis in THEOREMS:
        rep = run_theorem(job, job.analysis, job.matrices, job.constants)
        result["report"] = rep.to_dict()
        result["oracle"] = oracle_section(job, rep, job.matrices, oracle)
        return result
    result["result"] = _run_check(job)
    return result


__all__ = [
    "ALIASES",
    "ANALYSES",
    "JOB_SCHEMA",
    "JobError",
    "JobSpec",
    "SweepSpec",
    "canonical_analysis",
    "THEOREMS",
    "execute",
    "parse_job",
    "run_theorem",
]
