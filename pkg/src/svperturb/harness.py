"""Monte Carlo driver, report emission and the command line interface.

Scenarios: bounds (perturbation theorems on low-rank plus Gaussian noise),
gmm (spectral mixture recovery), submatrix (planted block recovery),
resolvent (linearization probes), selftest (deterministic invariants).

Trial i draws everything from the generator seeded with
derive_seed(base_seed, i), so runs are reproducible for a fixed config and
aggregation is order-independent. Exit codes: 0 success, 1 invalid config,
2 violation budget exceeded (or selftest failure), 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    ALL_OK,
    BoundReport,
    GaussianBoundParams,
    GeneralNoiseParams,
    IncoherenceStats,
    PreconditionFlags,
    cross_term_norm,
    empirical_quantity,
    entrywise_bound,
    gauss_subspace_bound,
    gauss_subspace_simplified,
    gauss_sv_location_check,
    general_sv_bounds,
    general_subspace_bound,
    mirsky_check,
    spectral_norm_report,
    wedin_check,
    weighted_bound,
    linear_bilinear_bound,
)
from .clustering import KMeansConfig, match_labels, embedding_gap, spectral_gmm, spectral_submatrix
from .errors import (
    InvalidInputError,
    InvalidParameterError,
    NumericalFailureError,
)
from .matcore import (
    FROBENIUS,
    MAX_ABS,
    NUCLEAR,
    OPERATOR,
    apply_norm,
    gauge,
    kyfan,
    norm_spec_from_token,
    schatten,
    singular_values,
    svd,
)
from .models import (
    GmmSpec,
    LowRankSpec,
    SubmatrixSpec,
    gen_gaussian,
    low_rank_from_rng,
    perturb,
    plant_submatrices,
    sample_gmm,
)
from .resolvent import (
    LinearizationSpectrum,
    dense_resolvent_bilinear,
    linearized_basis,
    linearized_noise,
    local_law_bound,
    local_law_gap,
    min_abs_z,
    phi_from_eta,
    phi_values,
    resolvent_bilinear,
    solve_zj,
    uphiu_deviation,
)
from .seeding import derive_seed
from .subspace import (
    aligned_distance,
    principal_angles,
    procrustes_align,
    sin_theta_norm,
    two_inf_residual,
)
from .models import haar_basis

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VIOLATION = 2
EXIT_RUNTIME = 3

_SCENARIOS = ("bounds", "gmm", "submatrix", "resolvent", "selftest")
_FORMATS = ("csv", "json")
_CSV_COLUMNS = (
    "theorem_id",
    "trials",
    "valid",
    "violations",
    "rate",
    "ratio_p50",
    "ratio_p90",
    "ratio_p99",
)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    trials: int
    base_seed: int
    theorems: tuple[str, ...]
    model: dict
    output: str | None = None
    format: str = "csv"
    threads: int = 1

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise InvalidParameterError(f"unknown scenario {self.scenario!r}")
        if self.trials < 1:
            raise InvalidParameterError("trials must be positive")
        if self.format not in _FORMATS:
            raise InvalidParameterError(f"format must be one of {_FORMATS}")
        if self.threads < 1:
            raise InvalidParameterError("threads must be positive")
        object.__setattr__(self, "theorems", tuple(self.theorems))
        if not isinstance(self.model, dict):
            raise InvalidParameterError("model must be a mapping")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {
            "scenario",
            "trials",
            "base_seed",
            "theorems",
            "model",
            "output",
            "format",
            "threads",
        }
        extra = set(d) - known
        if extra:
            raise InvalidParameterError(f"unknown config keys: {sorted(extra)}")
        return cls(
            scenario=d["scenario"],
            trials=int(d.get("trials", 1)),
            base_seed=int(d.get("base_seed", 0)),
            theorems=tuple(d.get("theorems", ())),
            model=dict(d.get("model", {})),
            output=d.get("output"),
            format=d.get("format", "csv"),
            threads=int(d.get("threads", 1)),
        )

    def echo(self) -> dict:
        d = asdict(self)
        d["theorems"] = list(self.theorems)
        return d


@dataclass
class SummaryReport:
    rows: list[dict]
    config: dict
    version: str
    wall_time_s: float = 0.0           # in-memory only, never serialized
    exceeded: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# bounds scenario


def _require(model: dict, key: str):
    if key not in model:
        raise InvalidParameterError(f"model is missing key {key!r}")
    return model[key]


def _bounds_factory(cfg: ExperimentConfig):
    model = cfg.model
    lr = LowRankSpec(
        n_rows=int(_require(model, "n_rows")),
        n_cols=int(_require(model, "n_cols")),
        singulars=tuple(float(v) for v in _require(model, "singulars")),
        factor_mode=model.get("factor_mode", "haar"),
        coherent_row=int(model.get("coherent_row", 0)),
    )
    params = GaussianBoundParams(
        n_rows=lr.n_rows,
        n_cols=lr.n_cols,
        singulars=lr.singulars,
        k_lo=int(model.get("k_lo", 1)),
        k_hi=int(model.get("k_hi", 1)),
        margin=float(model.get("margin", 2.0)),
        tail=float(model.get("tail", 1.0)),
    )
    noise_scale = float(model.get("noise_scale", 1.0))
    if noise_scale <= 0:
        raise InvalidParameterError("noise_scale must be positive")
    parsed = [_parse_bounds_token(tok, params) for tok in cfg.theorems]

    def trial(i: int) -> list[BoundReport]:
        tseed = derive_seed(cfg.base_seed, i)
        rng = np.random.default_rng(tseed)
        a, _ = low_rank_from_rng(lr, rng)
        e = rng.standard_normal((lr.n_rows, lr.n_cols))
        if noise_scale != 1.0:
            e *= noise_scale
        inst = perturb(a, e, seed=tseed)
        cache: dict = {}

        def e_svals():
            if "esv" not in cache:
                cache["esv"] = singular_values(inst.noise)
            return cache["esv"]

        def inco():
            if "inc" not in cache:
                cache["inc"] = IncoherenceStats.from_instance(inst, rank=params.rank)
            return cache["inc"]

        reports: list[BoundReport] = []
        for kind, args in parsed:
            reports.extend(
                _eval_bounds_token(kind, args, inst, params, rng, e_svals, inco)
            )
        return reports

    return trial


def _parse_bounds_token(token: str, params: GaussianBoundParams):
    parts = token.split(":")
    kind = parts[0]
    r = params.rank
    if kind == "mirsky" and len(parts) == 2:
        return ("mirsky", (norm_spec_from_token(parts[1]),))
    if kind == "wedin" and len(parts) == 3:
        k = int(parts[1])
        if not 1 <= k <= r:
            raise InvalidParameterError(f"wedin index {k} outside 1..rank={r}")
        return ("wedin", (k, norm_spec_from_token(parts[2])))
    if kind == "gauss_sin_theta" and len(parts) == 2:
        return ("gauss_sin_theta", (norm_spec_from_token(parts[1]),))
    if kind == "gauss_sin_theta_simplified" and len(parts) == 1:
        return ("gauss_sin_theta_simplified", ())
    if kind == "gauss_sv_location" and len(parts) == 2:
        j = int(parts[1])
        if not params.k_lo <= j <= params.k_hi:
            raise InvalidParameterError(f"location index {j} outside the window")
        return ("gauss_sv_location", (j,))
    if kind == "gauss_2inf" and len(parts) == 1:
        return ("gauss_2inf", ())
    if kind in ("gauss_vector_inf", "gauss_matrix_2inf", "gauss_2inf_aligned") and len(parts) == 1:
        return (kind, ())
    if kind in ("gauss_linear", "gauss_bilinear") and len(parts) == 1:
        return (kind, ())
    if kind == "gauss_weighted" and len(parts) == 1:
        return ("gauss_weighted", ())
    if kind == "gauss_weighted_corollary" and len(parts) == 1:
        if params.k_lo != 1 or params.k_hi != r:
            raise InvalidParameterError(
                "gauss_weighted_corollary needs the full window [1, rank]"
            )
        return ("gauss_weighted_corollary", ())
    if kind == "general_sv" and len(parts) == 2:
        k = int(parts[1])
        if not 1 <= k <= r:
            raise InvalidParameterError(f"general_sv index {k} outside 1..rank={r}")
        return ("general_sv", (k,))
    if kind == "general_sin_theta" and len(parts) == 3:
        k = int(parts[1])
        if not 1 <= k <= r:
            raise InvalidParameterError(f"general_sin_theta index {k} outside 1..rank")
        return ("general_sin_theta", (k, norm_spec_from_token(parts[2])))
    if kind == "spectral_norm_event" and len(parts) == 1:
        return ("spectral_norm_event", ())
    raise InvalidParameterError(f"unknown theorem token {token!r}")


def _measured_general_params(inst, k: int, e_svals) -> GeneralNoiseParams:
    r = inst.rank()
    u = inst.svd_signal.left[:, :r]
    v = inst.svd_signal.right[:, :r]
    core = u.T @ inst.noise @ v
    return GeneralNoiseParams(
        op_bound=float(e_svals()[0]),
        core_bound=float(np.linalg.norm(core, 2)),
        corner_bound=float(np.linalg.norm(core[:k, :k], 2)),
        epsilon=0.0,
    )


def _eval_bounds_token(kind, args, inst, params, rng, e_svals, inco):
    k_lo, k_hi = params.k_lo, params.k_hi
    if kind == "mirsky":
        return [mirsky_check(inst, args[0], e_singulars=e_svals())]
    if kind == "wedin":
        return [wedin_check(inst, args[0], args[1])]
    if kind == "gauss_sin_theta":
        spec = args[0]
        if spec.kind == "operator":
            cross = float(e_svals()[0])
        else:
            cross = cross_term_norm(inst, k_lo, k_hi, spec, rank=params.rank)
        rep = gauss_subspace_bound(params, spec, cross)
        emp = empirical_quantity(inst, "sin_theta", k_lo=k_lo, k_hi=k_hi, spec=spec)
        return [rep.with_empirical(emp)]
    if kind == "gauss_sin_theta_simplified":
        rep = gauss_subspace_simplified(params, float(e_svals()[0]))
        emp = empirical_quantity(inst, "sin_theta", k_lo=1, k_hi=k_lo, spec=OPERATOR)
        return [rep.with_empirical(emp)]
    if kind == "gauss_sv_location":
        j = args[0]
        esv = e_svals()

        def phi_at(z):
            return phi_from_eta(esv, inst.shape[0], inst.shape[1], z).varphi.real

        return [gauss_sv_location_check(inst, params, j, phi_at)]
    if kind == "gauss_2inf":
        rep = entrywise_bound(params, inco(), "infnorm_nonasymptotic")
        emp = empirical_quantity(inst, "two_inf_proj", k_lo=k_lo, k_hi=k_hi)
        return [rep.with_empirical(emp)]
    if kind == "gauss_vector_inf":
        rep = entrywise_bound(params, inco(), "vector_inf")
        u = inst.svd_signal.left[:, k_lo - 1]
        ut = inst.svd_observed.left[:, k_lo - 1]
        emp = float(np.max(np.abs(ut - (ut @ u) * u)))
        return [rep.with_empirical(emp)]
    if kind == "gauss_matrix_2inf":
        rep = entrywise_bound(params, inco(), "matrix_2inf")
        emp = empirical_quantity(inst, "two_inf_proj", k_lo=1, k_hi=k_lo)
        return [rep.with_empirical(emp)]
    if kind == "gauss_2inf_aligned":
        uw = inst.svd_signal.left[:, :k_lo]
        window_u = float(np.sqrt(np.max(np.sum(uw * uw, axis=1))))
        rep = entrywise_bound(
            params,
            inco(),
            "corollary_aligned",
            e_norm=float(e_svals()[0]),
            window_u_2inf=window_u,
        )
        emp = empirical_quantity(inst, "two_inf_aligned", k_lo=1, k_hi=k_lo)
        return [rep.with_empirical(emp)]
    if kind in ("gauss_linear", "gauss_bilinear"):
        x = rng.standard_normal(inst.shape[0])
        x /= np.linalg.norm(x)
        w = k_hi - k_lo + 1
        y = rng.standard_normal(w)
        y /= np.linalg.norm(y)
        r = params.rank
        xu = float(np.linalg.norm(x @ inst.svd_signal.left[:, :r]))
        lin, bil = linear_bilinear_bound(params, xu, y)
        uw = inst.svd_signal.left[:, k_lo - 1 : k_hi]
        utw = inst.svd_observed.left[:, k_lo - 1 : k_hi]
        resid = utw - uw @ (uw.T @ utw)
        if kind == "gauss_linear":
            return [lin.with_empirical(float(np.linalg.norm(x @ resid)))]
        return [bil.with_empirical(float(abs(x @ resid @ y)))]
    if kind == "gauss_weighted":
        rep = weighted_bound(params, inco(), "theorem")
        emp = empirical_quantity(inst, "weighted_2inf", k_lo=k_lo, k_hi=k_hi)
        return [rep.with_empirical(emp)]
    if kind == "gauss_weighted_corollary":
        rep = weighted_bound(params, inco(), "corollary_full", e_norm=float(e_svals()[0]))
        emp = empirical_quantity(inst, "weighted_aligned", k_lo=1, k_hi=params.rank)
        return [rep.with_empirical(emp)]
    if kind == "general_sv":
        k = args[0]
        gp = _measured_general_params(inst, k, e_svals)
        lower, upper = general_sv_bounds(inst, k, gp)
        return [lower, upper]
    if kind == "general_sin_theta":
        k, spec = args
        gp = _measured_general_params(inst, k, e_svals)
        r = inst.rank()
        delta_k = empirical_quantity(inst, "sv_gap", k=k)
        sigma_k = float(inst.svd_signal.singulars[k - 1])
        rep = general_subspace_bound(k, r, delta_k, sigma_k, gp, spec)
        emp = empirical_quantity(inst, "sin_theta", k_lo=1, k_hi=k, spec=spec)
        return [rep.with_empirical(emp)]
    if kind == "spectral_norm_event":
        return [spectral_norm_report(float(e_svals()[0]), inst.shape[0], inst.shape[1])]
    raise InvalidParameterError(f"unhandled theorem kind {kind!r}")


# ---------------------------------------------------------------------------
# gmm scenario


def _gmm_flags(sample, k: int, tail: float) -> PreconditionFlags:
    p = sample.x.shape[0]
    n = sample.x.shape[1]
    root = np.sqrt(n) + np.sqrt(p)
    logsum = np.log(n + p)
    dim_ok = bool(root**2 >= 32.0 * (tail + 7.0) * logsum + 64.0 * np.log(9.0) * k)
    snr_ok = bool(
        sample.sigma_min
        >= 40.0 * root
        + 3.8e4 * k * np.sqrt(2.0 * np.log(9.0) * k + (tail + 7.0) * logsum)
    )
    gap_ok = bool(
        sample.center_gap
        >= max(
            40.0 * root / np.sqrt(sample.min_cluster),
            1800.0 * k * np.sqrt((tail + 7.0) * logsum),
        )
    )
    return PreconditionFlags(dim_ok=dim_ok, snr_ok=snr_ok, gap_ok=gap_ok)


def _centers_from_model(model: dict, k: int, p: int) -> np.ndarray:
    if "centers" in model:
        return np.asarray(model["centers"], dtype=float)
    mode = model.get("center_mode", "orthogonal")
    if mode != "orthogonal":
        raise InvalidParameterError(f"unknown center_mode {mode!r}")
    if k > p:
        raise InvalidParameterError("orthogonal centers need n_clusters <= n_features")
    scale = float(model.get("center_scale", 1.0))
    if scale <= 0:
        raise InvalidParameterError("center_scale must be positive")
    return scale * np.eye(k, p)


def _gmm_factory(cfg: ExperimentConfig):
    model = cfg.model
    k = int(_require(model, "n_clusters"))
    p = int(_require(model, "n_features"))
    n = int(_require(model, "n_samples"))
    spec = GmmSpec(
        n_features=p,
        n_samples=n,
        n_clusters=k,
        centers=_centers_from_model(model, k, p),
        assignment=model.get("assignment", "balanced"),
    )
    tail = float(model.get("tail", 1.0))
    restarts = int(model.get("restarts", 10))
    wanted = set(cfg.theorems) or {"gmm_recovery", "gmm_embedding_gap"}
    unknown = wanted - {"gmm_recovery", "gmm_embedding_gap"}
    if unknown:
        raise InvalidParameterError(f"unknown gmm theorems: {sorted(unknown)}")

    def trial(i: int) -> list[BoundReport]:
        tseed = derive_seed(cfg.base_seed, i)
        sample = sample_gmm(spec, tseed)
        flags = _gmm_flags(sample, k, tail)
        budget = 40.0 * float(n + p) ** (-tail)
        prob = 1.0 - min(1.0, budget) if flags.all_ok else 0.0
        reports = []
        if "gmm_recovery" in wanted:
            cfg_k = KMeansConfig(k=k, restarts=restarts, seed=derive_seed(tseed, 1))
            found = spectral_gmm(sample.x, k, cfg_k)
            res = match_labels(sample.truth, found)
            reports.append(
                BoundReport.build(
                    "gmm_recovery",
                    0.0,
                    prob,
                    flags,
                    res.misclassification,
                    {"exact": res.exact},
                )
            )
        if "gmm_embedding_gap" in wanted:
            gap = embedding_gap(sample.x, k, sample.truth_embedding)
            reports.append(
                BoundReport.build(
                    "gmm_embedding_gap", sample.center_gap / 5.0, prob, flags, gap
                )
            )
        return reports

    return trial


# ---------------------------------------------------------------------------
# submatrix scenario


def _submatrix_flags(sample, k: int, tail: float, m: int, n: int) -> PreconditionFlags:
    root = np.sqrt(m) + np.sqrt(n)
    logsum = np.log(m + n)
    dim_ok = bool(root**2 >= 32.0 * (tail + 7.0) * logsum + 64.0 * np.log(9.0) * k)
    snr_ok = bool(
        sample.sigma_min
        >= 40.0 * root
        + 3.8e4 * k * np.sqrt(2.0 * np.log(9.0) * k + (tail + 7.0) * logsum)
    )
    need = 1800.0 * k * np.sqrt((tail + 7.0) * logsum)
    gap_ok = bool(
        sample.row_gap >= max(40.0 * root / np.sqrt(sample.min_rows), need)
        and sample.col_gap >= max(40.0 * root / np.sqrt(sample.min_cols), need)
    )
    return PreconditionFlags(dim_ok=dim_ok, snr_ok=snr_ok, gap_ok=gap_ok)


def _submatrix_spec_from_model(model: dict) -> SubmatrixSpec:
    m = int(_require(model, "n_rows"))
    n = int(_require(model, "n_cols"))
    amps = tuple(float(a) for a in _require(model, "amplitudes"))
    if "row_sets" in model or "col_sets" in model:
        row_sets = tuple(tuple(int(i) for i in s) for s in _require(model, "row_sets"))
        col_sets = tuple(tuple(int(i) for i in s) for s in _require(model, "col_sets"))
    else:
        k = len(amps)
        br = int(_require(model, "block_rows"))
        bc = int(_require(model, "block_cols"))
        if k * br > m or k * bc > n:
            raise InvalidParameterError("blocks do not fit in the matrix")
        row_sets = tuple(tuple(range(i * br, (i + 1) * br)) for i in range(k))
        col_sets = tuple(tuple(range(i * bc, (i + 1) * bc)) for i in range(k))
    return SubmatrixSpec(
        n_rows=m, n_cols=n, row_sets=row_sets, col_sets=col_sets, amplitudes=amps
    )


def _submatrix_factory(cfg: ExperimentConfig):
    model = cfg.model
    spec = _submatrix_spec_from_model(model)
    k = spec.n_blocks
    tail = float(model.get("tail", 1.0))
    restarts = int(model.get("restarts", 10))
    wanted = set(cfg.theorems) or {"submatrix_recovery"}
    unknown = wanted - {"submatrix_recovery"}
    if unknown:
        raise InvalidParameterError(f"unknown submatrix theorems: {sorted(unknown)}")

    def trial(i: int) -> list[BoundReport]:
        tseed = derive_seed(cfg.base_seed, i)
        sample = plant_submatrices(spec, tseed)
        flags = _submatrix_flags(sample, k, tail, spec.n_rows, spec.n_cols)
        budget = 40.0 * float(spec.n_rows + spec.n_cols) ** (-tail)
        prob = 1.0 - min(1.0, budget) if flags.all_ok else 0.0
        cfg_k = KMeansConfig(k=k + 1, restarts=restarts, seed=derive_seed(tseed, 1))
        labs = spectral_submatrix(sample.x, k, cfg_k)
        col_res = match_labels(sample.col_truth, labs.cols)
        row_res = match_labels(sample.row_truth, labs.rows)
        emp = max(col_res.misclassification, row_res.misclassification)
        return [
            BoundReport.build(
                "submatrix_recovery",
                0.0,
                prob,
                flags,
                emp,
                {
                    "col_rate": col_res.misclassification,
                    "row_rate": row_res.misclassification,
                },
            )
        ]

    return trial


# ---------------------------------------------------------------------------
# resolvent scenario

_RESOLVENT_ROWS = (
    "phi_identity",
    "phi_monotone",
    "phi_crude",
    "phi_ring",
    "phi_lipschitz",
    "uphiu",
    "local_law",
    "dense_match",
    "g_norm",
    "g_approx1",
    "g_approx2",
    "zj_bracket",
)


def _resolvent_factory(cfg: ExperimentConfig):
    model = cfg.model
    n_rows = int(_require(model, "n_rows"))
    n_cols = int(_require(model, "n_cols"))
    margin = float(model.get("margin", 2.0))
    tail = float(model.get("tail", 1.0))
    z_factors = tuple(float(v) for v in model.get("z_factors", (1.0, 1.5, 3.0)))
    signal_rank = int(model.get("signal_rank", 3))
    dense = bool(model.get("dense", n_rows + n_cols <= 120))
    if margin < 2.0:
        raise InvalidParameterError("margin must be at least 2")
    if any(f < 1.0 for f in z_factors):
        raise InvalidParameterError("z_factors must be >= 1 (scaled by the base radius)")
    if not 1 <= signal_rank <= min(n_rows, n_cols):
        raise InvalidParameterError("signal_rank out of range")
    wanted = set(cfg.theorems) or set(_RESOLVENT_ROWS)
    unknown = wanted - set(_RESOLVENT_ROWS)
    if unknown:
        raise InvalidParameterError(f"unknown resolvent theorems: {sorted(unknown)}")
    base = min_abs_z(n_rows, n_cols, margin)
    event_prob = 1.0 - 2.0 * float(
        np.exp(-((np.sqrt(n_rows) + np.sqrt(n_cols)) ** 2) / 2.0)
    )

    def trial(i: int) -> list[BoundReport]:
        tseed = derive_seed(cfg.base_seed, i)
        rng = np.random.default_rng(tseed)
        e = rng.standard_normal((n_rows, n_cols))
        ls = LinearizationSpectrum.from_noise(e)
        on_event = ls.spectral_norm <= 2.0 * (np.sqrt(n_rows) + np.sqrt(n_cols))
        event_flags = PreconditionFlags(True, on_event, True)
        reports: list[BoundReport] = []
        zs = [f * base for f in z_factors]
        zs.append(complex(base, 0.5 * base))

        if "phi_identity" in wanted:
            dev = 0.0
            for z in zs:
                pr = phi_values(ls, z)
                gap = abs(pr.phi1 - pr.phi2 + (n_cols - n_rows) / complex(z))
                dev = max(dev, gap / max(1.0, abs(pr.phi1)))
            reports.append(BoundReport.build("phi_identity", 1e-8, 1.0, ALL_OK, dev))

        grid = np.linspace(base, 3.0 * base, 25)
        if "phi_monotone" in wanted or "phi_crude" in wanted or "phi_lipschitz" in wanted:
            vals = np.array([phi_values(ls, z).varphi.real for z in grid])
            if "phi_monotone" in wanted:
                worst = float(max(0.0, -np.min(np.diff(vals))))
                reports.append(
                    BoundReport.build("phi_monotone", 0.0, 1.0, ALL_OK, worst)
                )
            if "phi_crude" in wanted:
                worst = float(
                    max(
                        0.0,
                        float(np.max(vals - grid**2)),
                        float(np.max(-vals)),
                    )
                )
                reports.append(BoundReport.build("phi_crude", 0.0, 1.0, ALL_OK, worst))
            if "phi_lipschitz" in wanted:
                b = margin
                lo_c = 1.0 - 1.0 / (2.0 * (b - 1.0) ** 2)
                hi_c = 1.0 + 1.0 / (2.0 * (b - 1.0) ** 2)
                worst = 0.0
                for a_idx in range(len(grid) - 1):
                    z0, z1 = grid[a_idx], grid[a_idx + 1]
                    dphi = abs(vals[a_idx + 1] - vals[a_idx])
                    dz2 = abs(z1**2 - z0**2)
                    worst = max(
                        worst, lo_c * dz2 - dphi, dphi - hi_c * dz2
                    )
                reports.append(
                    BoundReport.build(
                        "phi_lipschitz", 0.0, event_prob, event_flags, max(0.0, worst)
                    )
                )

        if "phi_ring" in wanted:
            b = margin
            lo_c = 1.0 - 1.0 / (4.0 * b * (b - 1.0))
            hi_c = 1.0 + 1.0 / (4.0 * b * (b - 1.0))
            worst = 0.0
            for z in zs:
                pr = phi_values(ls, z)
                for phi in (pr.phi1, pr.phi2):
                    worst = max(
                        worst,
                        lo_c * abs(complex(z)) - abs(phi),
                        abs(phi) - hi_c * abs(complex(z)),
                    )
            reports.append(
                BoundReport.build(
                    "phi_ring", 0.0, event_prob, event_flags, max(0.0, worst)
                )
            )

        if "uphiu" in wanted:
            u = haar_basis(rng, n_rows, signal_rank)
            v = haar_basis(rng, n_cols, signal_rank)
            u_lin = linearized_basis(u, v)
            dev = max(uphiu_deviation(ls, u_lin, z) for z in zs)
            reports.append(BoundReport.build("uphiu", 1e-8, 1.0, ALL_OK, dev))

        if "local_law" in wanted:
            x = rng.standard_normal(n_rows + n_cols)
            x /= np.linalg.norm(x)
            y = rng.standard_normal(n_rows + n_cols)
            y /= np.linalg.norm(y)
            z = base
            gap = local_law_gap(ls, z, x, y)
            bound = local_law_bound(n_rows, n_cols, margin, tail, z)
            root = np.sqrt(n_rows) + np.sqrt(n_cols)
            dim_ok = bool(root**2 >= 32.0 * (tail + 1.0) * np.log(n_rows + n_cols))
            flags = PreconditionFlags(dim_ok, True, True)
            prob = (
                1.0 - 9.0 * float(n_rows + n_cols) ** (-(tail + 1.0)) if dim_ok else 0.0
            )
            reports.append(BoundReport.build("local_law", bound, prob, flags, gap))

        if "zj_bracket" in wanted:
            sigma_j = 3.0 * base
            try:
                zj = solve_zj(ls, sigma_j, margin)
                chi = 1.0 + 1.0 / (4.0 * margin * (margin - 1.0))
                worst = max(0.0, sigma_j - zj, zj - chi * sigma_j)
                reports.append(
                    BoundReport.build(
                        "zj_bracket", 0.0, event_prob, event_flags, worst
                    )
                )
            except NumericalFailureError:
                reports.append(
                    BoundReport.build(
                        "zj_bracket",
                        0.0,
                        0.0,
                        PreconditionFlags(True, False, True),
                        None,
                    )
                )

        if dense and {"dense_match", "g_norm", "g_approx1", "g_approx2"} & wanted:
            lin = linearized_noise(e)
            dim = lin.shape[0]
            z = base
            g = np.linalg.inv(z * np.eye(dim) - lin)
            if "dense_match" in wanted:
                x = rng.standard_normal(dim)
                x /= np.linalg.norm(x)
                y = rng.standard_normal(dim)
                y /= np.linalg.norm(y)
                via_eigen = resolvent_bilinear(ls, z, x, y)
                via_dense = complex(x @ (g @ y))
                dev = abs(via_eigen - via_dense) / max(1.0, abs(via_dense))
                reports.append(
                    BoundReport.build("dense_match", 1e-8, 1.0, ALL_OK, dev)
                )
            b = margin
            if "g_norm" in wanted:
                gn = float(np.linalg.norm(g, 2))
                reports.append(
                    BoundReport.build(
                        "g_norm", b / ((b - 1.0) * z), event_prob, event_flags, gn
                    )
                )
            if "g_approx1" in wanted:
                dev = float(np.linalg.norm(g - np.eye(dim) / z, 2))
                bound = b / (b - 1.0) * ls.spectral_norm / z**2
                reports.append(
                    BoundReport.build(
                        "g_approx1", bound, event_prob, event_flags, dev
                    )
                )
            if "g_approx2" in wanted:
                dev = float(np.linalg.norm(g - np.eye(dim) / z - lin / z**2, 2))
                bound = b / (b - 1.0) * ls.spectral_norm**2 / z**3
                reports.append(
                    BoundReport.build(
                        "g_approx2", bound, event_prob, event_flags, dev
                    )
                )
        return reports

    return trial


# ---------------------------------------------------------------------------
# selftest scenario


def _selftest_reports(seed: int) -> list[BoundReport]:
    rng = np.random.default_rng(seed)
    reports: list[BoundReport] = []

    def check(name: str, deviation: float, tol: float = 1e-9):
        reports.append(BoundReport.build(name, tol, 1.0, ALL_OK, float(deviation)))

    # gauge identities on a random spectrum
    vals = rng.uniform(0.5, 3.0, size=6)
    check("selftest:kyfan1_is_operator", abs(gauge(vals, kyfan(1)) - gauge(vals, OPERATOR)))
    check(
        "selftest:kyfan_full_is_nuclear",
        abs(gauge(vals, kyfan(6)) - gauge(vals, NUCLEAR)),
    )
    check(
        "selftest:schatten2_is_frobenius",
        abs(gauge(vals, schatten(2)) - gauge(vals, FROBENIUS)),
    )
    single = np.zeros((4, 5))
    single[1, 2] = 1.0
    for spec in (OPERATOR, FROBENIUS, NUCLEAR, schatten(3), kyfan(2)):
        check(f"selftest:unit_norm_{spec.label}", abs(apply_norm(single, spec) - 1.0))

    # mirsky and wedin on small seeded instances
    for idx, (nr, nc) in enumerate(((12, 8), (10, 10), (6, 14))):
        lr = LowRankSpec(nr, nc, (8.0, 5.0, 3.0))
        a, _ = low_rank_from_rng(lr, rng)
        e = 0.05 * rng.standard_normal((nr, nc))
        inst = perturb(a, e)
        for spec in (OPERATOR, FROBENIUS, NUCLEAR, kyfan(2)):
            rep = mirsky_check(inst, spec)
            check(
                f"selftest:mirsky_{idx}_{spec.label}",
                max(0.0, rep.empirical_value - rep.bound_value),
                1e-9,
            )
        for k in (1, 2):
            rep = wedin_check(inst, k, FROBENIUS)
            if rep.violated is not None:
                check(
                    f"selftest:wedin_{idx}_k{k}",
                    max(0.0, rep.empirical_value - rep.bound_value),
                    1e-9,
                )

    # subspace identities; tolerance 1e-7 since angles pass through arccos,
    # whose conditioning near zero caps accuracy around sqrt(eps)
    for idx in range(4):
        amb = int(rng.integers(8, 30))
        d = int(rng.integers(1, min(6, amb // 2) + 1))
        u = haar_basis(rng, amb, d)
        v = haar_basis(rng, amb, d)
        ang = principal_angles(u, v)
        pu = u @ u.T
        pv = v @ v.T
        sv_prod = singular_values(pu @ pv)[:d]
        check(
            f"selftest:proj_product_svals_{idx}",
            float(np.max(np.abs(np.sort(sv_prod) - np.sort(np.cos(ang))))),
            1e-7,
        )
        o = procrustes_align(u, v)
        spect = singular_values(u @ o - v)
        expect = np.sort(2.0 * np.sin(ang / 2.0))[::-1]
        pad = np.zeros(len(spect))
        pad[: len(expect)] = expect
        check(
            f"selftest:aligned_spectrum_{idx}",
            float(np.max(np.abs(np.sort(spect) - np.sort(pad)))),
            1e-7,
        )
        sin_f = sin_theta_norm(u, v, FROBENIUS)
        ali_f = aligned_distance(u, v, FROBENIUS)
        check(
            f"selftest:frobenius_sandwich_{idx}",
            max(0.0, sin_f - ali_f, ali_f - np.sqrt(2.0) * sin_f),
            1e-7,
        )
        proj_res = two_inf_residual(u, v, mode="projector")
        ali_res = two_inf_residual(u, v, mode="aligned")
        u_mass = float(np.sqrt(np.max(np.sum(u * u, axis=1))))
        sin_sq = float(np.sin(ang[-1]) ** 2)
        check(
            f"selftest:prop_two_inf_{idx}",
            max(0.0, ali_res - proj_res - u_mass * sin_sq),
            1e-7,
        )

    # procrustes closed forms
    u = haar_basis(rng, 9, 3)
    check("selftest:procrustes_self", float(np.max(np.abs(procrustes_align(u, u) - np.eye(3)))))
    q = haar_basis(rng, 3, 3)
    check(
        "selftest:procrustes_rotation",
        float(np.linalg.norm(u @ procrustes_align(u, u @ q) - u @ q)),
        1e-8,
    )
    vec = haar_basis(rng, 7, 1)
    check(
        "selftest:procrustes_flip",
        float(abs(procrustes_align(vec, -vec)[0, 0] + 1.0)),
    )

    # resolvent identities on a small noise draw
    e = rng.standard_normal((8, 5))
    ls = LinearizationSpectrum.from_noise(e)
    base = min_abs_z(8, 5, 2.0)
    for zi, z in enumerate((base, complex(base, 3.0))):
        pr = phi_values(ls, z)
        check(
            f"selftest:phi_identity_{zi}",
            abs(pr.phi1 - pr.phi2 + (5 - 8) / complex(z)) / max(1.0, abs(pr.phi1)),
            1e-8,
        )
        x = rng.standard_normal(13)
        x /= np.linalg.norm(x)
        y = rng.standard_normal(13)
        y /= np.linalg.norm(y)
        via_eigen = resolvent_bilinear(ls, z, x, y)
        via_dense = dense_resolvent_bilinear(e, z, x, y)
        check(
            f"selftest:resolvent_dense_{zi}",
            abs(via_eigen - via_dense) / max(1.0, abs(via_dense)),
            1e-8,
        )
    u = haar_basis(rng, 8, 2)
    v = haar_basis(rng, 5, 2)
    check(
        "selftest:uphiu",
        uphiu_deviation(ls, linearized_basis(u, v), base),
        1e-8,
    )
    zero_ls = LinearizationSpectrum.from_noise(np.zeros((6, 9)))
    pr = phi_values(zero_ls, 4.0)
    check("selftest:phi_zero_noise", abs(pr.phi1 - (4.0 - 9.0 / 4.0)) + abs(pr.phi2 - (4.0 - 6.0 / 4.0)))

    # label matching examples
    from .clustering import Labeling, misclassification

    t = Labeling(np.array([1, 1, 2, 2]), 2)
    check(
        "selftest:misclass_swap",
        abs(misclassification(t, Labeling(np.array([2, 2, 1, 1]), 2)) - 0.0),
    )
    check(
        "selftest:misclass_half",
        abs(misclassification(t, Labeling(np.array([1, 2, 1, 2]), 2)) - 0.5),
    )
    return reports


def _selftest_factory(cfg: ExperimentConfig):
    def trial(i: int) -> list[BoundReport]:
        return _selftest_reports(derive_seed(cfg.base_seed, i))

    return trial


# ---------------------------------------------------------------------------
# driver


_FACTORIES = {
    "bounds": _bounds_factory,
    "gmm": _gmm_factory,
    "submatrix": _submatrix_factory,
    "resolvent": _resolvent_factory,
    "selftest": _selftest_factory,
}


def run_monte_carlo(cfg: ExperimentConfig) -> SummaryReport:
    """Run cfg.trials seeded trials and aggregate per-theorem rows."""
    start = time.perf_counter()
    trial = _FACTORIES[cfg.scenario](cfg)
    indices = range(cfg.trials)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            per_trial = list(pool.map(trial, indices))
    else:
        per_trial = [trial(i) for i in indices]
    rows, exceeded = _aggregate(per_trial)
    return SummaryReport(
        rows=rows,
        config=cfg.echo(),
        version=__version__,
        wall_time_s=time.perf_counter() - start,
        exceeded=exceeded,
    )


def _aggregate(per_trial: list[list[BoundReport]]):
    acc: dict[str, dict] = {}
    for reports in per_trial:
        for rep in reports:
            a = acc.setdefault(
                rep.theorem_id,
                {"trials": 0, "valid": 0, "violations": 0, "ratios": [], "budget": 0.0},
            )
            a["trials"] += 1
            if rep.preconditions.all_ok and rep.violated is not None:
                a["valid"] += 1
                if rep.violated:
                    a["violations"] += 1
                if rep.ratio is not None:
                    a["ratios"].append(rep.ratio)
                a["budget"] = max(a["budget"], 1.0 - rep.probability_floor)
    rows = []
    exceeded = []
    for tid in sorted(acc):
        a = acc[tid]
        valid = a["valid"]
        rate = (a["violations"] / valid) if valid else None
        finite = [r for r in a["ratios"] if r is not None]
        if finite:
            qs = np.quantile(np.asarray(finite, dtype=float), [0.5, 0.9, 0.99])
            p50, p90, p99 = (float(q) for q in qs)
        else:
            p50 = p90 = p99 = None
        rows.append(
            {
                "theorem_id": tid,
                "trials": a["trials"],
                "valid": valid,
                "violations": a["violations"],
                "rate": rate,
                "ratio_p50": p50,
                "ratio_p90": p90,
                "ratio_p99": p99,
            }
        )
        if valid:
            budget = a["budget"]
            margin = 3.0 * np.sqrt(budget * (1.0 - budget) / valid)
            if rate > budget + margin:
                exceeded.append(tid)
    return rows, exceeded


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_safe(v):
    if isinstance(v, float) and not np.isfinite(v):
        return str(v)
    return v


def emit_report(summary: SummaryReport, fmt: str = "csv") -> str:
    """Render the summary; identical input produces identical bytes.

    Wall time is intentionally not serialized.
    """
    if fmt == "csv":
        lines = [",".join(_CSV_COLUMNS)]
        for row in summary.rows:
            lines.append(",".join(_cell(row[c]) for c in _CSV_COLUMNS))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = {
            "version": summary.version,
            "config": summary.config,
            "rows": [
                {k: _json_safe(v) for k, v in row.items()} for row in summary.rows
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    raise InvalidParameterError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# CLI

_DEFAULT_MODELS = {
    "bounds": {
        "n_rows": 80,
        "n_cols": 60,
        "singulars": [40.0, 30.0, 20.0],
        "factor_mode": "haar",
        "k_lo": 1,
        "k_hi": 1,
        "margin": 2.0,
        "tail": 1.0,
        "noise_scale": 1.0,
    },
    "gmm": {
        "n_features": 50,
        "n_samples": 300,
        "n_clusters": 3,
        "center_mode": "orthogonal",
        "center_scale": 60.0,
        "tail": 1.0,
        "restarts": 10,
    },
    "submatrix": {
        "n_rows": 200,
        "n_cols": 200,
        "amplitudes": [8.0, -8.0],
        "block_rows": 40,
        "block_cols": 40,
        "tail": 1.0,
        "restarts": 10,
    },
    "resolvent": {
        "n_rows": 60,
        "n_cols": 40,
        "margin": 2.0,
        "tail": 1.0,
        "z_factors": [1.0, 1.5, 3.0],
        "signal_rank": 3,
        "dense": True,
    },
    "selftest": {},
}

_DEFAULT_THEOREMS = {
    "bounds": (
        "mirsky:operator",
        "mirsky:frobenius",
        "mirsky:nuclear",
        "wedin:1:operator",
        "wedin:1:frobenius",
        "spectral_norm_event",
    ),
    "gmm": ("gmm_recovery", "gmm_embedding_gap"),
    "submatrix": ("submatrix_recovery",),
    "resolvent": _RESOLVENT_ROWS,
    "selftest": (),
}

_DEFAULT_TRIALS = {"bounds": 50, "gmm": 20, "submatrix": 20, "resolvent": 30, "selftest": 1}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svperturb",
        description="Seeded Monte Carlo verification of matrix perturbation bounds",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    helps = {
        "bounds": "perturbation bounds on low-rank plus Gaussian noise",
        "gmm": "spectral clustering recovery on Gaussian mixtures",
        "submatrix": "planted submatrix recovery",
        "resolvent": "linearization resolvent probes",
        "selftest": "deterministic invariant checks",
    }
    for name in _SCENARIOS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", help="JSON config file (flags override it)")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int, help="base seed")
        sp.add_argument("--out", help="output path (stdout when omitted)")
        sp.add_argument("--format", choices=list(_FORMATS))
        sp.add_argument("--threads", type=int)
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    scenario = args.scenario
    data: dict = {
        "scenario": scenario,
        "trials": _DEFAULT_TRIALS[scenario],
        "base_seed": 0,
        "theorems": list(_DEFAULT_THEOREMS[scenario]),
        "model": dict(_DEFAULT_MODELS[scenario]),
        "output": None,
        "format": "csv",
        "threads": 1,
    }
    if args.config:
        loaded = json.loads(Path(args.config).read_text())
        if not isinstance(loaded, dict):
            raise InvalidParameterError("config file must hold a JSON object")
        if "scenario" in loaded and loaded["scenario"] != scenario:
            raise InvalidParameterError(
                f"config scenario {loaded['scenario']!r} does not match {scenario!r}"
            )
        for key, value in loaded.items():
            data[key] = value
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["base_seed"] = args.seed
    if args.out is not None:
        data["output"] = args.out
    if args.format is not None:
        data["format"] = args.format
    if args.threads is not None:
        data["threads"] = args.threads
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        cfg = _config_from_args(args)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run_monte_carlo(cfg)
        text = emit_report(summary, cfg.format)
        if cfg.output:
            Path(cfg.output).write_text(text)
        else:
            sys.stdout.write(text)
    except (InvalidParameterError, InvalidInputError) as exc:
        # model and theorem-token validation happens when the scenario is built
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailureError, np.linalg.LinAlgError, OSError) as exc:
        print(f"error: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if summary.exceeded:
        print(
            "violation budget exceeded: " + ", ".join(summary.exceeded),
            file=sys.stderr,
        )
        return EXIT_VIOLATION
    return EXIT_OK


def cli() -> None:
    sys.exit(main())
