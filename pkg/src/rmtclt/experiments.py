"""Named experiments and the reports they produce."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .chebyshev import inverse_coeff_matrix, rescaled_inverse, table
from .ensembles import (
    ConfigError,
    EnsembleSpec,
    EntryLaw,
    _SPEC_KEYS,
    parse_key_values,
)
from .partitions import (
    classify,
    enumerate_partitions,
    nchpp_counts,
    rho,
    rho_by_enumeration,
    verify_recurrences,
)
from .statistics import (
    BACKENDS,
    CumulantEstimate,
    TraceSamples,
    cross_covariance,
    cumulant_by_partition_sum,
    exact_cumulants_small_n,
    kstat_estimate,
    monte_carlo_run,
    standardized_estimate,
)
from .theory import (
    QuadratureError,
    covariance_prediction,
    limit_variance,
    log_mgf_chebyshev_sum,
    log_mgf_double_integral,
    wigner_variance,
)

EXPERIMENTS = (
    "semicircle",
    "clt",
    "covariance-matrix",
    "cumulant-decay",
    "tables",
    "oracle",
    "logmgf",
)

PRESETS = {
    "goe": {"offdiag_law": "gaussian"},
    "flip": {"offdiag_law": "gaussian", "relation": "flip"},
    "period": {"offdiag_law": "gaussian", "relation": "period", "T": "2"},
    "gue": {"offdiag_law": "complex-gaussian", "field": "complex"},
    "rademacher": {"offdiag_law": "rademacher", "diag_law": "gaussian"},
    "rademacher-all": {"offdiag_law": "rademacher", "diag_law": "rademacher"},
}

_RUN_KEYS = (
    "experiment",
    "ensemble",
    "m_max",
    "k_max",
    "replicates",
    "seed",
    "out",
    "format",
    "backend",
    "workers",
    "rel_tol",
    "se_mult",
    "quad_tol",
    "semicircle_tol",
    "exact_tol",
)

DEFAULT_TOLERANCES = {
    "rel_tol": 0.10,
    "se_mult": 4.0,
    "quad_tol": 1e-6,
    "semicircle_tol": 0.05,
    "exact_tol": 1e-10,
}


@dataclass
class Check:
    name: str
    measured: float
    predicted: float
    standard_error: float
    tolerance: float
    passed: bool
    provenance: str


@dataclass
class ExperimentConfig:
    experiment: str
    spec: EnsembleSpec
    m_max: int = 5
    k_max: int = 6
    replicates: int = 200
    seed: int = 20240611
    out: Optional[str] = None
    format: str = "json"
    backend: str = "eigen"
    workers: int = 1
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.format not in ("json", "csv"):
            raise ConfigError("format: expected json or csv")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend: expected one of {BACKENDS}")
        if self.replicates < 5:
            raise ConfigError("replicates: need at least 5")
        if self.m_max < 1 or self.k_max < 1 or self.workers < 1:
            raise ConfigError("m_max, k_max and workers must be positive")

    @property
    def tol(self) -> dict:
        return self.tolerances

    def to_dict(self) -> dict[str, str]:
        out = dict(self.spec.to_config())
        out.update(
            experiment=self.experiment,
            m_max=str(self.m_max),
            k_max=str(self.k_max),
            replicates=str(self.replicates),
            seed=str(self.seed),
            format=self.format,
            backend=self.backend,
            workers=str(self.workers),
        )
        out.update({k: repr(v) for k, v in self.tolerances.items()})
        if self.out is not None:
            out["out"] = self.out
        return out

    @classmethod
    def from_dict(cls, cfg: dict[str, str]) -> "ExperimentConfig":
        unknown = set(cfg) - set(_SPEC_KEYS) - set(_RUN_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in cfg:
            raise ConfigError("missing key: experiment")
        ens = {}
        preset = cfg.get("ensemble")
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"ensemble: unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
            ens.update(PRESETS[preset])
        ens.update({k: v for k, v in cfg.items() if k in _SPEC_KEYS})
        ens.setdefault("n", "64")
        spec = EnsembleSpec.from_config(ens)
        tolerances = dict(DEFAULT_TOLERANCES)

        def num(key, conv, default):
            try:
                return conv(cfg[key]) if key in cfg else default
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from exc

        for key in DEFAULT_TOLERANCES:
            tolerances[key] = num(key, float, tolerances[key])
        return cls(
            experiment=cfg["experiment"],
            spec=spec,
            m_max=num("m_max", int, 5),
            k_max=num("k_max", int, 6),
            replicates=num("replicates", int, 200),
            seed=num("seed", int, 20240611),
            out=cfg.get("out"),
            format=cfg.get("format", "json"),
            backend=cfg.get("backend", "eigen"),
            workers=num("workers", int, 1),
            tolerances=tolerances,
        )

    @classmethod
    def from_text(cls, text: str, **overrides) -> "ExperimentConfig":
        cfg = parse_key_values(text)
        cfg.update({k: str(v) for k, v in overrides.items() if v is not None})
        return cls.from_dict(cfg)


@dataclass
class RunReport:
    experiment: str
    checks: list[Check]
    wall_clock: float
    seed: int
    config: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> str:
        return json.dumps(
            {
                "experiment": self.experiment,
                "passed": self.passed,
                "wall_clock": self.wall_clock,
                "seed": self.seed,
                "config": self.config,
                "checks": [asdict(c) for c in self.checks],
            },
            indent=2,
        ) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["name", "measured", "predicted", "standard_error", "tolerance", "passed", "provenance"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for c in self.checks:
            w.writerow([getattr(c, k) for k in cols])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# check helpers


def mc_check(name: str, est: CumulantEstimate, predicted: float, rel_tol: float,
             se_mult: float, provenance: str, abs_floor: float = 1e-9) -> Check:
    """Pass if ``|est - predicted| <= max(rel_tol |predicted|, se_mult SE, abs_floor)``."""
    tol = max(rel_tol * abs(predicted), se_mult * est.standard_error, abs_floor)
    err = abs(est.value - predicted)
    return Check(name, est.value, predicted, est.standard_error, tol, bool(err <= tol), provenance)


def exact_check(name: str, measured, predicted, tol: float, provenance: str) -> Check:
    err = abs(measured - predicted)
    return Check(name, float(measured), float(predicted), 0.0, tol, bool(err <= tol), provenance)


def bool_check(name: str, ok: bool, provenance: str) -> Check:
    return Check(name, float(ok), 1.0, 0.0, 0.0, bool(ok), provenance)


def power_traces_from_chebyshev(samples: TraceSamples) -> np.ndarray:
    """``Tr X^k`` for ``k = 0..m_max`` recovered from Chebyshev traces."""
    ts = rescaled_inverse(samples.m_max, samples.s)
    return samples.values @ ts.T


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


# ---------------------------------------------------------------------------
# analyses (pure functions of config and samples)


def analyze_semicircle(cfg: ExperimentConfig, samples: dict[str, TraceSamples]) -> list[Check]:
    s = samples["main"]
    n = s.spec.n
    powers = power_traces_from_chebyshev(s)
    checks = []
    for k in range(1, s.m_max // 2 + 1):
        col = powers[:, 2 * k] / n
        mean = float(col.mean())
        se = float(col.std(ddof=1) / math.sqrt(len(col)))
        pred = catalan(k) * s.s ** (2 * k)
        tol = cfg.tol["semicircle_tol"] * pred
        checks.append(Check(f"moment_{2 * k}", mean, pred, se, tol, bool(abs(mean - pred) <= tol),
                            "semicircle moments (Catalan numbers)"))
    return checks


def analyze_clt(cfg: ExperimentConfig, samples: dict[str, TraceSamples]) -> list[Check]:
    s = samples["main"]
    rel, k = cfg.tol["rel_tol"], cfg.tol["se_mult"]
    checks = []
    for m in range(1, s.m_max + 1):
        pred, source = limit_variance(s.spec, m)
        checks.append(mc_check(f"var_m{m}", kstat_estimate(s.column(m), 2), pred, rel, k,
                               f"limiting variance ({source})"))
    for a in range(1, s.m_max + 1):
        for b in range(a + 1, s.m_max + 1):
            checks.append(mc_check(f"cov_m{a}_m{b}", cross_covariance(s.column(a), s.column(b)),
                                   0.0, 0.0, k, "asymptotic independence of Chebyshev traces"))
    for m in range(1, s.m_max + 1):
        checks.append(mc_check(f"skew_m{m}", standardized_estimate(s.column(m), 3), 0.0, 0.0, k,
                               "Gaussian limit (skewness)"))
        checks.append(mc_check(f"exkurt_m{m}", standardized_estimate(s.column(m), 4), 0.0, 0.0, k,
                               "Gaussian limit (excess kurtosis)"))
    return checks


def analyze_covariance(cfg: ExperimentConfig, samples: dict[str, TraceSamples]) -> list[Check]:
    s = samples["main"]
    powers = power_traces_from_chebyshev(s)
    V = [limit_variance(s.spec, m)[0] for m in range(1, s.m_max + 1)]
    M = covariance_prediction(s.m_max, V, s.s)
    rel, k = cfg.tol["rel_tol"], cfg.tol["se_mult"]
    checks = []
    for a in range(1, s.m_max + 1):
        for b in range(a, s.m_max + 1):
            est = (kstat_estimate(powers[:, a], 2) if a == b
                   else cross_covariance(powers[:, a], powers[:, b]))
            checks.append(mc_check(f"cov_k{a}_k{b}", est, float(M[a - 1, b - 1]), rel, k,
                                   "covariance of power traces via inverse Chebyshev table"))
    return checks


def analyze_cumulant_decay(cfg: ExperimentConfig, samples: dict[str, TraceSamples]) -> list[Check]:
    k = cfg.tol["se_mult"]
    est = {}
    for tag in ("small", "large"):
        s = samples[tag]
        tr3 = power_traces_from_chebyshev(s)[:, 3]
        est[tag] = {j: kstat_estimate(tr3, j) for j in (3, 4)}
    n_small, n_large = samples["small"].spec.n, samples["large"].spec.n
    checks = []
    for j in (3, 4):
        checks.append(mc_check(f"k{j}_trX3_n{n_large}", est["large"][j], 0.0, 0.0, k,
                               "higher cumulants of traces vanish"))
        a, b = abs(est["small"][j].value), abs(est["large"][j].value)
        checks.append(Check(f"k{j}_trX3_decay_n{n_small}_to_n{n_large}", b, a,
                            0.0, 0.0, bool(b <= a), "higher cumulants of traces vanish"))
    return checks


def analyze_tables(cfg: ExperimentConfig, samples=None) -> list[Check]:
    checks = []
    tab = table(40)
    ident = [[int(i == j) for j in range(41)] for i in range(41)]
    checks.append(bool_check("T_times_t_identity_deg40", tab.product() == ident,
                             "inverse Chebyshev table"))
    kmax = min(cfg.k_max, 10)
    counts = nchpp_counts(kmax)
    t = inverse_coeff_matrix(kmax)
    match = all(counts[kk][m] == t[kk][m] for kk in range(kmax + 1) for m in range(kk + 1))
    checks.append(bool_check(f"t_equals_nchpp_counts_k{kmax}", match,
                             "non-crossing half pair partition counts"))
    rec = verify_recurrences(kmax)
    checks.append(bool_check(f"z_map_recurrences_k{kmax}", rec["ok"], "Z-bijection recurrences"))
    for m in range(1, 6):
        n_dih = sum(1 for pi in enumerate_partitions(m, m)
                    if all(c == m for c in classify(pi).connector_count_per_circle)
                    and classify(pi).dihedral)
        expected = 1 if m <= 2 else 2 * m
        checks.append(exact_check(f"dihedral_count_m{m}", n_dih, expected, 0,
                                  "dihedral partitions of two m-circles"))
    from fractions import Fraction
    for m in range(2, 9):
        same = all(rho(m, kk) == rho_by_enumeration(m, kk) for kk in range(1, m + 1))
        total = sum((rho(m, kk) for kk in range(1, m + 1)), Fraction(0))
        checks.append(bool_check(f"rho_m{m}_matches_enumeration", same, "Eulerian cyclic rises"))
        checks.append(bool_check(f"rho_m{m}_sums_to_one", total == 1, "Eulerian cyclic rises"))
    return checks


def analyze_oracle(cfg: ExperimentConfig, samples: dict[str, TraceSamples]) -> list[Check]:
    spec = cfg.spec
    checks = []
    exact_ok = spec.offdiag_law.finite_support and spec.diag_law.finite_support
    for total in range(2, cfg.k_max + 1):
        for k1 in range(1, total // 2 + 1):
            k2 = total - k1
            ps = cumulant_by_partition_sum(spec, (k1, k2))
            if exact_ok:
                ex = exact_cumulants_small_n(spec, (k1, k2))
                checks.append(exact_check(f"partition_sum_vs_exact_{k1}_{k2}", ps, ex,
                                          cfg.tol["exact_tol"], "cumulants as partition sums"))
    s = samples["main"]
    powers = power_traces_from_chebyshev(s)
    for kk in range(1, min(s.m_max, 3) + 1):
        pred = cumulant_by_partition_sum(spec, (kk, kk))
        checks.append(mc_check(f"mc_var_trX{kk}", kstat_estimate(powers[:, kk], 2), pred,
                               cfg.tol["rel_tol"], cfg.tol["se_mult"],
                               "cumulants as partition sums (Monte Carlo)"))
    return checks


def analyze_logmgf(cfg: ExperimentConfig, samples=None) -> list[Check]:
    spec = cfg.spec
    if spec.field != "real":
        raise ConfigError("logmgf: real ensembles only")
    T = spec.period
    off, diag = spec.offdiag_law, spec.diag_law
    s = spec.s

    def V(m):
        return wigner_variance(m, T, diag.Ea2, off.Ea2, off.Ea4)

    checks = []
    for d in range(1, cfg.k_max + 1):
        coeffs = [0.0] * d + [1.0]
        a = log_mgf_chebyshev_sum(coeffs, s, V)
        try:
            b = log_mgf_double_integral(coeffs, s, T, off.Ea2, off.C4, diag.Ea2)
        except QuadratureError:
            b = float("nan")
        tol = cfg.tol["quad_tol"] * max(1.0, abs(a))
        checks.append(Check(f"logmgf_x{d}", b, a, 0.0, tol, bool(abs(a - b) <= tol),
                            "log-MGF: Chebyshev sum vs double integral"))
    return checks


ANALYSES: dict[str, Callable] = {
    "semicircle": analyze_semicircle,
    "clt": analyze_clt,
    "covariance-matrix": analyze_covariance,
    "cumulant-decay": analyze_cumulant_decay,
    "tables": analyze_tables,
    "oracle": analyze_oracle,
    "logmgf": analyze_logmgf,
}


# ---------------------------------------------------------------------------
# sampling plans


def sample_plan(cfg: ExperimentConfig) -> dict[str, tuple[EnsembleSpec, int]]:
    """Which Monte Carlo runs an experiment needs: tag -> (spec, m_max)."""
    e = cfg.experiment
    if e == "semicircle":
        return {"main": (cfg.spec, 2 * max(1, cfg.k_max // 2))}
    if e in ("clt", "covariance-matrix"):
        return {"main": (cfg.spec, cfg.m_max)}
    if e == "cumulant-decay":
        return {"small": (cfg.spec.with_n(max(cfg.spec.n // 4, 4)), 3), "large": (cfg.spec, 3)}
    if e == "oracle":
        return {"main": (cfg.spec, 3)}
    return {}


def collect_samples(cfg: ExperimentConfig) -> dict[str, TraceSamples]:
    out = {}
    for tag, (spec, m_max) in sample_plan(cfg).items():
        out[tag] = monte_carlo_run(spec, m_max, cfg.replicates, cfg.seed,
                                   backend=cfg.backend, workers=cfg.workers)
    return out


def run(cfg: ExperimentConfig, samples: Optional[dict[str, TraceSamples]] = None) -> RunReport:
    """Run one experiment; write report and samples if ``cfg.out`` is set.

    Analyses never abort on a failed check; every check is reported.
    """
    start = time.perf_counter()
    if samples is None:
        samples = collect_samples(cfg)
    checks = ANALYSES[cfg.experiment](cfg, samples)
    report = RunReport(cfg.experiment, checks, time.perf_counter() - start, cfg.seed, cfg.to_dict())
    if cfg.out is not None:
        write_outputs(cfg, report, samples)
    return report


def write_outputs(cfg: ExperimentConfig, report: RunReport, samples: dict[str, TraceSamples]) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text("".join(f"{k}={v}\n" for k, v in cfg.to_dict().items()))
    if cfg.format == "json":
        (out / "report.json").write_text(report.to_json())
    else:
        (out / "report.csv").write_text(report.to_csv())
    for tag, s in samples.items():
        s.to_csv(out / f"samples_{tag}.csv")
    return out


def recompute_from_disk(out_dir) -> RunReport:
    """Re-run the analysis of a finished experiment from its saved files."""
    out = Path(out_dir)
    cfg = ExperimentConfig.from_text((out / "config.txt").read_text())
    samples = {p.stem[len("samples_"):]: TraceSamples.from_csv(p)
               for p in sorted(out.glob("samples_*.csv"))}
    checks = ANALYSES[cfg.experiment](cfg, samples)
    return RunReport(cfg.experiment, checks, 0.0, cfg.seed, cfg.to_dict())


# ---------------------------------------------------------------------------
# fourth-moment sensitivity


def fourth_moment_sensitivity(n_small: int = 64, n_large: int = 256, replicates: int = 2000,
                              seed: int = 20240611, workers: int = 1) -> list[Check]:
    """Var(Y_2) with Rademacher off-diagonal entries against the Gaussian limit."""
    spec = EnsembleSpec(n_large, offdiag_law=EntryLaw("rademacher"),
                        diag_law=EntryLaw("gaussian", 2.0))
    gaussian_value = wigner_variance(2, 1, 2.0, 1.0, 3.0)
    var = {}
    for n in (n_small, n_large):
        s = monte_carlo_run(spec.with_n(n), 2, replicates, seed, workers=workers)
        var[n] = kstat_estimate(s.column(2), 2)
    v_l, v_s = var[n_large], var[n_small]
    return [
        Check(f"var_y2_n{n_large}_below_quarter_gaussian", v_l.value, 0.25 * gaussian_value,
              v_l.standard_error, 0.0, bool(v_l.value < 0.25 * gaussian_value),
              "fourth-moment dependence of Var(Y_2)"),
        Check(f"var_y2_ratio_n{n_small}_to_n{n_large}", v_s.value / v_l.value, 2.0,
              0.0, 0.0, bool(v_s.value >= 2 * v_l.value), "fourth-moment dependence of Var(Y_2)"),
    ]
