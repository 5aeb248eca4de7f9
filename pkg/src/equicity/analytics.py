"""Game-master dashboard statistics over recorded rounds.

Variance homogeneity (Levene's W on deviations from group means), balanced
factorial ANOVA with eta-squared effect sizes, per-round descriptive stats,
and the Pearson correlation between round duration and score change. The
F-distribution tail comes from our own regularized incomplete beta
(continued-fraction evaluation); no statistics library is involved.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from .errors import DegenerateGroups, ShapeMismatch, UnbalancedDesign

BETA_TOL = 1e-10
_TINY = 1e-300


# -- special functions ---------------------------------------------------------


def _beta_continued_fraction(a: float, b: float, x: float, tol: float, max_iter: int) -> float:
    # Modified Lentz evaluation of the standard continued fraction.
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(
    a: float, b: float, x: float, tol: float = BETA_TOL, max_iter: int = 500
) -> float:
    """I_x(a, b), evaluated by continued fraction with the symmetry switch."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x, tol, max_iter) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x, tol, max_iter) / b


def f_cdf(x: float, df1: float, df2: float) -> float:
    """P(F <= x) for an F-distributed statistic with (df1, df2) degrees."""
    if x <= 0:
        return 0.0
    return regularized_incomplete_beta(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2))


def f_sf(x: float, df1: float, df2: float) -> float:
    """Right tail P(F > x); computed with swapped arguments for precision."""
    if x <= 0:
        return 1.0
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x))


# -- panels --------------------------------------------------------------------

FACTOR_NAMES = ("actor", "site", "colour")


@dataclass
class DecisionPanel:
    """Long-format decision observations: one value per (round, actor, site, colour)."""

    rounds: np.ndarray
    actors: np.ndarray
    sites: np.ndarray
    colours: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lengths = {arr.shape for arr in (self.rounds, self.actors, self.sites, self.colours, self.values)}
        if len(lengths) != 1:
            raise ShapeMismatch("panel columns must have equal length")

    @classmethod
    def from_tensor(cls, tensor: np.ndarray) -> "DecisionPanel":
        x = np.asarray(tensor, dtype=float)
        if x.ndim != 4:
            raise ShapeMismatch(f"decision tensor must be 4-D, got {x.shape}")
        tau, m, n, o = x.shape
        t, i, j, k = np.meshgrid(
            np.arange(tau), np.arange(m), np.arange(n), np.arange(o), indexing="ij"
        )
        return cls(t.ravel(), i.ravel(), j.ravel(), k.ravel(), x.ravel())

    def factor_column(self, name: str) -> np.ndarray:
        if name == "actor":
            return self.actors
        if name == "site":
            return self.sites
        if name == "colour":
            return self.colours
        if name == "round":
            return self.rounds
        raise ShapeMismatch(f"unknown factor {name!r}")


@dataclass
class ScorePanel:
    """Per-round score columns plus the wall-clock duration of each round."""

    names: list[str]
    scores: np.ndarray  # (rounds, columns)
    durations: np.ndarray  # (rounds,)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        self.durations = np.asarray(self.durations, dtype=float)
        if self.scores.ndim != 2 or self.scores.shape[1] != len(self.names):
            raise ShapeMismatch("score matrix does not match the column names")
        if self.durations.shape != (self.scores.shape[0],):
            raise ShapeMismatch("durations must have one entry per round")


def score_panel_from_records(records: list[dict]) -> ScorePanel:
    """Build the dashboard panel from serialized round records."""
    if not records:
        return ScorePanel([], np.zeros((0, 0)), np.zeros(0))
    first = records[0]
    field_names = sorted(first["scores"]["fields"])
    m = len(first["badges"]["gain_distances"])
    o = len(first["allocation"][0])
    names = [f"field:{n}" for n in field_names] + ["transport_efficacy", "change_score"]
    names += [f"gain:{i}" for i in range(m)]
    bound = math.sqrt(2.0 * o)
    rows, durations = [], []
    for rec in records:
        scores = rec["scores"]
        row = [scores["fields"][n]["normalized"] for n in field_names]
        row += [scores["transport_efficacy"], scores["change_score"]]
        row += [1.0 - d / bound for d in rec["badges"]["gain_distances"]]
        rows.append(row)
        durations.append(rec["duration"])
    return ScorePanel(names, np.array(rows), np.array(durations))


# -- the four dashboard statistics ----------------------------------------------


def levene_w(groups: list[np.ndarray]) -> tuple[float, tuple[int, int], float]:
    """Levene's variance-homogeneity W on absolute deviations from group means.

    Returns (W, (df_between, df_within), p). Raises
    :class:`DegenerateGroups` when every observation equals its group mean.
    """
    if len(groups) < 2:
        raise DegenerateGroups("need at least two groups")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if any(g.size < 2 for g in arrays):
        raise DegenerateGroups("every group needs at least two observations")
    k = len(arrays)
    n_total = sum(g.size for g in arrays)
    z = [np.abs(g - g.mean()) for g in arrays]
    z_bar = sum(zi.sum() for zi in z) / n_total
    between = sum(zi.size * (zi.mean() - z_bar) ** 2 for zi in z)
    within = sum(((zi - zi.mean()) ** 2).sum() for zi in z)
    if within == 0:
        raise DegenerateGroups("within-group deviation is zero (constant data)")
    df1, df2 = k - 1, n_total - k
    w = (df2 / df1) * (between / within)
    return float(w), (df1, df2), f_sf(float(w), df1, df2)


@dataclass
class AnovaRow:
    source: str
    ss: float
    df: int
    ms: float
    f: float
    p: float
    eta_sq: float


def anova_factorial(panel: DecisionPanel, factors=FACTOR_NAMES) -> list[AnovaRow]:
    """Balanced factorial ANOVA with all interactions and eta-squared.

    Replicates are whatever observations share a full factor cell (for the
    decision panel: the rounds). Unequal cell counts raise
    :class:`UnbalancedDesign`; constant data reports zero sums of squares
    with NaN F ratios.
    """
    factors = tuple(factors)
    if not 1 <= len(factors) <= 3:
        raise ShapeMismatch("choose one to three factors")
    values = panel.values
    n_obs = values.size
    columns = {f: panel.factor_column(f) for f in factors}
    levels = {f: np.unique(columns[f]) for f in factors}
    index = {f: np.searchsorted(levels[f], columns[f]) for f in factors}

    shape = tuple(levels[f].size for f in factors)
    counts = np.zeros(shape, dtype=int)
    sums = np.zeros(shape)
    np.add.at(counts, tuple(index[f] for f in factors), 1)
    np.add.at(sums, tuple(index[f] for f in factors), values)
    if counts.min() != counts.max():
        raise UnbalancedDesign(
            f"cell counts range {counts.min()}..{counts.max()}; balanced design required"
        )
    grand = values.mean()
    ss_total = float(((values - grand) ** 2).sum())

    cell_means = sums / counts
    effects: dict[tuple[str, ...], np.ndarray] = {}
    rows: list[AnovaRow] = []
    subset_rows: list[tuple[tuple[str, ...], float, int]] = []
    for size in range(1, len(factors) + 1):
        for subset in combinations(factors, size):
            axes = tuple(i for i, f in enumerate(factors) if f not in subset)
            marginal = cell_means.mean(axis=axes) if axes else cell_means.copy()
            effect = marginal - grand
            for sub_size in range(1, size):
                for sub in combinations(subset, sub_size):
                    expansion = effects[sub]
                    shape_map = [1] * len(subset)
                    for i, f in enumerate(subset):
                        if f in sub:
                            shape_map[i] = levels[f].size
                    effect = effect - expansion.reshape(shape_map)
            effects[subset] = effect
            replicates = n_obs / effect.size
            ss = float(replicates * (effect**2).sum())
            df = 1
            for f in subset:
                df *= levels[f].size - 1
            subset_rows.append((subset, ss, df))

    ss_effects = sum(ss for _, ss, _ in subset_rows)
    df_effects = sum(df for _, _, df in subset_rows)
    ss_resid = max(ss_total - ss_effects, 0.0)
    df_resid = (n_obs - 1) - df_effects
    ms_resid = ss_resid / df_resid if df_resid > 0 else float("nan")

    for subset, ss, df in subset_rows:
        ms = ss / df if df else float("nan")
        if df_resid > 0 and ms_resid > 0:
            f_stat = ms / ms_resid
            p = f_sf(f_stat, df, df_resid)
        else:
            f_stat, p = float("nan"), float("nan")
        eta = ss / ss_total if ss_total > 0 else float("nan")
        label = " * ".join(f.capitalize() for f in subset)
        rows.append(AnovaRow(label, ss, df, ms, f_stat, p, eta))
    rows.append(
        AnovaRow("Residual", ss_resid, df_resid, ms_resid, float("nan"), float("nan"), float("nan"))
    )
    return rows


def round_stats(panel: DecisionPanel) -> list[dict]:
    """Mean and sample standard deviation of the decisions, per round."""
    if panel.values.size == 0:
        raise ShapeMismatch("panel is empty")
    out = []
    for t in np.unique(panel.rounds):
        chunk = panel.values[panel.rounds == t]
        std = float(chunk.std(ddof=1)) if chunk.size > 1 else 0.0
        out.append({"round": int(t), "mean": float(chunk.mean()), "std": std})
    return out


@dataclass
class CorrelationResult:
    name: str
    status: str  # OK | INSUFFICIENT | ZERO_VARIANCE
    r: float | None


def pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc, yc = x - x.mean(), y - y.mean()
    return float((xc * yc).sum() / math.sqrt((xc**2).sum() * (yc**2).sum()))


def time_score_correlation(panel: ScorePanel) -> list[CorrelationResult]:
    """Pearson r between round duration and score delta, per score column.

    The delta series needs at least three points for a meaningful r (a
    three-round game yields only two deltas and is reported INSUFFICIENT);
    constant series are flagged ZERO_VARIANCE.
    """
    results = []
    deltas_count = panel.scores.shape[0] - 1
    for idx, name in enumerate(panel.names):
        if deltas_count < 3:
            results.append(CorrelationResult(name, "INSUFFICIENT", None))
            continue
        deltas = np.diff(panel.scores[:, idx])
        times = panel.durations[1:]
        if deltas.std() == 0 or times.std() == 0:
            results.append(CorrelationResult(name, "ZERO_VARIANCE", None))
            continue
        results.append(CorrelationResult(name, "OK", pearson_r(times, deltas)))
    return results


def pairwise_mean_differences(panel: DecisionPanel, factor: str) -> list[dict]:
    """Bonferroni-flagged pairwise t comparisons (explicitly NOT Tukey-HSD)."""
    column = panel.factor_column(factor)
    levels = np.unique(column)
    pairs = list(combinations(levels, 2))
    out = []
    for a, b in pairs:
        xa = panel.values[column == a]
        xb = panel.values[column == b]
        na, nb = xa.size, xb.size
        var_pool = (
            ((xa - xa.mean()) ** 2).sum() + ((xb - xb.mean()) ** 2).sum()
        ) / (na + nb - 2)
        se = math.sqrt(var_pool * (1.0 / na + 1.0 / nb))
        t_stat = (xa.mean() - xb.mean()) / se if se > 0 else float("nan")
        # two-sided p from t^2 ~ F(1, df)
        p = f_sf(t_stat**2, 1, na + nb - 2) if se > 0 else float("nan")
        p_adj = min(1.0, p * len(pairs)) if not math.isnan(p) else p
        out.append(
            {
                "a": int(a),
                "b": int(b),
                "mean_a": float(xa.mean()),
                "mean_b": float(xb.mean()),
                "diff": float(xa.mean() - xb.mean()),
                "t": float(t_stat),
                "p_bonferroni": float(p_adj),
                "significant": bool(p_adj < 0.05) if not math.isnan(p_adj) else False,
                "method": "pairwise-t-bonferroni (NOT Tukey-HSD)",
            }
        )
    return out


def interaction_means(panel: DecisionPanel, factor_a: str, factor_b: str) -> dict:
    """Per-(level_a, level_b) mean values: one polyline per level of factor_a."""
    col_a = panel.factor_column(factor_a)
    col_b = panel.factor_column(factor_b)
    levels_a = np.unique(col_a)
    levels_b = np.unique(col_b)
    table = []
    for la in levels_a:
        row = []
        for lb in levels_b:
            sel = (col_a == la) & (col_b == lb)
            row.append(float(panel.values[sel].mean()) if sel.any() else float("nan"))
        table.append(row)
    return {
        "factor_a": factor_a,
        "factor_b": factor_b,
        "levels_a": [int(v) for v in levels_a],
        "levels_b": [int(v) for v in levels_b],
        "means": table,
    }


# -- report assembly -------------------------------------------------------------


def _anova_rows_to_dicts(rows: list[AnovaRow]) -> list[dict]:
    def scrub(v):
        return None if isinstance(v, float) and math.isnan(v) else v

    return [
        {
            "source": r.source,
            "ss": scrub(r.ss),
            "df": r.df,
            "ms": scrub(r.ms),
            "f": scrub(r.f),
            "p": scrub(r.p),
            "eta_sq": scrub(r.eta_sq),
        }
        for r in rows
    ]


def build_report(decision_tensor: np.ndarray, records: list[dict]) -> dict:
    """Full dashboard report from the decision tensor and serialized records."""
    panel = DecisionPanel.from_tensor(decision_tensor)
    scores = score_panel_from_records(records)
    cell_groups = [
        panel.values[(panel.actors == i) & (panel.sites == j) & (panel.colours == k)]
        for i in np.unique(panel.actors)
        for j in np.unique(panel.sites)
        for k in np.unique(panel.colours)
    ]
    try:
        w, (df1, df2), p = levene_w(cell_groups)
        levene = {"w": w, "df": [df1, df2], "p": p}
    except DegenerateGroups as err:
        levene = {"error": str(err)}
    report = {
        "levene": levene,
        "anova": _anova_rows_to_dicts(anova_factorial(panel)),
        "round_stats": round_stats(panel),
        "correlations": [
            {"name": c.name, "status": c.status, "r": c.r}
            for c in time_score_correlation(scores)
        ],
        "pairwise": {
            factor: pairwise_mean_differences(panel, factor) for factor in FACTOR_NAMES
        },
        "interactions": [
            interaction_means(panel, a, b)
            for a, b in [("actor", "colour"), ("site", "actor"), ("site", "colour"), ("round", "colour")]
        ],
    }
    return report


def write_report(report: dict, outdir: str | Path) -> list[Path]:
    """Emit report.json plus plot-ready CSV series for the dashboard."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [outdir / "report.json"]
    written[0].write_text(json.dumps(report, indent=2, sort_keys=True))
    for inter in report.get("interactions", []):
        name = f"interaction_{inter['factor_a']}_{inter['factor_b']}.csv"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([inter["factor_a"] + "\\" + inter["factor_b"], *inter["levels_b"]])
        for la, row in zip(inter["levels_a"], inter["means"]):
            writer.writerow([la, *row])
        path = outdir / name
        path.write_text(buf.getvalue())
        written.append(path)
    return written
