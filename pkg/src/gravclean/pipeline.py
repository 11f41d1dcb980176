"""End-to-end denoising pipeline, ablation grid, and parameter sweeps.

Stage order per leaf: adaptive voxel gate (A1) -> kNN density filter (A2)
-> dual-weight gravitational scoring with top-fraction retention (A3).
Leaves are independent work items; results merge in deterministic leaf
order, so the output is identical for any worker count.
"""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .baseline import BaselineParams, baseline_denoise
from .cloud import PointCloud, bounding_box
from .errors import DegenerateLeafError, EmptyCloudError
from .gravity import GravityWeights, select_top, weighted_scores
from .metrics import RemovalConfusion, chamfer, psnr, removal_metrics
from .noise import NoiseSpec, contaminate
from .octree import Leaf, LeafPartition, partition
from .prefilter import adaptive_voxel_size, density_filter, knn_density, voxel_gate

__all__ = [
    "DenoiseParams",
    "StageToggle",
    "RunReport",
    "denoise",
    "evaluate_run",
    "AblationRow",
    "default_ablation_grid",
    "run_ablation",
    "run_parameter_sweep",
    "DEFAULT_SWEEP_VALUES",
]


@dataclass(frozen=True)
class DenoiseParams:
    """All tunables of the denoising pipeline.

    ``q`` is a density percentile in [0, 100]: candidates below the q-th
    percentile of their leaf's density distribution are dropped. ``lam``
    is the fraction of scored candidates retained per leaf. The defaults
    target surface-structured clouds (scans), where voxel occupancy along
    the surface stays far above ``min_vox_count`` at ``beta = 1.6`` while
    isolated contamination falls below it; ``q`` and ``lam`` are surgical
    on purpose, trimming only what the gate cannot see, because every
    extra removed structure point costs reconstruction fidelity.
    """

    max_leaf_points: int = 8000
    min_leaf_edge_fraction: float = 1.0 / 64.0
    beta: float = 1.6
    min_vox_count: int = 4
    k: int = 12
    q: float = 0.05
    alpha: float = 1.0
    sigma: float = 1.0
    lam: float = 0.9995
    epsilon: float = 1e-12
    recompute_knn: bool = False
    global_median: bool = False

    def __post_init__(self):
        if self.max_leaf_points < 1:
            raise ValueError("max_leaf_points must be >= 1")
        if not 0.0 < self.min_leaf_edge_fraction < 1.0:
            raise ValueError("min_leaf_edge_fraction must be in (0, 1)")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.min_vox_count < 0:
            raise ValueError("min_vox_count must be >= 0")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.q <= 100.0:
            raise ValueError("q must be a percentile in [0, 100]")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lam must be in (0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def replace(self, **kw) -> "DenoiseParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class StageToggle:
    """Which pipeline stages run; with ``use_octree`` off the whole cloud
    is processed as a single leaf."""

    use_octree: bool = True
    a1_voxel: bool = True
    a2_density: bool = True
    a3_gravity: bool = True


def jsonable_metric(value):
    """Replace non-finite floats with their JSON-safe string sentinels."""
    if isinstance(value, float) and not np.isfinite(value):
        return "nan" if np.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


@dataclass
class RunReport:
    """Everything needed to audit or reproduce one denoising run."""

    counts: dict = field(default_factory=dict)
    timings_s: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    seed: int | None = None
    input_sha256: str | None = None

    def to_jsonable(self) -> dict:
        metrics = {k: jsonable_metric(v) for k, v in self.metrics.items()}
        return {
            "config": self.config,
            "counts": self.counts,
            "metrics": metrics,
            "timings_s": self.timings_s,
            "seed": self.seed,
            "input_sha256": self.input_sha256,
        }


# ---------------------------------------------------------------------------
# Per-leaf work
# ---------------------------------------------------------------------------

@dataclass
class _LeafState:
    ids: np.ndarray          # current candidate ids (ascending)
    pts: np.ndarray          # coordinates matching ids
    n_input: int
    p1: int
    p2: int
    field: object = None     # DensityField over the post-A1 candidates
    p2_mask: np.ndarray | None = None
    t_a1: float = 0.0
    t_a2: float = 0.0


def _leaf_prefilter(pts, ids, box, params: DenoiseParams, toggles: StageToggle) -> _LeafState:
    """Run A1 and A2 (plus the kNN field A3 will reuse) for one leaf."""
    state = _LeafState(ids=ids, pts=pts, n_input=len(ids), p1=len(ids), p2=len(ids))

    if toggles.a1_voxel:
        t0 = time.perf_counter()
        h = adaptive_voxel_size(box.extents, len(ids), params.beta)
        if h > 0.0 and params.min_vox_count > 0:
            keep = voxel_gate(pts, h, params.min_vox_count)
            state.ids, state.pts = ids[keep], pts[keep]
        state.p1 = len(state.ids)
        state.t_a1 = time.perf_counter() - t0
    state.p2 = state.p1

    need_field = toggles.a2_density or toggles.a3_gravity
    if need_field and len(state.ids) >= 2:
        t0 = time.perf_counter()
        state.field = knn_density(state.pts, state.ids, params.k, params.epsilon)
        if toggles.a2_density:
            keep = density_filter(state.field, params.q)
            state.p2_mask = keep
            state.p2 = int(keep.sum())
        state.t_a2 = time.perf_counter() - t0
    return state


def _leaf_select(state: _LeafState, params: DenoiseParams, toggles: StageToggle,
                 rho_med: float | None) -> tuple[np.ndarray, float]:
    """Run A3 on a prefiltered leaf; returns (kept ids, elapsed seconds)."""
    if state.p2_mask is not None:
        cand_ids = state.ids[state.p2_mask]
        cand_pts = state.pts[state.p2_mask]
    else:
        cand_ids, cand_pts = state.ids, state.pts

    if not toggles.a3_gravity:
        return cand_ids, 0.0

    t0 = time.perf_counter()
    fld = state.field
    if fld is None or len(cand_ids) < 2:
        # Degenerate leaf: scores are all zero, selection keeps ceil(lam*n).
        kept = select_top(cand_ids, np.zeros(len(cand_ids)), params.lam)
        return kept, time.perf_counter() - t0

    if params.recompute_knn and state.p2_mask is not None:
        try:
            fld = knn_density(cand_pts, cand_ids, params.k, params.epsilon)
        except DegenerateLeafError:
            fld = None
    if fld is None:
        kept = select_top(cand_ids, np.zeros(len(cand_ids)), params.lam)
        return kept, time.perf_counter() - t0

    member = None
    scores_source_ids = fld.ids
    if fld is state.field and state.p2_mask is not None:
        member = cand_ids
    if rho_med is None:
        if fld is state.field and state.p2_mask is not None:
            rho_med = float(np.median(fld.rho[state.p2_mask]))
        else:
            rho_med = float(np.median(fld.rho))
    weights = GravityWeights(
        rho_med=rho_med, alpha=params.alpha, sigma=params.sigma, epsilon=params.epsilon
    )
    all_scores = weighted_scores(fld, weights, member_ids=member)
    if fld is state.field and state.p2_mask is not None:
        scores = all_scores[state.p2_mask]
        scores_source_ids = fld.ids[state.p2_mask]
    else:
        scores = all_scores
    kept = select_top(scores_source_ids, scores, params.lam)
    return kept, time.perf_counter() - t0


def _candidate_rho(state: _LeafState) -> np.ndarray:
    """Densities of the candidates entering A3 (for the global median)."""
    if state.field is None:
        return np.empty(0)
    if state.p2_mask is not None:
        return state.field.rho[state.p2_mask]
    return state.field.rho


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def _single_leaf(cloud: PointCloud) -> LeafPartition:
    order = np.argsort(cloud.ids, kind="stable")
    return LeafPartition((Leaf(cloud.ids[order], bounding_box(cloud)),))


def _run_once(cloud: PointCloud, params: DenoiseParams, toggles: StageToggle,
              threads: int) -> tuple[np.ndarray, dict, dict]:
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    if toggles.use_octree:
        leaves = partition(cloud, params.max_leaf_points, params.min_leaf_edge_fraction)
    else:
        leaves = _single_leaf(cloud)
    t_partition = time.perf_counter() - t0

    # Leaf ids -> positions in the cloud arrays.
    sorter = np.argsort(cloud.ids, kind="stable")
    sorted_ids = cloud.ids[sorter]

    def leaf_inputs(leaf: Leaf):
        pos = sorter[np.searchsorted(sorted_ids, leaf.ids)]
        return cloud.xyz[pos], leaf.ids, leaf.box

    def stage1(leaf: Leaf) -> _LeafState:
        pts, ids, box = leaf_inputs(leaf)
        return _leaf_prefilter(pts, ids, box, params, toggles)

    if threads > 1 and len(leaves) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            states = list(pool.map(stage1, leaves))
    else:
        states = [stage1(leaf) for leaf in leaves]

    rho_med = None
    if params.global_median and toggles.a3_gravity:
        pooled = np.concatenate([_candidate_rho(s) for s in states])
        rho_med = float(np.median(pooled)) if pooled.size else None

    def stage2(state: _LeafState):
        return _leaf_select(state, params, toggles, rho_med)

    if threads > 1 and len(states) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            selected = list(pool.map(stage2, states))
    else:
        selected = [stage2(s) for s in states]

    t0 = time.perf_counter()
    kept_ids = (
        np.sort(np.concatenate([ids for ids, _ in selected]))
        if selected
        else np.empty(0, dtype=np.int64)
    )
    t_merge = time.perf_counter() - t0

    counts = {
        "n_input": len(cloud),
        "p1": int(sum(s.p1 for s in states)),
        "p2": int(sum(s.p2 for s in states)),
        "n_output": int(kept_ids.size),
        "n_leaves": len(leaves),
    }
    timings = {
        "partition": t_partition,
        "a1_voxel": sum(s.t_a1 for s in states),
        "a2_density": sum(s.t_a2 for s in states),
        "a3_gravity": sum(t for _, t in selected),
        "merge": t_merge,
        "total": time.perf_counter() - t_start,
    }
    return kept_ids, counts, timings


def denoise(
    cloud: PointCloud,
    params: DenoiseParams | None = None,
    toggles: StageToggle | None = None,
    threads: int = 1,
    timing_repeats: int = 1,
) -> tuple[PointCloud, RunReport]:
    """Denoise a cloud; returns the retained sub-cloud and a run report.

    ``timing_repeats`` re-runs the (deterministic) computation and reports
    the median of each timing entry; the returned cloud comes from the
    last run. When the input carries noise labels, removal
    precision/recall/F1 are included in the report.
    """
    params = params or DenoiseParams()
    toggles = toggles or StageToggle()
    if len(cloud) == 0:
        raise EmptyCloudError("cannot denoise an empty cloud")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if timing_repeats < 1:
        raise ValueError("timing_repeats must be >= 1")

    runs = [_run_once(cloud, params, toggles, threads) for _ in range(timing_repeats)]
    kept_ids, counts, _ = runs[-1]
    timings = {
        key: statistics.median(r[2][key] for r in runs) for key in runs[-1][2]
    }

    out = cloud.select_ids(kept_ids)
    report = RunReport(
        counts=counts,
        timings_s=timings,
        config={
            "params": asdict(params),
            "toggles": asdict(toggles),
            "threads": threads,
            "timing_repeats": timing_repeats,
        },
    )
    if cloud.labels is not None:
        conf = RemovalConfusion(
            removed_noise=cloud.noise_count - out.noise_count,
            removed=len(cloud) - len(out),
            noise=cloud.noise_count,
        )
        p, r, f1 = removal_metrics(conf)
        report.metrics.update(precision=p, recall=r, f1=f1)
    return out, report


def evaluate_run(clean: PointCloud, contaminated: PointCloud, denoised: PointCloud) -> dict:
    """Metrics for a finished run: removal P/R/F1 from label counts, plus
    PSNR and Chamfer distance against the clean reference.

    The denoised cloud must carry the label channel inherited from the
    contaminated input; removal counts are pure cardinality arithmetic, so
    no coordinate matching is involved.
    """
    if denoised.labels is None or contaminated.labels is None:
        raise ValueError("evaluation requires noise labels on both clouds")
    conf = RemovalConfusion(
        removed_noise=contaminated.noise_count - denoised.noise_count,
        removed=len(contaminated) - len(denoised),
        noise=contaminated.noise_count,
    )
    p, r, f1 = removal_metrics(conf)
    if len(denoised) == 0:
        # A configuration that removes everything has unbounded error.
        return {"precision": p, "recall": r, "f1": f1,
                "psnr_db": float("-inf"), "cd": float("inf")}
    return {
        "precision": p,
        "recall": r,
        "f1": f1,
        "psnr_db": psnr(clean, denoised),
        "cd": chamfer(clean, denoised),
    }


# ---------------------------------------------------------------------------
# Ablation grid and parameter sweeps
# ---------------------------------------------------------------------------

#: Gate preset for the standalone-A1 ablation row: voxels below the
#: surface spacing, giving the gate-only configuration its aggressive
#: single-stage character (it can only trade structure for noise).
ONLY_A1_BETA = 0.12

#: Percentile preset for the standalone-A2 row: a blunt count-quantile cut.
ONLY_A2_Q = 20.0

#: Retention preset for the standalone-A3 row: a nominal 10% trim matching
#: the grid's design contamination level.
ONLY_A3_LAM = 0.90


@dataclass(frozen=True)
class AblationRow:
    """One ablation configuration; ``toggles=None`` dispatches to the
    baseline gravitational-feature denoiser."""

    name: str
    toggles: StageToggle | None
    overrides: dict


def default_ablation_grid() -> list[AblationRow]:
    """The built-in 10-run grid: an octree on/off pair plus the eight
    structural rows.

    Single-module rows use documented presets rather than the pipeline
    defaults, because a lone stage tuned for its role inside the full
    pipeline exercises almost nothing on its own: the gate-only row uses
    sub-spacing voxels (``ONLY_A1_BETA``), the density-only row a blunt
    20th-percentile cut (``ONLY_A2_Q``), and the scoring-only row runs on
    the unpartitioned cloud trimming the nominal contamination budget
    (``ONLY_A3_LAM``).
    """
    full = StageToggle(True, True, True, True)
    return [
        AblationRow("octree_on", full, {}),
        AblationRow("octree_off", StageToggle(False, True, True, True), {}),
        AblationRow("baseline", None, {}),
        AblationRow("only_a1", StageToggle(True, True, False, False), {"beta": ONLY_A1_BETA}),
        AblationRow("only_a2", StageToggle(True, False, True, False), {"q": ONLY_A2_Q}),
        AblationRow("only_a3", StageToggle(False, False, False, True), {"lam": ONLY_A3_LAM}),
        AblationRow("a1_a2", StageToggle(True, True, True, False), {}),
        AblationRow("a1_a3", StageToggle(True, True, False, True), {}),
        AblationRow("a2_a3", StageToggle(True, False, True, True), {}),
        AblationRow("ours", full, {}),
    ]


def run_ablation(
    clean: PointCloud,
    spec: NoiseSpec,
    grid: list[AblationRow] | None = None,
    params: DenoiseParams | None = None,
    baseline_params: BaselineParams | None = None,
    threads: int = 1,
    timing_repeats: int = 5,
) -> list[dict]:
    """Contaminate ``clean`` per ``spec`` and run every grid row on it.

    Returns one row dict per configuration with the evaluation metrics and
    the median runtime over ``timing_repeats`` repetitions.
    """
    params = params or DenoiseParams()
    contaminated = contaminate(clean, spec)
    if grid is None:
        grid = default_ablation_grid()

    rows = []
    for row in grid:
        if row.toggles is None:
            denoised, runtime = _run_baseline(
                contaminated, baseline_params, timing_repeats
            )
            counts = {
                "n_input": len(contaminated),
                "n_output": len(denoised),
            }
        else:
            run_params = params.replace(**row.overrides) if row.overrides else params
            denoised, report = denoise(
                contaminated, run_params, row.toggles,
                threads=threads, timing_repeats=timing_repeats,
            )
            runtime = report.timings_s["total"]
            counts = report.counts
        entry = {"name": row.name, "runtime_s": runtime, "counts": counts}
        entry.update(evaluate_run(clean, contaminated, denoised))
        rows.append(entry)
    return rows


def _run_baseline(contaminated, baseline_params, timing_repeats):
    kept = None
    times = []
    for _ in range(timing_repeats):
        t0 = time.perf_counter()
        kept = baseline_denoise(contaminated, baseline_params or BaselineParams())
        times.append(time.perf_counter() - t0)
    return contaminated.select_ids(kept), statistics.median(times)


DEFAULT_SWEEP_VALUES = {
    "k": [4, 8, 12, 16, 20, 24, 28, 32, 36, 40],
    "q": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5],
    "min-vox-count": [2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
}

_SWEEP_FIELDS = {"k": "k", "q": "q", "min-vox-count": "min_vox_count"}


def run_parameter_sweep(
    clean: PointCloud,
    spec: NoiseSpec,
    axis: str,
    values=None,
    params: DenoiseParams | None = None,
    toggles: StageToggle | None = None,
    threads: int = 1,
    timing_repeats: int = 1,
) -> list[dict]:
    """Sensitivity sweep of one parameter axis on a freshly contaminated cloud.

    Non-swept parameters stay at their defaults (or at ``params``).
    """
    if axis not in _SWEEP_FIELDS:
        raise ValueError(f"axis must be one of {sorted(_SWEEP_FIELDS)}")
    values = list(DEFAULT_SWEEP_VALUES[axis]) if values is None else list(values)
    if not values:
        raise ValueError("values must be non-empty")
    params = params or DenoiseParams()
    field_name = _SWEEP_FIELDS[axis]

    contaminated = contaminate(clean, spec)
    rows = []
    for value in values:
        cast = int(value) if field_name in ("k", "min_vox_count") else float(value)
        run_params = params.replace(**{field_name: cast})
        denoised, report = denoise(
            contaminated, run_params, toggles, threads=threads,
            timing_repeats=timing_repeats,
        )
        entry = {
            "axis": axis,
            "value": cast,
            "runtime_s": report.timings_s["total"],
            "counts": report.counts,
        }
        entry.update(evaluate_run(clean, contaminated, denoised))
        rows.append(entry)
    return rows
