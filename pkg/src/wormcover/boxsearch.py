"""Branch-and-bound certificate that f stays above a threshold on a 5-box.

A box with centre z* and half-widths d is retired once

    f(z*) - sum_i d_i c_i >= threshold + eps

and otherwise bisected along its longest side.  Every sub-box of the root is
a dyadic piece, so its share of the root volume is exactly 2**-depth; the
verified fraction is the (compensated) sum of those shares over retired boxes.

The depth-first loop runs inside numba in bounded chunks; between chunks
the Python side writes progress rows and checkpoints.  With ``workers > 1`` a
process pool pulls boxes from a shared pending list, and whatever a worker
has not finished within its iteration budget goes back into that list.
"""

from __future__ import annotations

import logging
import math
import multiprocessing as mp
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from numba import njit

from . import _kernels
from .bounds import DEFAULT_CONSTANTS, DEFAULT_DOMAIN, DEFAULT_EPS, DomainZ, LipschitzConstants
from .configuration import DEFAULT_SPEC, ConfigParams, ShapeSpec, kernel_data, objective_f

log = logging.getLogger(__name__)

# kernel status codes
DONE, BUDGET, COUNTEREXAMPLE, TOO_SMALL, STACK_FULL = range(5)
STATUS_NAMES = {DONE: "done", BUDGET: "budget", COUNTEREXAMPLE: "counterexample",
                TOO_SMALL: "min_box_width", STACK_FULL: "stack_full"}


class SearchError(ValueError):
    pass


@dataclass(frozen=True)
class Box5:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(t) for t in self.lo)
        hi = tuple(float(t) for t in self.hi)
        if len(lo) != 5 or len(hi) != 5:
            raise SearchError("a box needs 5 lower and 5 upper bounds")
        if not all(math.isfinite(t) for t in lo + hi):
            raise SearchError("box bounds must be finite")
        if any(a > b for a, b in zip(lo, hi)):
            raise SearchError(f"empty box: lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_domain(cls, domain: DomainZ = DEFAULT_DOMAIN) -> "Box5":
        return cls(tuple(domain.lo), tuple(domain.hi))

    @classmethod
    def from_flat(cls, seq) -> "Box5":
        """Build from ``a1, b1, ..., a5, b5``."""
        v = [float(t) for t in seq]
        if len(v) != 10:
            raise SearchError(f"expected 10 numbers a1,b1,...,a5,b5, got {len(v)}")
        return cls(tuple(v[0::2]), tuple(v[1::2]))

    @property
    def center(self) -> np.ndarray:
        return (np.array(self.lo) + np.array(self.hi)) / 2

    @property
    def half_width(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / 2

    @property
    def sides(self) -> np.ndarray:
        return np.array(self.hi) - np.array(self.lo)

    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    def contains(self, z) -> bool:
        return all(a <= t <= b for a, t, b in zip(self.lo, z, self.hi))


def margin(box: Box5, consts: LipschitzConstants = DEFAULT_CONSTANTS,
           spec: ShapeSpec = DEFAULT_SPEC) -> float:
    """f at the box centre minus the Lipschitz allowance over the box."""
    return objective_f(box.center, spec) - float(box.half_width @ consts.as_array())


def split_dimension(box: Box5) -> int:
    sides = box.sides
    k = int(np.argmax(sides))  # first maximum wins ties
    if sides[k] <= 0:
        raise SearchError("cannot split a box with all sides zero")
    return k


def split(box: Box5) -> tuple[Box5, Box5]:
    """Bisect ``box`` along its longest side (lowest index on ties)."""
    k = split_dimension(box)
    mid = 0.5 * (box.lo[k] + box.hi[k])
    hi1 = list(box.hi)
    hi1[k] = mid
    lo2 = list(box.lo)
    lo2[k] = mid
    return Box5(box.lo, tuple(hi1)), Box5(tuple(lo2), box.hi)


# ---------------------------------------------------------------------------
# compiled depth-first loop

# float accumulators: volume sum, its compensation term, best value, best params
ACC_VOL, ACC_COMP, ACC_BEST = 0, 1, 2
ACC_P = 3
# integer counters
CNT_ITER, CNT_RETIRED, CNT_REC = 0, 1, 2


@njit(cache=True)
def _seed(s):
    np.random.seed(s)


@njit(cache=True)
def _dfs(slo, shi, sdep, sp, budget, threshold, eps, consts, min_width, stop_on_cex,
         data, acc, cnt, wlo, whi, rec_lo, rec_hi):
    """Process boxes from the stack top until empty or ``budget`` iterations.

    Returns ``(status, sp)``; statistics are accumulated in place.
    """
    cap = slo.shape[0]
    ncap = rec_lo.shape[0]
    z = np.empty(5)
    used = 0
    while sp > 0:
        if used >= budget:
            return 1, sp
        if sp + 1 >= cap:
            return 4, sp
        sp -= 1
        lo = slo[sp]
        hi = shi[sp]
        dep = sdep[sp]
        allow = 0.0
        for k in range(5):
            z[k] = 0.5 * (lo[k] + hi[k])
            allow += 0.5 * (hi[k] - lo[k]) * consts[k]
        fz = _kernels.config_area_vec(z, data)
        used += 1
        cnt[0] += 1
        if fz < acc[2]:
            acc[2] = fz
            for k in range(5):
                acc[3 + k] = z[k]
        if fz - allow >= threshold + eps:
            # Kahan-compensated sum of 2**-depth
            y = math.ldexp(1.0, -dep) - acc[1]
            t = acc[0] + y
            acc[1] = (t - acc[0]) - y
            acc[0] = t
            cnt[1] += 1
            if ncap > 0:
                if cnt[2] < ncap:
                    rec_lo[cnt[2]] = lo
                    rec_hi[cnt[2]] = hi
                    cnt[2] += 1
                else:
                    j = np.random.randint(0, cnt[1])
                    if j < ncap:
                        rec_lo[j] = lo
                        rec_hi[j] = hi
            continue
        kmax = 0
        smax = hi[0] - lo[0]
        for k in range(1, 5):
            s = hi[k] - lo[k]
            if s > smax:
                smax = s
                kmax = k
        if (stop_on_cex and fz < threshold) or smax < min_width:
            wlo[:] = lo
            whi[:] = hi
            # leave the failing box on the stack so the state stays consistent
            sp += 1
            return 2 if (stop_on_cex and fz < threshold) else 3, sp
        mid = 0.5 * (lo[kmax] + hi[kmax])
        # lower half goes on top (processed next), upper half stays in this slot;
        # lo/hi are views into slot sp, so copy them out before editing the slot
        slo[sp + 1] = lo
        shi[sp + 1] = hi
        shi[sp + 1, kmax] = mid
        sdep[sp + 1] = dep + 1
        slo[sp, kmax] = mid
        sdep[sp] = dep + 1
        sp += 2
    return 0, sp


# ---------------------------------------------------------------------------
# state, options, results


@dataclass
class SearchOptions:
    eps: float = DEFAULT_EPS
    min_box_width: float = 1e-9
    max_iterations: Optional[int] = None
    workers: int = 1
    progress_every: int = 10_000_000
    progress_log: Optional[Union[str, Path]] = None
    checkpoint_path: Optional[Union[str, Path]] = None
    # iterations between checkpoints; defaults to progress_every
    checkpoint_every: Optional[int] = None
    stop_on_counterexample: bool = True
    # how many retired boxes to keep (reservoir sample) for soundness audits
    retired_sample: int = 0
    seed: int = 0
    # iteration budget of one task handed to a pool worker
    task_budget: int = 2_000_000


@dataclass
class ProgressRow:
    percent: float
    iterations: int
    best_value: float
    elapsed: float

    def csv(self) -> str:
        return f"{self.percent!r},{self.iterations},{self.best_value!r},{self.elapsed:.3f}"


PROGRESS_HEADER = "percent,iterations,best_value,elapsed_s"


@dataclass
class SearchState:
    """Everything needed to continue a run: pending boxes plus accumulators."""

    root: Box5
    threshold: float
    eps: float
    consts: LipschitzConstants
    min_box_width: float
    pending_lo: np.ndarray
    pending_hi: np.ndarray
    pending_depth: np.ndarray
    iterations: int = 0
    retired: int = 0
    volume_sum: float = 0.0
    volume_comp: float = 0.0
    best_value: float = math.inf
    best_params: tuple = (math.nan,) * 5
    elapsed: float = 0.0
    status: str = "running"
    witness: Optional[Box5] = None

    @classmethod
    def fresh(cls, root: Box5, threshold: float, consts: LipschitzConstants, eps: float,
              min_box_width: float) -> "SearchState":
        return cls(root, threshold, eps, consts, min_box_width,
                   np.array([root.lo], dtype=float), np.array([root.hi], dtype=float),
                   np.zeros(1, dtype=np.int64))

    @property
    def verified_fraction(self) -> float:
        return self.volume_sum

    @property
    def pending(self) -> int:
        return len(self.pending_depth)

    def progress(self) -> ProgressRow:
        return progress_stats(self)


@dataclass
class SearchResult:
    proven: bool
    threshold: float
    iterations: int
    best_value: float
    best_params: ConfigParams
    verified_volume_fraction: float
    wall_time: float
    status: str = "done"
    witness: Optional[Box5] = None
    witness_value: Optional[float] = None
    retired_boxes: list = field(default_factory=list)
    progress: list = field(default_factory=list)
    root: Optional[Box5] = None

    @property
    def verified_volume(self) -> float:
        return self.verified_volume_fraction * (self.root.volume() if self.root else math.nan)


def progress_stats(state: SearchState) -> ProgressRow:
    return ProgressRow(100.0 * state.verified_fraction, state.iterations, state.best_value,
                       state.elapsed)


def domain_volume(domain: DomainZ = DEFAULT_DOMAIN) -> float:
    return Box5.from_domain(domain).volume()


# ---------------------------------------------------------------------------
# drivers


def _as_box(domain) -> Box5:
    if isinstance(domain, Box5):
        return domain
    if isinstance(domain, DomainZ):
        return Box5.from_domain(domain)
    return Box5.from_flat(domain)


class _Accum:
    """Per-call numba scratch arrays mirroring a SearchState's accumulators."""

    def __init__(self, state: SearchState, record: int):
        self.acc = np.empty(3 + 5)
        self.acc[ACC_VOL] = state.volume_sum
        self.acc[ACC_COMP] = state.volume_comp
        self.acc[ACC_BEST] = state.best_value
        self.acc[ACC_P:] = state.best_params
        self.cnt = np.zeros(3, dtype=np.int64)
        self.cnt[CNT_ITER] = state.iterations
        self.cnt[CNT_RETIRED] = state.retired
        self.wlo = np.zeros(5)
        self.whi = np.zeros(5)
        self.rec_lo = np.zeros((record, 5))
        self.rec_hi = np.zeros((record, 5))

    def store(self, state: SearchState):
        state.volume_sum = float(self.acc[ACC_VOL])
        state.volume_comp = float(self.acc[ACC_COMP])
        state.best_value = float(self.acc[ACC_BEST])
        state.best_params = tuple(float(t) for t in self.acc[ACC_P:])
        state.iterations = int(self.cnt[CNT_ITER])
        state.retired = int(self.cnt[CNT_RETIRED])

    def records(self) -> list[Box5]:
        n = min(int(self.cnt[CNT_REC]), len(self.rec_lo))
        return [Box5(tuple(self.rec_lo[i]), tuple(self.rec_hi[i])) for i in range(n)]


def _run_stack(state: SearchState, budget: int, data, opts: SearchOptions, accum: _Accum):
    """Advance ``state`` by at most ``budget`` iterations in this process."""
    cap = max(256, 2 * state.pending + 256)
    slo = np.zeros((cap, 5))
    shi = np.zeros((cap, 5))
    sdep = np.zeros(cap, dtype=np.int64)
    sp = state.pending
    slo[:sp] = state.pending_lo
    shi[:sp] = state.pending_hi
    sdep[:sp] = state.pending_depth
    consts = state.consts.as_array()
    left = budget
    while True:
        before = int(accum.cnt[CNT_ITER])
        status, sp = _dfs(slo, shi, sdep, sp, left, state.threshold, state.eps, consts,
                          state.min_box_width, opts.stop_on_counterexample, data,
                          accum.acc, accum.cnt, accum.wlo, accum.whi, accum.rec_lo, accum.rec_hi)
        left -= int(accum.cnt[CNT_ITER]) - before
        if status != STACK_FULL:
            break
        slo = np.concatenate([slo, np.zeros_like(slo)])
        shi = np.concatenate([shi, np.zeros_like(shi)])
        sdep = np.concatenate([sdep, np.zeros_like(sdep)])
    state.pending_lo = slo[:sp].copy()
    state.pending_hi = shi[:sp].copy()
    state.pending_depth = sdep[:sp].copy()
    accum.store(state)
    if status in (COUNTEREXAMPLE, TOO_SMALL):
        state.witness = Box5(tuple(accum.wlo), tuple(accum.whi))
    return status


def _task(args):
    """Pool worker: run one batch of boxes for at most ``budget`` iterations."""
    lo, hi, dep, budget, threshold, eps, consts, min_width, stop, spec, record = args
    state = SearchState(Box5(lo[0], hi[0]), threshold, eps, consts, min_width, lo, hi, dep)
    accum = _Accum(state, record)
    status = _run_stack(state, budget, kernel_data(spec),
                        SearchOptions(stop_on_counterexample=stop), accum)
    return dict(status=status, lo=state.pending_lo, hi=state.pending_hi, dep=state.pending_depth,
                iterations=state.iterations, retired=state.retired, vol=state.volume_sum,
                comp=state.volume_comp, best=state.best_value, params=state.best_params,
                witness=state.witness, records=accum.records())


class BoxSearch:
    """Drives a :class:`SearchState` to completion with progress and checkpoints."""

    def __init__(self, state: SearchState, opts: Optional[SearchOptions] = None,
                 spec: ShapeSpec = DEFAULT_SPEC):
        self.state = state
        self.opts = opts or SearchOptions()
        self.spec = spec
        self.data = kernel_data(spec)
        self.rows: list[ProgressRow] = []
        self.records: list[Box5] = []
        self._next_row = (state.iterations // self.opts.progress_every + 1) * self.opts.progress_every
        every = self.opts.checkpoint_every or self.opts.progress_every
        self._ckpt_every = every
        self._next_ckpt = state.iterations + every
        self._log_fh = None

    # -- bookkeeping
    def _open_log(self):
        if self.opts.progress_log is None:
            return
        p = Path(self.opts.progress_log)
        new = not p.exists() or p.stat().st_size == 0
        self._log_fh = open(p, "a")
        if new:
            self._log_fh.write(PROGRESS_HEADER + "\n")

    def _emit(self, final: bool = False):
        st = self.state
        every = self.opts.progress_every
        if st.iterations >= self._next_row or final:
            row = progress_stats(st)
            self.rows.append(row)
            if self._log_fh:
                self._log_fh.write(row.csv() + "\n")
                self._log_fh.flush()
            log.info("verified %.4f%%  n=%d  min=%.12f  %.1fs", row.percent, row.iterations,
                     row.best_value, row.elapsed)
            self._next_row = (st.iterations // every + 1) * every
        if self.opts.checkpoint_path and (st.iterations >= self._next_ckpt or final):
            checkpoint_save(st, self.opts.checkpoint_path)
            self._next_ckpt = st.iterations + self._ckpt_every

    def _budget(self) -> int:
        b = self._next_row - self.state.iterations
        if self.opts.checkpoint_path:
            b = min(b, self._next_ckpt - self.state.iterations)
        if self.opts.max_iterations is not None:
            b = min(b, self.opts.max_iterations - self.state.iterations)
        return max(b, 0)

    # -- drivers
    def run(self) -> SearchResult:
        _seed(self.opts.seed)
        self._open_log()
        try:
            if self.opts.workers > 1:
                status = self._run_parallel()
            else:
                status = self._run_serial()
            self.state.status = STATUS_NAMES[status]
            self._emit(final=True)
        finally:
            if self._log_fh:
                self._log_fh.close()
        return self.result()

    def _run_serial(self) -> int:
        accum = _Accum(self.state, self.opts.retired_sample)
        status = DONE if self.state.pending == 0 else BUDGET
        while self.state.pending > 0:
            budget = self._budget()
            if budget == 0:
                status = BUDGET
                break
            t0 = time.perf_counter()
            status = _run_stack(self.state, budget, self.data, self.opts, accum)
            self.state.elapsed += time.perf_counter() - t0
            self._emit()
            if status in (COUNTEREXAMPLE, TOO_SMALL):
                break
        self.records = accum.records()
        return status

    def _run_parallel(self) -> int:
        st = self.state
        opts = self.opts
        pending = [(st.pending_lo[i], st.pending_hi[i], st.pending_depth[i])
                   for i in range(st.pending)]
        per_task = max(1, opts.retired_sample // max(1, 4 * opts.workers)) if opts.retired_sample else 0
        status = DONE
        stop = False
        inflight = {}
        tid = 0
        t_last = time.perf_counter()
        with mp.get_context("fork").Pool(opts.workers) as pool:
            while pending or inflight:
                while pending and not stop and len(inflight) < 2 * opts.workers:
                    budget = opts.task_budget
                    if opts.max_iterations is not None:
                        budget = min(budget, opts.max_iterations - st.iterations
                                     - sum(b for _, b, _ in inflight.values()))
                        if budget <= 0:
                            stop = True
                            break
                    box = pending.pop()
                    lo, hi, dep = box
                    args = (lo[None, :].copy(), hi[None, :].copy(), np.array([dep]), budget,
                            st.threshold, st.eps, st.consts, st.min_box_width,
                            opts.stop_on_counterexample, self.spec, per_task)
                    inflight[tid] = (box, budget, pool.apply_async(_task, (args,)))
                    tid += 1
                if not inflight:
                    break
                done = sorted(k for k, (_, _, r) in inflight.items() if r.ready())
                if not done:
                    time.sleep(0.001)
                    continue
                for k in done:
                    out = inflight.pop(k)[2].get()
                    self._merge(out)
                    pending.extend((out["lo"][i], out["hi"][i], out["dep"][i])
                                   for i in range(len(out["dep"])))
                    if out["status"] in (COUNTEREXAMPLE, TOO_SMALL) and not stop:
                        status = out["status"]
                        st.witness = out["witness"]
                        stop = True
                now = time.perf_counter()
                st.elapsed += now - t_last
                t_last = now
                # a checkpoint taken now must still list the boxes being worked on
                self._sync_pending(pending + [b for b, _, _ in inflight.values()])
                self._emit()
        self._sync_pending(pending)
        if status == DONE and st.pending > 0:
            status = BUDGET
        return status

    def _merge(self, out):
        st = self.state
        st.iterations += out["iterations"]
        st.retired += out["retired"]
        # retired shares are dyadic, so plain summation of the per-task sums is exact
        # up to the compensation terms carried along
        y = out["vol"] - out["comp"] - st.volume_comp
        t = st.volume_sum + y
        st.volume_comp = (t - st.volume_sum) - y
        st.volume_sum = t
        cand = (out["best"], tuple(out["params"]))
        if cand < (st.best_value, tuple(st.best_params)):
            st.best_value, st.best_params = cand
        self.records.extend(out["records"])
        if self.opts.retired_sample:
            self.records = self.records[-self.opts.retired_sample:]

    def _sync_pending(self, pending):
        st = self.state
        if pending:
            st.pending_lo = np.array([p[0] for p in pending], dtype=float)
            st.pending_hi = np.array([p[1] for p in pending], dtype=float)
            st.pending_depth = np.array([p[2] for p in pending], dtype=np.int64)
        else:
            st.pending_lo = np.zeros((0, 5))
            st.pending_hi = np.zeros((0, 5))
            st.pending_depth = np.zeros(0, dtype=np.int64)

    def result(self) -> SearchResult:
        st = self.state
        proven = st.status == "done" and st.pending == 0 and abs(st.verified_fraction - 1.0) < 1e-12
        wv = None
        if st.witness is not None:
            wv = objective_f(st.witness.center, self.spec)
        return SearchResult(
            proven=proven, threshold=st.threshold, iterations=st.iterations,
            best_value=st.best_value, best_params=ConfigParams.from_seq(st.best_params)
            if math.isfinite(st.best_value) else None,
            verified_volume_fraction=st.verified_fraction, wall_time=st.elapsed,
            status=st.status, witness=st.witness, witness_value=wv,
            retired_boxes=list(self.records), progress=list(self.rows), root=st.root)


def run_search(domain=DEFAULT_DOMAIN, threshold: float = 0.1,
               consts: LipschitzConstants = DEFAULT_CONSTANTS,
               opts: Optional[SearchOptions] = None, spec: ShapeSpec = DEFAULT_SPEC,
               resume: Optional[Union[str, Path]] = None) -> SearchResult:
    """Certify ``f > threshold`` on ``domain`` (a DomainZ, Box5 or flat bounds)."""
    if not threshold > 0:
        raise SearchError(f"threshold must be positive, got {threshold}")
    opts = opts or SearchOptions()
    if resume is not None:
        state = checkpoint_load(resume)
        if state.threshold != threshold:
            raise SearchError(f"checkpoint threshold {state.threshold} != requested {threshold}")
        if state.status in ("counterexample", "min_box_width"):
            raise SearchError(f"checkpointed run already ended with {state.status}")
    else:
        state = SearchState.fresh(_as_box(domain), threshold, consts, opts.eps, opts.min_box_width)
    return BoxSearch(state, opts, spec).run()


# ---------------------------------------------------------------------------
# checkpoints

from .checkpoint import CheckpointError, checkpoint_load, checkpoint_save  # noqa: E402
